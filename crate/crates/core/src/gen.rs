//! Seeded random ontologies and random edit sequences, for property tests,
//! benchmarks and synthetic workloads.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ontology::{DeletePolicy, MutationError, NodeEdit, NodeId, Ontology};
use crate::version::VersionHeader;

const SYLLABLES: &[&str] = &[
    "ka", "to", "ri", "me", "lo", "sa", "vi", "du", "ne", "po", "ga", "fi", "mu", "ze", "ho", "la",
];

fn word<R: Rng + ?Sized>(rng: &mut R) -> String {
    let n = rng.random_range(2..=3);
    (0..n)
        .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
        .collect()
}

fn label<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut l = word(rng);
    if rng.random_bool(0.3) {
        l.push(' ');
        l.push_str(&word(rng));
    }
    let mut chars = l.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => l,
    }
}

fn synonyms<R: Rng + ?Sized>(rng: &mut R) -> BTreeSet<String> {
    if rng.random_bool(0.2) {
        (0..rng.random_range(1..=2)).map(|_| word(rng)).collect()
    } else {
        BTreeSet::new()
    }
}

fn properties<R: Rng + ?Sized>(rng: &mut R) -> BTreeMap<String, String> {
    if rng.random_bool(0.2) {
        BTreeMap::from([(word(rng), word(rng))])
    } else {
        BTreeMap::new()
    }
}

fn insert_random<R: Rng + ?Sized>(
    rng: &mut R,
    ontology: &mut Ontology,
    parent: NodeId,
) -> Result<NodeId, MutationError> {
    let syn = synonyms(rng);
    let props = properties(rng);
    // a handful of retries covers the rare sibling-label collision
    let mut last = Err(MutationError::EmptyLabel);
    for _ in 0..8 {
        last = ontology.insert_node(parent, label(rng), syn.clone(), props.clone());
        if last.is_ok() {
            break;
        }
    }
    last
}

/// A random tree with exactly `nodes` nodes (at least 1), domain `"synthetic"`
/// and version `"1.0"`.
pub fn random_ontology<R: Rng + ?Sized>(rng: &mut R, nodes: usize) -> Ontology {
    let mut o = Ontology::new("synthetic", VersionHeader::new("1.0"), label(rng))
        .expect("generated labels are non-empty");
    let mut ids = vec![o.root().expect("root exists")];
    while o.len() < nodes.max(1) {
        // bias towards recent nodes so trees get some depth
        let parent = if rng.random_bool(0.5) {
            ids[rng.random_range(ids.len().saturating_sub(8)..ids.len())]
        } else {
            *ids.choose(rng).expect("non-empty")
        };
        if let Ok(id) = insert_random(rng, &mut o, parent) {
            ids.push(id);
        }
    }
    o
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    Insert,
    Delete,
    Relabel,
    Move,
    Retag,
}

const EDIT_KINDS: &[EditKind] = &[
    EditKind::Insert,
    EditKind::Delete,
    EditKind::Relabel,
    EditKind::Move,
    EditKind::Retag,
];

/// Applies one random edit; returns which kind succeeded, if any.
pub fn random_edit<R: Rng + ?Sized>(rng: &mut R, ontology: &mut Ontology) -> Option<EditKind> {
    let ids: Vec<NodeId> = ontology.ids().collect();
    let root = ontology.root()?;
    let non_root: Vec<NodeId> = ids.iter().copied().filter(|i| *i != root).collect();
    let kind = *EDIT_KINDS.choose(rng)?;
    let ok = match kind {
        EditKind::Insert => {
            let parent = *ids.choose(rng)?;
            insert_random(rng, ontology, parent).is_ok()
        }
        EditKind::Delete => {
            let victim = *non_root.choose(rng)?;
            let policy = if rng.random_bool(0.5) {
                DeletePolicy::Subtree
            } else {
                DeletePolicy::ReparentChildren
            };
            ontology.delete_node(victim, policy).is_ok()
        }
        EditKind::Relabel => {
            let id = *ids.choose(rng)?;
            ontology
                .modify_node(id, &NodeEdit::label(label(rng)))
                .is_ok()
        }
        EditKind::Move => {
            let id = *non_root.choose(rng)?;
            let target = *ids.choose(rng)?;
            ontology.move_node(id, target).is_ok()
        }
        EditKind::Retag => {
            let id = *ids.choose(rng)?;
            let edit = NodeEdit {
                synonyms: Some(synonyms(rng)),
                properties: Some(properties(rng)),
                ..NodeEdit::default()
            };
            ontology.modify_node(id, &edit).is_ok()
        }
    };
    ok.then_some(kind)
}

/// A copy of `base` with up to `edits` random edits applied.
pub fn drift<R: Rng + ?Sized>(rng: &mut R, base: &Ontology, edits: usize) -> Ontology {
    let mut o = base.clone();
    let mut applied = 0;
    let mut attempts = 0;
    while applied < edits && attempts < edits * 10 {
        attempts += 1;
        if random_edit(rng, &mut o).is_some() {
            applied += 1;
        }
    }
    o
}

/// `(reference, local)`: a random reference of 1..=`max_nodes` nodes and a
/// local copy drifted by 0..=`max_edits` edits.
pub fn random_pair<R: Rng + ?Sized>(
    rng: &mut R,
    max_nodes: usize,
    max_edits: usize,
) -> (Ontology, Ontology) {
    let n = rng.random_range(1..=max_nodes.max(1));
    let reference = random_ontology(rng, n);
    let k = rng.random_range(0..=max_edits);
    let local = drift(rng, &reference, k);
    (reference, local)
}
