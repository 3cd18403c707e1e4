//! Reference implementations used to cross-check the library. They share no
//! code with it beyond the public read accessors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ontopurify_core::{MismatchKind, NodeId, Ontology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Node count by recursive descent from the root.
pub fn oracle_count(o: &Ontology) -> usize {
    fn walk(o: &Ontology, id: NodeId) -> usize {
        1 + o.children(id).iter().map(|c| walk(o, *c)).sum::<usize>()
    }
    o.root().map_or(0, |r| walk(o, r))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Flat {
    label: String,
    parent: Option<u64>,
    synonyms: Vec<String>,
    properties: Vec<(String, String)>,
}

fn flatten(o: &Ontology) -> BTreeMap<u64, Flat> {
    let mut out = BTreeMap::new();
    let mut stack: Vec<NodeId> = o.root().into_iter().collect();
    while let Some(id) = stack.pop() {
        let node = o.find_node(id).expect("reachable node is indexed");
        let mut synonyms: Vec<String> = node.synonyms.iter().cloned().collect();
        synonyms.sort();
        let mut properties: Vec<(String, String)> = node
            .properties
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        properties.sort();
        out.insert(
            id.get(),
            Flat {
                label: node.label.clone(),
                parent: node.parent.map(NodeId::get),
                synonyms,
                properties,
            },
        );
        stack.extend(node.children.iter().copied());
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct OracleDiff {
    pub kinds: BTreeMap<u64, BTreeSet<MismatchKind>>,
    pub m: u64,
    pub n: u64,
    /// `m / n` in lowest terms.
    pub reduced: (u64, u64),
}

/// Exhaustive mismatch enumeration over the union of reachable IDs.
pub fn oracle_diff(local: &Ontology, reference: &Ontology) -> OracleDiff {
    let l = flatten(local);
    let r = flatten(reference);
    let union: BTreeSet<u64> = l.keys().chain(r.keys()).copied().collect();
    let mut kinds = BTreeMap::new();
    for id in &union {
        let mut k = BTreeSet::new();
        match (l.get(id), r.get(id)) {
            (None, Some(_)) => {
                k.insert(MismatchKind::Missing);
            }
            (Some(_), None) => {
                k.insert(MismatchKind::Extra);
            }
            (Some(a), Some(b)) => {
                if a.label != b.label {
                    k.insert(MismatchKind::LabelChanged);
                }
                if a.parent != b.parent {
                    k.insert(MismatchKind::Moved);
                }
                if a.synonyms != b.synonyms || a.properties != b.properties {
                    k.insert(MismatchKind::PropertyChanged);
                }
            }
            (None, None) => unreachable!(),
        }
        if !k.is_empty() {
            kinds.insert(*id, k);
        }
    }
    let m = kinds.len() as u64;
    let n = union.len() as u64;
    let g = gcd(m, n).max(1);
    OracleDiff {
        kinds,
        m,
        n,
        reduced: (m / g, n / g),
    }
}

/// Same IDs, labels, parents, synonyms and properties; sibling order ignored.
pub fn oracle_same_tree(a: &Ontology, b: &Ontology) -> bool {
    flatten(a) == flatten(b)
}
