//! Purification: repair a local ontology until it has no mismatches against
//! the reference, recording every step as a replayable patch log.
//!
//! Each loop iteration re-diffs and then repairs every reported mismatch:
//! missing nodes are added in reference preorder (parents before children),
//! then the remaining mismatches are handled in ascending ID order. Extra
//! nodes are deleted with their children spliced upward, moved nodes are
//! re-attached under their reference parent and changed fields are
//! overwritten. A repair that is not yet applicable (a move into its own
//! subtree, deleting the current root) is retried after the others in the
//! same iteration.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{find_mismatches, DiffError, MismatchKind, MismatchReport};
use crate::ontology::{DeletePolicy, MutationError, NodeEdit, NodeId, NodeRecord, Ontology};
use crate::version::VersionHeader;

/// One repair action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "camelCase")]
pub enum PatchOp {
    /// Insert `node` under its recorded parent at child position `index`,
    /// keeping the recorded ID. A node without a parent becomes the root and
    /// adopts the previous root as its last child.
    Add {
        node: NodeRecord,
        index: usize,
    },
    Delete {
        id: NodeId,
        policy: DeletePolicy,
    },
    Modify {
        id: NodeId,
        edit: NodeEdit,
    },
    /// Re-attach `id` under `new_parent` at child position `index`; with no
    /// parent the node becomes the root.
    Move {
        id: NodeId,
        #[serde(rename = "newParent")]
        new_parent: Option<NodeId>,
        index: usize,
    },
    /// Adopt the reference's domain and version header.
    SetHeader {
        domain: String,
        version: VersionHeader,
    },
}

impl PatchOp {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Add { .. } => "add",
            Self::Delete { .. } => "delete",
            Self::Modify { .. } => "modify",
            Self::Move { .. } => "move",
            Self::SetHeader { .. } => "setHeader",
        }
    }
}

impl std::fmt::Display for PatchOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Add { node, .. } => match node.parent {
                Some(p) => write!(f, "add {} {:?} under {p}", node.id, node.label),
                None => write!(f, "add {} {:?} as root", node.id, node.label),
            },
            Self::Delete { id, .. } => write!(f, "delete {id}"),
            Self::Modify { id, edit } => {
                write!(f, "modify {id}")?;
                if let Some(label) = &edit.label {
                    write!(f, " label={label:?}")?;
                }
                if edit.synonyms.is_some() {
                    write!(f, " synonyms")?;
                }
                if edit.properties.is_some() {
                    write!(f, " properties")?;
                }
                Ok(())
            }
            Self::Move { id, new_parent, .. } => match new_parent {
                Some(p) => write!(f, "move {id} under {p}"),
                None => write!(f, "move {id} to root"),
            },
            Self::SetHeader { domain, version } => {
                write!(
                    f,
                    "set header domain={domain:?} version={:?}",
                    version.version
                )
            }
        }
    }
}

/// A [`PatchOp`] with its position in the log (consecutive from 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub seq: u64,
    #[serde(flatten)]
    pub op: PatchOp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("inapplicable {op} patch: {reason}")]
pub struct PatchError {
    pub op: &'static str,
    pub reason: MutationError,
}

impl PatchError {
    pub fn code(&self) -> &'static str {
        "InapplicablePatch"
    }
}

/// Applies one patch in place. On error the ontology is left untouched.
///
/// Patches reproduce an authoritative reference, so sibling-label
/// uniqueness is not enforced here; every structural invariant is.
pub fn apply_patch(ontology: &mut Ontology, op: &PatchOp) -> Result<(), PatchError> {
    let fail = |reason| PatchError {
        op: op.name(),
        reason,
    };
    match op {
        PatchOp::Add { node, index } => ontology.insert_record(node, *index, false).map_err(fail),
        PatchOp::Delete { id, policy } => ontology
            .delete_inner(*id, *policy, false)
            .map(drop)
            .map_err(fail),
        PatchOp::Modify { id, edit } => ontology
            .modify_inner(*id, edit, false)
            .map(drop)
            .map_err(fail),
        PatchOp::Move {
            id,
            new_parent,
            index,
        } => ontology
            .relocate(*id, *new_parent, *index, false)
            .map_err(fail),
        PatchOp::SetHeader { domain, version } => {
            ontology.set_domain(domain.clone());
            ontology.set_version(version.clone());
            Ok(())
        }
    }
}

/// Applies a whole log to a copy of `ontology`.
pub fn replay(ontology: &Ontology, log: &[Patch]) -> Result<Ontology, PatchError> {
    let mut out = ontology.clone();
    for patch in log {
        apply_patch(&mut out, &patch.op)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PurifyError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("reference ontology is empty")]
    EmptyReference,
    #[error("purification did not converge after {iterations} iterations (mi = {mi})")]
    NonConvergence { iterations: usize, mi: String },
}

impl PurifyError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Diff(e) => e.code(),
            Self::EmptyReference => "EmptyReference",
            Self::NonConvergence { .. } => "NonConvergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Purification {
    pub purified: Ontology,
    pub log: Vec<Patch>,
    pub initial: MismatchReport,
    pub final_report: MismatchReport,
    /// Repair iterations run; 0 when the inputs already agreed.
    pub iterations: usize,
}

/// Repairs a copy of `local` until it matches `reference`; `local` itself
/// is not modified.
pub fn purify(local: &Ontology, reference: &Ontology) -> Result<Purification, PurifyError> {
    if reference.is_empty() {
        return Err(PurifyError::EmptyReference);
    }
    let initial = find_mismatches(local, reference)?;
    let limit = initial.n() as usize;
    let mut current = local.clone();
    let mut log = Vec::new();
    let mut report = initial.clone();
    let mut iterations = 0;

    while !report.is_clean() {
        if iterations >= limit {
            return Err(non_convergence(iterations, &report));
        }
        iterations += 1;
        repair_pass(&mut current, reference, &report, &mut log)
            .map_err(|_| non_convergence(iterations, &report))?;
        let next = find_mismatches(&current, reference)?;
        if next.mi() >= report.mi() {
            return Err(non_convergence(iterations, &next));
        }
        report = next;
    }

    if current.domain() != reference.domain() || current.version() != reference.version() {
        let op = PatchOp::SetHeader {
            domain: reference.domain().to_string(),
            version: reference.version().clone(),
        };
        apply_patch(&mut current, &op).expect("header adoption always applies");
        log.push(Patch {
            seq: log.len() as u64 + 1,
            op,
        });
    }

    Ok(Purification {
        purified: current,
        log,
        initial,
        final_report: report,
        iterations,
    })
}

fn non_convergence(iterations: usize, report: &MismatchReport) -> PurifyError {
    PurifyError::NonConvergence {
        iterations,
        mi: format!("{}/{}", report.m(), report.n()),
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Add(NodeId),
    Delete(NodeId),
    Move(NodeId),
    Modify(NodeId),
}

fn repair_pass(
    current: &mut Ontology,
    reference: &Ontology,
    report: &MismatchReport,
    log: &mut Vec<Patch>,
) -> Result<(), PatchError> {
    let missing: HashSet<NodeId> = report
        .mismatches()
        .iter()
        .filter(|m| m.has(MismatchKind::Missing))
        .map(|m| m.id)
        .collect();
    let mut steps: Vec<Step> = reference
        .preorder()
        .into_iter()
        .filter(|id| missing.contains(id))
        .map(Step::Add)
        .collect();
    for m in report.mismatches() {
        if m.has(MismatchKind::Missing) {
            continue;
        }
        if m.has(MismatchKind::Extra) {
            steps.push(Step::Delete(m.id));
            continue;
        }
        if m.has(MismatchKind::Moved) {
            steps.push(Step::Move(m.id));
        }
        if m.has(MismatchKind::LabelChanged) || m.has(MismatchKind::PropertyChanged) {
            steps.push(Step::Modify(m.id));
        }
    }

    while !steps.is_empty() {
        let mut deferred = Vec::new();
        let mut last_error = None;
        let before = steps.len();
        for step in steps {
            let op = build_op(step, current, reference);
            match apply_patch(current, &op) {
                Ok(()) => log.push(Patch {
                    seq: log.len() as u64 + 1,
                    op,
                }),
                Err(e) => {
                    deferred.push(step);
                    last_error = Some(e);
                }
            }
        }
        if deferred.len() == before {
            return Err(last_error.expect("deferred steps carry an error"));
        }
        steps = deferred;
    }
    Ok(())
}

fn build_op(step: Step, current: &Ontology, reference: &Ontology) -> PatchOp {
    match step {
        Step::Add(id) => {
            let node = reference
                .find_node(id)
                .expect("missing ids come from the reference");
            PatchOp::Add {
                index: insertion_index(current, reference, id, node.parent),
                node: node.record(),
            }
        }
        Step::Delete(id) => PatchOp::Delete {
            id,
            policy: DeletePolicy::ReparentChildren,
        },
        Step::Move(id) => {
            let parent = reference.find_node(id).and_then(|n| n.parent);
            PatchOp::Move {
                id,
                new_parent: parent,
                index: insertion_index(current, reference, id, parent),
            }
        }
        Step::Modify(id) => {
            let (local, target) = (
                current.find_node(id).expect("shared id"),
                reference.find_node(id).expect("shared id"),
            );
            PatchOp::Modify {
                id,
                edit: NodeEdit {
                    label: (local.label != target.label).then(|| target.label.clone()),
                    synonyms: (local.synonyms != target.synonyms).then(|| target.synonyms.clone()),
                    properties: (local.properties != target.properties)
                        .then(|| target.properties.clone()),
                },
            }
        }
    }
}

/// Position right after the nearest preceding reference sibling that is
/// already present under `parent` locally, so child order follows the
/// reference.
fn insertion_index(
    current: &Ontology,
    reference: &Ontology,
    id: NodeId,
    parent: Option<NodeId>,
) -> usize {
    let Some(parent) = parent else { return 0 };
    let wanted = reference.children(parent);
    let present = current.children(parent);
    let Some(pos) = wanted.iter().position(|c| *c == id) else {
        return present.len();
    };
    wanted[..pos]
        .iter()
        .rev()
        .find_map(|s| present.iter().position(|c| c == s))
        .map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::version::VersionRelation;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    fn reference() -> Ontology {
        let mut o = Ontology::new("theatre", VersionHeader::new("1.0"), "Theatre").unwrap();
        for (parent, label) in [
            (1, "Performance"),
            (1, "Stagecraft"),
            (2, "Drama"),
            (2, "Opera"),
            (3, "Lighting"),
            (6, "Spotlight"),
        ] {
            o.insert_node(id(parent), label, BTreeSet::new(), BTreeMap::new())
                .unwrap();
        }
        o
    }

    fn assert_converged(local: &Ontology, reference: &Ontology) -> Purification {
        let p = purify(local, reference).unwrap();
        assert!(p.final_report.is_clean());
        assert!(p.purified.canonical_eq(reference));
        assert!(p.purified.validate().is_empty());
        assert!(find_mismatches(&p.purified, reference).unwrap().is_clean());
        let replayed = replay(local, &p.log).unwrap();
        assert_eq!(replayed, p.purified);
        for (i, patch) in p.log.iter().enumerate() {
            assert_eq!(patch.seq, i as u64 + 1);
        }
        p
    }

    #[test]
    fn identical_inputs_empty_log() {
        let r = reference();
        let p = assert_converged(&r.clone(), &r);
        assert!(p.log.is_empty());
        assert_eq!(p.iterations, 0);
    }

    #[test]
    fn missing_subtree_added_parent_first() {
        let r = reference();
        let mut local = r.clone();
        // Stagecraft(3) -> Lighting(6) -> Spotlight(7)
        local.delete_node(id(3), DeletePolicy::Subtree).unwrap();
        let p = assert_converged(&local, &r);
        let added: Vec<NodeId> = p
            .log
            .iter()
            .map(|patch| match &patch.op {
                PatchOp::Add { node, .. } => node.id,
                other => panic!("unexpected op {other:?}"),
            })
            .collect();
        assert_eq!(added, vec![id(3), id(6), id(7)]);
        assert_eq!(p.purified.children(id(1)), r.children(id(1)));
    }

    #[test]
    fn extra_leaf_and_relabel() {
        let r = reference();
        let mut local = r.clone();
        local
            .modify_node(id(4), &NodeEdit::label("Tragedy"))
            .unwrap();
        let extra = local
            .insert_node(id(5), "Libretto", BTreeSet::new(), BTreeMap::new())
            .unwrap();
        let p = assert_converged(&local, &r);
        assert_eq!(p.log.len(), 2);
        assert!(matches!(&p.log[0].op, PatchOp::Modify { id: m, .. } if *m == id(4)));
        assert!(matches!(&p.log[1].op, PatchOp::Delete { id: d, .. } if *d == extra));
    }

    #[test]
    fn moves_that_need_ordering() {
        let r = reference();
        let mut local = r.clone();
        // invert Stagecraft(3) and Lighting(6): Lighting now parents Stagecraft
        local.move_node(id(6), id(1)).unwrap();
        local.move_node(id(3), id(6)).unwrap();
        assert_converged(&local, &r);
    }

    #[test]
    fn different_root_and_empty_local() {
        let r = reference();
        let empty = Ontology::empty("theatre", VersionHeader::new("1.0"));
        assert_converged(&empty, &r);

        let other = Ontology::from_parts(
            "theatre".into(),
            VersionHeader::new("1.0"),
            Some(id(100)),
            BTreeMap::from([(
                id(100),
                crate::ontology::OntologyNode {
                    id: id(100),
                    label: "Elsewhere".into(),
                    synonyms: BTreeSet::new(),
                    parent: None,
                    children: vec![],
                    properties: BTreeMap::new(),
                },
            )]),
            id(101),
        );
        assert_converged(&other, &r);

        // the reference root sits below an extra local root
        let mut nested = Ontology::from_parts(
            "theatre".into(),
            VersionHeader::new("1.0"),
            Some(id(50)),
            BTreeMap::from([(
                id(50),
                crate::ontology::OntologyNode {
                    id: id(50),
                    label: "Old root".into(),
                    synonyms: BTreeSet::new(),
                    parent: None,
                    children: vec![],
                    properties: BTreeMap::new(),
                },
            )]),
            id(51),
        );
        for patch in r.preorder() {
            let node = r.find_node(patch).unwrap();
            let mut record = node.record();
            if record.parent.is_none() {
                record.parent = Some(id(50));
            }
            nested.insert_record(&record, usize::MAX, true).unwrap();
        }
        assert!(nested.validate().is_empty());
        assert_converged(&nested, &r);
    }

    #[test]
    fn version_header_adopted() {
        let local = reference();
        let mut r = reference();
        r.set_version(
            VersionHeader::new("1.1")
                .backward_compatible_with("1.0")
                .prior_version("1.0"),
        );
        assert_eq!(
            crate::diff::compare_versions(&local, &r),
            VersionRelation::BackwardCompatible
        );
        let p = assert_converged(&local, &r);
        assert_eq!(p.log.len(), 1);
        assert!(matches!(p.log[0].op, PatchOp::SetHeader { .. }));
    }

    #[test]
    fn incompatible_and_empty_reference() {
        let local = reference();
        let mut r = reference();
        r.set_version(VersionHeader::new("2.0").incompatible_with("1.0"));
        assert!(matches!(
            purify(&local, &r),
            Err(PurifyError::Diff(DiffError::IncompatibleVersions { .. }))
        ));
        let empty = Ontology::empty("theatre", VersionHeader::new("1.0"));
        assert_eq!(
            purify(&local, &empty).unwrap_err(),
            PurifyError::EmptyReference
        );
    }

    #[test]
    fn apply_patch_cases() {
        let mut o = reference();
        let before = o.clone();
        apply_patch(
            &mut o,
            &PatchOp::Modify {
                id: id(2),
                edit: NodeEdit::default(),
            },
        )
        .unwrap();
        assert_eq!(o, before);
        let err = apply_patch(
            &mut o,
            &PatchOp::Delete {
                id: id(99),
                policy: DeletePolicy::Subtree,
            },
        )
        .unwrap_err();
        assert_eq!(err.reason, MutationError::UnknownId(id(99)));
        assert_eq!(err.code(), "InapplicablePatch");
        let taken = o.find_node(id(2)).unwrap().record();
        let err = apply_patch(
            &mut o,
            &PatchOp::Add {
                node: taken,
                index: 0,
            },
        )
        .unwrap_err();
        assert_eq!(err.reason, MutationError::IdInUse(id(2)));
        let err = apply_patch(
            &mut o,
            &PatchOp::Move {
                id: id(3),
                new_parent: Some(id(7)),
                index: 0,
            },
        )
        .unwrap_err();
        assert!(matches!(err.reason, MutationError::WouldCreateCycle { .. }));
        assert_eq!(o, before);
    }

    #[test]
    fn add_raises_next_id() {
        let mut o = reference();
        let record = NodeRecord {
            id: id(40),
            label: "Mime".into(),
            parent: Some(id(2)),
            synonyms: BTreeSet::new(),
            properties: BTreeMap::new(),
        };
        apply_patch(
            &mut o,
            &PatchOp::Add {
                node: record,
                index: 0,
            },
        )
        .unwrap();
        assert_eq!(o.next_id(), id(41));
        assert_eq!(o.children(id(2))[0], id(40));
    }

    #[test]
    fn patch_json_shape() {
        let patch = Patch {
            seq: 3,
            op: PatchOp::Move {
                id: id(5),
                new_parent: Some(id(2)),
                index: 1,
            },
        };
        let json = serde_json::to_value(&patch).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"seq": 3, "op": "move", "args": {"id": 5, "newParent": 2, "index": 1}})
        );
        let back: Patch = serde_json::from_value(json).unwrap();
        assert_eq!(back, patch);
    }
}
