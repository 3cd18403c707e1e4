use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NodeId, Ontology};

/// One broken structural invariant.
///
/// Each defect is reported once: a node hanging off a missing parent yields a
/// single `DanglingParent`, not an extra report for every unreachable
/// descendant or for the stale child entry that still points at it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "camelCase",
    rename_all_fields = "camelCase"
)]
pub enum Violation {
    IndexKeyMismatch {
        key: NodeId,
        node: NodeId,
    },
    EmptyLabel {
        node: NodeId,
    },
    MissingRoot,
    RootNotInIndex {
        root: NodeId,
    },
    RootHasParent {
        root: NodeId,
        parent: NodeId,
    },
    MultipleRoots {
        roots: Vec<NodeId>,
    },
    DanglingParent {
        node: NodeId,
        parent: NodeId,
    },
    DanglingChild {
        parent: NodeId,
        child: NodeId,
    },
    NotListedByParent {
        node: NodeId,
        parent: NodeId,
    },
    ParentChildInconsistency {
        child: NodeId,
        listed_under: NodeId,
        parent: Option<NodeId>,
    },
    DuplicateChild {
        parent: NodeId,
        child: NodeId,
    },
    Cycle {
        nodes: Vec<NodeId>,
    },
    NextIdTooSmall {
        next_id: NodeId,
        max_id: NodeId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndexKeyMismatch { key, node } => {
                write!(f, "IndexKeyMismatch: index key {key} holds node {node}")
            }
            Self::EmptyLabel { node } => write!(f, "EmptyLabel: node {node}"),
            Self::MissingRoot => write!(f, "MissingRoot: nodes exist but no root is set"),
            Self::RootNotInIndex { root } => write!(f, "RootNotInIndex: root {root}"),
            Self::RootHasParent { root, parent } => {
                write!(f, "RootHasParent: root {root} has parent {parent}")
            }
            Self::MultipleRoots { roots } => {
                write!(f, "MultipleRoots: parentless nodes {}", join(roots))
            }
            Self::DanglingParent { node, parent } => {
                write!(f, "DanglingParent: node {node} points to missing parent {parent}")
            }
            Self::DanglingChild { parent, child } => {
                write!(f, "DanglingChild: node {parent} lists missing child {child}")
            }
            Self::NotListedByParent { node, parent } => {
                write!(f, "NotListedByParent: node {node} is absent from children of {parent}")
            }
            Self::ParentChildInconsistency {
                child,
                listed_under,
                parent,
            } => match parent {
                Some(p) => write!(
                    f,
                    "ParentChildInconsistency: node {child} listed under {listed_under} but its parent is {p}"
                ),
                None => write!(
                    f,
                    "ParentChildInconsistency: node {child} listed under {listed_under} but has no parent"
                ),
            },
            Self::DuplicateChild { parent, child } => {
                write!(f, "DuplicateChild: node {parent} lists child {child} more than once")
            }
            Self::Cycle { nodes } => write!(f, "Cycle: {}", join(nodes)),
            Self::NextIdTooSmall { next_id, max_id } => {
                write!(f, "NextIdTooSmall: next id {next_id} but id {max_id} is assigned")
            }
        }
    }
}

fn join(ids: &[NodeId]) -> String {
    ids.iter()
        .map(NodeId::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl Ontology {
    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let nodes = &self.nodes;

        for (key, node) in nodes {
            if *key != node.id {
                out.push(Violation::IndexKeyMismatch {
                    key: *key,
                    node: node.id,
                });
            }
            if node.label.is_empty() {
                out.push(Violation::EmptyLabel { node: *key });
            }
        }

        if let Some(max) = nodes.keys().next_back() {
            if self.next_id <= *max {
                out.push(Violation::NextIdTooSmall {
                    next_id: self.next_id,
                    max_id: *max,
                });
            }
        }

        match self.root {
            None if !nodes.is_empty() => out.push(Violation::MissingRoot),
            None => {}
            Some(root) => match nodes.get(&root) {
                None => out.push(Violation::RootNotInIndex { root }),
                Some(node) => {
                    if let Some(parent) = node.parent {
                        out.push(Violation::RootHasParent { root, parent });
                    }
                }
            },
        }
        let parentless: Vec<NodeId> = nodes
            .values()
            .filter(|n| n.parent.is_none() && Some(n.id) != self.root)
            .map(|n| n.id)
            .collect();
        if !parentless.is_empty() {
            let mut roots: Vec<NodeId> = self.root.into_iter().chain(parentless).collect();
            roots.sort();
            out.push(Violation::MultipleRoots { roots });
        }

        // parent -> child direction
        for node in nodes.values() {
            let Some(parent) = node.parent else { continue };
            match nodes.get(&parent) {
                None => out.push(Violation::DanglingParent {
                    node: node.id,
                    parent,
                }),
                Some(p) if !p.children.contains(&node.id) => {
                    out.push(Violation::NotListedByParent {
                        node: node.id,
                        parent,
                    })
                }
                Some(_) => {}
            }
        }

        // child -> parent direction
        for node in nodes.values() {
            let mut seen = HashSet::new();
            for child in &node.children {
                if !seen.insert(*child) {
                    out.push(Violation::DuplicateChild {
                        parent: node.id,
                        child: *child,
                    });
                    continue;
                }
                match nodes.get(child) {
                    None => out.push(Violation::DanglingChild {
                        parent: node.id,
                        child: *child,
                    }),
                    Some(c) if c.parent != Some(node.id) => {
                        let parent_dangles = c.parent.is_some_and(|p| !nodes.contains_key(&p));
                        if !parent_dangles {
                            out.push(Violation::ParentChildInconsistency {
                                child: *child,
                                listed_under: node.id,
                                parent: c.parent,
                            });
                        }
                    }
                    Some(_) => {}
                }
            }
        }

        // Reachability over consistent edges. Unreached nodes whose parent
        // chain ends in an already reported defect are not reported again;
        // only chains that loop back on themselves are.
        let mut reached = HashSet::new();
        if let Some(root) = self.root.filter(|r| nodes.contains_key(r)) {
            let mut stack = vec![root];
            while let Some(id) = stack.pop() {
                if !reached.insert(id) {
                    continue;
                }
                for child in &nodes[&id].children {
                    if nodes.get(child).is_some_and(|c| c.parent == Some(id)) {
                        stack.push(*child);
                    }
                }
            }
        }
        let mut reported_cycles: BTreeSet<Vec<NodeId>> = BTreeSet::new();
        for id in nodes.keys() {
            if reached.contains(id) {
                continue;
            }
            let mut chain = Vec::new();
            let mut cursor = Some(*id);
            while let Some(current) = cursor {
                if let Some(pos) = chain.iter().position(|c| *c == current) {
                    let mut cycle: Vec<NodeId> = chain[pos..].to_vec();
                    cycle.sort();
                    reported_cycles.insert(cycle);
                    break;
                }
                if reached.contains(&current) {
                    break;
                }
                chain.push(current);
                cursor = nodes.get(&current).and_then(|n| n.parent);
            }
        }
        out.extend(
            reported_cycles
                .into_iter()
                .map(|nodes| Violation::Cycle { nodes }),
        );

        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::version::VersionHeader;

    fn id(v: u64) -> NodeId {
        NodeId::new(v).unwrap()
    }

    fn sample() -> Ontology {
        let mut o = Ontology::new("theatre", VersionHeader::new("1.0"), "Theatre").unwrap();
        let a = o
            .insert_node(id(1), "a", BTreeSet::new(), BTreeMap::new())
            .unwrap();
        o.insert_node(a, "c", BTreeSet::new(), BTreeMap::new())
            .unwrap();
        o.insert_node(id(1), "b", BTreeSet::new(), BTreeMap::new())
            .unwrap();
        o
    }

    #[test]
    fn fresh_ontology_is_valid() {
        let o = Ontology::new("theatre", VersionHeader::new("1.0"), "Theatre").unwrap();
        assert!(o.validate().is_empty());
        assert!(sample().validate().is_empty());
        assert!(Ontology::empty("x", VersionHeader::new("1"))
            .validate()
            .is_empty());
    }

    #[test]
    fn dangling_parent_reported_once() {
        let mut o = sample();
        // node 3 ("c") now claims a parent that does not exist
        o.node_mut_unchecked(id(3)).unwrap().parent = Some(id(99));
        assert_eq!(
            o.validate(),
            vec![Violation::DanglingParent {
                node: id(3),
                parent: id(99)
            }]
        );
    }

    #[test]
    fn node_listed_twice() {
        let mut o = sample();
        // "c" (3) is a child of "a" (2); also list it under "b" (4)
        o.node_mut_unchecked(id(4)).unwrap().children.push(id(3));
        assert_eq!(
            o.validate(),
            vec![Violation::ParentChildInconsistency {
                child: id(3),
                listed_under: id(4),
                parent: Some(id(2))
            }]
        );
    }

    #[test]
    fn cycle_detected() {
        let mut o = sample();
        // detach "a" from root and make it its own grandchild's child
        o.node_mut_unchecked(id(1))
            .unwrap()
            .children
            .retain(|c| *c != id(2));
        o.node_mut_unchecked(id(2)).unwrap().parent = Some(id(3));
        o.node_mut_unchecked(id(3)).unwrap().children.push(id(2));
        let v = o.validate();
        assert_eq!(
            v,
            vec![Violation::Cycle {
                nodes: vec![id(2), id(3)]
            }]
        );
    }

    #[test]
    fn other_violations() {
        let mut o = sample();
        o.node_mut_unchecked(id(4)).unwrap().label.clear();
        o.node_mut_unchecked(id(4)).unwrap().children.push(id(77));
        let v = o.validate();
        assert!(v.contains(&Violation::EmptyLabel { node: id(4) }));
        assert!(v.contains(&Violation::DanglingChild {
            parent: id(4),
            child: id(77)
        }));

        let mut o = sample();
        o.node_mut_unchecked(id(4)).unwrap().parent = None;
        o.node_mut_unchecked(id(1))
            .unwrap()
            .children
            .retain(|c| *c != id(4));
        assert_eq!(
            o.validate(),
            vec![Violation::MultipleRoots {
                roots: vec![id(1), id(4)]
            }]
        );

        let parts = Ontology::from_parts(
            "x".into(),
            VersionHeader::new("1"),
            Some(id(1)),
            o.nodes.clone(),
            id(2),
        );
        assert!(parts
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::NextIdTooSmall { .. })));
    }
}
