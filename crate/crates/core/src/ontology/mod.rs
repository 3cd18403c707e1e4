//! In-memory ontology: a single-rooted n-ary labeled tree with an ordered
//! ID index.

mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::version::VersionHeader;

pub use validate::Violation;

/// Stable identifier of a node. IDs are positive and never reused within one
/// ontology's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(NonZeroU64);

impl NodeId {
    pub const fn new(value: u64) -> Option<Self> {
        match NonZeroU64::new(value) {
            Some(v) => Some(Self(v)),
            None => None,
        }
    }

    pub const fn get(self) -> u64 {
        self.0.get()
    }

    fn succ(self) -> Self {
        Self(self.0.checked_add(1).expect("node id space exhausted"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<NonZeroU64>()
            .map(Self)
            .map_err(|_| format!("invalid node id {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyNode {
    pub id: NodeId,
    pub label: String,
    pub synonyms: BTreeSet<String>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub properties: BTreeMap<String, String>,
}

impl OntologyNode {
    pub fn record(&self) -> NodeRecord {
        NodeRecord {
            id: self.id,
            label: self.label.clone(),
            parent: self.parent,
            synonyms: self.synonyms.clone(),
            properties: self.properties.clone(),
        }
    }
}

/// A node without its child list. This is the per-node shape of the
/// canonical JSON form and of every snapshot embedded in reports and patches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    pub label: String,
    pub parent: Option<NodeId>,
    #[serde(default)]
    pub synonyms: BTreeSet<String>,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

/// Field deltas for [`Ontology::modify_node`]; absent fields are left alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEdit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<BTreeMap<String, String>>,
}

impl NodeEdit {
    pub fn label(label: impl Into<String>) -> Self {
        Self {
            label: Some(label.into()),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_none() && self.synonyms.is_none() && self.properties.is_none()
    }
}

/// What happens to the children of a deleted node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DeletePolicy {
    /// Remove the node together with all of its descendants.
    #[default]
    #[serde(rename = "subtree")]
    Subtree,
    /// Remove only the node; its children take its place under its parent.
    #[serde(rename = "reparent")]
    ReparentChildren,
}

impl FromStr for DeletePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subtree" => Ok(Self::Subtree),
            "reparent" => Ok(Self::ReparentChildren),
            other => Err(format!("unknown delete policy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("parent {0} does not exist")]
    UnknownParent(NodeId),
    #[error("node {0} does not exist")]
    UnknownId(NodeId),
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("node {parent} already has a child labeled {label:?}")]
    DuplicateSiblingLabel { parent: NodeId, label: String },
    #[error("the root node cannot be deleted")]
    CannotDeleteRoot,
    #[error("moving {id} under {new_parent} would create a cycle")]
    WouldCreateCycle { id: NodeId, new_parent: NodeId },
    #[error("node id {0} is already in use")]
    IdInUse(NodeId),
}

impl MutationError {
    /// Stable machine-readable name, used in wire-level error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownParent(_) => "UnknownParent",
            Self::UnknownId(_) => "UnknownId",
            Self::EmptyLabel => "EmptyLabel",
            Self::DuplicateSiblingLabel { .. } => "DuplicateSiblingLabel",
            Self::CannotDeleteRoot => "CannotDeleteRoot",
            Self::WouldCreateCycle { .. } => "WouldCreateCycle",
            Self::IdInUse(_) => "IdInUse",
        }
    }
}

/// A versioned, single-rooted labeled tree.
///
/// The node index is ordered by ID, so lookups by ID are logarithmic and
/// every iteration over nodes is in ascending ID order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    domain: String,
    version: VersionHeader,
    root: Option<NodeId>,
    nodes: BTreeMap<NodeId, OntologyNode>,
    next_id: NodeId,
}

const FIRST_ID: NodeId = match NodeId::new(1) {
    Some(id) => id,
    None => unreachable!(),
};

impl Ontology {
    /// Creates an ontology holding a single root node with ID 1.
    pub fn new(
        domain: impl Into<String>,
        version: VersionHeader,
        root_label: impl Into<String>,
    ) -> Result<Self, MutationError> {
        let label = root_label.into();
        if label.is_empty() {
            return Err(MutationError::EmptyLabel);
        }
        let mut ontology = Self::empty(domain, version);
        let root = OntologyNode {
            id: FIRST_ID,
            label,
            synonyms: BTreeSet::new(),
            parent: None,
            children: Vec::new(),
            properties: BTreeMap::new(),
        };
        ontology.nodes.insert(FIRST_ID, root);
        ontology.root = Some(FIRST_ID);
        ontology.next_id = FIRST_ID.succ();
        Ok(ontology)
    }

    pub fn empty(domain: impl Into<String>, version: VersionHeader) -> Self {
        Self {
            domain: domain.into(),
            version,
            root: None,
            nodes: BTreeMap::new(),
            next_id: FIRST_ID,
        }
    }

    /// Assembles an ontology from raw parts without checking any invariant.
    /// Run [`Ontology::validate`] on the result.
    pub fn from_parts(
        domain: String,
        version: VersionHeader,
        root: Option<NodeId>,
        nodes: BTreeMap<NodeId, OntologyNode>,
        next_id: NodeId,
    ) -> Self {
        Self {
            domain,
            version,
            root,
            nodes,
            next_id,
        }
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn set_domain(&mut self, domain: impl Into<String>) {
        self.domain = domain.into();
    }

    pub fn version(&self) -> &VersionHeader {
        &self.version
    }

    pub fn set_version(&mut self, version: VersionHeader) {
        self.version = version;
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn root_node(&self) -> Option<&OntologyNode> {
        self.root.and_then(|id| self.nodes.get(&id))
    }

    pub fn next_id(&self) -> NodeId {
        self.next_id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find_node(&self, id: NodeId) -> Option<&OntologyNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// All nodes in ascending ID order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &OntologyNode> + '_ {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Mutable access that bypasses every invariant. Intended for tests that
    /// need a corrupted tree.
    #[doc(hidden)]
    pub fn node_mut_unchecked(&mut self, id: NodeId) -> Option<&mut OntologyNode> {
        self.nodes.get_mut(&id)
    }

    #[doc(hidden)]
    pub fn remove_unchecked(&mut self, id: NodeId) -> Option<OntologyNode> {
        self.nodes.remove(&id)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.nodes
            .get(&id)
            .map(|n| n.children.as_slice())
            .unwrap_or(&[])
    }

    /// Number of nodes reachable from the root: each node counts itself plus
    /// the totals of its child subtrees.
    pub fn count_nodes(&self) -> usize {
        let Some(root) = self.root else {
            return 0;
        };
        let mut total = 0;
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let Some(node) = self.nodes.get(&id) else {
                continue;
            };
            total += 1;
            stack.extend(node.children.iter().copied());
        }
        total
    }

    /// IDs of the whole tree in preorder, children visited in list order.
    pub fn preorder(&self) -> Vec<NodeId> {
        match self.root {
            Some(root) => self.subtree(root),
            None => Vec::new(),
        }
    }

    /// `id` followed by all of its descendants, in preorder.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        if !self.nodes.contains_key(&id) {
            return out;
        }
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            let Some(node) = self.nodes.get(&id) else {
                continue;
            };
            out.push(id);
            stack.extend(node.children.iter().rev().copied());
        }
        out
    }

    /// IDs from the root down to `id`, inclusive. Empty when `id` is unknown.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut cursor = self.nodes.get(&id);
        while let Some(node) = cursor {
            path.push(node.id);
            if path.len() > self.nodes.len() {
                break;
            }
            cursor = node.parent.and_then(|p| self.nodes.get(&p));
        }
        path.reverse();
        path
    }

    pub fn path_labels(&self, id: NodeId) -> Vec<String> {
        self.path_to(id)
            .into_iter()
            .filter_map(|id| self.nodes.get(&id).map(|n| n.label.clone()))
            .collect()
    }

    /// Distance from the root (the root has depth 0).
    pub fn depth(&self, id: NodeId) -> Option<usize> {
        let path = self.path_to(id);
        (!path.is_empty()).then(|| path.len() - 1)
    }

    /// True when `ancestor` is `id` or lies on the path from the root to `id`.
    pub fn is_ancestor_or_self(&self, ancestor: NodeId, id: NodeId) -> bool {
        let mut cursor = Some(id);
        let mut steps = 0;
        while let Some(current) = cursor {
            if current == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.nodes.len() {
                return false;
            }
            cursor = self.nodes.get(&current).and_then(|n| n.parent);
        }
        false
    }

    fn sibling_label_taken(&self, parent: NodeId, label: &str, except: Option<NodeId>) -> bool {
        self.children(parent)
            .iter()
            .any(|c| Some(*c) != except && self.nodes.get(c).is_some_and(|n| n.label == label))
    }

    /// Appends a new node under `parent` and returns its freshly assigned ID.
    pub fn insert_node(
        &mut self,
        parent: NodeId,
        label: impl Into<String>,
        synonyms: BTreeSet<String>,
        properties: BTreeMap<String, String>,
    ) -> Result<NodeId, MutationError> {
        let label = label.into();
        if !self.nodes.contains_key(&parent) {
            return Err(MutationError::UnknownParent(parent));
        }
        if label.is_empty() {
            return Err(MutationError::EmptyLabel);
        }
        if self.sibling_label_taken(parent, &label, None) {
            return Err(MutationError::DuplicateSiblingLabel { parent, label });
        }
        let id = self.next_id;
        self.next_id = id.succ();
        self.nodes.insert(
            id,
            OntologyNode {
                id,
                label,
                synonyms,
                parent: Some(parent),
                children: Vec::new(),
                properties,
            },
        );
        self.nodes
            .get_mut(&parent)
            .expect("parent checked above")
            .children
            .push(id);
        Ok(id)
    }

    /// Removes `id` according to `policy` and returns every removed ID
    /// (preorder for [`DeletePolicy::Subtree`]).
    ///
    /// Reparenting is refused with `DuplicateSiblingLabel` when a spliced
    /// child would collide with a label already present under the parent.
    pub fn delete_node(
        &mut self,
        id: NodeId,
        policy: DeletePolicy,
    ) -> Result<Vec<NodeId>, MutationError> {
        self.delete_inner(id, policy, true)
    }

    pub(crate) fn delete_inner(
        &mut self,
        id: NodeId,
        policy: DeletePolicy,
        check_labels: bool,
    ) -> Result<Vec<NodeId>, MutationError> {
        let node = self.nodes.get(&id).ok_or(MutationError::UnknownId(id))?;
        let Some(parent) = node.parent else {
            return Err(MutationError::CannotDeleteRoot);
        };
        match policy {
            DeletePolicy::Subtree => {
                let removed = self.subtree(id);
                self.detach(id);
                for r in &removed {
                    self.nodes.remove(r);
                }
                Ok(removed)
            }
            DeletePolicy::ReparentChildren => {
                let children = node.children.clone();
                if check_labels {
                    for child in &children {
                        let label = &self.nodes[child].label;
                        if self.sibling_label_taken(parent, label, Some(id)) {
                            return Err(MutationError::DuplicateSiblingLabel {
                                parent,
                                label: label.clone(),
                            });
                        }
                    }
                }
                let siblings = &mut self.nodes.get_mut(&parent).expect("parent exists").children;
                let pos = siblings
                    .iter()
                    .position(|c| *c == id)
                    .unwrap_or(siblings.len());
                siblings.splice(pos..(pos + 1).min(siblings.len()), children.iter().copied());
                for child in &children {
                    if let Some(c) = self.nodes.get_mut(child) {
                        c.parent = Some(parent);
                    }
                }
                self.nodes.remove(&id);
                Ok(vec![id])
            }
        }
    }

    /// Applies the supplied field deltas and returns the updated node. ID,
    /// parent and children never change.
    pub fn modify_node(
        &mut self,
        id: NodeId,
        edit: &NodeEdit,
    ) -> Result<OntologyNode, MutationError> {
        self.modify_inner(id, edit, true)
    }

    pub(crate) fn modify_inner(
        &mut self,
        id: NodeId,
        edit: &NodeEdit,
        check_labels: bool,
    ) -> Result<OntologyNode, MutationError> {
        let node = self.nodes.get(&id).ok_or(MutationError::UnknownId(id))?;
        if let Some(label) = &edit.label {
            if label.is_empty() {
                return Err(MutationError::EmptyLabel);
            }
            if check_labels {
                if let Some(parent) = node.parent {
                    if self.sibling_label_taken(parent, label, Some(id)) {
                        return Err(MutationError::DuplicateSiblingLabel {
                            parent,
                            label: label.clone(),
                        });
                    }
                }
            }
        }
        let node = self.nodes.get_mut(&id).expect("checked above");
        if let Some(label) = &edit.label {
            node.label = label.clone();
        }
        if let Some(synonyms) = &edit.synonyms {
            node.synonyms = synonyms.clone();
        }
        if let Some(properties) = &edit.properties {
            node.properties = properties.clone();
        }
        Ok(node.clone())
    }

    /// Re-attaches `id` as the last child of `new_parent`.
    pub fn move_node(&mut self, id: NodeId, new_parent: NodeId) -> Result<(), MutationError> {
        let at = self.children(new_parent).len();
        self.relocate(id, Some(new_parent), at, true)
    }

    /// Moves `id` to position `index` (clamped) among the children of
    /// `new_parent`. With no parent the node becomes the root and the old root
    /// is appended to its children.
    pub(crate) fn relocate(
        &mut self,
        id: NodeId,
        new_parent: Option<NodeId>,
        index: usize,
        check_labels: bool,
    ) -> Result<(), MutationError> {
        let node = self.nodes.get(&id).ok_or(MutationError::UnknownId(id))?;
        match new_parent {
            None => {
                if node.parent.is_none() {
                    return Ok(());
                }
                let old_root = self.root;
                self.detach(id);
                let node = self.nodes.get_mut(&id).expect("exists");
                node.parent = None;
                if let Some(old) = old_root.filter(|r| *r != id) {
                    node.children.push(old);
                    if let Some(o) = self.nodes.get_mut(&old) {
                        o.parent = Some(id);
                    }
                }
                self.root = Some(id);
                Ok(())
            }
            Some(parent) => {
                if !self.nodes.contains_key(&parent) {
                    return Err(MutationError::UnknownParent(parent));
                }
                if self.is_ancestor_or_self(id, parent) {
                    return Err(MutationError::WouldCreateCycle {
                        id,
                        new_parent: parent,
                    });
                }
                if check_labels && self.sibling_label_taken(parent, &node.label, Some(id)) {
                    return Err(MutationError::DuplicateSiblingLabel {
                        parent,
                        label: node.label.clone(),
                    });
                }
                self.detach(id);
                let siblings = &mut self.nodes.get_mut(&parent).expect("checked").children;
                let at = index.min(siblings.len());
                siblings.insert(at, id);
                self.nodes.get_mut(&id).expect("exists").parent = Some(parent);
                Ok(())
            }
        }
    }

    /// Inserts a node under the ID recorded in `record`, bypassing the ID
    /// counter. With no parent the node becomes the new root and the old root
    /// is appended to its children.
    pub(crate) fn insert_record(
        &mut self,
        record: &NodeRecord,
        index: usize,
        check_labels: bool,
    ) -> Result<(), MutationError> {
        if self.nodes.contains_key(&record.id) {
            return Err(MutationError::IdInUse(record.id));
        }
        if record.label.is_empty() {
            return Err(MutationError::EmptyLabel);
        }
        let mut node = OntologyNode {
            id: record.id,
            label: record.label.clone(),
            synonyms: record.synonyms.clone(),
            parent: record.parent,
            children: Vec::new(),
            properties: record.properties.clone(),
        };
        match record.parent {
            Some(parent) => {
                if !self.nodes.contains_key(&parent) {
                    return Err(MutationError::UnknownParent(parent));
                }
                if check_labels && self.sibling_label_taken(parent, &record.label, None) {
                    return Err(MutationError::DuplicateSiblingLabel {
                        parent,
                        label: record.label.clone(),
                    });
                }
                let siblings = &mut self.nodes.get_mut(&parent).expect("checked").children;
                let at = index.min(siblings.len());
                siblings.insert(at, record.id);
            }
            None => {
                if let Some(old) = self.root {
                    node.children.push(old);
                    if let Some(o) = self.nodes.get_mut(&old) {
                        o.parent = Some(record.id);
                    }
                }
                self.root = Some(record.id);
            }
        }
        self.nodes.insert(record.id, node);
        if self.next_id <= record.id {
            self.next_id = record.id.succ();
        }
        Ok(())
    }

    fn detach(&mut self, id: NodeId) {
        let parent = self.nodes.get(&id).and_then(|n| n.parent);
        if let Some(p) = parent.and_then(|p| self.nodes.get_mut(&p)) {
            p.children.retain(|c| *c != id);
        }
    }

    /// Equality up to sibling order: same domain, version header, ID set and
    /// per-node label, parent, synonyms and properties.
    pub fn canonical_eq(&self, other: &Ontology) -> bool {
        self.domain == other.domain
            && self.version == other.version
            && self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(other.nodes.iter())
                .all(|((a, x), (b, y))| {
                    a == b
                        && x.label == y.label
                        && x.parent == y.parent
                        && x.synonyms == y.synonyms
                        && x.properties == y.properties
                })
    }

    /// Per-node records in ascending ID order.
    pub fn records(&self) -> Vec<NodeRecord> {
        self.nodes.values().map(OntologyNode::record).collect()
    }
}
