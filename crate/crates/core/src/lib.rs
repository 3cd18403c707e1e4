//! Ontology store, version diffing and purification, and domain-scoped
//! keyword search.
//!
//! - [`ontology`]: the tree model and its add / delete / modify mutations.
//! - [`diff`]: mismatch detection and the mismatching index `mi = M / N`.
//! - [`purify`]: the repair loop that drives `mi` to zero, with a replayable
//!   patch log.
//! - [`owl`]: the OWL/XML subset and canonical JSON formats.
//! - [`search`]: keyword search returning ranked nodes and crawl-down links.
//!
//! With the default `parallel` feature the per-node loops run on rayon;
//! [`Execution`] selects the path explicitly.

pub mod diff;
pub mod exec;
pub mod gen;
pub mod ontology;
pub mod owl;
pub mod purify;
pub mod search;
pub mod version;

pub use diff::{
    compare_versions, find_mismatches, mismatching_index, DiffError, Mismatch, MismatchIndex,
    MismatchKind, MismatchReport,
};
pub use exec::Execution;
pub use ontology::{
    DeletePolicy, MutationError, NodeEdit, NodeId, NodeRecord, Ontology, OntologyNode, Violation,
};
pub use owl::{Format, OwlError};
pub use purify::{apply_patch, purify, Patch, PatchError, PatchOp, Purification, PurifyError};
pub use search::{search, Query, Score, SearchError, SearchOutcome, SearchResult};
pub use version::{VersionHeader, VersionRelation};
