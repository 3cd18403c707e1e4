//! Mismatch detection between a local ontology and a reference version, and
//! the mismatching index `mi = M / N`.
//!
//! Nodes are joined by ID. An ID present on one side only is `Missing` (only
//! in the reference) or `Extra` (only in the local copy); an ID present on
//! both sides is compared field by field. `N` is the size of the union of
//! both ID sets, so `mi` stays within `[0, 1]` even when the local copy has
//! extra nodes.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exec::Execution;
use crate::ontology::{NodeId, NodeRecord, Ontology, OntologyNode};
use crate::version::VersionRelation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MismatchKind {
    /// Present in the reference, absent locally.
    Missing,
    /// Present locally, absent from the reference.
    Extra,
    LabelChanged,
    /// Different parent.
    Moved,
    /// Properties or synonyms differ.
    PropertyChanged,
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Missing => "missing",
            Self::Extra => "extra",
            Self::LabelChanged => "labelChanged",
            Self::Moved => "moved",
            Self::PropertyChanged => "propertyChanged",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mismatch {
    pub id: NodeId,
    pub kinds: BTreeSet<MismatchKind>,
    pub local: Option<NodeRecord>,
    pub reference: Option<NodeRecord>,
}

impl Mismatch {
    pub fn has(&self, kind: MismatchKind) -> bool {
        self.kinds.contains(&kind)
    }
}

/// Exact mismatching index.
pub type MismatchIndex = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error(
        "reference version {reference:?} is declared incompatible with local version {local:?}"
    )]
    IncompatibleVersions { local: String, reference: String },
    #[error("total node count is zero")]
    ZeroTotal,
    #[error("mismatch count {m} exceeds total {n}")]
    MismatchExceedsTotal { m: u64, n: u64 },
    #[error("inconsistent report: {0}")]
    InconsistentReport(String),
}

impl DiffError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::IncompatibleVersions { .. } => "IncompatibleVersions",
            Self::ZeroTotal => "ZeroTotal",
            Self::MismatchExceedsTotal { .. } => "MismatchExceedsTotal",
            Self::InconsistentReport(_) => "InconsistentReport",
        }
    }
}

/// `m / n` as an exact rational.
pub fn mismatching_index(m: u64, n: u64) -> Result<MismatchIndex, DiffError> {
    if n == 0 {
        return Err(DiffError::ZeroTotal);
    }
    if m > n {
        return Err(DiffError::MismatchExceedsTotal { m, n });
    }
    Ok(Ratio::new(m, n))
}

/// Outcome of one diff: the mismatched IDs in ascending order, `M`, `N` and
/// `mi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MismatchReport {
    mismatches: Vec<Mismatch>,
    total: u64,
    mi: MismatchIndex,
}

impl MismatchReport {
    pub fn new(mismatches: Vec<Mismatch>, total: u64) -> Result<Self, DiffError> {
        let mi = mismatching_index(mismatches.len() as u64, total)?;
        Ok(Self {
            mismatches,
            total,
            mi,
        })
    }

    pub fn mismatches(&self) -> &[Mismatch] {
        &self.mismatches
    }

    /// `M`, the number of mismatched IDs.
    pub fn m(&self) -> u64 {
        self.mismatches.len() as u64
    }

    /// `N`, the size of the ID union.
    pub fn n(&self) -> u64 {
        self.total
    }

    pub fn mi(&self) -> MismatchIndex {
        self.mi
    }

    pub fn mi_f64(&self) -> f64 {
        *self.mi.numer() as f64 / *self.mi.denom() as f64
    }

    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn get(&self, id: NodeId) -> Option<&Mismatch> {
        self.mismatches
            .binary_search_by_key(&id, |m| m.id)
            .ok()
            .map(|i| &self.mismatches[i])
    }

    /// `"M/N = 0.2857"`.
    pub fn summary(&self) -> String {
        format!("{}/{} = {:.4}", self.m(), self.n(), self.mi_f64())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportWire {
    mismatches: Vec<Mismatch>,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "N")]
    n: u64,
    mi: String,
    #[serde(rename = "miDecimal")]
    mi_decimal: f64,
}

impl Serialize for MismatchReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportWire {
            mismatches: self.mismatches.clone(),
            m: self.m(),
            n: self.n(),
            mi: format!("{}/{}", self.mi.numer(), self.mi.denom()),
            mi_decimal: self.mi_f64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MismatchReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = ReportWire::deserialize(deserializer)?;
        if wire.m != wire.mismatches.len() as u64 {
            return Err(D::Error::custom(format!(
                "M = {} but {} mismatches listed",
                wire.m,
                wire.mismatches.len()
            )));
        }
        let report = MismatchReport::new(wire.mismatches, wire.n).map_err(D::Error::custom)?;
        if format!("{}/{}", report.mi.numer(), report.mi.denom()) != wire.mi {
            return Err(D::Error::custom(format!(
                "mi {:?} does not equal M/N",
                wire.mi
            )));
        }
        Ok(report)
    }
}

pub fn compare_versions(local: &Ontology, reference: &Ontology) -> VersionRelation {
    reference.version().relation_to(local.version())
}

pub fn find_mismatches(
    local: &Ontology,
    reference: &Ontology,
) -> Result<MismatchReport, DiffError> {
    find_mismatches_with(local, reference, Execution::default())
}

/// [`find_mismatches`] with an explicit execution strategy for the per-ID
/// comparison.
pub fn find_mismatches_with(
    local: &Ontology,
    reference: &Ontology,
    exec: Execution,
) -> Result<MismatchReport, DiffError> {
    if compare_versions(local, reference) == VersionRelation::Incompatible {
        return Err(DiffError::IncompatibleVersions {
            local: local.version().version.clone(),
            reference: reference.version().version.clone(),
        });
    }
    let union = id_union(local, reference);
    let mismatches = exec.for_len(union.len()).filter_map(&union, |id| {
        compare_node(*id, local.find_node(*id), reference.find_node(*id))
    });
    MismatchReport::new(mismatches, union.len() as u64)
}

/// Diffs many independent pairs, one report per pair in input order.
pub fn diff_batch(
    pairs: &[(Ontology, Ontology)],
    exec: Execution,
) -> Vec<Result<MismatchReport, DiffError>> {
    exec.map(pairs, |(local, reference)| {
        find_mismatches_with(local, reference, Execution::Sequential)
    })
}

fn id_union(a: &Ontology, b: &Ontology) -> Vec<NodeId> {
    let mut left = a.ids().peekable();
    let mut right = b.ids().peekable();
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    loop {
        let next = match (left.peek(), right.peek()) {
            (None, None) => break,
            (Some(l), None) => {
                let l = *l;
                left.next();
                l
            }
            (None, Some(r)) => {
                let r = *r;
                right.next();
                r
            }
            (Some(l), Some(r)) => {
                let (l, r) = (*l, *r);
                if l <= r {
                    left.next();
                }
                if r <= l {
                    right.next();
                }
                l.min(r)
            }
        };
        out.push(next);
    }
    out
}

fn compare_node(
    id: NodeId,
    local: Option<&OntologyNode>,
    reference: Option<&OntologyNode>,
) -> Option<Mismatch> {
    let mut kinds = BTreeSet::new();
    match (local, reference) {
        (None, None) => return None,
        (None, Some(_)) => {
            kinds.insert(MismatchKind::Missing);
        }
        (Some(_), None) => {
            kinds.insert(MismatchKind::Extra);
        }
        (Some(l), Some(r)) => {
            if l.label != r.label {
                kinds.insert(MismatchKind::LabelChanged);
            }
            if l.parent != r.parent {
                kinds.insert(MismatchKind::Moved);
            }
            if l.properties != r.properties || l.synonyms != r.synonyms {
                kinds.insert(MismatchKind::PropertyChanged);
            }
            if kinds.is_empty() {
                return None;
            }
        }
    }
    Some(Mismatch {
        id,
        kinds,
        local: local.map(OntologyNode::record),
        reference: reference.map(OntologyNode::record),
    })
}
