//! Domain-scoped keyword search over the ontology tree.
//!
//! A query token scores 1 when it equals a label or synonym token of a node
//! and 0.5 when it is only a prefix of one. Results come back ranked by
//! score (descending) then ID (ascending), each with its root-to-node label
//! path and its child IDs as crawl-down links. When the local copy has no
//! match but a reference version does, the outcome asks for purification.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::diff::{find_mismatches_with, DiffError, MismatchReport};
use crate::exec::Execution;
use crate::ontology::{NodeId, Ontology, OntologyNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("query has no searchable tokens")]
    EmptyQuery,
    #[error("query domain {query:?} does not match ontology domain {ontology:?}")]
    DomainMismatch { query: String, ontology: String },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

impl SearchError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyQuery => "EmptyQuery",
            Self::DomainMismatch { .. } => "DomainMismatch",
            Self::Diff(e) => e.code(),
        }
    }
}

/// Lowercased alphanumeric runs of `raw`, in order. No stemming.
pub fn tokenize(raw: &str) -> Result<Vec<String>, SearchError> {
    let tokens = split_tokens(raw);
    if tokens.is_empty() {
        Err(SearchError::EmptyQuery)
    } else {
        Ok(tokens)
    }
}

fn split_tokens(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub raw: String,
    pub domain: String,
    pub tokens: Vec<String>,
}

impl Query {
    pub fn new(raw: impl Into<String>, domain: impl Into<String>) -> Result<Self, SearchError> {
        let raw = raw.into();
        let tokens = tokenize(&raw)?;
        Ok(Self {
            raw,
            domain: domain.into(),
            tokens,
        })
    }
}

/// Match score in half-point units, so it stays exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u32);

impl Score {
    pub const ZERO: Score = Score(0);

    pub fn from_halves(halves: u32) -> Self {
        Self(halves)
    }

    pub fn halves(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        let halves = value * 2.0;
        if halves < 0.0 || halves.fract() != 0.0 || halves > f64::from(u32::MAX) {
            return Err(serde::de::Error::custom(format!(
                "score {value} is not a non-negative multiple of 0.5"
            )));
        }
        Ok(Self(halves as u32))
    }
}

fn node_tokens(node: &OntologyNode) -> HashSet<String> {
    std::iter::once(node.label.as_str())
        .chain(node.synonyms.iter().map(String::as_str))
        .flat_map(split_tokens)
        .collect()
}

/// Exact token hits count 1, prefix-only hits 0.5.
pub fn match_node(node: &OntologyNode, tokens: &[String]) -> Score {
    let own = node_tokens(node);
    let halves = tokens
        .iter()
        .map(|t| {
            if own.contains(t) {
                2
            } else if own.iter().any(|o| o.starts_with(t.as_str())) {
                1
            } else {
                0
            }
        })
        .sum();
    Score(halves)
}

/// Positive-scoring nodes in ascending ID order.
pub fn score_nodes(
    ontology: &Ontology,
    tokens: &[String],
    exec: Execution,
) -> Vec<(NodeId, Score)> {
    let nodes: Vec<&OntologyNode> = ontology.nodes().collect();
    exec.for_len(nodes.len()).filter_map(&nodes, |node| {
        let score = match_node(node, tokens);
        (!score.is_zero()).then_some((node.id, score))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchResult {
    pub id: NodeId,
    pub path: Vec<String>,
    pub score: Score,
    pub links: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    /// Non-empty, ordered by score descending then ID ascending.
    Hits(Vec<SearchResult>),
    NoMatch,
    /// The local copy cannot answer but the reference can.
    NeedsPurification(MismatchReport),
}

impl SearchOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Hits(_) => "hits",
            Self::NoMatch => "noMatch",
            Self::NeedsPurification(_) => "needsPurification",
        }
    }

    pub fn results(&self) -> &[SearchResult] {
        match self {
            Self::Hits(r) => r,
            _ => &[],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeWire {
    outcome: String,
    results: Vec<SearchResult>,
    report: Option<MismatchReport>,
}

impl Serialize for SearchOutcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (results, report) = match self {
            Self::Hits(r) => (r.clone(), None),
            Self::NoMatch => (Vec::new(), None),
            Self::NeedsPurification(report) => (Vec::new(), Some(report.clone())),
        };
        OutcomeWire {
            outcome: self.kind().to_string(),
            results,
            report,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SearchOutcome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = OutcomeWire::deserialize(deserializer)?;
        match (wire.outcome.as_str(), wire.report) {
            ("hits", None) if !wire.results.is_empty() => Ok(Self::Hits(wire.results)),
            ("noMatch", None) if wire.results.is_empty() => Ok(Self::NoMatch),
            ("needsPurification", Some(report)) if wire.results.is_empty() => {
                Ok(Self::NeedsPurification(report))
            }
            (other, _) => Err(D::Error::custom(format!("inconsistent {other:?} outcome"))),
        }
    }
}

pub fn search(
    local: &Ontology,
    reference: Option<&Ontology>,
    query: &Query,
) -> Result<SearchOutcome, SearchError> {
    search_with(local, reference, query, Execution::default())
}

pub fn search_with(
    local: &Ontology,
    reference: Option<&Ontology>,
    query: &Query,
    exec: Execution,
) -> Result<SearchOutcome, SearchError> {
    if query.domain != local.domain() {
        return Err(SearchError::DomainMismatch {
            query: query.domain.clone(),
            ontology: local.domain().to_string(),
        });
    }
    if query.tokens.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    let mut scored = score_nodes(local, &query.tokens, exec);
    if !scored.is_empty() {
        scored.sort_by(|(a_id, a), (b_id, b)| b.cmp(a).then(a_id.cmp(b_id)));
        let results = scored
            .into_iter()
            .map(|(id, score)| SearchResult {
                id,
                path: local.path_labels(id),
                score,
                links: local.children(id).to_vec(),
            })
            .collect();
        return Ok(SearchOutcome::Hits(results));
    }
    if let Some(reference) = reference {
        if !score_nodes(reference, &query.tokens, exec).is_empty() {
            let report = find_mismatches_with(local, reference, exec)?;
            return Ok(SearchOutcome::NeedsPurification(report));
        }
    }
    Ok(SearchOutcome::NoMatch)
}
