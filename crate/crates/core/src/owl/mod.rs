//! Reading and writing ontologies: a closed OWL/XML subset and the
//! canonical JSON form.
//!
//! Both formats describe the same document: a version header, a domain name
//! and a flat list of classes, each naming its parent through
//! `subClassOf` / `parent`. Classes are written in ascending ID order, so
//! sibling order in a loaded ontology is ascending ID order.

mod json;
mod xml;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ontology::{NodeId, Ontology, OntologyNode, Violation};
use crate::version::{VersionHeader, VersionHeaderError};

pub use json::{parse_json, parse_json_document, serialize_json};
pub use xml::{parse_owl, parse_owl_document, serialize_owl};

/// Where in the input a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// 1-based line and column of an XML or JSON text position.
    Text {
        line: usize,
        col: usize,
    },
    /// JSON pointer into the canonical JSON document.
    Pointer(String),
    Unknown,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Text { line, col } => write!(f, "line {line}, column {col}"),
            Self::Pointer(p) => write!(f, "{p}"),
            Self::Unknown => write!(f, "unknown location"),
        }
    }
}

impl Location {
    /// Line/column of a byte offset within `text`.
    pub(crate) fn of_offset(text: &str, offset: usize) -> Self {
        let offset = offset.min(text.len());
        let before = &text.as_bytes()[..offset];
        let line = before.iter().filter(|b| **b == b'\n').count() + 1;
        let line_start = before
            .iter()
            .rposition(|b| *b == b'\n')
            .map_or(0, |p| p + 1);
        let col = String::from_utf8_lossy(&before[line_start..])
            .chars()
            .count()
            + 1;
        Self::Text { line, col }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OwlError {
    #[error("XML syntax error at {location}: {message}")]
    XmlSyntax { location: Location, message: String },
    #[error("JSON syntax error at {location}: {message}")]
    JsonSyntax { location: Location, message: String },
    #[error("unknown element <{name}> at {location}")]
    UnknownElement { name: String, location: Location },
    #[error("unexpected {what} at {location}")]
    Unexpected { what: String, location: Location },
    #[error("missing <{name}> at {location}")]
    MissingElement { name: String, location: Location },
    #[error("missing version at {location}")]
    MissingVersion { location: Location },
    #[error("invalid class id {value:?} at {location}")]
    InvalidId { value: String, location: Location },
    #[error("duplicate class id {id} at {location}")]
    DuplicateId { id: NodeId, location: Location },
    #[error("duplicate property key {key:?} at {location}")]
    DuplicateProperty { key: String, location: Location },
    #[error("class {id} is a subclass of unknown class {target} at {location}")]
    DanglingSubclass {
        id: NodeId,
        target: NodeId,
        location: Location,
    },
    #[error("classes {roots:?} have no superclass; exactly one root is allowed (at {location})")]
    MultipleRoots {
        roots: Vec<NodeId>,
        location: Location,
    },
    #[error("document has no root class")]
    NoRoot,
    #[error("classes {ids:?} form a subclass cycle (at {location})")]
    SubclassCycle {
        ids: Vec<NodeId>,
        location: Location,
    },
    #[error("empty label for class {id} at {location}")]
    EmptyLabel { id: NodeId, location: Location },
    #[error("invalid version header at {location}: {source}")]
    InvalidVersionHeader {
        source: VersionHeaderError,
        location: Location,
    },
    #[error("ontology is structurally invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl OwlError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::XmlSyntax { .. } => "XmlSyntax",
            Self::JsonSyntax { .. } => "JsonSyntax",
            Self::UnknownElement { .. } => "UnknownElement",
            Self::Unexpected { .. } => "Unexpected",
            Self::MissingElement { .. } => "MissingElement",
            Self::MissingVersion { .. } => "MissingVersion",
            Self::InvalidId { .. } => "InvalidId",
            Self::DuplicateId { .. } => "DuplicateId",
            Self::DuplicateProperty { .. } => "DuplicateProperty",
            Self::DanglingSubclass { .. } => "DanglingSubclass",
            Self::MultipleRoots { .. } => "MultipleRoots",
            Self::NoRoot => "NoRoot",
            Self::SubclassCycle { .. } => "SubclassCycle",
            Self::EmptyLabel { .. } => "EmptyLabel",
            Self::InvalidVersionHeader { .. } => "InvalidVersionHeader",
            Self::Invalid(_) => "Invalid",
        }
    }
}

/// One class of a parsed document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub id: NodeId,
    pub label: String,
    pub subclass_of: Option<NodeId>,
    pub synonyms: BTreeSet<String>,
    pub properties: BTreeMap<String, String>,
    /// Position of the class in the source text.
    pub location: Location,
    /// Position of its `subClassOf` reference, when present.
    pub subclass_location: Location,
}

/// A syntactically valid document whose class graph has not been checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwlDocument {
    pub header: VersionHeader,
    pub domain: String,
    /// Classes in document order; IDs are unique.
    pub classes: Vec<ClassEntry>,
}

impl OwlDocument {
    /// Builds an ontology, rejecting dangling references, multiple or
    /// missing roots and subclass cycles.
    pub fn into_ontology(self) -> Result<Ontology, OwlError> {
        let ids: BTreeSet<NodeId> = self.classes.iter().map(|c| c.id).collect();
        for class in &self.classes {
            if let Some(target) = class.subclass_of {
                if !ids.contains(&target) {
                    return Err(OwlError::DanglingSubclass {
                        id: class.id,
                        target,
                        location: class.subclass_location.clone(),
                    });
                }
            }
        }
        let roots: Vec<&ClassEntry> = self
            .classes
            .iter()
            .filter(|c| c.subclass_of.is_none())
            .collect();
        match roots.as_slice() {
            [] if self.classes.is_empty() => return Err(OwlError::NoRoot),
            [] => {}
            [_] => {}
            [_, second, ..] => {
                return Err(OwlError::MultipleRoots {
                    roots: roots.iter().map(|c| c.id).collect(),
                    location: second.location.clone(),
                })
            }
        }
        let locations: BTreeMap<NodeId, Location> = self
            .classes
            .iter()
            .map(|c| (c.id, c.location.clone()))
            .collect();
        let ontology = self.into_ontology_lenient();
        let violations = ontology.validate();
        if violations.is_empty() {
            return Ok(ontology);
        }
        let cycle = violations.iter().find_map(|v| match v {
            Violation::Cycle { nodes } => Some(nodes.clone()),
            _ => None,
        });
        match cycle {
            Some(ids) => Err(OwlError::SubclassCycle {
                location: locations.get(&ids[0]).cloned().unwrap_or(Location::Unknown),
                ids,
            }),
            None if ontology.root().is_none() => Err(OwlError::NoRoot),
            None => Err(OwlError::Invalid(violations)),
        }
    }

    /// Builds an ontology without rejecting anything, so that
    /// [`Ontology::validate`] can report every structural problem. Child
    /// lists are derived from `subClassOf` in document order; the root is the
    /// first class without a superclass.
    pub fn into_ontology_lenient(self) -> Ontology {
        let root = self
            .classes
            .iter()
            .find(|c| c.subclass_of.is_none())
            .map(|c| c.id);
        let mut nodes: BTreeMap<NodeId, OntologyNode> = self
            .classes
            .iter()
            .map(|c| {
                (
                    c.id,
                    OntologyNode {
                        id: c.id,
                        label: c.label.clone(),
                        synonyms: c.synonyms.clone(),
                        parent: c.subclass_of,
                        children: Vec::new(),
                        properties: c.properties.clone(),
                    },
                )
            })
            .collect();
        for class in &self.classes {
            if let Some(parent) = class.subclass_of.and_then(|p| nodes.get_mut(&p)) {
                parent.children.push(class.id);
            }
        }
        let next_id = nodes
            .keys()
            .next_back()
            .map_or(NodeId::new(1), |max| NodeId::new(max.get() + 1))
            .expect("positive");
        Ontology::from_parts(self.domain, self.header, root, nodes, next_id)
    }
}

/// Serialization format of an ontology file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Owl,
    Json,
}

impl Format {
    /// Guesses the format from the first non-whitespace character.
    pub fn sniff(text: &str) -> Self {
        match text
            .trim_start_matches('\u{feff}')
            .trim_start()
            .chars()
            .next()
        {
            Some('{') => Self::Json,
            _ => Self::Owl,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "owl" | "xml" | "rdf" => Ok(Self::Owl),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

pub fn parse(text: &str, format: Format) -> Result<Ontology, OwlError> {
    match format {
        Format::Owl => parse_owl(text),
        Format::Json => parse_json(text),
    }
}

pub fn parse_document(text: &str, format: Format) -> Result<OwlDocument, OwlError> {
    match format {
        Format::Owl => parse_owl_document(text),
        Format::Json => parse_json_document(text),
    }
}

pub fn serialize(ontology: &Ontology, format: Format) -> String {
    match format {
        Format::Owl => serialize_owl(ontology),
        Format::Json => serialize_json(ontology),
    }
}
