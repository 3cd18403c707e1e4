//! Canonical JSON form:
//!
//! ```json
//! {"domain": "...",
//!  "version": {"version": "...", "backwardCompatibleWith": [], "incompatibleWith": [], "priorVersion": null},
//!  "nodes": [{"id": 1, "label": "...", "parent": null, "synonyms": [], "properties": {}}]}
//! ```
//!
//! Nodes are written in ascending ID order; synonyms and property keys are
//! sorted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ClassEntry, Location, OwlDocument, OwlError};
use crate::ontology::{NodeRecord, Ontology};
use crate::version::VersionHeader;

#[derive(Serialize)]
struct DocumentOut<'a> {
    domain: &'a str,
    version: &'a VersionHeader,
    nodes: Vec<NodeRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    domain: String,
    version: VersionHeader,
    nodes: Vec<NodeRecord>,
}

pub fn serialize_json(ontology: &Ontology) -> String {
    let doc = DocumentOut {
        domain: ontology.domain(),
        version: ontology.version(),
        nodes: ontology.records(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn parse_json(text: &str) -> Result<Ontology, OwlError> {
    parse_json_document(text)?.into_ontology()
}

pub fn parse_json_document(text: &str) -> Result<OwlDocument, OwlError> {
    let doc: DocumentIn = serde_json::from_str(text).map_err(|e| OwlError::JsonSyntax {
        location: Location::Text {
            line: e.line(),
            col: e.column(),
        },
        message: e.to_string(),
    })?;
    doc.version
        .check()
        .map_err(|source| OwlError::InvalidVersionHeader {
            source,
            location: Location::Pointer("/version".into()),
        })?;
    let mut seen = BTreeSet::new();
    let mut classes = Vec::with_capacity(doc.nodes.len());
    for (i, node) in doc.nodes.into_iter().enumerate() {
        let location = Location::Pointer(format!("/nodes/{i}"));
        if !seen.insert(node.id) {
            return Err(OwlError::DuplicateId {
                id: node.id,
                location,
            });
        }
        if node.label.is_empty() {
            return Err(OwlError::EmptyLabel {
                id: node.id,
                location: Location::Pointer(format!("/nodes/{i}/label")),
            });
        }
        classes.push(ClassEntry {
            id: node.id,
            label: node.label,
            subclass_of: node.parent,
            synonyms: node.synonyms,
            properties: node.properties,
            subclass_location: Location::Pointer(format!("/nodes/{i}/parent")),
            location,
        });
    }
    Ok(OwlDocument {
        header: doc.version,
        domain: doc.domain,
        classes,
    })
}
