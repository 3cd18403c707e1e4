//! The OWL/XML subset.
//!
//! ```text
//! <rdf:RDF ...namespace declarations...>
//!   <owl:Ontology rdf:about="">
//!     <owl:versionInfo>1.1</owl:versionInfo>
//!     <owl:backwardCompatibleWith>1.0</owl:backwardCompatibleWith>   (repeated)
//!     <owl:incompatibleWith>0.9</owl:incompatibleWith>               (repeated; owl:inCompatibleWith also read)
//!     <owl:priorVersion>1.0</owl:priorVersion>                       (optional)
//!     <dom:domain>theatre</dom:domain>
//!   </owl:Ontology>
//!   <owl:Class rdf:ID="n2">
//!     <rdfs:label>Drama</rdfs:label>
//!     <rdfs:subClassOf rdf:resource="#n1"/>                          (absent on the root)
//!     <dom:synonym>play</dom:synonym>                                (repeated)
//!     <dom:property key="era">classical</dom:property>               (repeated)
//!   </owl:Class>
//! </rdf:RDF>
//! ```
//!
//! Any other element is rejected as `UnknownElement`.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use super::{ClassEntry, Location, OwlDocument, OwlError};
use crate::ontology::{NodeId, Ontology};
use crate::version::VersionHeader;

const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";
const DOM_NS: &str = "urn:ontopurify:domain#";

pub fn parse_owl(text: &str) -> Result<Ontology, OwlError> {
    parse_owl_document(text)?.into_ontology()
}

pub fn parse_owl_document(text: &str) -> Result<OwlDocument, OwlError> {
    let mut p = Parser::new(text);
    p.document()
}

#[derive(Debug)]
enum Ev {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Empty {
        name: String,
        attrs: Vec<(String, String)>,
    },
    End {
        name: String,
    },
    Text(String),
    Eof,
}

struct Parser<'a> {
    text: &'a str,
    reader: Reader<&'a [u8]>,
    /// Byte offset where the most recently returned event starts.
    at: usize,
    /// `(offset, line, line_start)` of the last computed location; events
    /// arrive in document order, so line counting resumes from here.
    cursor: Cell<(usize, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let mut reader = Reader::from_str(text);
        reader.config_mut().trim_text(false);
        Self {
            text,
            reader,
            at: 0,
            cursor: Cell::new((0, 1, 0)),
        }
    }

    fn here(&self) -> Location {
        let (mut pos, mut line, mut start) = self.cursor.get();
        if self.at < pos {
            (pos, line, start) = (0, 1, 0);
        }
        for (i, b) in self.text.as_bytes()[pos..self.at].iter().enumerate() {
            if *b == b'\n' {
                line += 1;
                start = pos + i + 1;
            }
        }
        self.cursor.set((self.at, line, start));
        let col = self
            .text
            .get(start..self.at)
            .map_or(0, |s| s.chars().count())
            + 1;
        Location::Text { line, col }
    }

    fn syntax(&self, offset: u64, message: impl ToString) -> OwlError {
        OwlError::XmlSyntax {
            location: Location::of_offset(self.text, offset as usize),
            message: message.to_string(),
        }
    }

    fn attrs(&self, e: &BytesStart<'_>) -> Result<Vec<(String, String)>, OwlError> {
        let mut out = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.syntax(self.at as u64, err))?;
            let value = attr
                .normalized_value(XmlVersion::Implicit1_0)
                .map_err(|err| self.syntax(self.at as u64, err))?;
            out.push((attr.key.as_ref().to_string(), value.into_owned()));
        }
        Ok(out)
    }

    /// Next significant event; comments, declarations and processing
    /// instructions are skipped. Character and entity references are
    /// resolved into `Text`.
    fn next(&mut self) -> Result<Ev, OwlError> {
        loop {
            self.at = self.reader.buffer_position() as usize;
            let event = match self.reader.read_event() {
                Ok(e) => e,
                Err(err) => return Err(self.syntax(self.reader.error_position(), err)),
            };
            return Ok(match event {
                Event::Start(e) => Ev::Start {
                    name: e.name().as_ref().to_string(),
                    attrs: self.attrs(&e)?,
                },
                Event::Empty(e) => Ev::Empty {
                    name: e.name().as_ref().to_string(),
                    attrs: self.attrs(&e)?,
                },
                Event::End(e) => Ev::End {
                    name: e.name().as_ref().to_string(),
                },
                Event::Text(t) => Ev::Text(t.xml10_content().into_owned()),
                Event::CData(c) => Ev::Text(c.xml10_content().into_owned()),
                Event::GeneralRef(r) => {
                    let resolved = if r.is_char_ref() {
                        r.resolve_char_ref()
                            .map_err(|err| self.syntax(self.at as u64, err))?
                            .map(String::from)
                    } else {
                        quick_xml::escape::resolve_predefined_entity(&r).map(str::to_string)
                    };
                    match resolved {
                        Some(s) => Ev::Text(s),
                        None => {
                            return Err(
                                self.syntax(self.at as u64, format!("unknown entity &{};", &*r))
                            )
                        }
                    }
                }
                Event::Eof => Ev::Eof,
                Event::Comment(_) | Event::Decl(_) | Event::PI(_) | Event::DocType(_) => continue,
            });
        }
    }

    /// Like `next`, but skips whitespace-only text and rejects other text.
    fn next_structural(&mut self) -> Result<Ev, OwlError> {
        loop {
            match self.next()? {
                Ev::Text(t) if t.trim().is_empty() => continue,
                Ev::Text(t) => {
                    return Err(OwlError::Unexpected {
                        what: format!("text {:?}", t.trim()),
                        location: self.here(),
                    })
                }
                other => return Ok(other),
            }
        }
    }

    fn unknown(&self, name: String) -> OwlError {
        OwlError::UnknownElement {
            name,
            location: self.here(),
        }
    }

    fn unexpected(&self, what: impl Into<String>) -> OwlError {
        OwlError::Unexpected {
            what: what.into(),
            location: self.here(),
        }
    }

    fn document(&mut self) -> Result<OwlDocument, OwlError> {
        match self.next_structural()? {
            Ev::Start { name, .. } if name == "rdf:RDF" => {}
            Ev::Start { name, .. } | Ev::Empty { name, .. } => return Err(self.unknown(name)),
            Ev::Eof => {
                return Err(OwlError::MissingElement {
                    name: "rdf:RDF".into(),
                    location: self.here(),
                })
            }
            Ev::End { name } => return Err(self.unexpected(format!("</{name}>"))),
            Ev::Text(_) => unreachable!("filtered by next_structural"),
        }

        let mut header: Option<(VersionHeader, String)> = None;
        let mut classes: Vec<ClassEntry> = Vec::new();
        let mut seen: BTreeMap<NodeId, ()> = BTreeMap::new();
        loop {
            match self.next_structural()? {
                Ev::Start { name, attrs } | Ev::Empty { name, attrs }
                    if name == "owl:Ontology" && header.is_some() =>
                {
                    let _ = attrs;
                    return Err(self.unexpected("second <owl:Ontology>"));
                }
                Ev::Start { name, attrs } if name == "owl:Ontology" => {
                    self.only_attrs(&attrs, &["rdf:about"])?;
                    header = Some(self.header()?);
                }
                Ev::Empty { name, .. } if name == "owl:Ontology" => {
                    return Err(OwlError::MissingVersion {
                        location: self.here(),
                    });
                }
                Ev::Start { name, attrs } if name == "owl:Class" => {
                    if header.is_none() {
                        return Err(self.unexpected("<owl:Class> before <owl:Ontology>"));
                    }
                    let class = self.class(&attrs, false)?;
                    if seen.insert(class.id, ()).is_some() {
                        return Err(OwlError::DuplicateId {
                            id: class.id,
                            location: class.location,
                        });
                    }
                    classes.push(class);
                }
                Ev::Empty { name, attrs } if name == "owl:Class" => {
                    let class = self.class(&attrs, true)?;
                    return Err(OwlError::MissingElement {
                        name: "rdfs:label".into(),
                        location: class.location,
                    });
                }
                Ev::Start { name, .. } | Ev::Empty { name, .. } => return Err(self.unknown(name)),
                Ev::End { name } if name == "rdf:RDF" => break,
                Ev::End { name } => return Err(self.unexpected(format!("</{name}>"))),
                Ev::Eof => return Err(self.syntax(self.at as u64, "unclosed <rdf:RDF>")),
                Ev::Text(_) => unreachable!("filtered by next_structural"),
            }
        }
        match self.next_structural()? {
            Ev::Eof => {}
            _ => return Err(self.unexpected("content after </rdf:RDF>")),
        }
        let Some((header, domain)) = header else {
            return Err(OwlError::MissingElement {
                name: "owl:Ontology".into(),
                location: self.here(),
            });
        };
        Ok(OwlDocument {
            header,
            domain,
            classes,
        })
    }

    fn only_attrs(&self, attrs: &[(String, String)], allowed: &[&str]) -> Result<(), OwlError> {
        match attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(self.unexpected(format!("attribute {k}"))),
            None => Ok(()),
        }
    }

    /// Text content up to the matching end tag. Nested elements are rejected.
    fn text_until(&mut self, element: &str) -> Result<String, OwlError> {
        let mut out = String::new();
        loop {
            match self.next()? {
                Ev::Text(t) => out.push_str(&t),
                Ev::End { name } if name == element => return Ok(out),
                Ev::Start { name, .. } | Ev::Empty { name, .. } => return Err(self.unknown(name)),
                Ev::End { name } => return Err(self.unexpected(format!("</{name}>"))),
                Ev::Eof => return Err(self.syntax(self.at as u64, format!("unclosed <{element}>"))),
            }
        }
    }

    /// Content of a simple text element, given either as a start tag or as
    /// an empty element.
    fn simple_text(&mut self, name: &str, empty: bool) -> Result<String, OwlError> {
        if empty {
            Ok(String::new())
        } else {
            self.text_until(name)
        }
    }

    fn header(&mut self) -> Result<(VersionHeader, String), OwlError> {
        let start = self.here();
        let mut version: Option<String> = None;
        let mut backward = Vec::new();
        let mut incompatible = Vec::new();
        let mut prior: Option<String> = None;
        let mut domain: Option<String> = None;
        loop {
            let (name, attrs, empty) = match self.next_structural()? {
                Ev::Start { name, attrs } => (name, attrs, false),
                Ev::Empty { name, attrs } => (name, attrs, true),
                Ev::End { name } if name == "owl:Ontology" => break,
                Ev::End { name } => return Err(self.unexpected(format!("</{name}>"))),
                Ev::Eof => return Err(self.syntax(self.at as u64, "unclosed <owl:Ontology>")),
                Ev::Text(_) => unreachable!("filtered by next_structural"),
            };
            let slot = match name.as_str() {
                "owl:versionInfo" => Some(&mut version),
                "owl:priorVersion" => Some(&mut prior),
                "dom:domain" => Some(&mut domain),
                // the capitalised spelling is accepted on input only
                "owl:backwardCompatibleWith" | "owl:incompatibleWith" | "owl:inCompatibleWith" => {
                    None
                }
                _ => return Err(self.unknown(name)),
            };
            if slot.as_ref().is_some_and(|s| s.is_some()) {
                return Err(self.unexpected(format!("repeated <{name}>")));
            }
            self.only_attrs(&attrs, &[])?;
            let value = self.simple_text(&name, empty)?;
            match slot {
                Some(slot) => *slot = Some(value),
                None if name == "owl:backwardCompatibleWith" => backward.push(value),
                None => incompatible.push(value),
            }
        }
        let Some(version) = version else {
            return Err(OwlError::MissingVersion { location: start });
        };
        let Some(domain) = domain else {
            return Err(OwlError::MissingElement {
                name: "dom:domain".into(),
                location: start,
            });
        };
        let header = VersionHeader {
            version,
            backward_compatible_with: backward,
            incompatible_with: incompatible,
            prior_version: prior,
        };
        header
            .check()
            .map_err(|source| OwlError::InvalidVersionHeader {
                source,
                location: start,
            })?;
        Ok((header, domain))
    }

    fn class(&mut self, attrs: &[(String, String)], empty: bool) -> Result<ClassEntry, OwlError> {
        let location = self.here();
        self.only_attrs(attrs, &["rdf:ID"])?;
        let raw = attrs
            .iter()
            .find(|(k, _)| k == "rdf:ID")
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| OwlError::InvalidId {
                value: String::new(),
                location: location.clone(),
            })?;
        let id = parse_class_ref(raw, "n").ok_or_else(|| OwlError::InvalidId {
            value: raw.to_string(),
            location: location.clone(),
        })?;
        let mut class = ClassEntry {
            id,
            label: String::new(),
            subclass_of: None,
            synonyms: BTreeSet::new(),
            properties: BTreeMap::new(),
            location: location.clone(),
            subclass_location: Location::Unknown,
        };
        if empty {
            return Ok(class);
        }
        let mut label: Option<String> = None;
        loop {
            let (name, attrs, empty) = match self.next_structural()? {
                Ev::Start { name, attrs } => (name, attrs, false),
                Ev::Empty { name, attrs } => (name, attrs, true),
                Ev::End { name } if name == "owl:Class" => break,
                Ev::End { name } => return Err(self.unexpected(format!("</{name}>"))),
                Ev::Eof => return Err(self.syntax(self.at as u64, "unclosed <owl:Class>")),
                Ev::Text(_) => unreachable!("filtered by next_structural"),
            };
            match name.as_str() {
                "rdfs:label" => {
                    if label.is_some() {
                        return Err(self.unexpected("repeated <rdfs:label>"));
                    }
                    self.only_attrs(&attrs, &[])?;
                    label = Some(self.simple_text(&name, empty)?);
                }
                "rdfs:subClassOf" => {
                    if class.subclass_of.is_some() {
                        return Err(self.unexpected("repeated <rdfs:subClassOf>"));
                    }
                    let here = self.here();
                    self.only_attrs(&attrs, &["rdf:resource"])?;
                    let target = attrs
                        .iter()
                        .find(|(k, _)| k == "rdf:resource")
                        .map(|(_, v)| v.clone())
                        .unwrap_or_default();
                    let content = self.simple_text(&name, empty)?;
                    if !content.trim().is_empty() {
                        return Err(self.unexpected("text inside <rdfs:subClassOf>"));
                    }
                    class.subclass_of =
                        Some(parse_class_ref(&target, "#n").ok_or(OwlError::InvalidId {
                            value: target,
                            location: here.clone(),
                        })?);
                    class.subclass_location = here;
                }
                "dom:synonym" => {
                    self.only_attrs(&attrs, &[])?;
                    let s = self.simple_text(&name, empty)?;
                    class.synonyms.insert(s);
                }
                "dom:property" => {
                    let here = self.here();
                    self.only_attrs(&attrs, &["key"])?;
                    let key = attrs
                        .iter()
                        .find(|(k, _)| k == "key")
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| self.unexpected("<dom:property> without key"))?;
                    let value = self.simple_text(&name, empty)?;
                    if class.properties.insert(key.clone(), value).is_some() {
                        return Err(OwlError::DuplicateProperty {
                            key,
                            location: here,
                        });
                    }
                }
                _ => return Err(self.unknown(name)),
            }
        }
        let Some(label) = label else {
            return Err(OwlError::MissingElement {
                name: "rdfs:label".into(),
                location,
            });
        };
        if label.is_empty() {
            return Err(OwlError::EmptyLabel { id, location });
        }
        class.label = label;
        Ok(class)
    }
}

fn parse_class_ref(raw: &str, prefix: &str) -> Option<NodeId> {
    let digits = raw.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    NodeId::new(digits.parse().ok()?)
}

fn esc(s: &str) -> String {
    quick_xml::escape::escape(s)
        .replace('\r', "&#13;")
        .replace('\t', "&#9;")
        .replace('\n', "&#10;")
}

/// Deterministic OWL rendering: classes in ascending ID order, fixed element
/// order inside each class, two-space indentation.
pub fn serialize_owl(ontology: &Ontology) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<rdf:RDF xmlns:rdf=\"{RDF_NS}\" xmlns:rdfs=\"{RDFS_NS}\" xmlns:owl=\"{OWL_NS}\" xmlns:dom=\"{DOM_NS}\">"
    );
    let header = ontology.version();
    out.push_str("  <owl:Ontology rdf:about=\"\">\n");
    let _ = writeln!(
        out,
        "    <owl:versionInfo>{}</owl:versionInfo>",
        esc(&header.version)
    );
    for v in &header.backward_compatible_with {
        let _ = writeln!(
            out,
            "    <owl:backwardCompatibleWith>{}</owl:backwardCompatibleWith>",
            esc(v)
        );
    }
    for v in &header.incompatible_with {
        let _ = writeln!(
            out,
            "    <owl:incompatibleWith>{}</owl:incompatibleWith>",
            esc(v)
        );
    }
    if let Some(prior) = &header.prior_version {
        let _ = writeln!(
            out,
            "    <owl:priorVersion>{}</owl:priorVersion>",
            esc(prior)
        );
    }
    let _ = writeln!(
        out,
        "    <dom:domain>{}</dom:domain>",
        esc(ontology.domain())
    );
    out.push_str("  </owl:Ontology>\n");
    for node in ontology.nodes() {
        let _ = writeln!(out, "  <owl:Class rdf:ID=\"n{}\">", node.id);
        let _ = writeln!(out, "    <rdfs:label>{}</rdfs:label>", esc(&node.label));
        if let Some(parent) = node.parent {
            let _ = writeln!(out, "    <rdfs:subClassOf rdf:resource=\"#n{parent}\"/>");
        }
        for s in &node.synonyms {
            let _ = writeln!(out, "    <dom:synonym>{}</dom:synonym>", esc(s));
        }
        for (k, v) in &node.properties {
            let _ = writeln!(
                out,
                "    <dom:property key=\"{}\">{}</dom:property>",
                esc(k),
                esc(v)
            );
        }
        out.push_str("  </owl:Class>\n");
    }
    out.push_str("</rdf:RDF>\n");
    out
}
