//! Version annotations carried in an ontology header.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version metadata of one ontology release.
///
/// `backward_compatible_with` lists releases that can be upgraded in place
/// by purification; `incompatible_with` lists releases that must be replaced
/// wholesale.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VersionHeader {
    pub version: String,
    #[serde(default)]
    pub backward_compatible_with: Vec<String>,
    #[serde(default)]
    pub incompatible_with: Vec<String>,
    #[serde(default)]
    pub prior_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VersionHeaderError {
    #[error("version string is empty")]
    EmptyVersion,
    #[error("version {0:?} is listed as both backward compatible and incompatible")]
    ConflictingCompatibility(String),
    #[error("version {0:?} lists itself in a compatibility list")]
    SelfReference(String),
}

impl VersionHeader {
    pub fn new(version: impl Into<String>) -> Self {
        Self {
            version: version.into(),
            backward_compatible_with: Vec::new(),
            incompatible_with: Vec::new(),
            prior_version: None,
        }
    }

    pub fn backward_compatible_with(mut self, version: impl Into<String>) -> Self {
        self.backward_compatible_with.push(version.into());
        self
    }

    pub fn incompatible_with(mut self, version: impl Into<String>) -> Self {
        self.incompatible_with.push(version.into());
        self
    }

    pub fn prior_version(mut self, version: impl Into<String>) -> Self {
        self.prior_version = Some(version.into());
        self
    }

    pub fn check(&self) -> Result<(), VersionHeaderError> {
        if self.version.is_empty() {
            return Err(VersionHeaderError::EmptyVersion);
        }
        if self.backward_compatible_with.contains(&self.version)
            || self.incompatible_with.contains(&self.version)
        {
            return Err(VersionHeaderError::SelfReference(self.version.clone()));
        }
        if let Some(v) = self
            .backward_compatible_with
            .iter()
            .find(|v| self.incompatible_with.contains(v))
        {
            return Err(VersionHeaderError::ConflictingCompatibility(v.clone()));
        }
        Ok(())
    }

    /// How a local copy at `local` relates to this (newer) header.
    pub fn relation_to(&self, local: &VersionHeader) -> VersionRelation {
        if self.version == local.version {
            VersionRelation::Identical
        } else if self.backward_compatible_with.contains(&local.version) {
            VersionRelation::BackwardCompatible
        } else if self.incompatible_with.contains(&local.version) {
            VersionRelation::Incompatible
        } else {
            VersionRelation::Unrelated
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VersionRelation {
    Identical,
    BackwardCompatible,
    Incompatible,
    Unrelated,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        let local = VersionHeader::new("1.0");
        assert_eq!(
            VersionHeader::new("1.0").relation_to(&local),
            VersionRelation::Identical
        );
        let newer = VersionHeader::new("2.0").backward_compatible_with("1.0");
        assert_eq!(
            newer.relation_to(&local),
            VersionRelation::BackwardCompatible
        );
        let breaking = VersionHeader::new("2.0").incompatible_with("0.9");
        assert_eq!(
            breaking.relation_to(&VersionHeader::new("0.9")),
            VersionRelation::Incompatible
        );
        assert_eq!(breaking.relation_to(&local), VersionRelation::Unrelated);
    }

    #[test]
    fn header_check() {
        assert!(VersionHeader::new("1.0").check().is_ok());
        assert_eq!(
            VersionHeader::new("").check(),
            Err(VersionHeaderError::EmptyVersion)
        );
        let bad = VersionHeader::new("2")
            .backward_compatible_with("1")
            .incompatible_with("1");
        assert!(matches!(
            bad.check(),
            Err(VersionHeaderError::ConflictingCompatibility(_))
        ));
        let selfref = VersionHeader::new("2").incompatible_with("2");
        assert!(matches!(
            selfref.check(),
            Err(VersionHeaderError::SelfReference(_))
        ));
    }
}
