//! Dataset manifests: one entry per video holding everything needed to
//! regenerate it.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::canonical::{document_text, parse_document, SchemaTag};
use super::StoreError;
use crate::eval::{Category, LabelSet};
use crate::fixtures::Fixture;
use crate::mask::Shape;
use crate::types::EncodingParams;

/// Where the content of a video comes from. File paths are relative to the
/// manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContentSource {
    Text { text: String, scale: usize },
    Shape { shape: Shape },
    MaskFile { path: String },
    DepthDir { path: String, lower: u8, upper: u8 },
    Fixture { fixture: Fixture },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContainerFormat {
    #[default]
    Y4m,
    Png,
}

impl ContainerFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ContainerFormat::Y4m => "y4m",
            ContainerFormat::Png => "",
        }
    }
}

/// Question texts shown alongside a video, carried verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Prompts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_of_thought: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub video_id: String,
    pub category: Category,
    pub labels: BTreeSet<String>,
    pub params: EncodingParams,
    pub source: ContentSource,
    /// Container path relative to the manifest's directory: a `.y4m` file or
    /// a PNG-sequence directory.
    pub container: String,
    pub format: ContainerFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts: Option<Prompts>,
}

impl ManifestEntry {
    pub fn label_set(&self) -> LabelSet {
        LabelSet {
            video_id: self.video_id.clone(),
            category: self.category,
            labels: self.labels.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl SchemaTag for Manifest {
    const SCHEMA: &'static str = "tnoise.manifest/1";
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, StoreError> {
        let m = Manifest { entries };
        m.validate()?;
        Ok(m)
    }

    /// Unique ids and well-formed label sets.
    pub fn validate(&self) -> Result<(), StoreError> {
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert(e.video_id.as_str()) {
                return Err(StoreError::DuplicateVideoId(e.video_id.clone()));
            }
            e.label_set()
                .validate()
                .map_err(|err| StoreError::schema(format!("entries[{i}].labels"), err.to_string()))?;
        }
        Ok(())
    }

    pub fn get(&self, video_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }

    pub fn label_sets(&self) -> Vec<LabelSet> {
        self.entries.iter().map(ManifestEntry::label_set).collect()
    }

    pub fn to_text(&self) -> String {
        document_text(self)
    }

    pub fn from_text(text: &str) -> Result<Self, StoreError> {
        let m: Manifest = parse_document(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), StoreError> {
        self.validate()?;
        std::fs::write(path, self.to_text()).map_err(StoreError::io(path))
    }

    pub fn read(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(StoreError::io(path))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            video_id: id.into(),
            category: Category::Text,
            labels: ["gold".to_string()].into(),
            params: EncodingParams::default(),
            source: ContentSource::Text {
                text: "GOLD".into(),
                scale: 8,
            },
            container: format!("{id}.y4m"),
            format: ContainerFormat::Y4m,
            prompts: None,
        }
    }

    #[test]
    fn empty_manifest_round_trips() {
        let m = Manifest::default();
        let text = m.to_text();
        assert_eq!(text, "{\n  \"entries\": [],\n  \"schema\": \"tnoise.manifest/1\"\n}\n");
        assert_eq!(Manifest::from_text(&text).unwrap(), m);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            Manifest::new(vec![entry("a"), entry("a")]),
            Err(StoreError::DuplicateVideoId(id)) if id == "a"
        ));
        let text = Manifest {
            entries: vec![entry("a"), entry("a")],
        }
        .to_text();
        assert!(matches!(Manifest::from_text(&text), Err(StoreError::DuplicateVideoId(_))));
    }

    #[test]
    fn bad_field_has_path() {
        let text = Manifest::new(vec![entry("a")]).unwrap().to_text().replace("\"density\": 0.5", "\"density\": \"x\"");
        match Manifest::from_text(&text) {
            Err(StoreError::SchemaViolation { path, .. }) => assert_eq!(path, "entries[0].params.density"),
            other => panic!("{other:?}"),
        }
        let two_labels = {
            let mut e = entry("a");
            e.labels.insert("silver".into());
            Manifest { entries: vec![e] }.to_text()
        };
        match Manifest::from_text(&two_labels) {
            Err(StoreError::SchemaViolation { path, .. }) => assert_eq!(path, "entries[0].labels"),
            other => panic!("{other:?}"),
        }
    }
}
