use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub group: String,
    /// Relative paths resolve against the manifest's directory.
    pub volume_path: String,
    #[serde(default)]
    pub excluded_labels: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ManifestMetadata {
    pub label_map: BTreeMap<u16, String>,
    #[serde(default)]
    pub created: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Subject roster of a cohort.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CohortManifest {
    pub entries: Vec<ManifestEntry>,
    pub metadata: ManifestMetadata,
}

impl CohortManifest {
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.subject_id.as_str()) {
                return Err(Error::Config(format!("duplicate subject id '{}'", e.subject_id)));
            }
        }
        if self.metadata.label_map.contains_key(&0) {
            return Err(Error::Config("label map must not name label 0".into()));
        }
        Ok(())
    }

    /// Distinct groups in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.group) {
                out.push(e.group.clone());
            }
        }
        out
    }

    pub fn resolve_path(&self, base_dir: &Path, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.volume_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    }
}

pub fn read_manifest(path: &Path) -> Result<CohortManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: CohortManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(path: &Path, manifest: &CohortManifest) -> Result<()> {
    manifest.validate()?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
