//! Dataset tree layout: `root/{wave_type}/{level}/{background_id}_{profile_seed}/`
//! plus a top-level `dataset_index.json`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::io::write_atomic;
use super::Manifest;

pub const INDEX_FILE: &str = "dataset_index.json";
/// Number of (background, profile) pairs in the benchmark subset.
pub const BENCHMARK_PAIRS: usize = 60;

pub fn sequence_dir(root: &Path, sequence_id: &str) -> PathBuf {
    sequence_id.split('/').fold(root.to_path_buf(), |p, part| p.join(part))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetPair {
    pub background_id: String,
    pub profile_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexEntry {
    pub sequence_id: String,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetIndex {
    pub sequences: Vec<IndexEntry>,
    /// First pairs in `(background_id, profile_seed)` order.
    pub benchmark_subset: Vec<SubsetPair>,
}

impl DatasetIndex {
    pub fn new(mut sequences: Vec<IndexEntry>) -> Self {
        sequences.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
        let pairs: BTreeSet<SubsetPair> = sequences
            .iter()
            .map(|e| SubsetPair {
                background_id: e.manifest.background_id.clone(),
                profile_seed: e.manifest.profile_seed,
            })
            .collect();
        Self {
            sequences,
            benchmark_subset: pairs.into_iter().take(BENCHMARK_PAIRS).collect(),
        }
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        write_atomic(&root.join(INDEX_FILE), &json)
    }

    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(INDEX_FILE);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::integrity(&path, e.to_string()))
    }
}
