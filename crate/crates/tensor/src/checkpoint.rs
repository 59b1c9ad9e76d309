//! Checkpoint format: a JSON manifest naming each parameter and its shape,
//! plus one binary blob holding every parameter's values as little-endian
//! `f64`, concatenated in manifest order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::param::ParamStore;
use crate::tensor::Tensor;

pub const FORMAT: &str = "fsltr-checkpoint";
pub const VERSION: u32 = 1;
pub const DTYPE: &str = "f64";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub params: Vec<ManifestEntry>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

pub fn encode(store: &ParamStore, metadata: BTreeMap<String, String>) -> (Manifest, Vec<u8>) {
    let mut blob = Vec::new();
    let params = store
        .iter()
        .map(|(_, p)| {
            for v in p.value.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            ManifestEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                dtype: DTYPE.to_string(),
            }
        })
        .collect();
    let manifest = Manifest {
        format: FORMAT.to_string(),
        version: VERSION,
        params,
        metadata,
    };
    (manifest, blob)
}

/// Parses a manifest and slices `blob` into named tensors.
pub fn decode(manifest_json: &str, blob: &[u8]) -> Result<(Manifest, Vec<(String, Tensor)>)> {
    let manifest: Manifest = serde_json::from_str(manifest_json)?;
    if manifest.format != FORMAT {
        return Err(bad(format!("unknown format {:?}", manifest.format)));
    }
    if manifest.version != VERSION {
        return Err(bad(format!("unsupported version {}", manifest.version)));
    }
    let mut seen = BTreeSet::new();
    let mut offset = 0usize;
    let mut out = Vec::with_capacity(manifest.params.len());
    for entry in &manifest.params {
        if entry.dtype != DTYPE {
            return Err(bad(format!("{}: unsupported dtype {:?}", entry.name, entry.dtype)));
        }
        if !seen.insert(entry.name.as_str()) {
            return Err(bad(format!("duplicate parameter {:?}", entry.name)));
        }
        let count = entry
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| bad(format!("{}: shape overflows", entry.name)))?;
        let bytes = count
            .checked_mul(8)
            .and_then(|b| b.checked_add(offset))
            .filter(|&end| end <= blob.len())
            .ok_or_else(|| bad(format!("{}: blob too short", entry.name)))?;
        let values = blob[offset..bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        offset = bytes;
        out.push((entry.name.clone(), Tensor::new(entry.shape.clone(), values)?));
    }
    if offset != blob.len() {
        return Err(bad(format!(
            "blob has {} trailing bytes",
            blob.len() - offset
        )));
    }
    Ok((manifest, out))
}

/// Paths `<stem>.json` and `<stem>.bin` inside `dir`.
pub fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.bin")))
}

pub fn save(
    store: &ParamStore,
    metadata: BTreeMap<String, String>,
    dir: &Path,
    stem: &str,
) -> Result<()> {
    let (manifest, blob) = encode(store, metadata);
    let (mpath, bpath) = paths(dir, stem);
    fs::write(mpath, serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(bpath, blob)?;
    Ok(())
}

pub fn load(dir: &Path, stem: &str) -> Result<(Manifest, Vec<(String, Tensor)>)> {
    let (mpath, bpath) = paths(dir, stem);
    let manifest = fs::read_to_string(mpath)?;
    let blob = fs::read(bpath)?;
    decode(&manifest, &blob)
}
