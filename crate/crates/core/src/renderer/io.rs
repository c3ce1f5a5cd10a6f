//! Sequence directories: `gt.png`, `frame_NNN.png` (16-bit RGB), optional
//! `displacement_NNN.rfb`, and `manifest.json` carrying file digests.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;

use super::raw::RawField;
use super::{content_hash, Manifest, VideoSequence};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GROUND_TRUTH_FILE: &str = "gt.png";

pub fn frame_digits(count: usize) -> usize {
    count.saturating_sub(1).to_string().len().max(3)
}

pub fn frame_file(i: usize, count: usize) -> String {
    format!("frame_{i:0w$}.png", w = frame_digits(count))
}

pub fn displacement_file(i: usize, count: usize) -> String {
    format!("displacement_{i:0w$}.rfb", w = frame_digits(count))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Temporary sibling path used while a file or directory is being written.
pub fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = temp_sibling(path);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes files into a fresh temporary directory, then swaps it into place.
pub struct StagedDir {
    target: PathBuf,
    staging: PathBuf,
}

impl StagedDir {
    pub fn new(target: &Path) -> Result<Self> {
        let staging = temp_sibling(target);
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        Ok(Self {
            target: target.to_path_buf(),
            staging,
        })
    }

    /// Writes one file and returns its digest.
    pub fn put(&self, name: &str, bytes: &[u8]) -> Result<String> {
        let path = self.staging.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(sha256_hex(bytes))
    }

    pub fn commit(self) -> Result<()> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        }
        fs::rename(&self.staging, &self.target).map_err(|e| Error::io(&self.target, e))
    }
}

/// Writes a sequence and returns the manifest as stored (with digests).
pub fn write_sequence(seq: &VideoSequence, dir: &Path) -> Result<Manifest> {
    if seq.frames.len() != seq.manifest.frame_count {
        return Err(Error::Input(format!(
            "manifest declares {} frames, sequence has {}",
            seq.manifest.frame_count,
            seq.frames.len()
        )));
    }
    if let Some(parent) = dir.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let staged = StagedDir::new(dir)?;
    let mut manifest = seq.manifest.clone();
    manifest.files.clear();
    let count = seq.frames.len();
    manifest
        .files
        .insert(GROUND_TRUTH_FILE.into(), staged.put(GROUND_TRUTH_FILE, &seq.ground_truth.encode_png16()?)?);
    for (i, frame) in seq.frames.iter().enumerate() {
        let name = frame_file(i, count);
        let digest = staged.put(&name, &frame.encode_png16()?)?;
        manifest.files.insert(name, digest);
    }
    if let Some(disps) = &seq.displacements {
        for (i, d) in disps.iter().enumerate() {
            let name = displacement_file(i, count);
            let digest = staged.put(&name, &RawField::from_displacement(d).encode())?;
            manifest.files.insert(name, digest);
        }
    }
    manifest.content_hash = content_hash(&seq.ground_truth, &seq.frames);
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    staged.put(MANIFEST_FILE, &json)?;
    staged.commit()?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::integrity(&path, e.to_string()))
}

/// Reads one file listed in the manifest and checks its digest.
pub fn read_verified(dir: &Path, manifest: &Manifest, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let expected = manifest
        .files
        .get(name)
        .ok_or_else(|| Error::integrity(&path, "file not listed in manifest"))?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if &sha256_hex(&bytes) != expected {
        return Err(Error::integrity(&path, "digest mismatch"));
    }
    Ok(bytes)
}

pub fn read_sequence(dir: &Path) -> Result<VideoSequence> {
    let manifest = read_manifest(dir)?;
    let decode = |name: &str| -> Result<Image> {
        let bytes = read_verified(dir, &manifest, name)?;
        Image::decode_png(&bytes, &dir.join(name)).map_err(|e| Error::integrity(dir.join(name), e.to_string()))
    };
    let ground_truth = decode(GROUND_TRUTH_FILE)?;
    let count = manifest.frame_count;
    let frames = (0..count)
        .map(|i| decode(&frame_file(i, count)))
        .collect::<Result<Vec<_>>>()?;
    if frames.iter().any(|f| !f.same_shape(&ground_truth)) {
        return Err(Error::integrity(dir, "frames differ in resolution"));
    }
    let displacements = if manifest.files.contains_key(&displacement_file(0, count)) {
        Some(
            (0..count)
                .map(|i| {
                    let name = displacement_file(i, count);
                    let bytes = read_verified(dir, &manifest, &name)?;
                    RawField::decode(&bytes, &dir.join(&name))?.to_displacement(i)
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    if content_hash(&ground_truth, &frames) != manifest.content_hash {
        return Err(Error::integrity(dir.join(MANIFEST_FILE), "pixel content hash mismatch"));
    }
    Ok(VideoSequence {
        ground_truth,
        frames,
        displacements,
        manifest,
    })
}
