//! Versioned on-disk model format.
//!
//! Layout: 8 magic bytes, a little-endian u32 manifest length, a UTF-8 JSON
//! manifest, then every tensor's data as little-endian 32-bit floats in
//! manifest order with contiguous offsets. Loading re-validates magic,
//! version, offsets, and exact payload size before touching tensor bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::network::{init_params, ModelBundle, ModelConfig};
use crate::nn::params::ParamStore;
use crate::nn::rng::Rng;
use crate::nn::tensor::Tensor2;
use crate::text::Vocab;

pub const MODEL_MAGIC: &[u8; 8] = b"CAATMDL1";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Magic plus the 4-byte manifest length.
const HEADER_LEN: usize = MODEL_MAGIC.len() + 4;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
    byte_offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    label_names: Vec<String>,
    vocab: Vec<String>,
    tensors: Vec<TensorEntry>,
}

/// Write `bundle` to `path`. Tensor values are narrowed to 32-bit floats;
/// everything else round-trips exactly.
pub fn save_model(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let mut tensors = Vec::with_capacity(bundle.params.len());
    let mut offset: u64 = 0;
    for (name, param) in bundle.params.iter() {
        let (rows, cols) = param.value.shape();
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape: [rows, cols],
            byte_offset: offset,
        });
        offset += (rows * cols * 4) as u64;
    }
    let manifest = Manifest {
        format_version: MODEL_FORMAT_VERSION,
        config: bundle.config.clone(),
        label_names: bundle.label_names.clone(),
        vocab: bundle.vocab.tokens().to_vec(),
        tensors,
    };
    let manifest_bytes =
        serde_json::to_vec(&manifest).map_err(|e| Error::State(format!("manifest: {e}")))?;
    let manifest_len = u32::try_from(manifest_bytes.len())
        .map_err(|_| Error::State("manifest exceeds the 4 GiB length field".into()))?;

    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    file.write_all(MODEL_MAGIC)?;
    file.write_all(&manifest_len.to_le_bytes())?;
    file.write_all(&manifest_bytes)?;
    for (_, param) in bundle.params.iter() {
        for &v in param.value.data() {
            file.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    file.flush()?;
    Ok(())
}

/// The parameter names and shapes a config-plus-vocabulary pair must carry,
/// taken from the initializer so persistence can never drift from it.
fn expected_layout(config: &ModelConfig, vocab_size: usize) -> Result<Vec<(String, [usize; 2])>> {
    let mut rng = Rng::new(0);
    let skeleton = init_params(config, Tensor2::zeros(vocab_size, config.embed_dim), &mut rng)?;
    Ok(skeleton
        .iter()
        .map(|(name, p)| {
            let (r, c) = p.value.shape();
            (name.to_string(), [r, c])
        })
        .collect())
}

/// Read a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(Error::BadMagic);
    }
    let manifest_len =
        u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let payload_start = HEADER_LEN + manifest_len;
    if bytes.len() < payload_start {
        return Err(Error::Integrity(format!(
            "file ends inside the manifest ({} bytes, manifest needs {manifest_len})",
            bytes.len()
        )));
    }

    let manifest_value: serde_json::Value =
        serde_json::from_slice(&bytes[HEADER_LEN..payload_start])
            .map_err(|e| Error::Integrity(format!("manifest is not valid JSON: {e}")))?;
    let found_version = manifest_value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Integrity("manifest lacks a format_version".into()))?;
    if found_version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::Version {
            found: found_version as u32,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let manifest: Manifest = serde_json::from_value(manifest_value)
        .map_err(|e| Error::Integrity(format!("manifest: {e}")))?;

    manifest.config.validate()?;
    if manifest.label_names.len() != manifest.config.classes {
        return Err(Error::Integrity(format!(
            "{} label names for {} classes",
            manifest.label_names.len(),
            manifest.config.classes
        )));
    }

    // Offsets must be contiguous and in manifest order before any data is read.
    let layout = expected_layout(&manifest.config, manifest.vocab.len())?;
    if manifest.tensors.len() != layout.len() {
        return Err(Error::Integrity(format!(
            "manifest lists {} tensors, the architecture has {}",
            manifest.tensors.len(),
            layout.len()
        )));
    }
    let mut running: u64 = 0;
    for (entry, (name, shape)) in manifest.tensors.iter().zip(&layout) {
        if &entry.name != name || entry.shape != *shape {
            return Err(Error::Integrity(format!(
                "tensor {:?} with shape {:?}, expected {name:?} with shape {shape:?}",
                entry.name, entry.shape
            )));
        }
        if entry.byte_offset != running {
            return Err(Error::Integrity(format!(
                "tensor {name:?} at offset {}, expected {running}",
                entry.byte_offset
            )));
        }
        running += (entry.shape[0] * entry.shape[1] * 4) as u64;
    }
    let payload = &bytes[payload_start..];
    if payload.len() as u64 != running {
        return Err(Error::Integrity(format!(
            "payload is {} bytes, manifest declares {running}",
            payload.len()
        )));
    }

    let vocab = Vocab::from_tokens(manifest.vocab)?;
    let mut params = ParamStore::new();
    for entry in &manifest.tensors {
        let start = entry.byte_offset as usize;
        let count = entry.shape[0] * entry.shape[1];
        let mut data = Vec::with_capacity(count);
        for chunk in payload[start..start + count * 4].chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64);
        }
        params.insert(
            entry.name.clone(),
            Tensor2::from_vec(entry.shape[0], entry.shape[1], data)?,
        )?;
    }
    Ok(ModelBundle {
        config: manifest.config,
        label_names: manifest.label_names,
        vocab,
        params,
    })
}
