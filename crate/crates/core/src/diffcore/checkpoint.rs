//! Checkpoint files: one line of JSON header, then every parameter's
//! values as little-endian f64 in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::util::write_atomic;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    /// Model family, e.g. `upvote-scorer` or `pointer-generator`.
    pub kind: String,
    pub config: serde_json::Value,
    /// Model-specific extras such as the vocabulary.
    #[serde(default)]
    pub meta: serde_json::Value,
    pub manifest: Vec<ManifestEntry>,
}

pub fn encode_checkpoint(
    kind: &str,
    config: serde_json::Value,
    meta: serde_json::Value,
    store: &ParamStore,
) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        kind: kind.to_string(),
        config,
        meta,
        manifest: store
            .iter()
            .map(|p| ManifestEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                trainable: p.trainable,
            })
            .collect(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for p in store.iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    kind: &str,
    config: serde_json::Value,
    meta: serde_json::Value,
    store: &ParamStore,
) -> Result<()> {
    let bytes = encode_checkpoint(kind, config, meta, store)?;
    write_atomic(path.as_ref(), &bytes)
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<(CheckpointHeader, ParamStore), String> {
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or("checkpoint header is not newline-terminated")?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| format!("bad checkpoint header: {e}"))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(format!("unsupported checkpoint version {}", header.version));
    }
    let mut body = &bytes[nl + 1..];
    let mut store = ParamStore::new();
    for entry in &header.manifest {
        let n: usize = entry.shape.iter().product();
        if body.len() < 8 * n {
            return Err(format!("checkpoint truncated inside parameter {}", entry.name));
        }
        let data = body[..8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        body = &body[8 * n..];
        store.add(
            entry.name.clone(),
            Tensor::new(entry.shape.clone(), data),
            entry.trainable,
        );
    }
    if !body.is_empty() {
        return Err(format!("{} trailing bytes after the last parameter", body.len()));
    }
    Ok((header, store))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(CheckpointHeader, ParamStore)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|reason| Error::format(path, reason))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_and_flags() {
        let mut store = ParamStore::new();
        store.add("a", Tensor::matrix(2, 2, vec![1.0, -2.5, 3.25, 1e-300]), true);
        store.add("b", Tensor::vector(vec![0.1]), false);
        let bytes = encode_checkpoint("test", serde_json::json!({"k": 1}), serde_json::Value::Null, &store).unwrap();
        let (header, loaded) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(header.kind, "test");
        assert_eq!(header.manifest.len(), 2);
        for (a, b) in store.iter().zip(loaded.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value, b.value);
            assert_eq!(a.trainable, b.trainable);
        }
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    }
}
