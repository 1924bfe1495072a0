//! Checkpoint container: `JPPCKPT1`, a little-endian u64 header length, a
//! JSON header, then every tensor as little-endian f64 in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::NetError;
use crate::params::ParamStore;

pub const MAGIC: &[u8; 8] = b"JPPCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset in f64 elements from the start of the blob section.
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Free-form echo of whatever produced the weights.
    pub meta: Value,
    pub tensors: Vec<TensorEntry>,
}

pub fn to_bytes(params: &ParamStore, meta: &Value) -> Vec<u8> {
    let mut tensors = Vec::with_capacity(params.len());
    let mut offset = 0;
    for p in params.iter() {
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            offset,
            len: p.data.len(),
        });
        offset += p.data.len();
    }
    let header = serde_json::to_vec(&CheckpointHeader {
        format_version: FORMAT_VERSION,
        meta: meta.clone(),
        tensors,
    })
    .expect("header serialises");
    let mut out = Vec::with_capacity(16 + header.len() + offset * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for p in params.iter() {
        for v in &p.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(ParamStore, Value), NetError> {
    let bad = |m: String| NetError::Checkpoint(m);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = 16usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[16..body]).map_err(|e| bad(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {}", header.format_version)));
    }
    let blob = &bytes[body..];
    let mut params = ParamStore::new();
    for t in header.tensors {
        if t.shape.iter().product::<usize>() != t.len {
            return Err(bad(format!("{}: shape and length disagree", t.name)));
        }
        let (a, b) = (t.offset * 8, (t.offset + t.len) * 8);
        if b > blob.len() {
            return Err(bad(format!("{}: data past end of file", t.name)));
        }
        let data = blob[a..b]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if params.id(&t.name).is_some() {
            return Err(bad(format!("duplicate tensor {}", t.name)));
        }
        params.insert(&t.name, t.shape, data);
    }
    Ok((params, header.meta))
}

pub fn save(path: &Path, params: &ParamStore, meta: &Value) -> Result<(), NetError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| NetError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, to_bytes(params, meta)).map_err(|source| NetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<(ParamStore, Value), NetError> {
    let bytes = std::fs::read(path).map_err(|source| NetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut p = ParamStore::new();
        p.insert("a.weight", vec![2, 1], vec![1.5, -0.1]);
        p.insert("a.bias", vec![2], vec![f64::MIN_POSITIVE, 3e300]);
        let meta = serde_json::json!({"step": 7});
        let bytes = to_bytes(&p, &meta);
        let (q, m) = from_bytes(&bytes).unwrap();
        assert_eq!(q, p);
        assert_eq!(m, meta);
        assert_eq!(to_bytes(&q, &m), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let mut p = ParamStore::new();
        p.insert("w", vec![3], vec![1.0, 2.0, 3.0]);
        let bytes = to_bytes(&p, &Value::Null);
        assert!(from_bytes(&bytes[..bytes.len() - 4]).is_err());
        assert!(from_bytes(b"NOTACKPTxxxxxxxx").is_err());
    }
}
