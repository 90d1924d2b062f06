//! Model checkpoint file.
//!
//! ```text
//! b"SACK" | version u16 = 1 | header_len u32 | header (JSON, UTF-8)
//! then each parameter's values as little-endian f32, in header order
//! ```
//!
//! The header records the model kind, free-form model metadata and the name
//! and shape of every parameter.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SACK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: String,
    pub meta: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

pub fn write_checkpoint<W: Write, T: Real>(
    mut w: W,
    kind: &str,
    meta: serde_json::Value,
    store: &ParamStore<T>,
) -> Result<()> {
    let header = CheckpointHeader {
        kind: kind.to_string(),
        meta,
        params: store
            .iter()
            .map(|(_, p)| ParamEntry {
                name: p.name.clone(),
                shape: p.value.shape(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(json.len() as u32)?;
    w.write_all(&json)?;
    for (_, p) in store.iter() {
        for x in p.value.data() {
            w.write_f32::<LittleEndian>(x.to_f64() as f32)?;
        }
    }
    Ok(())
}

/// Reads a checkpoint into a fresh store, in header order.
pub fn read_checkpoint<R: Read, T: Real>(mut r: R) -> Result<(CheckpointHeader, ParamStore<T>)> {
    let io = |e: std::io::Error| Error::Checkpoint(format!("truncated or unreadable: {e}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = r.read_u16::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(io)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut store = ParamStore::new();
    for entry in &header.params {
        let [rows, cols] = entry.shape;
        let mut data = vec![0f32; rows * cols];
        r.read_f32_into::<LittleEndian>(&mut data).map_err(io)?;
        let t = Tensor::new(rows, cols, data.into_iter().map(|x| T::from_f64(x as f64)).collect())?;
        store.add(entry.name.clone(), t);
    }
    Ok((header, store))
}

/// Copies values from `loaded` into `target` by parameter name, checking shapes.
pub fn restore_into<T: Real>(target: &mut ParamStore<T>, loaded: &ParamStore<T>) -> Result<()> {
    if target.len() != loaded.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} parameters, file has {}",
            target.len(),
            loaded.len()
        )));
    }
    for i in 0..target.len() {
        let id = ParamId(i);
        let name = target.get(id).name.clone();
        let src = loaded
            .find(&name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
        target
            .set_value(id, loaded.value(src).clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut s = ParamStore::<f32>::new();
        s.add("a", Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap());
        s.add("b", Tensor::new(1, 3, vec![-1.0, 0.0, 7.25]).unwrap());
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "test", serde_json::json!({"k": 1}), &s).unwrap();
        let (h, back) = read_checkpoint::<_, f32>(buf.as_slice()).unwrap();
        assert_eq!(h.kind, "test");
        assert_eq!(h.meta["k"], 1);
        for ((_, p), (_, q)) in s.iter().zip(back.iter()) {
            assert_eq!(p.name, q.name);
            assert_eq!(p.value, q.value);
        }
        let mut target = s.clone();
        restore_into(&mut target, &back).unwrap();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut s = ParamStore::<f32>::new();
        s.add("a", Tensor::zeros(4, 4));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "t", serde_json::Value::Null, &s).unwrap();
        assert!(read_checkpoint::<_, f32>(&buf[..buf.len() - 1]).is_err());
        assert!(read_checkpoint::<_, f32>(&b"NOPE"[..]).is_err());
    }
}
