//! Binary per-token embedding file, little-endian throughout.
//!
//! ```text
//! header:  b"SACE" | version u16 = 1 | dim u32 | count u64
//! record:  id_len u32 | id (UTF-8) | tokens u32 | tokens * dim f32
//! ```

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Matrix};

pub const MAGIC: &[u8; 4] = b"SACE";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingFileHeader {
    pub dim: u32,
    pub count: u64,
}

/// Embedding matrices keyed by sentence id, in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub matrices: BTreeMap<String, Matrix>,
}

fn truncated(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Embedding(format!("truncated stream while reading {what}"))
    } else {
        Error::Io(e)
    }
}

pub fn read_header<R: Read>(r: &mut R) -> Result<EmbeddingFileHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| truncated(e, "magic"))?;
    if &magic != MAGIC {
        return Err(Error::Embedding(format!("bad magic {magic:?}")));
    }
    let version = r
        .read_u16::<LittleEndian>()
        .map_err(|e| truncated(e, "version"))?;
    if version != VERSION {
        return Err(Error::Embedding(format!("unsupported version {version}")));
    }
    let dim = r.read_u32::<LittleEndian>().map_err(|e| truncated(e, "dim"))?;
    if dim == 0 {
        return Err(Error::Embedding("dim must be positive".into()));
    }
    let count = r
        .read_u64::<LittleEndian>()
        .map_err(|e| truncated(e, "count"))?;
    Ok(EmbeddingFileHeader { dim, count })
}

pub fn read_embeddings<R: Read>(mut r: R) -> Result<EmbeddingTable> {
    let header = read_header(&mut r)?;
    let dim = header.dim as usize;
    let mut matrices = BTreeMap::new();
    for k in 0..header.count {
        let what = format!("record {}", k + 1);
        let id_len = r.read_u32::<LittleEndian>().map_err(|e| truncated(e, &what))? as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(|e| truncated(e, &what))?;
        let id = String::from_utf8(id)
            .map_err(|_| Error::Embedding(format!("{what}: id is not UTF-8")))?;
        let rows = r.read_u32::<LittleEndian>().map_err(|e| truncated(e, &what))? as usize;
        let mut data = vec![0f32; rows * dim];
        r.read_f32_into::<LittleEndian>(&mut data)
            .map_err(|e| truncated(e, &what))?;
        if matrices.insert(id.clone(), Matrix::new(rows, dim, data)?).is_some() {
            return Err(Error::Embedding(format!("duplicate sentence id {id:?}")));
        }
    }
    Ok(EmbeddingTable { dim, matrices })
}

/// Writes matrices in the given order. All must share one width.
pub fn write_embeddings<W: Write>(mut w: W, dim: usize, entries: &[(&str, &Matrix)]) -> Result<()> {
    if dim == 0 {
        return Err(Error::Embedding("dim must be positive".into()));
    }
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(dim as u32)?;
    w.write_u64::<LittleEndian>(entries.len() as u64)?;
    for (id, m) in entries {
        if m.cols() != dim {
            return Err(Error::Embedding(format!(
                "sentence {id}: width {} differs from file dim {dim}",
                m.cols()
            )));
        }
        w.write_u32::<LittleEndian>(id.len() as u32)?;
        w.write_all(id.as_bytes())?;
        w.write_u32::<LittleEndian>(m.rows() as u32)?;
        for &x in m.data() {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    Ok(())
}

impl EmbeddingTable {
    /// Attaches matrices to sentences by id, checking row counts and width.
    pub fn attach(&self, sentences: &mut [AnnotatedSentence], expected_dim: Option<usize>) -> Result<()> {
        if let Some(d) = expected_dim {
            if d != self.dim {
                return Err(Error::Embedding(format!(
                    "file dim {} does not match expected {d}",
                    self.dim
                )));
            }
        }
        for s in sentences.iter_mut() {
            let m = self
                .matrices
                .get(&s.id)
                .ok_or_else(|| Error::Embedding(format!("no embeddings for sentence {:?}", s.id)))?;
            if m.rows() != s.len() {
                return Err(Error::Embedding(format!(
                    "sentence {:?}: {} embedding rows for {} tokens",
                    s.id,
                    m.rows(),
                    s.len()
                )));
            }
            s.embeddings = Some(m.clone());
        }
        Ok(())
    }
}
