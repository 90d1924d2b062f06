//! Chunkings as JSON Lines, one sentence per line:
//! `{"id": "s1", "chunks": [[0, 1, "NP"], [2, 2, "VP"]]}` with inclusive
//! token ranges.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chunk, ChunkSequence};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChunkRecord {
    id: String,
    chunks: Vec<(usize, usize, String)>,
}

/// Reads chunkings; each must start at token 0 and tile its tokens without gaps.
pub fn parse_chunks<R: BufRead>(reader: R) -> Result<Vec<ChunkSequence>> {
    let mut out = Vec::new();
    let mut record = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        let rec: ChunkRecord = serde_json::from_str(&line).map_err(|e| Error::Schema {
            record,
            message: e.to_string(),
        })?;
        let mut next = 0;
        for &(start, end, ref ty) in &rec.chunks {
            if start != next || end < start || ty.is_empty() {
                return Err(Error::Schema {
                    record,
                    message: format!("chunk [{start}..{end}] {ty:?} does not continue at token {next}"),
                });
            }
            next = end + 1;
        }
        let chunks = rec.chunks.into_iter().map(|(s, e, t)| Chunk::new(s, e, t)).collect();
        out.push(ChunkSequence::new(rec.id, chunks));
    }
    Ok(out)
}

pub fn write_chunks<W: Write>(mut w: W, seqs: &[ChunkSequence]) -> Result<()> {
    for cs in seqs {
        let rec = ChunkRecord {
            id: cs.sentence_id.clone(),
            chunks: cs.chunks.iter().map(|c| (c.start, c.end, c.chunk_type.clone())).collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
    }
    Ok(())
}
