//! CoNLL-2000 chunking format: `surface POS tag` per line, blank line between
//! sentences, tags `B-X` / `I-X` / `O`.

use std::io::{BufRead, Write};

use log::warn;

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Chunk, ChunkSequence};

/// A stray `I-X` that was read as `B-X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRepair {
    pub line: usize,
    pub sentence_id: String,
    pub token: usize,
    pub tag: String,
}

#[derive(Debug, Clone, Default)]
pub struct Conll2000Corpus {
    pub items: Vec<(AnnotatedSentence, ChunkSequence)>,
    pub repairs: Vec<TagRepair>,
}

/// Sentence ids are assigned as `s1`, `s2`, ... in file order.
pub fn sentence_id(ordinal: usize) -> String {
    format!("s{ordinal}")
}

#[derive(Default)]
struct Pending {
    words: Vec<(String, String)>,
    chunks: Vec<Chunk>,
}

pub fn parse_conll2000<R: BufRead>(reader: R) -> Result<Conll2000Corpus> {
    let mut corpus = Conll2000Corpus::default();
    let mut cur = Pending::default();

    let flush = |cur: &mut Pending, corpus: &mut Conll2000Corpus| {
        if cur.words.is_empty() {
            return;
        }
        let id = sentence_id(corpus.items.len() + 1);
        let pending = std::mem::take(cur);
        let sentence = AnnotatedSentence::from_words(id.clone(), &pending.words);
        corpus
            .items
            .push((sentence, ChunkSequence::new(id, pending.chunks)));
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut cur, &mut corpus);
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 columns, found {}", cols.len()),
            });
        }
        let (surface, pos, tag) = (cols[0], cols[1], cols[2]);
        let t = cur.words.len();
        cur.words.push((surface.to_string(), pos.to_string()));

        if tag == "O" {
            cur.chunks.push(Chunk::new(t, t, "O"));
            continue;
        }
        let (prefix, ty) = tag
            .split_once('-')
            .filter(|(_, ty)| !ty.is_empty())
            .ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("malformed chunk tag {tag:?}"),
            })?;
        match prefix {
            "B" => cur.chunks.push(Chunk::new(t, t, ty)),
            "I" => match cur.chunks.last_mut() {
                Some(last) if last.chunk_type == ty && last.chunk_type != "O" => last.end = t,
                _ => {
                    let sentence_id = sentence_id(corpus.items.len() + 1);
                    warn!("line {lineno}: stray {tag} in {sentence_id} read as B-{ty}");
                    corpus.repairs.push(TagRepair {
                        line: lineno,
                        sentence_id,
                        token: t,
                        tag: tag.to_string(),
                    });
                    cur.chunks.push(Chunk::new(t, t, ty));
                }
            },
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("malformed chunk tag {tag:?}"),
                })
            }
        }
    }
    flush(&mut cur, &mut corpus);
    Ok(corpus)
}

/// Writes sentences with their chunkings. Chunks of type `O` must be single tokens.
pub fn write_conll2000<W: Write>(
    mut w: W,
    items: &[(AnnotatedSentence, ChunkSequence)],
) -> Result<()> {
    for (k, (s, cs)) in items.iter().enumerate() {
        cs.validate(s.len())?;
        if k > 0 {
            writeln!(w)?;
        }
        for c in &cs.chunks {
            if c.chunk_type == "O" && c.len() > 1 {
                return Err(Error::invalid(format!(
                    "sentence {}: multi-token O chunk [{}..{}] is not representable",
                    s.id, c.start, c.end
                )));
            }
            for t in c.tokens() {
                let tok = &s.tokens[t];
                let tag = if c.chunk_type == "O" {
                    "O".to_string()
                } else if t == c.start {
                    format!("B-{}", c.chunk_type)
                } else {
                    format!("I-{}", c.chunk_type)
                };
                writeln!(w, "{} {} {}", tok.surface, tok.pos, tag)?;
            }
        }
    }
    Ok(())
}
