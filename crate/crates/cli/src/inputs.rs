//! File loading shared by the subcommands. Formats are chosen by extension:
//! `.conllu` for dependency trees, `.conll` / `.txt` for CoNLL-2000 chunk
//! files, `.sace` for embeddings and JSON Lines (`.jsonl`) for tuple or chunk
//! records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use sac_oie::io::{self, TupleDocument};
use sac_oie::model::{AnnotatedSentence, ChunkSequence};
use sac_oie::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Conllu,
    Conll2000,
    Jsonl,
}

pub fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("conllu") => Ok(Format::Conllu),
        Some("conll" | "conll2000" | "txt") => Ok(Format::Conll2000),
        Some("jsonl" | "json") => Ok(Format::Jsonl),
        _ => Err(Error::invalid(format!(
            "{}: unknown extension (expected .conllu, .conll, .txt or .jsonl)",
            path.display()
        ))
        .into()),
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Writes through a buffered file, creating parent directories.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> sac_oie::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    body(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

/// Sentences with any gold tuples they carry, plus the chunkings found in the
/// same file (CoNLL-2000 only).
pub struct Corpus {
    pub docs: Vec<TupleDocument>,
    pub chunks: Option<Vec<ChunkSequence>>,
}

impl Corpus {
    pub fn sentences(&self) -> Vec<AnnotatedSentence> {
        self.docs.iter().map(|d| d.sentence.clone()).collect()
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let what = || format!("reading {}", path.display());
    Ok(match format_of(path)? {
        Format::Conllu => {
            let sentences = io::parse_conllu(open(path)?).with_context(what)?;
            Corpus {
                docs: sentences
                    .into_iter()
                    .map(|sentence| TupleDocument {
                        sentence,
                        tuples: Vec::new(),
                    })
                    .collect(),
                chunks: None,
            }
        }
        Format::Conll2000 => {
            let c = io::parse_conll2000(open(path)?).with_context(what)?;
            let (sentences, chunks): (Vec<_>, Vec<_>) = c.items.into_iter().unzip();
            Corpus {
                docs: sentences
                    .into_iter()
                    .map(|sentence| TupleDocument {
                        sentence,
                        tuples: Vec::new(),
                    })
                    .collect(),
                chunks: Some(chunks),
            }
        }
        Format::Jsonl => Corpus {
            docs: io::parse_tuples(open(path)?).with_context(what)?,
            chunks: None,
        },
    })
}

pub fn load_tuples(path: &Path) -> Result<Vec<TupleDocument>> {
    match format_of(path)? {
        Format::Jsonl => Ok(io::parse_tuples(open(path)?).with_context(|| format!("reading {}", path.display()))?),
        _ => Err(Error::invalid(format!("{}: tuple files are JSON Lines", path.display())).into()),
    }
}

pub fn load_chunks(path: &Path) -> Result<Vec<ChunkSequence>> {
    let what = || format!("reading {}", path.display());
    match format_of(path)? {
        Format::Conll2000 => Ok(io::parse_conll2000(open(path)?)
            .with_context(what)?
            .items
            .into_iter()
            .map(|(_, cs)| cs)
            .collect()),
        Format::Jsonl => Ok(io::parse_chunks(open(path)?).with_context(what)?),
        Format::Conllu => Err(Error::invalid(format!("{}: CoNLL-U carries no chunks", path.display())).into()),
    }
}

/// Attaches embeddings by sentence id, checking the width against `dim`.
pub fn attach_embeddings(path: &Path, sentences: &mut [AnnotatedSentence], dim: usize) -> Result<()> {
    let table = io::read_embeddings(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    table
        .attach(sentences, Some(dim))
        .with_context(|| format!("joining {}", path.display()))?;
    Ok(())
}

/// Orders `chunks` to follow `sentences`, matching by id and checking lengths.
pub fn align_chunks(sentences: &[AnnotatedSentence], chunks: Vec<ChunkSequence>) -> Result<Vec<ChunkSequence>> {
    let mut by_id: BTreeMap<String, ChunkSequence> = BTreeMap::new();
    for cs in chunks {
        let id = cs.sentence_id.clone();
        if by_id.insert(id.clone(), cs).is_some() {
            return Err(Error::invalid(format!("sentence {id} is chunked twice")).into());
        }
    }
    sentences
        .iter()
        .map(|s| {
            let cs = by_id
                .remove(&s.id)
                .ok_or_else(|| Error::invalid(format!("no chunking for sentence {}", s.id)))?;
            cs.validate(s.len())
                .with_context(|| format!("chunking of sentence {}", s.id))?;
            Ok(cs)
        })
        .collect()
}
