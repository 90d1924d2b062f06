//! JSON Lines tuple corpora: one object per sentence.
//!
//! ```text
//! {"id": "s1", "tokens": ["He", "ran"], "pos": ["PRON", "VERB"], "verbs": [1],
//!  "arcs": [[1, 0, "nsubj"], [-1, 1, "root"]],
//!  "tuples": [{"rel": [1], "args": [[0]]}]}
//! ```
//!
//! Token indices are 0-based and arc heads use `-1` for the root. A tuple may
//! carry `confidence` and `verb` (predictions) or `synset` (fact grouping).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_sentence, AnnotatedSentence, DependencyArc, GoldTuple, Head, Token};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleRecord {
    id: String,
    tokens: Vec<String>,
    pos: Vec<String>,
    #[serde(default)]
    verbs: Vec<usize>,
    #[serde(default)]
    arcs: Vec<(i64, usize, String)>,
    #[serde(default)]
    tuples: Vec<TupleObject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleObject {
    rel: Vec<usize>,
    args: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verb: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synset: Option<usize>,
}

/// A tuple plus the optional per-tuple fields of the record.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleEntry {
    pub tuple: GoldTuple,
    pub confidence: Option<f64>,
    pub verb: Option<usize>,
    pub synset: Option<usize>,
}

impl TupleEntry {
    pub fn plain(tuple: GoldTuple) -> Self {
        Self {
            tuple,
            confidence: None,
            verb: None,
            synset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleDocument {
    pub sentence: AnnotatedSentence,
    pub tuples: Vec<TupleEntry>,
}

impl TupleDocument {
    pub fn gold_tuples(&self) -> Vec<GoldTuple> {
        self.tuples.iter().map(|e| e.tuple.clone()).collect()
    }
}

fn is_sorted_unique(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn check_indices(name: &str, v: &[usize], n: usize) -> std::result::Result<(), String> {
    if !is_sorted_unique(v) {
        return Err(format!("{name} indices must be sorted ascending"));
    }
    if let Some(&bad) = v.iter().find(|&&i| i >= n) {
        return Err(format!("{name} index {bad} out of range for {n} tokens"));
    }
    Ok(())
}

fn record_to_document(rec: TupleRecord) -> std::result::Result<TupleDocument, String> {
    let n = rec.tokens.len();
    if rec.pos.len() != n {
        return Err(format!("{} pos tags for {n} tokens", rec.pos.len()));
    }
    check_indices("verbs", &rec.verbs, n)?;
    let tokens = rec
        .tokens
        .into_iter()
        .zip(rec.pos)
        .enumerate()
        .map(|(index, (surface, pos))| Token {
            index,
            surface,
            pos,
            is_verb: false,
        })
        .collect::<Vec<_>>();
    let mut sentence = AnnotatedSentence {
        id: rec.id,
        tokens,
        arcs: Vec::with_capacity(rec.arcs.len()),
        embeddings: None,
    };
    for &v in &rec.verbs {
        sentence.tokens[v].is_verb = true;
    }
    for (head, dep, label) in rec.arcs {
        let head = Head::from_signed(head).ok_or_else(|| format!("invalid arc head {head}"))?;
        sentence.arcs.push(DependencyArc::new(head, dep, label));
    }
    if let Some(v) = validate_sentence(&sentence).into_iter().next() {
        return Err(v);
    }
    let mut tuples = Vec::with_capacity(rec.tuples.len());
    for (k, t) in rec.tuples.into_iter().enumerate() {
        if t.rel.is_empty() {
            return Err(format!("tuple {k}: empty rel"));
        }
        check_indices(&format!("tuple {k} rel"), &t.rel, n)?;
        for (a, arg) in t.args.iter().enumerate() {
            check_indices(&format!("tuple {k} arg {a}"), arg, n)?;
        }
        if let Some(v) = t.verb {
            if v >= n {
                return Err(format!("tuple {k}: verb {v} out of range"));
            }
        }
        tuples.push(TupleEntry {
            tuple: GoldTuple::new(t.rel, t.args),
            confidence: t.confidence,
            verb: t.verb,
            synset: t.synset,
        });
    }
    Ok(TupleDocument { sentence, tuples })
}

pub fn parse_tuples<R: BufRead>(reader: R) -> Result<Vec<TupleDocument>> {
    let mut out = Vec::new();
    let mut record = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        let rec: TupleRecord = serde_json::from_str(&line).map_err(|e| Error::Schema {
            record,
            message: e.to_string(),
        })?;
        let doc = record_to_document(rec).map_err(|message| Error::Schema { record, message })?;
        out.push(doc);
    }
    Ok(out)
}

pub fn write_tuples<W: Write>(mut w: W, docs: &[TupleDocument]) -> Result<()> {
    for doc in docs {
        let s = &doc.sentence;
        let rec = TupleRecord {
            id: s.id.clone(),
            tokens: s.tokens.iter().map(|t| t.surface.clone()).collect(),
            pos: s.tokens.iter().map(|t| t.pos.clone()).collect(),
            verbs: s.verb_indices(),
            arcs: s
                .arcs
                .iter()
                .map(|a| (a.head.to_signed(), a.dependent, a.label.clone()))
                .collect(),
            tuples: doc
                .tuples
                .iter()
                .map(|e| TupleObject {
                    rel: e.tuple.relation.clone(),
                    args: e.tuple.arguments.clone(),
                    confidence: e.confidence,
                    verb: e.verb,
                    synset: e.synset,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
    }
    Ok(())
}
