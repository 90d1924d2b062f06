//! Shared domain types: annotated sentences, chunk sequences and tuples.
//!
//! All types here are plain immutable data once built. Token and chunk
//! indices are 0-based; every span is inclusive on both ends.

use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest argument role is `ARG{MAX_ARG_ROLES - 1}`.
pub const MAX_ARG_ROLES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub pos: String,
    pub is_verb: bool,
}

/// Head of a dependency arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Root,
    Token(usize),
}

impl Head {
    /// In-memory integer encoding: `-1` for the root sentinel.
    pub fn to_signed(self) -> i64 {
        match self {
            Head::Root => -1,
            Head::Token(i) => i as i64,
        }
    }

    pub fn from_signed(v: i64) -> Option<Head> {
        match v {
            -1 => Some(Head::Root),
            i if i >= 0 => Some(Head::Token(i as usize)),
            _ => None,
        }
    }

    pub fn token(self) -> Option<usize> {
        match self {
            Head::Root => None,
            Head::Token(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyArc {
    pub head: Head,
    pub dependent: usize,
    pub label: String,
}

impl DependencyArc {
    pub fn new(head: Head, dependent: usize, label: impl Into<String>) -> Self {
        Self {
            head,
            dependent,
            label: label.into(),
        }
    }
}

/// Dense row-major `f32` matrix used for per-token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub arcs: Vec<DependencyArc>,
    pub embeddings: Option<Matrix>,
}

impl AnnotatedSentence {
    /// Builds a sentence from parallel surface/POS lists; no arcs, no verbs.
    pub fn from_words<S: AsRef<str>>(id: impl Into<String>, words: &[(S, S)]) -> Self {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(index, (w, p))| Token {
                index,
                surface: w.as_ref().to_string(),
                pos: p.as_ref().to_string(),
                is_verb: false,
            })
            .collect();
        Self {
            id: id.into(),
            tokens,
            arcs: Vec::new(),
            embeddings: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn verb_indices(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.is_verb)
            .map(|t| t.index)
            .collect()
    }

    /// Head of every token, indexed by dependent. `None` where no arc exists.
    pub fn heads(&self) -> Vec<Option<(Head, &str)>> {
        let mut heads = vec![None; self.tokens.len()];
        for arc in &self.arcs {
            if arc.dependent < heads.len() {
                heads[arc.dependent] = Some((arc.head, arc.label.as_str()));
            }
        }
        heads
    }
}

/// Reports every broken invariant of a sentence. An empty list means valid.
pub fn validate_sentence(s: &AnnotatedSentence) -> Vec<String> {
    let mut out = Vec::new();
    let n = s.tokens.len();
    for (i, t) in s.tokens.iter().enumerate() {
        if t.index != i {
            out.push(format!("token {i} has index {}", t.index));
        }
        if t.surface.is_empty() {
            out.push(format!("token {i} has empty surface"));
        }
    }
    let mut seen = vec![0usize; n];
    for arc in &s.arcs {
        if arc.dependent >= n {
            out.push("arc dependent out of range".to_string());
            continue;
        }
        seen[arc.dependent] += 1;
        match arc.head {
            Head::Token(h) if h >= n => out.push("arc head out of range".to_string()),
            Head::Token(h) if h == arc.dependent => {
                out.push(format!("token {h} is its own head"))
            }
            _ => {}
        }
    }
    if !s.arcs.is_empty() {
        for (i, &c) in seen.iter().enumerate() {
            if c != 1 {
                out.push(format!("token {i} has {c} incoming arcs"));
            }
        }
    }
    if let Some(e) = &s.embeddings {
        if e.rows() != n {
            out.push("embedding row mismatch".to_string());
        }
    }
    out
}

/// Chunk type inventory active for a model or corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkInventory {
    pub name: String,
    pub types: Vec<String>,
}

impl ChunkInventory {
    pub fn conll() -> Self {
        Self::named(
            "conll",
            &[
                "NP", "VP", "PP", "ADVP", "SBAR", "ADJP", "PRT", "CONJP", "INTJ", "LST", "UCP",
                "O",
            ],
        )
    }

    pub fn oia_simple_phrase() -> Self {
        Self::named(
            "oia-sp",
            &[
                "Noun",
                "Verbal",
                "Prepositional",
                "Logical",
                "Modifier",
                "Function",
                "O",
            ],
        )
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "conll" => Ok(Self::conll()),
            "oia-sp" => Ok(Self::oia_simple_phrase()),
            other => Err(Error::Config(format!("unknown chunk inventory {other:?}"))),
        }
    }

    fn named(name: &str, types: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            types: types.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index_of(&self, ty: &str) -> Option<usize> {
        self.types.iter().position(|t| t == ty)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub chunk_type: String,
}

impl Chunk {
    pub fn new(start: usize, end: usize, chunk_type: impl Into<String>) -> Self {
        Self {
            start,
            end,
            chunk_type: chunk_type.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

/// A sentence as an ordered, non-overlapping, exhaustive chunk sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSequence {
    pub sentence_id: String,
    pub chunks: Vec<Chunk>,
}

impl ChunkSequence {
    pub fn new(sentence_id: impl Into<String>, chunks: Vec<Chunk>) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            chunks,
        }
    }

    /// Every token in its own chunk of type `ty`.
    pub fn singletons(sentence_id: impl Into<String>, n: usize, ty: &str) -> Self {
        Self::new(sentence_id, (0..n).map(|i| Chunk::new(i, i, ty)).collect())
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Number of tokens covered (last chunk end + 1).
    pub fn token_count(&self) -> usize {
        self.chunks.last().map_or(0, |c| c.end + 1)
    }

    /// Checks exhaustiveness over `n` tokens and ordering.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut next = 0;
        for (k, c) in self.chunks.iter().enumerate() {
            if c.start != next || c.end < c.start {
                return Err(Error::invalid(format!(
                    "sentence {}: chunk {k} [{}..{}] breaks the exhaustive ordering at token {next}",
                    self.sentence_id, c.start, c.end
                )));
            }
            next = c.end + 1;
        }
        if next != n {
            return Err(Error::invalid(format!(
                "sentence {}: chunks cover {next} tokens, sentence has {n}",
                self.sentence_id
            )));
        }
        Ok(())
    }

    /// Checks every chunk type against an inventory.
    pub fn validate_types(&self, inventory: &ChunkInventory) -> Result<()> {
        for c in &self.chunks {
            if inventory.index_of(&c.chunk_type).is_none() {
                return Err(Error::invalid(format!(
                    "sentence {}: chunk type {:?} not in inventory {}",
                    self.sentence_id, c.chunk_type, inventory.name
                )));
            }
        }
        Ok(())
    }

    /// Chunk index of every token.
    pub fn token_to_chunk(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.token_count());
        for (k, c) in self.chunks.iter().enumerate() {
            out.extend(std::iter::repeat(k).take(c.len()));
        }
        out
    }

    /// Token range covered by chunks `first..=last`.
    pub fn token_span(&self, first: usize, last: usize) -> (usize, usize) {
        (self.chunks[first].start, self.chunks[last].end)
    }
}

/// Index of the unique chunk containing token `t`.
pub fn chunk_of_token(cs: &ChunkSequence, t: usize) -> Result<usize> {
    if t >= cs.token_count() {
        return Err(Error::invalid(format!(
            "token {t} out of range for {} tokens",
            cs.token_count()
        )));
    }
    let k = cs.chunks.partition_point(|c| c.end < t);
    debug_assert!(cs.chunks[k].contains(t));
    Ok(k)
}

/// Role of a tuple slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Rel,
    Arg(u8),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Rel => f.write_str("REL"),
            Role::Arg(k) => write!(f, "ARG{k}"),
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "REL" {
            return Ok(Role::Rel);
        }
        s.strip_prefix("ARG")
            .and_then(|k| k.parse::<u8>().ok())
            .filter(|&k| (k as usize) < MAX_ARG_ROLES)
            .map(Role::Arg)
            .ok_or_else(|| Error::invalid(format!("unknown role {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSpan {
    pub role: Role,
    /// Inclusive chunk index range.
    pub chunk_span: (usize, usize),
    /// Inclusive token range, the union of the member chunks.
    pub token_span: (usize, usize),
}

impl TupleSpan {
    pub fn new(role: Role, cs: &ChunkSequence, first: usize, last: usize) -> Self {
        Self {
            role,
            chunk_span: (first, last),
            token_span: cs.token_span(first, last),
        }
    }

    pub fn token_indices(&self) -> Vec<usize> {
        (self.token_span.0..=self.token_span.1).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedTuple {
    pub relation: TupleSpan,
    pub arguments: Vec<TupleSpan>,
    pub confidence: f64,
    pub verb_index: usize,
}

/// Ground-truth tuple: sorted token index sets per slot; argument order is role order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GoldTuple {
    pub relation: Vec<usize>,
    pub arguments: Vec<Vec<usize>>,
}

impl GoldTuple {
    pub fn new(relation: Vec<usize>, arguments: Vec<Vec<usize>>) -> Self {
        Self {
            relation,
            arguments,
        }
    }

    pub fn max_token(&self) -> Option<usize> {
        self.relation
            .iter()
            .chain(self.arguments.iter().flatten())
            .copied()
            .max()
    }
}

impl From<&ExtractedTuple> for GoldTuple {
    fn from(t: &ExtractedTuple) -> Self {
        GoldTuple {
            relation: t.relation.token_indices(),
            arguments: t.arguments.iter().map(|a| a.token_indices()).collect(),
        }
    }
}

/// Splits a sorted token set into maximal contiguous inclusive ranges.
pub fn contiguous_runs(tokens: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &t in tokens {
        match runs.last_mut() {
            Some(last) if last.1 + 1 == t => last.1 = t,
            _ => runs.push((t, t)),
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_tokens() -> AnnotatedSentence {
        let mut s = AnnotatedSentence::from_words("s", &[("He", "PRON"), ("ran", "VERB"), ("home", "NOUN")]);
        s.arcs = vec![
            DependencyArc::new(Head::Token(1), 0, "nsubj"),
            DependencyArc::new(Head::Root, 1, "root"),
            DependencyArc::new(Head::Token(1), 2, "obj"),
        ];
        s
    }

    #[test]
    fn well_formed_sentence_has_no_violations() {
        assert!(validate_sentence(&three_tokens()).is_empty());
    }

    #[test]
    fn out_of_range_dependent_is_reported() {
        let mut s = three_tokens();
        s.arcs[2].dependent = 5;
        assert!(validate_sentence(&s).contains(&"arc dependent out of range".to_string()));
    }

    #[test]
    fn embedding_rows_must_match_tokens() {
        let mut s = three_tokens();
        s.embeddings = Some(Matrix::zeros(2, 4));
        assert_eq!(validate_sentence(&s), vec!["embedding row mismatch".to_string()]);
    }

    #[test]
    fn chunk_lookup() {
        let cs = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP"), Chunk::new(2, 2, "VP")]);
        assert_eq!(chunk_of_token(&cs, 1).unwrap(), 0);
        assert_eq!(chunk_of_token(&cs, 2).unwrap(), 1);
        assert!(chunk_of_token(&cs, 7).is_err());
    }

    #[test]
    fn chunk_sequence_validation() {
        let cs = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP"), Chunk::new(3, 3, "VP")]);
        assert!(cs.validate(4).is_err());
        let cs = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP"), Chunk::new(2, 3, "VP")]);
        assert!(cs.validate(4).is_ok());
        assert!(cs.validate(5).is_err());
        assert!(cs.validate_types(&ChunkInventory::conll()).is_ok());
        assert!(cs.validate_types(&ChunkInventory::oia_simple_phrase()).is_err());
    }

    #[test]
    fn roles_round_trip_through_strings() {
        for r in [Role::Rel, Role::Arg(0), Role::Arg(5)] {
            assert_eq!(r.to_string().parse::<Role>().unwrap(), r);
        }
        assert!("ARG6".parse::<Role>().is_err());
    }

    #[test]
    fn runs() {
        assert_eq!(contiguous_runs(&[0, 1, 2, 5, 7, 8]), vec![(0, 2), (5, 5), (7, 8)]);
        assert!(contiguous_runs(&[]).is_empty());
    }
}
