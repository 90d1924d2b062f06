//! Small rule-generated corpus with synthetic embeddings, used for overfit
//! checks and end-to-end pipeline runs.
//!
//! Sentences follow `NP VERB NP [ADP NP]` or `NP VERB NP and VERB NP`.
//! Every token vector is a word vector plus a vector keyed by the token's
//! left and right neighbours, both derived from a hash so that the corpus is
//! identical on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extractor::OieExample;
use crate::io::{TupleDocument, TupleEntry};
use crate::model::{AnnotatedSentence, Chunk, ChunkSequence, DependencyArc, GoldTuple, Head, Matrix};

pub const TOY_SENTENCES: usize = 50;
pub const TOY_SEED: u64 = 2024;

const DET: &[&str] = &["the", "a", "this", "every"];
const ADJ: &[&str] = &["small", "red", "old", "quiet", "bright"];
const NOUN: &[&str] = &[
    "dog", "cat", "teacher", "river", "house", "letter", "garden", "car", "child", "book", "city", "friend",
];
const PROPN: &[&str] = &["Anna", "Lee", "Paris", "Jimmy", "Mara"];
const PRON: &[&str] = &["she", "he", "they"];
const VERB: &[&str] = &["saw", "found", "wrote", "visited", "painted", "carried", "opened", "liked"];
const ADP: &[&str] = &["in", "near", "with", "from", "behind"];

#[derive(Debug, Clone)]
pub struct ToyItem {
    pub sentence: AnnotatedSentence,
    pub chunks: ChunkSequence,
    pub tuples: Vec<GoldTuple>,
    /// Relation-indicator token of each tuple.
    pub verbs: Vec<usize>,
}

impl ToyItem {
    pub fn oie_example(&self) -> OieExample {
        let explicit: Vec<Option<usize>> = self.verbs.iter().map(|&v| Some(v)).collect();
        OieExample::new(self.sentence.clone(), self.chunks.clone(), self.tuples.clone(), &explicit)
    }

    pub fn tuple_document(&self) -> TupleDocument {
        TupleDocument {
            sentence: self.sentence.clone(),
            tuples: self
                .tuples
                .iter()
                .zip(&self.verbs)
                .map(|(t, &v)| TupleEntry {
                    verb: Some(v),
                    ..TupleEntry::plain(t.clone())
                })
                .collect(),
        }
    }
}

struct Builder {
    words: Vec<(String, String)>,
    arcs: Vec<DependencyArc>,
    chunks: Vec<Chunk>,
}

impl Builder {
    fn push(&mut self, w: &str, pos: &str) -> usize {
        self.words.push((w.to_string(), pos.to_string()));
        self.words.len() - 1
    }

    /// Appends a noun phrase chunk and returns (first, head) token indices.
    fn noun_phrase(&mut self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let first = self.words.len();
        let head = match rng.gen_range(0..4) {
            0 => self.push(PROPN.choose(rng).unwrap(), "PROPN"),
            1 => self.push(PRON.choose(rng).unwrap(), "PRON"),
            k => {
                let det = self.push(DET.choose(rng).unwrap(), "DET");
                let adj = (k == 3).then(|| self.push(ADJ.choose(rng).unwrap(), "ADJ"));
                let n = self.push(NOUN.choose(rng).unwrap(), "NOUN");
                self.arcs.push(DependencyArc::new(Head::Token(n), det, "det"));
                if let Some(a) = adj {
                    self.arcs.push(DependencyArc::new(Head::Token(n), a, "amod"));
                }
                n
            }
        };
        self.chunks.push(Chunk::new(first, self.words.len() - 1, "NP"));
        (first, head)
    }

    fn single(&mut self, w: &str, pos: &str, ty: &str) -> usize {
        let i = self.push(w, pos);
        self.chunks.push(Chunk::new(i, i, ty));
        i
    }
}

fn span(a: usize, b: usize) -> Vec<usize> {
    (a..=b).collect()
}

fn make_item(id: String, two_clauses: bool, with_pp: bool, rng: &mut ChaCha8Rng, dim: usize) -> ToyItem {
    let mut b = Builder {
        words: Vec::new(),
        arcs: Vec::new(),
        chunks: Vec::new(),
    };
    let (s0, sh) = b.noun_phrase(rng);
    let subj = span(s0, b.words.len() - 1);
    let v1 = b.single(VERB.choose(rng).unwrap(), "VERB", "VP");
    b.arcs.push(DependencyArc::new(Head::Root, v1, "root"));
    b.arcs.push(DependencyArc::new(Head::Token(v1), sh, "nsubj"));
    let (o0, oh) = b.noun_phrase(rng);
    let obj = span(o0, b.words.len() - 1);
    b.arcs.push(DependencyArc::new(Head::Token(v1), oh, "obj"));
    let mut first = GoldTuple::new(vec![v1], vec![subj.clone(), obj]);
    let mut verbs = vec![v1];
    let mut tuples = Vec::new();
    if with_pp {
        let p = b.single(ADP.choose(rng).unwrap(), "ADP", "PP");
        let (_, ph) = b.noun_phrase(rng);
        b.arcs.push(DependencyArc::new(Head::Token(ph), p, "case"));
        b.arcs.push(DependencyArc::new(Head::Token(v1), ph, "obl"));
        first.arguments.push(span(p, b.words.len() - 1));
    }
    tuples.push(first);
    if two_clauses {
        let c = b.single("and", "CCONJ", "O");
        let v2 = b.single(VERB.choose(rng).unwrap(), "VERB", "VP");
        b.arcs.push(DependencyArc::new(Head::Token(v2), c, "cc"));
        b.arcs.push(DependencyArc::new(Head::Token(v1), v2, "conj"));
        let (o0, oh) = b.noun_phrase(rng);
        let obj2 = span(o0, b.words.len() - 1);
        b.arcs.push(DependencyArc::new(Head::Token(v2), oh, "obj"));
        tuples.push(GoldTuple::new(vec![v2], vec![subj, obj2]));
        verbs.push(v2);
    }
    let mut sentence = AnnotatedSentence::from_words(id.clone(), &b.words);
    for t in &mut sentence.tokens {
        t.is_verb = t.pos == "VERB";
    }
    b.arcs.sort_by_key(|a| a.dependent);
    sentence.arcs = b.arcs;
    let surfaces: Vec<&str> = sentence.tokens.iter().map(|t| t.surface.as_str()).collect();
    sentence.embeddings = Some(synthetic_embeddings(&surfaces, dim));
    ToyItem {
        chunks: ChunkSequence::new(id, b.chunks),
        sentence,
        tuples,
        verbs,
    }
}

/// The bundled corpus: `TOY_SENTENCES` sentences, ids `s1`, `s2`, ...
pub fn toy_corpus(dim: usize) -> Vec<ToyItem> {
    generate(TOY_SENTENCES, TOY_SEED, dim)
}

/// Every fifth sentence has two clauses; the others get a prepositional
/// phrase with probability one half.
pub fn generate(count: usize, seed: u64, dim: usize) -> Vec<ToyItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let two = i % 5 == 4;
            let pp = !two && rng.gen_bool(0.5);
            make_item(format!("s{}", i + 1), two, pp, &mut rng, dim)
        })
        .collect()
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (k, p) in parts.iter().enumerate() {
        if k > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for byte in p.bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn hashed_vector(key: u64, dim: usize, scale: f32) -> impl Iterator<Item = f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (0..dim).map(move |_| rng.gen_range(-scale..scale))
}

/// Word vector plus a vector keyed by `(previous, word, next)`.
pub fn synthetic_embeddings(tokens: &[&str], dim: usize) -> Matrix {
    let mut data = Vec::with_capacity(tokens.len() * dim);
    for (i, w) in tokens.iter().enumerate() {
        let prev = if i == 0 { "<s>" } else { tokens[i - 1] };
        let next = tokens.get(i + 1).copied().unwrap_or("</s>");
        let word = hashed_vector(fnv1a(&[w]), dim, 0.1);
        let ctx = hashed_vector(fnv1a(&[prev, w, next]), dim, 0.05);
        data.extend(word.zip(ctx).map(|(a, b)| a + b));
    }
    Matrix::new(tokens.len(), dim, data).expect("shape")
}
