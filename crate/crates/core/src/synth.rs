//! Seeded random sentences, chunkings, trees and tuples for property checks
//! and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::autodiff::{grad_check, GradCheckOptions, GradCheckReport, Graph};
use crate::chunker::{chunk_targets, ChunkerModel};
use crate::depgraph::to_chunk_graph;
use crate::error::{Error, Result};
use crate::extractor::{derive_gold_tags, OieModel, OieSettings};
use crate::model::{AnnotatedSentence, Chunk, ChunkInventory, ChunkSequence, DependencyArc, GoldTuple, Head, Matrix};
use crate::vocab::Vocab;

pub const POS_TAGS: &[&str] = &["DET", "NOUN", "VERB", "ADP", "ADJ", "PRON"];
pub const DEP_LABELS: &[&str] = &["nsubj", "obj", "det", "amod", "case", "obl", "conj"];

/// Random exhaustive chunking with types drawn from `inventory`.
pub fn random_chunking<R: Rng>(rng: &mut R, id: &str, n: usize, inventory: &ChunkInventory) -> ChunkSequence {
    let mut chunks = Vec::new();
    let mut start = 0;
    for t in 0..n {
        if t + 1 == n || rng.gen_bool(0.5) {
            let ty = inventory.types.choose(rng).cloned().unwrap_or_else(|| "O".into());
            chunks.push(Chunk::new(start, t, ty));
            start = t + 1;
        }
    }
    ChunkSequence::new(id, chunks)
}

/// Random tree: tokens are attached in a random order to
/// an already attached token; the first becomes the root.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Vec<DependencyArc> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arcs = Vec::with_capacity(n);
    for (k, &t) in order.iter().enumerate() {
        if k == 0 {
            arcs.push(DependencyArc::new(Head::Root, t, "root"));
        } else {
            let h = order[rng.gen_range(0..k)];
            arcs.push(DependencyArc::new(Head::Token(h), t, *DEP_LABELS.choose(rng).unwrap()));
        }
    }
    arcs.sort_by_key(|a| a.dependent);
    arcs
}

/// Sentence of `n` tokens with a random tree, at least one verb and, when
/// `dim > 0`, uniform embeddings in `±scale`.
pub fn random_sentence<R: Rng>(rng: &mut R, id: &str, n: usize, dim: usize, scale: f32) -> AnnotatedSentence {
    let words: Vec<(String, String)> = (0..n)
        .map(|i| (format!("w{i}"), POS_TAGS.choose(rng).unwrap().to_string()))
        .collect();
    let mut s = AnnotatedSentence::from_words(id, &words);
    let forced = rng.gen_range(0..n);
    for t in &mut s.tokens {
        t.is_verb = t.index == forced || rng.gen_bool(0.2);
    }
    s.arcs = random_tree(rng, n);
    if dim > 0 {
        let data = (0..n * dim).map(|_| rng.gen_range(-scale..=scale)).collect();
        s.embeddings = Some(Matrix::new(n, dim, data).expect("shape"));
    }
    s
}

fn random_run<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> Vec<usize> {
    let len = rng.gen_range(1..=max_len.min(n));
    let start = rng.gen_range(0..=n - len);
    (start..start + len).collect()
}

/// Tuples with contiguous random slots (slots may overlap each other).
pub fn random_tuples<R: Rng>(rng: &mut R, n: usize, count: usize, max_args: usize) -> Vec<GoldTuple> {
    (0..count)
        .map(|_| {
            let rel = random_run(rng, n, 3);
            let k = rng.gen_range(1..=max_args.max(1));
            GoldTuple::new(rel, (0..k).map(|_| random_run(rng, n, 4)).collect())
        })
        .collect()
}

/// Tuples whose slots are arbitrary non-empty token sets, not necessarily
/// contiguous.
pub fn random_scattered_tuples<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<GoldTuple> {
    let set = |rng: &mut R| {
        let mut v: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        if v.is_empty() {
            v.push(rng.gen_range(0..n));
        }
        v
    };
    (0..count)
        .map(|_| {
            let rel = set(rng);
            let args = (0..rng.gen_range(1..=2)).map(|_| set(rng)).collect();
            GoldTuple::new(rel, args)
        })
        .collect()
}

/// Central-difference settings used for the micro-instance checks.
pub const GRAD_OPTIONS: GradCheckOptions = GradCheckOptions {
    step: 1e-5,
    tolerance: 1e-4,
    floor: 1e-6,
};

/// Micro dimensions: hidden and label width of the checked models.
const MICRO_DIM: usize = 6;
const MICRO_LABEL_DIM: usize = 4;
const MICRO_BATCH: usize = 2;
const MAX_REDRAWS: usize = 50;

/// Checks the summed chunker loss of a random two-sentence batch against
/// central differences, in f64.
pub fn chunker_grad_case(seed: u64, opts: GradCheckOptions) -> Result<GradCheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inv = ChunkInventory::conll();
    let alpha = rng.gen_range(0.5..1.5);
    let model = ChunkerModel::<f64>::new(Vocab::build(POS_TAGS.iter().copied()), inv.clone(), MICRO_DIM, alpha, seed)?;
    let mut items = Vec::new();
    for k in 0..MICRO_BATCH {
        let n = rng.gen_range(2..=6);
        let s = random_sentence(&mut rng, &format!("g{k}"), n, MICRO_DIM, 1.0);
        let cs = random_chunking(&mut rng, &s.id, n, &inv);
        items.push((model.prepare(&s)?, chunk_targets(&cs, &inv)?));
    }
    let mut store = model.params.clone();
    grad_check(
        &mut store,
        |g, st| {
            let mut total = model.loss_graph(g, st, &items[0].0, &items[0].1)?;
            for (x, t) in &items[1..] {
                let l = model.loss_graph(g, st, x, t)?;
                total = g.add(total, l)?;
            }
            Ok(total)
        },
        opts,
    )
}

/// Same check for the extractor loss. One or two GCN layers; batches whose
/// ReLU inputs lie within ten steps of the kink are redrawn.
pub fn oie_grad_case(seed: u64, opts: GradCheckOptions) -> Result<GradCheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inv = ChunkInventory::conll();
    let settings = OieSettings {
        d_h: MICRO_DIM,
        d_l: MICRO_LABEL_DIM,
        gcn_layers: 1 + (seed as usize % 2),
        arg_roles: 3,
        inventory: inv.clone(),
    };
    let labels = Vocab::build(DEP_LABELS.iter().copied().chain(["root"]));
    let model = OieModel::<f64>::new(settings, labels, seed)?;
    for _ in 0..MAX_REDRAWS {
        let mut items = Vec::new();
        for k in 0..MICRO_BATCH {
            let n = rng.gen_range(2..=6);
            let s = random_sentence(&mut rng, &format!("g{k}"), n, MICRO_DIM, 1.0);
            let cs = random_chunking(&mut rng, &s.id, n, &inv);
            let graph = to_chunk_graph(&s, &cs);
            let verb = rng.gen_range(0..n);
            let tuple = random_tuples(&mut rng, n, 1, 3).remove(0);
            let gold = derive_gold_tags(&cs, Some(&tuple), model.tags())?;
            items.push((model.prepare(&s, &cs, &graph, verb)?, gold.token_tags));
        }
        let loss = |g: &mut Graph<f64>, st: &crate::autodiff::ParamStore<f64>| {
            let mut total = model.loss_graph(g, st, &items[0].0, &items[0].1)?;
            for (x, t) in &items[1..] {
                let l = model.loss_graph(g, st, x, t)?;
                total = g.add(total, l)?;
            }
            Ok(total)
        };
        let mut probe = Graph::new();
        loss(&mut probe, &model.params)?;
        if probe.relu_margin() < 10.0 * opts.step {
            continue;
        }
        let mut store = model.params.clone();
        return grad_check(&mut store, loss, opts);
    }
    Err(Error::invalid(format!("no batch clear of the ReLU kink for seed {seed}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_sentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_sentences_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inv = ChunkInventory::conll();
        for k in 0..50 {
            let n = 1 + k % 9;
            let s = random_sentence(&mut rng, "x", n, 3, 1.0);
            assert!(validate_sentence(&s).is_empty(), "{:?}", validate_sentence(&s));
            assert!(!s.verb_indices().is_empty());
            random_chunking(&mut rng, "x", n, &inv).validate(n).unwrap();
            for t in random_tuples(&mut rng, n, 3, 3) {
                assert!(t.max_token().unwrap() < n);
            }
        }
    }
}
