//! Sentence-as-chunks tagger: per-token boundary and chunk-type heads over
//! contextual embeddings plus a trainable POS embedding.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::checkpoint::{read_checkpoint, restore_into, write_checkpoint};
use crate::autodiff::{Graph, ParamId, ParamStore, Real, Tensor, Var, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Chunk, ChunkInventory, ChunkSequence};
use crate::par;
use crate::train::{run_sgd, Control, TrainConfig, TrainLog};
use crate::vocab::Vocab;

pub const CHECKPOINT_KIND: &str = "sac-chunker";
pub const DEFAULT_HIDDEN: usize = 768;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
struct Ids {
    pos: ParamId,
    bound_w: ParamId,
    bound_b: ParamId,
    type_w: ParamId,
    type_b: ParamId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    d_h: usize,
    alpha: f64,
    pos_vocab: Vec<String>,
    inventory: ChunkInventory,
}

#[derive(Debug, Clone)]
pub struct ChunkerModel<T: Real = f32> {
    pub params: ParamStore<T>,
    pos_vocab: Vocab,
    inventory: ChunkInventory,
    d_h: usize,
    alpha: f64,
    ids: Ids,
}

/// Per-token head outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkTagging {
    /// Probability that token `i` starts a chunk.
    pub boundary: Vec<f64>,
    /// Distribution over the inventory for each token.
    pub types: Vec<Vec<f64>>,
}

impl ChunkTagging {
    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }
}

/// Model inputs for one sentence, prepared once.
#[derive(Debug, Clone)]
pub struct ChunkerInput<T: Real> {
    pub embeddings: Tensor<T>,
    pub pos_ids: Vec<usize>,
}

impl<T: Real> ChunkerModel<T> {
    pub fn new(pos_vocab: Vocab, inventory: ChunkInventory, d_h: usize, alpha: f64, seed: u64) -> Result<Self> {
        if d_h == 0 {
            return Err(Error::Config("d_h must be positive".into()));
        }
        if inventory.is_empty() {
            return Err(Error::Config("empty chunk type inventory".into()));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Config("alpha must be non-negative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let c = inventory.len();
        let ids = Ids {
            pos: params.add_uniform("pos_embedding", pos_vocab.len(), d_h, d_h, &mut rng),
            bound_w: params.add_uniform("boundary_w", d_h, 2, d_h, &mut rng),
            bound_b: params.add_zeros("boundary_b", 1, 2),
            type_w: params.add_uniform("type_w", d_h, c, d_h, &mut rng),
            type_b: params.add_zeros("type_b", 1, c),
        };
        Ok(Self {
            params,
            pos_vocab,
            inventory,
            d_h,
            alpha,
            ids,
        })
    }

    pub fn d_h(&self) -> usize {
        self.d_h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inventory(&self) -> &ChunkInventory {
        &self.inventory
    }

    pub fn pos_vocab(&self) -> &Vocab {
        &self.pos_vocab
    }

    pub fn pos_embedding(&self) -> ParamId {
        self.ids.pos
    }

    pub fn boundary_head(&self) -> (ParamId, ParamId) {
        (self.ids.bound_w, self.ids.bound_b)
    }

    pub fn type_head(&self) -> (ParamId, ParamId) {
        (self.ids.type_w, self.ids.type_b)
    }

    pub fn cast<U: Real>(&self) -> ChunkerModel<U> {
        ChunkerModel {
            params: self.params.cast(),
            pos_vocab: self.pos_vocab.clone(),
            inventory: self.inventory.clone(),
            d_h: self.d_h,
            alpha: self.alpha,
            ids: self.ids,
        }
    }

    pub fn prepare(&self, s: &AnnotatedSentence) -> Result<ChunkerInput<T>> {
        let emb = s
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Embedding(format!("sentence {} has no embeddings", s.id)))?;
        if emb.cols() != self.d_h || emb.rows() != s.len() {
            return Err(Error::Embedding(format!(
                "sentence {}: embeddings are {}x{}, expected {}x{}",
                s.id,
                emb.rows(),
                emb.cols(),
                s.len(),
                self.d_h
            )));
        }
        Ok(ChunkerInput {
            embeddings: Tensor::from_matrix(emb),
            pos_ids: s.tokens.iter().map(|t| self.pos_vocab.index(&t.pos)).collect(),
        })
    }

    /// Builds both heads; returns (boundary probs `n×2`, type probs `n×c`).
    pub fn forward_graph(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: &ChunkerInput<T>) -> Result<(Var, Var)> {
        let emb = g.constant(x.embeddings.clone());
        let table = g.param(store, self.ids.pos);
        let pos = g.embedding_lookup(table, &x.pos_ids)?;
        let h = g.add(emb, pos)?;
        let head = |g: &mut Graph<T>, w: ParamId, b: ParamId| -> Result<Var> {
            let w = g.param(store, w);
            let b = g.param(store, b);
            let z = g.matmul(h, w)?;
            let z = g.add_row(z, b)?;
            g.softmax(z)
        };
        let bound = head(g, self.ids.bound_w, self.ids.bound_b)?;
        let types = head(g, self.ids.type_w, self.ids.type_b)?;
        Ok((bound, types))
    }

    /// Boundary cross-entropy plus `alpha` times type cross-entropy.
    pub fn loss_graph(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        x: &ChunkerInput<T>,
        targets: &ChunkTargets,
    ) -> Result<Var> {
        let (bound, types) = self.forward_graph(g, store, x)?;
        let lb = g.cross_entropy(bound, &targets.boundary)?;
        let lt = g.cross_entropy(types, &targets.types)?;
        let lt = g.scale(lt, self.alpha)?;
        g.add(lb, lt)
    }

    pub fn forward(&self, s: &AnnotatedSentence) -> Result<ChunkTagging> {
        let x = self.prepare(s)?;
        let mut g = Graph::new();
        let (bound, types) = self.forward_graph(&mut g, &self.params, &x)?;
        let b = g.value(bound);
        let t = g.value(types);
        Ok(ChunkTagging {
            boundary: (0..b.rows()).map(|i| b.get(i, 1)).collect(),
            types: (0..t.rows()).map(|i| t.row(i).iter().map(|v| v.to_f64()).collect()).collect(),
        })
    }

    pub fn chunk(&self, s: &AnnotatedSentence) -> Result<ChunkSequence> {
        let tagging = self.forward(s)?;
        Ok(decode_chunks(&tagging, DEFAULT_THRESHOLD, &self.inventory, &s.id))
    }
}

pub fn chunker_forward<T: Real>(model: &ChunkerModel<T>, s: &AnnotatedSentence) -> Result<ChunkTagging> {
    model.forward(s)
}

/// Gold labels: boundary bit per token and the type index of its chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkTargets {
    pub boundary: Vec<usize>,
    pub types: Vec<usize>,
}

pub fn chunk_targets(gold: &ChunkSequence, inventory: &ChunkInventory) -> Result<ChunkTargets> {
    let n = gold.token_count();
    gold.validate(n)?;
    gold.validate_types(inventory)?;
    let mut boundary = vec![0; n];
    let mut types = vec![0; n];
    for c in &gold.chunks {
        boundary[c.start] = 1;
        let ty = inventory.index_of(&c.chunk_type).expect("validated");
        for t in c.tokens() {
            types[t] = ty;
        }
    }
    Ok(ChunkTargets { boundary, types })
}

/// The training objective evaluated on precomputed head outputs.
pub fn chunking_loss(tagging: &ChunkTagging, gold: &ChunkSequence, inventory: &ChunkInventory, alpha: f64) -> Result<f64> {
    if tagging.len() != gold.token_count() || tagging.types.len() != tagging.len() {
        return Err(Error::Shape {
            op: "chunking_loss",
            detail: format!("{} tagged tokens, gold covers {}", tagging.len(), gold.token_count()),
        });
    }
    let y = chunk_targets(gold, inventory)?;
    let ln = |p: f64| p.max(PROB_FLOOR).ln();
    let mut bound = 0.0;
    let mut ty = 0.0;
    for i in 0..tagging.len() {
        let p = tagging.boundary[i];
        bound -= if y.boundary[i] == 1 { ln(p) } else { ln(1.0 - p) };
        ty -= ln(tagging.types[i][y.types[i]]);
    }
    Ok(bound + alpha * ty)
}

/// Token 0 always opens a chunk; any other token opens one when its boundary
/// probability reaches `threshold`. Ties in the type vote go to the lower index.
pub fn decode_chunks(tagging: &ChunkTagging, threshold: f64, inventory: &ChunkInventory, sentence_id: &str) -> ChunkSequence {
    let n = tagging.len();
    let mut starts: Vec<usize> = (0..n).filter(|&i| i == 0 || tagging.boundary[i] >= threshold).collect();
    starts.push(n);
    let chunks = starts
        .windows(2)
        .map(|w| {
            let (s, e) = (w[0], w[1] - 1);
            let mut votes = vec![0.0; inventory.len()];
            for row in &tagging.types[s..=e] {
                for (v, p) in votes.iter_mut().zip(row) {
                    *v += p;
                }
            }
            let mut best = 0;
            for (k, v) in votes.iter().enumerate() {
                if *v > votes[best] {
                    best = k;
                }
            }
            let ty = inventory.types.get(best).cloned().unwrap_or_else(|| "O".into());
            Chunk::new(s, e, ty)
        })
        .collect();
    ChunkSequence::new(sentence_id, chunks)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Prf {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            correct,
            predicted,
            gold,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketScore {
    pub label: String,
    /// Boundary scores for length buckets, typed scores for type rows.
    pub score: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkingReport {
    pub sentences: usize,
    pub boundary: Prf,
    pub typed: Prf,
    pub by_length: Vec<BucketScore>,
    pub by_type: Vec<BucketScore>,
}

pub const LENGTH_BUCKETS: [&str; 5] = ["1", "2", "3", "4", "5+"];

fn length_bucket(len: usize) -> usize {
    len.clamp(1, 5) - 1
}

#[derive(Default, Clone, Copy)]
struct Counts {
    correct: usize,
    predicted: usize,
    gold: usize,
}

impl Counts {
    fn prf(self) -> Prf {
        Prf::from_counts(self.correct, self.predicted, self.gold)
    }
}

/// Exact-span scoring of predicted against gold chunkings, paired by position.
/// A chunk is boundary-correct when its span matches a gold chunk, and
/// type-correct when the type matches too.
pub fn score_chunkings(pairs: &[(ChunkSequence, ChunkSequence)]) -> Result<ChunkingReport> {
    let mut bound = Counts::default();
    let mut typed = Counts::default();
    let mut lengths = [Counts::default(); 5];
    let mut types: BTreeMap<String, Counts> = BTreeMap::new();
    for (pred, gold) in pairs {
        if pred.sentence_id != gold.sentence_id {
            return Err(Error::invalid(format!(
                "sentence id mismatch: predicted {} vs gold {}",
                pred.sentence_id, gold.sentence_id
            )));
        }
        if pred.token_count() != gold.token_count() {
            return Err(Error::invalid(format!(
                "sentence {}: predicted chunking covers {} tokens, gold {}",
                gold.sentence_id,
                pred.token_count(),
                gold.token_count()
            )));
        }
        let gold_spans: BTreeMap<(usize, usize), &str> =
            gold.chunks.iter().map(|c| ((c.start, c.end), c.chunk_type.as_str())).collect();
        for c in &gold.chunks {
            bound.gold += 1;
            typed.gold += 1;
            lengths[length_bucket(c.len())].gold += 1;
            types.entry(c.chunk_type.clone()).or_default().gold += 1;
        }
        for c in &pred.chunks {
            bound.predicted += 1;
            typed.predicted += 1;
            let lb = length_bucket(c.len());
            lengths[lb].predicted += 1;
            types.entry(c.chunk_type.clone()).or_default().predicted += 1;
            if let Some(&gty) = gold_spans.get(&(c.start, c.end)) {
                bound.correct += 1;
                lengths[lb].correct += 1;
                if gty == c.chunk_type {
                    typed.correct += 1;
                    types.get_mut(&c.chunk_type).expect("inserted").correct += 1;
                }
            }
        }
    }
    Ok(ChunkingReport {
        sentences: pairs.len(),
        boundary: bound.prf(),
        typed: typed.prf(),
        by_length: LENGTH_BUCKETS
            .iter()
            .zip(lengths)
            .map(|(l, c)| BucketScore {
                label: l.to_string(),
                score: c.prf(),
            })
            .collect(),
        by_type: types
            .into_iter()
            .map(|(label, c)| BucketScore { label, score: c.prf() })
            .collect(),
    })
}

pub fn render_chunking_report(r: &ChunkingReport) -> String {
    let mut out = String::new();
    let line = |out: &mut String, label: &str, p: &Prf| {
        out.push_str(&format!(
            "{label:<14} {:>7} {:>7.2} {:>7.2} {:>7.2}\n",
            p.gold,
            100.0 * p.precision,
            100.0 * p.recall,
            100.0 * p.f1
        ));
    };
    out.push_str(&format!("{:<14} {:>7} {:>7} {:>7} {:>7}\n", "length", "#gold", "P", "R", "F1"));
    for b in &r.by_length {
        line(&mut out, &b.label, &b.score);
    }
    line(&mut out, "boundary", &r.boundary);
    out.push('\n');
    out.push_str(&format!("{:<14} {:>7} {:>7} {:>7} {:>7}\n", "type", "#gold", "P", "R", "F1"));
    for b in &r.by_type {
        line(&mut out, &b.label, &b.score);
    }
    line(&mut out, "typed", &r.typed);
    out
}

pub fn chunk_corpus<T: Real>(model: &ChunkerModel<T>, sentences: &[AnnotatedSentence]) -> Result<Vec<ChunkSequence>> {
    par::try_map(sentences, |s| model.chunk(s))
}

pub fn evaluate_chunker<T: Real>(
    model: &ChunkerModel<T>,
    corpus: &[(AnnotatedSentence, ChunkSequence)],
) -> Result<ChunkingReport> {
    if corpus.is_empty() {
        return Err(Error::invalid("evaluation corpus is empty"));
    }
    let preds = par::try_map(corpus, |(s, _)| model.chunk(s))?;
    let pairs: Vec<_> = preds.into_iter().zip(corpus.iter().map(|(_, g)| g.clone())).collect();
    score_chunkings(&pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkerSettings {
    pub d_h: usize,
    pub alpha: f64,
    pub inventory: ChunkInventory,
}

impl Default for ChunkerSettings {
    fn default() -> Self {
        Self {
            d_h: DEFAULT_HIDDEN,
            alpha: DEFAULT_ALPHA,
            inventory: ChunkInventory::conll(),
        }
    }
}

/// Trains a fresh chunker. With `early_stop`, training ends once the training
/// set is chunked with perfect boundary and type F1.
pub fn train_chunker(
    corpus: &[(AnnotatedSentence, ChunkSequence)],
    settings: &ChunkerSettings,
    cfg: &TrainConfig,
) -> Result<(ChunkerModel<f32>, TrainLog)> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let vocab = Vocab::build(corpus.iter().flat_map(|(s, _)| s.tokens.iter().map(|t| t.pos.as_str())));
    let mut model = ChunkerModel::<f32>::new(vocab, settings.inventory.clone(), settings.d_h, settings.alpha, cfg.seed)?;
    let examples = corpus
        .iter()
        .map(|(s, gold)| {
            if gold.sentence_id != s.id {
                return Err(Error::invalid(format!(
                    "sentence id mismatch: {} vs chunking {}",
                    s.id, gold.sentence_id
                )));
            }
            gold.validate(s.len())?;
            Ok((model.prepare(s)?, chunk_targets(gold, &settings.inventory)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut params = std::mem::take(&mut model.params);
    let shape = model.clone();
    let log = run_sgd(
        &mut params,
        &examples,
        cfg,
        |g, store, (x, y)| shape.loss_graph(g, store, x, y),
        |_, store| {
            if !cfg.early_stop {
                return Ok(Control::Continue);
            }
            let probe = ChunkerModel {
                params: store.clone(),
                ..shape.clone()
            };
            let r = evaluate_chunker(&probe, corpus)?;
            Ok(if r.boundary.f1 == 1.0 && r.typed.f1 == 1.0 {
                Control::Stop
            } else {
                Control::Continue
            })
        },
    )?;
    model.params = params;
    Ok((model, log))
}

impl ChunkerModel<f32> {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let meta = Meta {
            d_h: self.d_h,
            alpha: self.alpha,
            pos_vocab: self.pos_vocab.items().to_vec(),
            inventory: self.inventory.clone(),
        };
        let meta = serde_json::to_value(meta).map_err(|e| Error::Checkpoint(e.to_string()))?;
        write_checkpoint(w, CHECKPOINT_KIND, meta, &self.params)
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let (header, loaded) = read_checkpoint::<_, f32>(r)?;
        if header.kind != CHECKPOINT_KIND {
            return Err(Error::Checkpoint(format!(
                "expected a {CHECKPOINT_KIND} checkpoint, found {}",
                header.kind
            )));
        }
        let meta: Meta = serde_json::from_value(header.meta).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut model = Self::new(Vocab::from_items(meta.pos_vocab), meta.inventory, meta.d_h, meta.alpha, 0)?;
        restore_into(&mut model.params, &loaded)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;

    fn tagging(bits: &[f64], c: usize) -> ChunkTagging {
        ChunkTagging {
            boundary: bits.to_vec(),
            types: bits.iter().map(|_| vec![1.0 / c as f64; c]).collect(),
        }
    }

    fn spans(cs: &ChunkSequence) -> Vec<(usize, usize)> {
        cs.chunks.iter().map(|c| (c.start, c.end)).collect()
    }

    #[test]
    fn decode_examples() {
        let inv = ChunkInventory::conll();
        let c = inv.len();
        let cs = decode_chunks(&tagging(&[1.0, 0.0, 1.0, 1.0, 0.0], c), 0.5, &inv, "s");
        assert_eq!(spans(&cs), vec![(0, 1), (2, 2), (3, 4)]);
        let cs = decode_chunks(&tagging(&[1.0; 4], c), 0.5, &inv, "s");
        assert_eq!(spans(&cs), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        let cs = decode_chunks(&tagging(&[0.0, 0.0, 1.0], c), 0.5, &inv, "s");
        assert_eq!(spans(&cs), vec![(0, 1), (2, 2)]);
        // uniform vote: lowest index wins
        assert_eq!(cs.chunks[0].chunk_type, inv.types[0]);
    }

    #[test]
    fn type_vote_sums_member_distributions() {
        let inv = ChunkInventory::by_name("oia-sp").unwrap();
        let mut t = tagging(&[1.0, 0.0], inv.len());
        t.types[0] = vec![0.0; inv.len()];
        t.types[0][1] = 0.6;
        t.types[0][2] = 0.4;
        t.types[1] = vec![0.0; inv.len()];
        t.types[1][2] = 0.3;
        t.types[1][1] = 0.0;
        t.types[1][0] = 0.5;
        let cs = decode_chunks(&t, 0.5, &inv, "s");
        assert_eq!(cs.chunks[0].chunk_type, inv.types[2]);
    }

    #[test]
    fn zero_model_is_uniform() {
        let inv = ChunkInventory::conll();
        let mut m = ChunkerModel::<f64>::new(Vocab::build(["NOUN"]), inv.clone(), 4, 1.0, 1).unwrap();
        for i in 0..m.params.len() {
            let id = ParamId(i);
            let [r, c] = m.params.value(id).shape();
            m.params.set_value(id, Tensor::zeros(r, c)).unwrap();
        }
        let mut s = AnnotatedSentence::from_words("s", &[("a", "NOUN"), ("b", "X")]);
        s.embeddings = Some(Matrix::zeros(2, 4));
        let t = m.forward(&s).unwrap();
        for (b, row) in t.boundary.iter().zip(&t.types) {
            assert!((b - 0.5).abs() < 1e-12);
            for p in row {
                assert!((p - 1.0 / inv.len() as f64).abs() < 1e-12);
            }
        }
        let gold = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP")]);
        let loss = chunking_loss(&t, &gold, &inv, 0.7).unwrap();
        let want = 2.0 * 2f64.ln() + 0.7 * 2.0 * (inv.len() as f64).ln();
        assert!((loss - want).abs() < 1e-9);
    }

    #[test]
    fn missing_embeddings_error() {
        let m = ChunkerModel::<f32>::new(Vocab::build(["NOUN"]), ChunkInventory::conll(), 4, 1.0, 1).unwrap();
        let s = AnnotatedSentence::from_words("s", &[("a", "NOUN")]);
        assert!(matches!(m.forward(&s), Err(Error::Embedding(_))));
    }

    #[test]
    fn scoring_counts() {
        let gold = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP"), Chunk::new(2, 2, "VP"), Chunk::new(3, 4, "NP")]);
        let pred = ChunkSequence::new("s", vec![Chunk::new(0, 1, "NP"), Chunk::new(2, 2, "NP"), Chunk::new(3, 3, "NP"), Chunk::new(4, 4, "NP")]);
        let r = score_chunkings(&[(pred, gold)]).unwrap();
        assert_eq!((r.boundary.correct, r.boundary.predicted, r.boundary.gold), (2, 4, 3));
        assert_eq!(r.typed.correct, 1);
        assert_eq!(r.by_length[0].score.correct, 1);
        assert_eq!(r.by_length[0].score.predicted, 3);
        assert_eq!(r.by_length[1].score.gold, 2);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = ChunkerModel::<f32>::new(Vocab::build(["NOUN", "VERB"]), ChunkInventory::conll(), 3, 0.5, 9).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = ChunkerModel::load(buf.as_slice()).unwrap();
        assert_eq!(back.pos_vocab(), m.pos_vocab());
        assert_eq!(back.alpha(), 0.5);
        for ((_, a), (_, b)) in m.params.iter().zip(back.params.iter()) {
            assert_eq!(a.value, b.value);
        }
    }
}
