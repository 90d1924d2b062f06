//! Chunk-level tuple extractor.
//!
//! For one relation indicator (a verb token) the model encodes every chunk as
//! the mean of its token vectors plus a chunk-type embedding, refines it over
//! the chunk dependency graph with a label-aware attention GCN, tags chunks
//! with BIO role tags and copies each chunk's distribution to its tokens.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::checkpoint::{read_checkpoint, restore_into, write_checkpoint};
use crate::autodiff::{Graph, ParamId, ParamStore, Real, Tensor, Var, PROB_FLOOR};
use crate::depgraph::{to_chunk_graph, ChunkDepGraph};
use crate::error::{Error, Result};
use crate::io::{TupleDocument, TupleEntry};
use crate::model::{
    chunk_of_token, AnnotatedSentence, ChunkInventory, ChunkSequence, ExtractedTuple, GoldTuple, Role, TupleSpan,
    MAX_ARG_ROLES,
};
use crate::par;
use crate::train::{run_sgd, Control, TrainConfig, TrainLog};
use crate::vocab::Vocab;

pub const CHECKPOINT_KIND: &str = "sac-oie-extractor";
pub const DEFAULT_HIDDEN: usize = 768;
pub const DEFAULT_LABEL_DIM: usize = 400;
pub const DEFAULT_GCN_LAYERS: usize = 1;

/// BIO tag over tuple roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(Role),
    I(Role),
}

impl Tag {
    pub fn role(self) -> Option<Role> {
        match self {
            Tag::O => None,
            Tag::B(r) | Tag::I(r) => Some(r),
        }
    }
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(r) => write!(f, "B-{r}"),
            Tag::I(r) => write!(f, "I-{r}"),
        }
    }
}

/// `O`, then `B-`/`I-` pairs for REL and ARG0 up to the argument cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    arg_roles: usize,
}

impl TagSet {
    pub fn new(arg_roles: usize) -> Result<Self> {
        if arg_roles == 0 || arg_roles > MAX_ARG_ROLES {
            return Err(Error::Config(format!("arg_roles must be in 1..={MAX_ARG_ROLES}")));
        }
        Ok(Self { arg_roles })
    }

    pub fn arg_roles(self) -> usize {
        self.arg_roles
    }

    pub fn len(self) -> usize {
        1 + 2 * (1 + self.arg_roles)
    }

    pub fn is_empty(self) -> bool {
        false
    }

    fn role_slot(self, r: Role) -> Option<usize> {
        match r {
            Role::Rel => Some(0),
            Role::Arg(k) if (k as usize) < self.arg_roles => Some(k as usize + 1),
            Role::Arg(_) => None,
        }
    }

    fn slot_role(slot: usize) -> Role {
        if slot == 0 {
            Role::Rel
        } else {
            Role::Arg((slot - 1) as u8)
        }
    }

    pub fn index(self, tag: Tag) -> Option<usize> {
        match tag {
            Tag::O => Some(0),
            Tag::B(r) => self.role_slot(r).map(|s| 1 + 2 * s),
            Tag::I(r) => self.role_slot(r).map(|s| 2 + 2 * s),
        }
    }

    pub fn tag(self, index: usize) -> Tag {
        if index == 0 || index >= self.len() {
            return Tag::O;
        }
        let role = Self::slot_role((index - 1) / 2);
        if index % 2 == 1 {
            Tag::B(role)
        } else {
            Tag::I(role)
        }
    }

    pub fn names(self) -> Vec<String> {
        (0..self.len()).map(|i| self.tag(i).to_string()).collect()
    }
}

#[derive(Debug, Clone)]
struct Ids {
    verb: ParamId,
    chunk_type: ParamId,
    dep: ParamId,
    /// `(W_l, b)` for each GCN layer.
    layers: Vec<(ParamId, ParamId)>,
    tag_w: ParamId,
    tag_b: ParamId,
}

/// Shapes and inventories of an extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OieSettings {
    pub d_h: usize,
    pub d_l: usize,
    pub gcn_layers: usize,
    pub arg_roles: usize,
    pub inventory: ChunkInventory,
}

impl Default for OieSettings {
    fn default() -> Self {
        Self {
            d_h: DEFAULT_HIDDEN,
            d_l: DEFAULT_LABEL_DIM,
            gcn_layers: DEFAULT_GCN_LAYERS,
            arg_roles: MAX_ARG_ROLES,
            inventory: ChunkInventory::conll(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    settings: OieSettings,
    labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct OieModel<T: Real = f32> {
    pub params: ParamStore<T>,
    settings: OieSettings,
    labels: Vocab,
    tags: TagSet,
    ids: Ids,
}

/// Everything the forward pass needs for one (sentence, indicator) pair.
#[derive(Debug, Clone)]
pub struct OieInput<T: Real> {
    pub embeddings: Tensor<T>,
    /// Inclusive token range of each chunk.
    pub ranges: Vec<(usize, usize)>,
    pub chunk_types: Vec<usize>,
    pub labels: Vec<usize>,
    pub adjacency: Vec<bool>,
    pub chunk_of_token: Vec<usize>,
    pub verb: usize,
}

/// Graph handles of the intermediate chunk representations.
#[derive(Debug, Clone)]
pub struct ChunkEncoding {
    /// Mean token vector plus type embedding, `m×d_h`.
    pub h_c: Var,
    /// Output of the last GCN layer, `m×d_h`.
    pub h_dep: Var,
    /// Attention of every GCN layer, `m×m` each.
    pub alpha: Vec<Var>,
}

impl<T: Real> OieModel<T> {
    pub fn new(settings: OieSettings, labels: Vocab, seed: u64) -> Result<Self> {
        let tags = TagSet::new(settings.arg_roles)?;
        if settings.d_h == 0 || settings.d_l == 0 || settings.gcn_layers == 0 {
            return Err(Error::Config("d_h, d_l and gcn_layers must be positive".into()));
        }
        if settings.inventory.is_empty() {
            return Err(Error::Config("empty chunk type inventory".into()));
        }
        let (d, dl) = (settings.d_h, settings.d_l);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let verb = params.add_uniform("verb_embedding", 2, d, d, &mut rng);
        let chunk_type = params.add_uniform("type_embedding", settings.inventory.len(), d, d, &mut rng);
        let dep = params.add_uniform("label_embedding", labels.len(), dl, dl, &mut rng);
        let layers = (0..settings.gcn_layers)
            .map(|l| {
                (
                    params.add_uniform(format!("gcn{l}_w"), d, dl, dl, &mut rng),
                    params.add_zeros(format!("gcn{l}_b"), 1, d),
                )
            })
            .collect();
        let tag_w = params.add_uniform("tag_w", 2 * d, tags.len(), 2 * d, &mut rng);
        let tag_b = params.add_zeros("tag_b", 1, tags.len());
        Ok(Self {
            params,
            settings,
            labels,
            tags,
            ids: Ids {
                verb,
                chunk_type,
                dep,
                layers,
                tag_w,
                tag_b,
            },
        })
    }

    pub fn settings(&self) -> &OieSettings {
        &self.settings
    }

    pub fn tags(&self) -> TagSet {
        self.tags
    }

    pub fn labels(&self) -> &Vocab {
        &self.labels
    }

    pub fn verb_embedding(&self) -> ParamId {
        self.ids.verb
    }

    pub fn type_embedding(&self) -> ParamId {
        self.ids.chunk_type
    }

    pub fn label_embedding(&self) -> ParamId {
        self.ids.dep
    }

    pub fn gcn_layer(&self, l: usize) -> (ParamId, ParamId) {
        self.ids.layers[l]
    }

    pub fn tag_head(&self) -> (ParamId, ParamId) {
        (self.ids.tag_w, self.ids.tag_b)
    }

    pub fn cast<U: Real>(&self) -> OieModel<U> {
        OieModel {
            params: self.params.cast(),
            settings: self.settings.clone(),
            labels: self.labels.clone(),
            tags: self.tags,
            ids: self.ids.clone(),
        }
    }

    pub fn prepare(
        &self,
        s: &AnnotatedSentence,
        cs: &ChunkSequence,
        graph: &ChunkDepGraph,
        verb: usize,
    ) -> Result<OieInput<T>> {
        let emb = s
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Embedding(format!("sentence {} has no embeddings", s.id)))?;
        if emb.cols() != self.settings.d_h || emb.rows() != s.len() {
            return Err(Error::Embedding(format!(
                "sentence {}: embeddings are {}x{}, expected {}x{}",
                s.id,
                emb.rows(),
                emb.cols(),
                s.len(),
                self.settings.d_h
            )));
        }
        cs.validate(s.len())?;
        cs.validate_types(&self.settings.inventory)?;
        if graph.node_count() != cs.len() || graph.labels.len() != cs.len() {
            return Err(Error::Shape {
                op: "gcn_forward",
                detail: format!("graph has {} nodes for {} chunks", graph.node_count(), cs.len()),
            });
        }
        if verb >= s.len() {
            return Err(Error::invalid(format!(
                "sentence {}: verb index {verb} out of range for {} tokens",
                s.id,
                s.len()
            )));
        }
        Ok(OieInput {
            embeddings: Tensor::from_matrix(emb),
            ranges: cs.chunks.iter().map(|c| (c.start, c.end)).collect(),
            chunk_types: cs
                .chunks
                .iter()
                .map(|c| self.settings.inventory.index_of(&c.chunk_type).expect("validated"))
                .collect(),
            labels: graph.labels.iter().map(|l| self.labels.index(l)).collect(),
            adjacency: graph.adjacency().to_vec(),
            chunk_of_token: cs.token_to_chunk(),
            verb,
        })
    }

    /// Chunk vectors: mean of (embedding + verb-indicator row), plus the type row.
    pub fn encode_chunks(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: &OieInput<T>) -> Result<Var> {
        let emb = g.constant(x.embeddings.clone());
        let flags: Vec<usize> = (0..x.embeddings.rows()).map(|i| usize::from(i == x.verb)).collect();
        let w_verb = g.param(store, self.ids.verb);
        let v = g.embedding_lookup(w_verb, &flags)?;
        let tokens = g.add(emb, v)?;
        let mean = g.mean_rows(tokens, &x.ranges)?;
        let w_type = g.param(store, self.ids.chunk_type);
        let ty = g.embedding_lookup(w_type, &x.chunk_types)?;
        g.add(mean, ty)
    }

    /// Stacked label-aware attention GCN over the chunk graph.
    pub fn gcn_forward(&self, g: &mut Graph<T>, store: &ParamStore<T>, h_c: Var, x: &OieInput<T>) -> Result<ChunkEncoding> {
        let m = x.ranges.len();
        if g.value(h_c).rows() != m || x.adjacency.len() != m * m || x.labels.len() != m {
            return Err(Error::Shape {
                op: "gcn_forward",
                detail: format!("graph does not match {m} chunks"),
            });
        }
        let w_dep = g.param(store, self.ids.dep);
        let l = g.embedding_lookup(w_dep, &x.labels)?;
        let mut h = h_c;
        let mut alphas = Vec::with_capacity(self.ids.layers.len());
        for &(w_l, b) in &self.ids.layers {
            let mvec = g.concat(h, l)?;
            let scores = g.matmul_t(mvec, mvec)?;
            let alpha = g.masked_softmax(scores, &x.adjacency)?;
            let w_l = g.param(store, w_l);
            let b = g.param(store, b);
            let lw = g.matmul_t(l, w_l)?;
            let msg = g.add(h, lw)?;
            let msg = g.add_row(msg, b)?;
            let agg = g.matmul(alpha, msg)?;
            h = g.relu(agg)?;
            alphas.push(alpha);
        }
        Ok(ChunkEncoding {
            h_c,
            h_dep: h,
            alpha: alphas,
        })
    }

    /// Per-chunk tag distribution and the intermediate encoding.
    pub fn forward_graph(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: &OieInput<T>) -> Result<(Var, ChunkEncoding)> {
        let h_c = self.encode_chunks(g, store, x)?;
        let enc = self.gcn_forward(g, store, h_c, x)?;
        let feats = g.concat(enc.h_c, enc.h_dep)?;
        let w = g.param(store, self.ids.tag_w);
        let b = g.param(store, self.ids.tag_b);
        let z = g.matmul(feats, w)?;
        let z = g.add_row(z, b)?;
        Ok((g.softmax(z)?, enc))
    }

    /// Token-level cross-entropy against gold token tag indices.
    pub fn loss_graph(&self, g: &mut Graph<T>, store: &ParamStore<T>, x: &OieInput<T>, gold: &[usize]) -> Result<Var> {
        let (chunk_probs, _) = self.forward_graph(g, store, x)?;
        let token_probs = g.gather(chunk_probs, &x.chunk_of_token)?;
        g.cross_entropy(token_probs, gold)
    }

    /// Chunk tag distributions for one indicator, as plain rows.
    pub fn chunk_distribution(&self, x: &OieInput<T>) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let (probs, _) = self.forward_graph(&mut g, &self.params, x)?;
        let p = g.value(probs);
        Ok((0..p.rows()).map(|i| p.row(i).iter().map(|v| v.to_f64()).collect()).collect())
    }

    pub fn oie_forward(
        &self,
        s: &AnnotatedSentence,
        cs: &ChunkSequence,
        graph: &ChunkDepGraph,
        verb: usize,
    ) -> Result<Vec<Vec<f64>>> {
        self.chunk_distribution(&self.prepare(s, cs, graph, verb)?)
    }

    /// One decode per verb token, in token order.
    pub fn extract_sentence(&self, s: &AnnotatedSentence, cs: &ChunkSequence, graph: &ChunkDepGraph) -> Result<Vec<ExtractedTuple>> {
        let mut out = Vec::new();
        for v in s.verb_indices() {
            let dist = self.oie_forward(s, cs, graph, v)?;
            out.extend(decode_tuples(&dist, cs, v, self.tags));
        }
        Ok(out)
    }
}

/// Copies each chunk's row to every token of the chunk.
pub fn project_to_tokens(chunk_dist: &[Vec<f64>], cs: &ChunkSequence) -> Result<Vec<Vec<f64>>> {
    if chunk_dist.len() != cs.len() {
        return Err(Error::Shape {
            op: "project_to_tokens",
            detail: format!("{} rows for {} chunks", chunk_dist.len(), cs.len()),
        });
    }
    Ok(cs.token_to_chunk().into_iter().map(|k| chunk_dist[k].clone()).collect())
}

/// Summed token cross-entropy.
pub fn oie_loss(token_dist: &[Vec<f64>], gold: &[usize]) -> Result<f64> {
    if token_dist.len() != gold.len() {
        return Err(Error::Shape {
            op: "oie_loss",
            detail: format!("{} token rows, {} gold tags", token_dist.len(), gold.len()),
        });
    }
    let mut loss = 0.0;
    for (row, &t) in token_dist.iter().zip(gold) {
        let p = row.get(t).ok_or_else(|| Error::Shape {
            op: "oie_loss",
            detail: format!("tag {t} of {}", row.len()),
        })?;
        loss -= p.max(PROB_FLOOR).ln();
    }
    Ok(loss)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

/// Role spans from per-chunk tags. An `I-X` that does not continue an `X`
/// span opens one.
pub fn tag_spans(tags: &[Tag]) -> Vec<(Role, usize, usize)> {
    let mut spans: Vec<(Role, usize, usize)> = Vec::new();
    let mut open = false;
    for (k, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => open = false,
            Tag::B(r) => {
                spans.push((r, k, k));
                open = true;
            }
            Tag::I(r) => match spans.last_mut() {
                Some(last) if open && last.0 == r && last.2 + 1 == k => last.2 = k,
                _ => {
                    spans.push((r, k, k));
                    open = true;
                }
            },
        }
    }
    spans
}

/// Argmax tag per chunk, then at most one tuple: the first span of each role,
/// emitted only when a relation and at least one argument are present.
pub fn decode_tuples(chunk_dist: &[Vec<f64>], cs: &ChunkSequence, verb: usize, tags: TagSet) -> Option<ExtractedTuple> {
    let chosen: Vec<usize> = chunk_dist.iter().map(|r| argmax(r)).collect();
    let tag_seq: Vec<Tag> = chosen.iter().map(|&i| tags.tag(i)).collect();
    let mut first: BTreeMap<Role, (usize, usize)> = BTreeMap::new();
    for (r, a, b) in tag_spans(&tag_seq) {
        first.entry(r).or_insert((a, b));
    }
    let &(ra, rb) = first.get(&Role::Rel)?;
    let arguments: Vec<TupleSpan> = first
        .iter()
        .filter(|(r, _)| **r != Role::Rel)
        .map(|(&r, &(a, b))| TupleSpan::new(r, cs, a, b))
        .collect();
    if arguments.is_empty() {
        return None;
    }
    let picked: Vec<f64> = chunk_dist
        .iter()
        .zip(&chosen)
        .filter(|(_, &i)| i != 0)
        .map(|(row, &i)| row[i].max(PROB_FLOOR))
        .collect();
    let confidence = (picked.iter().map(|p| p.ln()).sum::<f64>() / picked.len() as f64).exp();
    Some(ExtractedTuple {
        relation: TupleSpan::new(Role::Rel, cs, ra, rb),
        arguments,
        confidence,
        verb_index: verb,
    })
}

/// Extraction over a chunked corpus: one document per sentence, in input
/// order, each tuple carrying its confidence and indicator token.
pub fn extract_documents<T: Real>(model: &OieModel<T>, items: &[(AnnotatedSentence, ChunkSequence)]) -> Result<Vec<TupleDocument>> {
    par::try_map(items, |(s, cs)| {
        let graph = to_chunk_graph(s, cs);
        let tuples = model
            .extract_sentence(s, cs, &graph)?
            .iter()
            .map(|t| TupleEntry {
                tuple: GoldTuple::from(t),
                confidence: Some(t.confidence),
                verb: Some(t.verb_index),
                synset: None,
            })
            .collect();
        let mut sentence = s.clone();
        sentence.embeddings = None;
        Ok(TupleDocument { sentence, tuples })
    })
}

/// Gold tags for one indicator, derived from a gold tuple.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldTags {
    pub chunk_tags: Vec<usize>,
    pub token_tags: Vec<usize>,
    /// Slots whose token set was not exactly a run of whole chunks.
    pub expanded: usize,
    /// Arguments past the role cap, ignored.
    pub dropped: usize,
    /// Chunks claimed by more than one slot; the earlier slot keeps them.
    pub conflicts: usize,
}

/// Each slot is widened to the smallest run of chunks covering it, then tagged
/// `B-` on its first chunk and `I-` on the rest. Token tags copy chunk tags.
pub fn derive_gold_tags(cs: &ChunkSequence, tuple: Option<&GoldTuple>, tags: TagSet) -> Result<GoldTags> {
    let mut out = GoldTags {
        chunk_tags: vec![0; cs.len()],
        ..Default::default()
    };
    if let Some(t) = tuple {
        let mut owned = vec![false; cs.len()];
        let slots = std::iter::once((Role::Rel, &t.relation))
            .chain(t.arguments.iter().enumerate().map(|(k, a)| (Role::Arg(k.min(255) as u8), a)));
        for (role, toks) in slots {
            let (Some(&lo), Some(&hi)) = (toks.first(), toks.last()) else {
                continue;
            };
            if tags.index(Tag::B(role)).is_none() {
                out.dropped += 1;
                continue;
            }
            let (a, b) = (chunk_of_token(cs, lo)?, chunk_of_token(cs, hi)?);
            let covered = cs.token_span(a, b);
            if covered.1 - covered.0 + 1 != toks.len() || covered != (lo, hi) {
                out.expanded += 1;
            }
            for k in a..=b {
                if owned[k] {
                    out.conflicts += 1;
                    continue;
                }
                owned[k] = true;
                let tag = if k == a { Tag::B(role) } else { Tag::I(role) };
                out.chunk_tags[k] = tags.index(tag).expect("role checked");
            }
        }
    }
    out.token_tags = cs.token_to_chunk().into_iter().map(|k| out.chunk_tags[k]).collect();
    Ok(out)
}

/// One annotated sentence with its chunking, chunk graph and gold tuples.
/// `indicators[i]` is the relation-indicator token of `tuples[i]`.
#[derive(Debug, Clone)]
pub struct OieExample {
    pub sentence: AnnotatedSentence,
    pub chunks: ChunkSequence,
    pub graph: ChunkDepGraph,
    pub tuples: Vec<GoldTuple>,
    pub indicators: Vec<usize>,
}

impl OieExample {
    /// Indicators default to the first verb token of each relation, or its
    /// first token when none is a verb.
    pub fn new(sentence: AnnotatedSentence, chunks: ChunkSequence, tuples: Vec<GoldTuple>, explicit: &[Option<usize>]) -> Self {
        let graph = to_chunk_graph(&sentence, &chunks);
        let indicators = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| {
                explicit.get(i).copied().flatten().unwrap_or_else(|| {
                    t.relation
                        .iter()
                        .copied()
                        .find(|&k| sentence.tokens.get(k).is_some_and(|tok| tok.is_verb))
                        .or_else(|| t.relation.first().copied())
                        .unwrap_or(0)
                })
            })
            .collect();
        Self {
            sentence,
            chunks,
            graph,
            tuples,
            indicators,
        }
    }
}

/// Counts gathered while turning gold tuples into training targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DerivationStats {
    pub instances: usize,
    pub tuples: usize,
    pub expanded_spans: usize,
    pub dropped_arguments: usize,
    pub conflicting_chunks: usize,
    /// Tuples sharing an indicator with an earlier tuple; only the first is kept.
    pub duplicate_indicators: usize,
}

/// One training instance: an indicator and its gold token tags.
#[derive(Debug, Clone)]
pub struct OieInstance<T: Real> {
    pub sentence: usize,
    pub input: OieInput<T>,
    pub gold: Vec<usize>,
}

/// Instances for every verb token and every tuple indicator. Verbs without a
/// tuple get all-`O` targets.
pub fn build_instances<T: Real>(model: &OieModel<T>, corpus: &[OieExample]) -> Result<(Vec<OieInstance<T>>, DerivationStats)> {
    let mut stats = DerivationStats::default();
    let mut out = Vec::new();
    for (si, ex) in corpus.iter().enumerate() {
        if ex.chunks.sentence_id != ex.sentence.id {
            return Err(Error::invalid(format!(
                "sentence id mismatch: {} vs chunking {}",
                ex.sentence.id, ex.chunks.sentence_id
            )));
        }
        let mut by_indicator: BTreeMap<usize, Option<&GoldTuple>> =
            ex.sentence.verb_indices().into_iter().map(|v| (v, None)).collect();
        for (t, &ind) in ex.tuples.iter().zip(&ex.indicators) {
            stats.tuples += 1;
            match by_indicator.entry(ind).or_insert(None) {
                slot @ None => *slot = Some(t),
                Some(_) => stats.duplicate_indicators += 1,
            }
        }
        for (verb, tuple) in by_indicator {
            let input = model.prepare(&ex.sentence, &ex.chunks, &ex.graph, verb)?;
            let g = derive_gold_tags(&ex.chunks, tuple, model.tags())?;
            stats.instances += 1;
            stats.expanded_spans += g.expanded;
            stats.dropped_arguments += g.dropped;
            stats.conflicting_chunks += g.conflicts;
            out.push(OieInstance {
                sentence: si,
                input,
                gold: g.token_tags,
            });
        }
    }
    Ok((out, stats))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TagAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Token-level tag accuracy of the argmax of the projected distributions.
pub fn tag_accuracy<T: Real>(model: &OieModel<T>, instances: &[OieInstance<T>]) -> Result<TagAccuracy> {
    let per = par::try_map(instances, |inst| {
        let dist = model.chunk_distribution(&inst.input)?;
        let hits = inst
            .input
            .chunk_of_token
            .iter()
            .zip(&inst.gold)
            .filter(|(&k, &g)| argmax(&dist[k]) == g)
            .count();
        Ok::<_, Error>((hits, inst.gold.len()))
    })?;
    let (correct, total) = per.iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    Ok(TagAccuracy {
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    })
}

#[derive(Debug, Clone)]
pub struct OieTraining {
    pub model: OieModel<f32>,
    pub log: TrainLog,
    pub stats: DerivationStats,
}

/// Trains a fresh extractor. With `early_stop`, training ends once every
/// training token is tagged correctly.
pub fn train_oie(corpus: &[OieExample], settings: &OieSettings, cfg: &TrainConfig) -> Result<OieTraining> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let labels = Vocab::build(corpus.iter().flat_map(|ex| ex.graph.labels.iter()));
    let mut model = OieModel::<f32>::new(settings.clone(), labels, cfg.seed)?;
    let (instances, stats) = build_instances(&model, corpus)?;
    let mut params = std::mem::take(&mut model.params);
    let shape = model.clone();
    let log = run_sgd(
        &mut params,
        &instances,
        cfg,
        |g, store, inst| shape.loss_graph(g, store, &inst.input, &inst.gold),
        |_, store| {
            if !cfg.early_stop {
                return Ok(Control::Continue);
            }
            let probe = OieModel {
                params: store.clone(),
                ..shape.clone()
            };
            Ok(if tag_accuracy(&probe, &instances)?.accuracy == 1.0 {
                Control::Stop
            } else {
                Control::Continue
            })
        },
    )?;
    model.params = params;
    Ok(OieTraining { model, log, stats })
}

impl OieModel<f32> {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let meta = Meta {
            settings: self.settings.clone(),
            labels: self.labels.items().to_vec(),
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
        let mut model = Self::new(meta.settings, Vocab::from_items(meta.labels), 0)?;
        restore_into(&mut model.params, &loaded)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Chunk;

    fn cs(bounds: &[(usize, usize)]) -> ChunkSequence {
        ChunkSequence::new("s", bounds.iter().map(|&(a, b)| Chunk::new(a, b, "NP")).collect())
    }

    fn onehot(tags: TagSet, seq: &[Tag]) -> Vec<Vec<f64>> {
        seq.iter()
            .map(|&t| {
                let mut r = vec![0.0; tags.len()];
                r[tags.index(t).unwrap()] = 1.0;
                r
            })
            .collect()
    }

    #[test]
    fn tag_set_layout() {
        let t = TagSet::new(6).unwrap();
        assert_eq!(t.len(), 15);
        let names = t.names();
        assert_eq!(&names[..5], &["O", "B-REL", "I-REL", "B-ARG0", "I-ARG0"]);
        assert_eq!(names[14], "I-ARG5");
        for i in 0..t.len() {
            assert_eq!(t.index(t.tag(i)), Some(i));
        }
        assert_eq!(TagSet::new(2).unwrap().index(Tag::B(Role::Arg(2))), None);
    }

    #[test]
    fn decode_examples() {
        let t = TagSet::new(6).unwrap();
        let c = cs(&[(0, 0), (1, 1), (2, 3)]);
        let d = onehot(t, &[Tag::B(Role::Arg(0)), Tag::B(Role::Rel), Tag::B(Role::Arg(1))]);
        let tup = decode_tuples(&d, &c, 1, t).unwrap();
        assert_eq!(tup.relation.chunk_span, (1, 1));
        assert_eq!(tup.arguments[0].chunk_span, (0, 0));
        assert_eq!(tup.arguments[1].token_span, (2, 3));
        assert!((tup.confidence - 1.0).abs() < 1e-12);

        assert!(decode_tuples(&onehot(t, &[Tag::O; 3]), &c, 1, t).is_none());

        let c4 = cs(&[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let d = onehot(t, &[Tag::I(Role::Arg(0)), Tag::I(Role::Arg(0)), Tag::B(Role::Rel), Tag::B(Role::Arg(1))]);
        let tup = decode_tuples(&d, &c4, 2, t).unwrap();
        assert_eq!(tup.arguments[0].role, Role::Arg(0));
        assert_eq!(tup.arguments[0].chunk_span, (0, 1));
    }

    #[test]
    fn relation_alone_is_not_a_tuple() {
        let t = TagSet::new(6).unwrap();
        let c = cs(&[(0, 0), (1, 1)]);
        assert!(decode_tuples(&onehot(t, &[Tag::B(Role::Rel), Tag::O]), &c, 0, t).is_none());
    }

    #[test]
    fn confidence_is_geometric_mean_over_tagged_chunks() {
        let t = TagSet::new(2).unwrap();
        let c = cs(&[(0, 0), (1, 1), (2, 2)]);
        let mut d = vec![vec![0.0; t.len()]; 3];
        d[0][t.index(Tag::B(Role::Arg(0))).unwrap()] = 0.5;
        d[0][0] = 0.2;
        d[1][t.index(Tag::B(Role::Rel)).unwrap()] = 0.8;
        d[2][0] = 0.9;
        let tup = decode_tuples(&d, &c, 1, t).unwrap();
        assert!((tup.confidence - (0.5f64 * 0.8).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn projection_copies_rows() {
        let c = cs(&[(0, 2), (3, 3)]);
        let d = vec![vec![0.25, 0.75], vec![1.0, 0.0]];
        let p = project_to_tokens(&d, &c).unwrap();
        assert_eq!(p, vec![d[0].clone(), d[0].clone(), d[0].clone(), d[1].clone()]);
        assert!(project_to_tokens(&d[..1], &c).is_err());
    }

    #[test]
    fn loss_closed_forms() {
        let uniform = vec![vec![0.25; 4]; 3];
        assert!((oie_loss(&uniform, &[0, 1, 3]).unwrap() - 3.0 * 4f64.ln()).abs() < 1e-12);
        let perfect = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(oie_loss(&perfect, &[1, 0]).unwrap(), 0.0);
        assert!(oie_loss(&perfect, &[1]).is_err());
    }

    #[test]
    fn gold_tags_expand_to_chunks() {
        let t = TagSet::new(6).unwrap();
        let c = cs(&[(0, 1), (2, 2), (3, 4), (5, 5)]);
        // ARG1 covers only token 4 of chunk [3..4]
        let gold = GoldTuple::new(vec![2], vec![vec![0, 1], vec![4, 5]]);
        let g = derive_gold_tags(&c, Some(&gold), t).unwrap();
        let name = |i: usize| t.tag(i).to_string();
        let tags: Vec<String> = g.chunk_tags.iter().map(|&i| name(i)).collect();
        assert_eq!(tags, ["B-ARG0", "B-REL", "B-ARG1", "I-ARG1"]);
        assert_eq!(g.expanded, 1);
        assert_eq!(g.token_tags.len(), 6);
        assert_eq!(g.token_tags[3], g.token_tags[4]);
        let none = derive_gold_tags(&c, None, t).unwrap();
        assert!(none.token_tags.iter().all(|&x| x == 0));
    }
}
