//! Mini-batch SGD loop shared by both models.
//!
//! Per-example gradients inside a batch are computed concurrently (one graph
//! per example) and summed in input order by the single owner of the
//! parameters, so the trajectory does not depend on the worker count.

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{sgd_step, Graph, ParamStore, Real, Var, DEFAULT_CLIP_NORM};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    /// Stop as soon as the model fits its training set exactly.
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 13,
            learning_rate: 0.05,
            batch_size: 16,
            epochs: 20,
            clip_norm: DEFAULT_CLIP_NORM,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if self.epochs == 0 {
            return bad("epochs");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm");
        }
        Ok(())
    }
}

/// What to do after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    /// Mean per-example loss of each epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
}

/// Runs SGD over `items`. `loss` builds one example's scalar loss; `after_epoch`
/// sees the parameters after each epoch and may stop training early.
pub fn run_sgd<T, I, L, A>(
    store: &mut ParamStore<T>,
    items: &[I],
    cfg: &TrainConfig,
    loss: L,
    mut after_epoch: A,
) -> Result<TrainLog>
where
    T: Real,
    I: Sync,
    L: Fn(&mut Graph<T>, &ParamStore<T>, &I) -> Result<Var> + Sync + Send,
    A: FnMut(usize, &ParamStore<T>) -> Result<Control>,
{
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut log = TrainLog::default();
    store.zero_grad();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let shared: &ParamStore<T> = store;
            let results = par::try_map(batch, |&i| {
                let mut g = Graph::new();
                let out = loss(&mut g, shared, &items[i])?;
                let value = g.value(out).item();
                Ok::<_, Error>((value, g.backward(out)?))
            })?;
            let w = 1.0 / batch.len() as f64;
            for (value, grads) in &results {
                total += value;
                store.accumulate(grads, w);
            }
            sgd_step(store, cfg.learning_rate, cfg.clip_norm)?;
        }
        let mean = total / items.len() as f64;
        debug!("epoch {}: mean loss {mean:.6}", epoch + 1);
        log.epoch_losses.push(mean);
        if after_epoch(epoch + 1, store)? == Control::Stop {
            break;
        }
    }
    Ok(log)
}
