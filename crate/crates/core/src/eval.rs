//! Tuple scoring: exact match, token-overlap (CaRB-style) and fact-synset
//! (BenchIE-style) schemes, plus a precision/recall curve over confidences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::alignment::f1_score;
use crate::error::{Error, Result};
use crate::io::{TupleDocument, TupleEntry};
use crate::model::GoldTuple;
use crate::par;

/// Sentences with more predictions than this are flagged by the token scheme,
/// whose greedy assignment is not guaranteed optimal.
pub const GREEDY_FLAG_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Exact,
    Carb,
    Benchie,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Exact => "exact",
            Scheme::Carb => "carb",
            Scheme::Benchie => "benchie",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Scheme::Exact),
            "carb" => Ok(Scheme::Carb),
            "benchie" => Ok(Scheme::Benchie),
            _ => Err(Error::invalid(format!("unknown scheme {s:?} (expected exact, carb or benchie)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub tuple: GoldTuple,
    pub confidence: Option<f64>,
    pub verb: Option<usize>,
}

/// Predictions and gold tuples of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceCase {
    pub id: String,
    pub predictions: Vec<Prediction>,
    pub gold: Vec<TupleEntry>,
}

/// Pairs prediction and gold documents by sentence id, in gold order.
/// Gold sentences absent from the predictions have no predictions; a
/// predicted sentence absent from the gold is an error.
pub fn pair_documents(pred: &[TupleDocument], gold: &[TupleDocument]) -> Result<Vec<SentenceCase>> {
    let mut by_id: BTreeMap<&str, &TupleDocument> = BTreeMap::new();
    for d in pred {
        if by_id.insert(d.sentence.id.as_str(), d).is_some() {
            return Err(Error::invalid(format!("sentence {} appears twice in predictions", d.sentence.id)));
        }
    }
    let gold_ids: BTreeSet<&str> = gold.iter().map(|d| d.sentence.id.as_str()).collect();
    if gold_ids.len() != gold.len() {
        return Err(Error::invalid("duplicate sentence id in gold"));
    }
    if let Some(extra) = by_id.keys().find(|id| !gold_ids.contains(*id)) {
        return Err(Error::invalid(format!("sentence id mismatch: {extra} is not in the gold file")));
    }
    Ok(gold
        .iter()
        .map(|g| {
            let mut predictions: Vec<Prediction> = by_id
                .get(g.sentence.id.as_str())
                .map(|d| {
                    d.tuples
                        .iter()
                        .map(|e| Prediction {
                            tuple: e.tuple.clone(),
                            confidence: e.confidence,
                            verb: e.verb,
                        })
                        .collect()
                })
                .unwrap_or_default();
            sort_predictions(&mut predictions);
            SentenceCase {
                id: g.sentence.id.clone(),
                predictions,
                gold: g.tuples.clone(),
            }
        })
        .collect())
}

fn sort_predictions(p: &mut [Prediction]) {
    p.sort_by(|a, b| {
        a.verb
            .cmp(&b.verb)
            .then_with(|| a.tuple.cmp(&b.tuple))
            .then_with(|| b.confidence.unwrap_or(0.0).total_cmp(&a.confidence.unwrap_or(0.0)))
    });
}

/// Per-sentence numerators and denominators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Counts {
    /// Summed precision credit of the predictions.
    pub precision_credit: f64,
    /// Summed recall credit of the gold units (tuples or synsets).
    pub recall_credit: f64,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            precision_credit: self.precision_credit + o.precision_credit,
            recall_credit: self.recall_credit + o.recall_credit,
            predicted: self.predicted + o.predicted,
            gold: self.gold + o.gold,
        }
    }

    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            self.precision_credit / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.recall_credit / self.gold as f64
        }
    }
}

fn slots(t: &GoldTuple) -> impl Iterator<Item = &Vec<usize>> {
    std::iter::once(&t.relation).chain(t.arguments.iter())
}

/// One-to-one identical matching: relation and the ordered argument list.
pub fn exact_counts(preds: &[&GoldTuple], gold: &[GoldTuple]) -> Counts {
    let mut used = vec![false; gold.len()];
    let mut tp = 0;
    for p in preds {
        if let Some(k) = (0..gold.len()).find(|&k| !used[k] && gold[k] == **p) {
            used[k] = true;
            tp += 1;
        }
    }
    Counts {
        precision_credit: tp as f64,
        recall_credit: tp as f64,
        predicted: preds.len(),
        gold: gold.len(),
    }
}

/// Slot-wise token overlap of a predicted and a gold tuple:
/// `(matched / |pred tokens|, matched / |gold tokens|)`.
pub fn carb_pair(p: &GoldTuple, g: &GoldTuple) -> (f64, f64) {
    let mut matched = 0usize;
    for (ps, gs) in slots(p).zip(slots(g)) {
        let gset: BTreeSet<usize> = gs.iter().copied().collect();
        matched += ps.iter().filter(|t| gset.contains(t)).count();
    }
    let np: usize = slots(p).map(Vec::len).sum();
    let ng: usize = slots(g).map(Vec::len).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (ratio(matched, np), ratio(matched, ng))
}

fn check_binary(t: &GoldTuple, what: &str, sentence: &str) -> Result<()> {
    if t.arguments.len() != 2 {
        return Err(Error::invalid(format!(
            "sentence {sentence}: the carb scheme needs binary tuples, found a {what} tuple with {} arguments",
            t.arguments.len()
        )));
    }
    Ok(())
}

/// Greedy one-to-one assignment by descending pair F1; ties go to the earlier
/// prediction, then the earlier gold tuple.
pub fn carb_counts(preds: &[&GoldTuple], gold: &[GoldTuple]) -> Counts {
    let mut pairs = Vec::with_capacity(preds.len() * gold.len());
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            let (pp, rr) = carb_pair(p, g);
            pairs.push((f1_score(pp, rr), i, j, pp, rr));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pu = vec![false; preds.len()];
    let mut gu = vec![false; gold.len()];
    let mut c = Counts {
        predicted: preds.len(),
        gold: gold.len(),
        ..Default::default()
    };
    for (f, i, j, pp, rr) in pairs {
        if f == 0.0 || pu[i] || gu[j] {
            continue;
        }
        pu[i] = true;
        gu[j] = true;
        c.precision_credit += pp;
        c.recall_credit += rr;
    }
    c
}

/// Groups gold entries by their synset id; entries without one stand alone.
pub fn synsets(gold: &[TupleEntry]) -> Vec<Vec<GoldTuple>> {
    let mut grouped: BTreeMap<usize, Vec<GoldTuple>> = BTreeMap::new();
    let mut order: Vec<Result<usize, GoldTuple>> = Vec::new();
    for e in gold {
        match e.synset {
            Some(k) => {
                if !grouped.contains_key(&k) {
                    order.push(Ok(k));
                }
                grouped.entry(k).or_default().push(e.tuple.clone());
            }
            None => order.push(Err(e.tuple.clone())),
        }
    }
    order
        .into_iter()
        .map(|o| match o {
            Ok(k) => grouped[&k].clone(),
            Err(t) => vec![t],
        })
        .collect()
}

/// A prediction is correct when identical to any fact tuple; a synset is
/// covered when any of its tuples is predicted.
pub fn benchie_counts(preds: &[&GoldTuple], synsets: &[Vec<GoldTuple>]) -> Counts {
    let correct = preds
        .iter()
        .filter(|p| synsets.iter().flatten().any(|g| g == **p))
        .count();
    let covered = synsets
        .iter()
        .filter(|s| s.iter().any(|g| preds.iter().any(|p| *p == g)))
        .count();
    Counts {
        precision_credit: correct as f64,
        recall_credit: covered as f64,
        predicted: preds.len(),
        gold: synsets.len(),
    }
}

fn sentence_counts(scheme: Scheme, case: &SentenceCase, min_conf: Option<f64>) -> Counts {
    let preds: Vec<&GoldTuple> = case
        .predictions
        .iter()
        .filter(|p| min_conf.map_or(true, |m| p.confidence.unwrap_or(f64::NEG_INFINITY) >= m))
        .map(|p| &p.tuple)
        .collect();
    match scheme {
        Scheme::Exact => exact_counts(&preds, &gold_of(case)),
        Scheme::Carb => carb_counts(&preds, &gold_of(case)),
        Scheme::Benchie => benchie_counts(&preds, &synsets(&case.gold)),
    }
}

fn gold_of(case: &SentenceCase) -> Vec<GoldTuple> {
    case.gold.iter().map(|e| e.tuple.clone()).collect()
}

fn total(scheme: Scheme, cases: &[SentenceCase], min_conf: Option<f64>) -> Counts {
    par::map(cases, |c| sentence_counts(scheme, c, min_conf))
        .into_iter()
        .fold(Counts::default(), Counts::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision/recall at every distinct confidence (descending), with a leading
/// zero-recall point carrying the precision of the highest threshold, and the
/// trapezoidal area under precision over recall.
pub fn pr_curve(scheme: Scheme, cases: &[SentenceCase]) -> Result<(Vec<CurvePoint>, f64)> {
    let mut confs = Vec::new();
    for c in cases {
        for p in &c.predictions {
            match p.confidence {
                Some(x) if x.is_finite() => confs.push(x),
                _ => {
                    return Err(Error::invalid(format!(
                        "sentence {}: every prediction needs a finite confidence for the curve",
                        c.id
                    )))
                }
            }
        }
    }
    confs.sort_by(|a, b| b.total_cmp(a));
    confs.dedup();
    let mut points = Vec::with_capacity(confs.len() + 1);
    for &t in &confs {
        let c = total(scheme, cases, Some(t));
        points.push(CurvePoint {
            threshold: t,
            precision: c.precision(),
            recall: c.recall(),
        });
    }
    if let Some(first) = points.first().cloned() {
        points.insert(
            0,
            CurvePoint {
                threshold: f64::INFINITY,
                precision: first.precision,
                recall: 0.0,
            },
        );
    }
    Ok((points.clone(), trapezoid(&points)))
}

pub fn trapezoid(points: &[CurvePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].recall - w[0].recall) * (w[0].precision + w[1].precision) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceDiagnostic {
    pub id: String,
    pub predicted: usize,
    pub gold: usize,
    pub precision_credit: f64,
    pub recall_credit: f64,
    /// Too many predictions for the greedy assignment to be trusted.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub scheme: Scheme,
    pub sentences: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<CurvePoint>>,
    pub diagnostics: Vec<SentenceDiagnostic>,
}

pub fn score_cases(scheme: Scheme, cases: &[SentenceCase], with_auc: bool) -> Result<ScoreReport> {
    if scheme == Scheme::Carb {
        for c in cases {
            for p in &c.predictions {
                check_binary(&p.tuple, "predicted", &c.id)?;
            }
            for g in &c.gold {
                check_binary(&g.tuple, "gold", &c.id)?;
            }
        }
    }
    let per = par::map(cases, |c| sentence_counts(scheme, c, None));
    let sum = per.iter().copied().fold(Counts::default(), Counts::merge);
    let diagnostics = cases
        .iter()
        .zip(&per)
        .map(|(c, k)| SentenceDiagnostic {
            id: c.id.clone(),
            predicted: k.predicted,
            gold: k.gold,
            precision_credit: k.precision_credit,
            recall_credit: k.recall_credit,
            flagged: scheme == Scheme::Carb && k.predicted > GREEDY_FLAG_LIMIT,
        })
        .collect();
    let (auc, curve) = if with_auc {
        let (pts, a) = pr_curve(scheme, cases)?;
        (Some(a), Some(pts))
    } else {
        (None, None)
    };
    let (p, r) = (sum.precision(), sum.recall());
    Ok(ScoreReport {
        scheme,
        sentences: cases.len(),
        predicted: sum.predicted,
        gold: sum.gold,
        precision: p,
        recall: r,
        f1: f1_score(p, r),
        auc,
        curve,
        diagnostics,
    })
}

pub fn score_documents(scheme: Scheme, pred: &[TupleDocument], gold: &[TupleDocument], with_auc: bool) -> Result<ScoreReport> {
    score_cases(scheme, &pair_documents(pred, gold)?, with_auc)
}

pub fn exact_match_score(pred: &[TupleDocument], gold: &[TupleDocument]) -> Result<ScoreReport> {
    score_documents(Scheme::Exact, pred, gold, false)
}

pub fn carb_token_score(pred: &[TupleDocument], gold: &[TupleDocument]) -> Result<ScoreReport> {
    score_documents(Scheme::Carb, pred, gold, false)
}

pub fn benchie_score(pred: &[TupleDocument], gold: &[TupleDocument]) -> Result<ScoreReport> {
    score_documents(Scheme::Benchie, pred, gold, false)
}

pub fn pr_auc(scheme: Scheme, pred: &[TupleDocument], gold: &[TupleDocument]) -> Result<f64> {
    Ok(pr_curve(scheme, &pair_documents(pred, gold)?)?.1)
}

/// Plain-text summary; metrics are shown as percentages.
pub fn render_report(r: &ScoreReport) -> String {
    let mut out = format!(
        "scheme     {}\nsentences  {}\npredicted  {}\ngold       {}\nprecision  {:.2}\nrecall     {:.2}\nf1         {:.2}\n",
        r.scheme,
        r.sentences,
        r.predicted,
        r.gold,
        100.0 * r.precision,
        100.0 * r.recall,
        100.0 * r.f1
    );
    if let Some(a) = r.auc {
        out.push_str(&format!("auc        {:.2}\n", 100.0 * a));
    }
    let flagged: Vec<&str> = r.diagnostics.iter().filter(|d| d.flagged).map(|d| d.id.as_str()).collect();
    if !flagged.is_empty() {
        out.push_str(&format!("flagged    {}\n", flagged.join(",")));
    }
    out
}
