//! Boundary alignment between chunks and gold tuple spans.
//!
//! Two views are measured. On the precision side every chunk is classified
//! against the sentence's gold spans; on the recall side every gold span is
//! classified against the chunk sequence. `Match` is the union of the exact
//! and concatenation cases, and P/R are the `Match` percentages of each side.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{contiguous_runs, AnnotatedSentence, Chunk, ChunkSequence, GoldTuple, Head};
use crate::par;

/// Inclusive token range.
pub type TokenRange = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MatchCase {
    MatchExact,
    MatchConcatenation,
    MismatchOverlap,
    MismatchNoOverlap,
}

impl MatchCase {
    pub const ALL: [MatchCase; 4] = [
        MatchCase::MatchExact,
        MatchCase::MatchConcatenation,
        MatchCase::MismatchOverlap,
        MatchCase::MismatchNoOverlap,
    ];

    pub fn is_match(self) -> bool {
        matches!(self, MatchCase::MatchExact | MatchCase::MatchConcatenation)
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            MatchCase::MatchExact => "Match-Exact",
            MatchCase::MatchConcatenation => "Match-Concatenation",
            MatchCase::MismatchOverlap => "Mismatch-Overlap",
            MatchCase::MismatchNoOverlap => "Mismatch-NoOverlap",
        }
    }
}

fn starts_chunk(cs: &ChunkSequence, t: usize) -> bool {
    cs.chunks.binary_search_by_key(&t, |c| c.start).is_ok()
}

fn ends_chunk(cs: &ChunkSequence, t: usize) -> bool {
    cs.chunks.binary_search_by_key(&t, |c| c.end).is_ok()
}

/// Classifies a gold span against a chunking. The span lies inside the
/// sentence, so `MismatchNoOverlap` never comes back from here.
pub fn classify_gold_span(span: TokenRange, cs: &ChunkSequence) -> Result<MatchCase> {
    let (start, end) = span;
    if start > end || end >= cs.token_count() {
        return Err(Error::invalid(format!(
            "span [{start}..{end}] out of range for {} tokens",
            cs.token_count()
        )));
    }
    if !(starts_chunk(cs, start) && ends_chunk(cs, end)) {
        return Ok(MatchCase::MismatchOverlap);
    }
    let single = cs
        .chunks
        .iter()
        .any(|c| c.start == start && c.end == end);
    Ok(if single {
        MatchCase::MatchExact
    } else {
        MatchCase::MatchConcatenation
    })
}

/// Classifies a chunk against the gold spans of its sentence.
///
/// Non-matching chunks all land in `MismatchNoOverlap`; use
/// [`overlaps_any`] to tell the partially overlapping ones apart.
pub fn classify_chunk(c: &Chunk, gold: &[TokenRange], cs: &ChunkSequence) -> MatchCase {
    if gold.iter().any(|&(s, e)| s == c.start && e == c.end) {
        return MatchCase::MatchExact;
    }
    let in_aligned_span = gold.iter().any(|&(s, e)| {
        s <= c.start && c.end <= e && starts_chunk(cs, s) && ends_chunk(cs, e)
    });
    if in_aligned_span {
        MatchCase::MatchConcatenation
    } else {
        MatchCase::MismatchNoOverlap
    }
}

pub fn overlaps_any(c: &Chunk, gold: &[TokenRange]) -> bool {
    gold.iter().any(|&(s, e)| s <= c.end && c.start <= e)
}

/// Distinct gold spans of a sentence: every relation and argument token set,
/// split into contiguous runs.
pub fn gold_spans(tuples: &[GoldTuple]) -> Vec<TokenRange> {
    let mut set = BTreeSet::new();
    for t in tuples {
        for slot in std::iter::once(&t.relation).chain(t.arguments.iter()) {
            set.extend(contiguous_runs(slot));
        }
    }
    set.into_iter().collect()
}

/// Per-side counts and length sums; merges associatively.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub counts: [usize; 4],
    pub length_sums: [usize; 4],
    /// Precision side only: chunks in the no-overlap bucket that do overlap a gold span.
    pub partial_overlap: usize,
}

impl Tally {
    pub fn add(&mut self, case: MatchCase, length: usize) {
        self.counts[case.slot()] += 1;
        self.length_sums[case.slot()] += length;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        for i in 0..4 {
            self.counts[i] += other.counts[i];
            self.length_sums[i] += other.length_sums[i];
        }
        self.partial_overlap += other.partial_overlap;
        self
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Precision,
    Recall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseStats {
    pub case: String,
    pub count: usize,
    pub percent: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub side: Side,
    pub population: usize,
    /// `Match` row followed by the per-case rows present on this side.
    pub rows: Vec<CaseStats>,
    pub match_percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial_overlap: Option<usize>,
}

impl AlignmentReport {
    fn from_tally(side: Side, t: &Tally) -> Self {
        let population = t.total();
        let pct = |c: usize| 100.0 * c as f64 / population as f64;
        let mean = |sum: usize, c: usize| if c == 0 { 0.0 } else { sum as f64 / c as f64 };
        let row = |label: &str, count: usize, sum: usize| CaseStats {
            case: label.to_string(),
            count,
            percent: pct(count),
            mean_length: mean(sum, count),
        };
        let cases: &[MatchCase] = match side {
            Side::Precision => &[
                MatchCase::MatchExact,
                MatchCase::MatchConcatenation,
                MatchCase::MismatchNoOverlap,
            ],
            Side::Recall => &[
                MatchCase::MatchExact,
                MatchCase::MatchConcatenation,
                MatchCase::MismatchOverlap,
            ],
        };
        let mc = t.counts[0] + t.counts[1];
        let ml = t.length_sums[0] + t.length_sums[1];
        let mut rows = vec![row("Match", mc, ml)];
        rows.extend(
            cases
                .iter()
                .map(|&c| row(c.label(), t.counts[c.slot()], t.length_sums[c.slot()])),
        );
        Self {
            side,
            population,
            match_percent: pct(mc),
            rows,
            partial_overlap: (side == Side::Precision).then_some(t.partial_overlap),
        }
    }

    /// Sum of the per-case percentages (excluding the aggregate `Match` row).
    pub fn percent_total(&self) -> f64 {
        self.rows[1..].iter().map(|r| r.percent).sum()
    }

    pub fn row(&self, label: &str) -> Option<&CaseStats> {
        self.rows.iter().find(|r| r.case == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentAnalysis {
    pub precision: AlignmentReport,
    pub recall: AlignmentReport,
    /// Harmonic mean of the two `Match` percentages, in percent.
    pub f1: f64,
}

/// Harmonic mean; zero when both inputs are zero.
pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision- and recall-side tallies for one sentence.
pub fn tally_sentence(cs: &ChunkSequence, tuples: &[GoldTuple]) -> Result<(Tally, Tally)> {
    let spans = gold_spans(tuples);
    let mut p = Tally::default();
    for c in &cs.chunks {
        let case = classify_chunk(c, &spans, cs);
        if case == MatchCase::MismatchNoOverlap && overlaps_any(c, &spans) {
            p.partial_overlap += 1;
        }
        p.add(case, c.len());
    }
    let mut r = Tally::default();
    for &span in &spans {
        r.add(classify_gold_span(span, cs)?, span.1 + 1 - span.0);
    }
    Ok((p, r))
}

pub fn aggregate_alignment(corpus: &[(ChunkSequence, Vec<GoldTuple>)]) -> Result<AlignmentAnalysis> {
    if corpus.is_empty() {
        return Err(Error::invalid("alignment analysis needs a non-empty corpus"));
    }
    let per_sentence = par::try_map(corpus, |(cs, tuples)| tally_sentence(cs, tuples))?;
    let (p, r) = per_sentence
        .into_iter()
        .fold((Tally::default(), Tally::default()), |(ap, ar), (p, r)| {
            (ap.merge(p), ar.merge(r))
        });
    if p.total() == 0 || r.total() == 0 {
        return Err(Error::invalid(
            "alignment analysis needs at least one chunk and one gold span",
        ));
    }
    let precision = AlignmentReport::from_tally(Side::Precision, &p);
    let recall = AlignmentReport::from_tally(Side::Recall, &r);
    let f1 = f1_score(precision.match_percent, recall.match_percent);
    Ok(AlignmentAnalysis {
        precision,
        recall,
        f1,
    })
}

pub fn render_table(a: &AlignmentAnalysis) -> String {
    let mut out = String::new();
    for (name, rep, len) in [("Precision", &a.precision, "L_p"), ("Recall", &a.recall, "L_s")] {
        let _ = writeln!(out, "{name} (n={})", rep.population);
        let _ = writeln!(out, "  {:<24} {:>8} {:>6}", "case", "percent", len);
        for row in &rep.rows {
            let _ = writeln!(
                out,
                "  {:<24} {:>7.1}% {:>6.1}",
                row.case, row.percent, row.mean_length
            );
        }
        if let Some(p) = rep.partial_overlap {
            let _ = writeln!(out, "  (no-overlap bucket includes {p} partially overlapping chunks)");
        }
    }
    let _ = writeln!(
        out,
        "P={:.1} R={:.1} F1={:.1}",
        a.precision.match_percent, a.recall.match_percent, a.f1
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpanStats {
    pub count: usize,
    pub mean_length: f64,
}

pub fn span_statistics<I: IntoIterator<Item = TokenRange>>(spans: I) -> SpanStats {
    let (count, total) = spans
        .into_iter()
        .fold((0usize, 0usize), |(c, t), (s, e)| (c + 1, t + e + 1 - s));
    SpanStats {
        count,
        mean_length: if count == 0 { 0.0 } else { total as f64 / count as f64 },
    }
}

pub const SPANOIE_MAX_LEN: usize = 10;

/// Contiguous spans of at most `max_len` tokens in which every token has its
/// head or one of its dependents inside the span. A single-token span is kept
/// only when that token is the sentence root.
pub fn enumerate_spanoie_spans(s: &AnnotatedSentence, max_len: usize) -> Vec<TokenRange> {
    let n = s.len();
    let mut head: Vec<Option<usize>> = vec![None; n];
    let mut is_root = vec![false; n];
    for a in &s.arcs {
        if a.dependent >= n {
            continue;
        }
        match a.head {
            Head::Root => is_root[a.dependent] = true,
            Head::Token(h) if h < n => head[a.dependent] = Some(h),
            Head::Token(_) => {}
        }
    }
    let mut out = Vec::new();
    for start in 0..n {
        for end in start..n.min(start + max_len) {
            if start == end {
                if is_root[start] {
                    out.push((start, end));
                }
                continue;
            }
            let inside = |t: usize| start <= t && t <= end;
            // Tokens with a dependent inside the span.
            let mut linked = vec![false; end + 1 - start];
            for t in start..=end {
                if let Some(h) = head[t].filter(|&h| inside(h)) {
                    linked[t - start] = true;
                    linked[h - start] = true;
                }
            }
            if linked.iter().all(|&l| l) {
                out.push((start, end));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DependencyArc;

    fn cs(bounds: &[(usize, usize)]) -> ChunkSequence {
        ChunkSequence::new(
            "s",
            bounds.iter().map(|&(s, e)| Chunk::new(s, e, "NP")).collect(),
        )
    }

    #[test]
    fn gold_span_cases() {
        let c = cs(&[(0, 1), (2, 2), (3, 5)]);
        assert_eq!(classify_gold_span((2, 2), &c).unwrap(), MatchCase::MatchExact);
        assert_eq!(classify_gold_span((0, 2), &c).unwrap(), MatchCase::MatchConcatenation);
        assert_eq!(classify_gold_span((1, 2), &c).unwrap(), MatchCase::MismatchOverlap);
        assert!(classify_gold_span((4, 6), &c).is_err());
    }

    #[test]
    fn chunk_cases() {
        let c = cs(&[(0, 1), (2, 2), (3, 3), (4, 5)]);
        assert_eq!(classify_chunk(&c.chunks[1], &[(2, 2)], &c), MatchCase::MatchExact);
        assert_eq!(classify_chunk(&c.chunks[0], &[(0, 2)], &c), MatchCase::MatchConcatenation);
        assert_eq!(classify_chunk(&c.chunks[3], &[(0, 2)], &c), MatchCase::MismatchNoOverlap);
        // Contained, but the span cuts chunk [4..5].
        assert_eq!(classify_chunk(&c.chunks[2], &[(3, 4)], &c), MatchCase::MismatchNoOverlap);
        assert!(overlaps_any(&c.chunks[2], &[(3, 4)]));
    }

    #[test]
    fn degenerate_corpus_where_every_chunk_is_a_gold_span() {
        let c = cs(&[(0, 1), (2, 2)]);
        let gold = vec![GoldTuple::new(vec![2], vec![vec![0, 1]])];
        let a = aggregate_alignment(&[(c, gold)]).unwrap();
        assert_eq!(a.precision.match_percent, 100.0);
        assert_eq!(a.recall.match_percent, 100.0);
        assert_eq!(a.f1, 100.0);
    }

    #[test]
    fn per_case_lengths_and_partial_overlap() {
        let c = cs(&[(0, 1), (2, 2), (3, 5)]);
        // Spans: [0..2] concat, [4..5] overlap.
        let gold = vec![GoldTuple::new(vec![0, 1, 2], vec![vec![4, 5]])];
        let a = aggregate_alignment(&[(c, gold)]).unwrap();
        let r = &a.recall;
        assert_eq!(r.population, 2);
        assert_eq!(r.row("Match-Concatenation").unwrap().mean_length, 3.0);
        assert_eq!(r.row("Mismatch-Overlap").unwrap().mean_length, 2.0);
        let p = &a.precision;
        assert_eq!(p.row("Match-Concatenation").unwrap().count, 2);
        assert_eq!(p.row("Mismatch-NoOverlap").unwrap().count, 1);
        assert_eq!(p.partial_overlap, Some(1));
        assert!((p.percent_total() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(aggregate_alignment(&[]).is_err());
    }

    #[test]
    fn f1_of_reported_chunk_scores() {
        assert!((f1_score(51.0, 90.5) - 65.2).abs() < 0.05);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn span_stats() {
        assert_eq!(span_statistics([(0, 3)]), SpanStats { count: 1, mean_length: 4.0 });
        assert_eq!(span_statistics([(0, 0), (1, 3)]), SpanStats { count: 2, mean_length: 2.0 });
    }

    fn chain3() -> AnnotatedSentence {
        let mut s = AnnotatedSentence::from_words("c", &[("a", "X"), ("b", "X"), ("c", "X")]);
        s.arcs = vec![
            DependencyArc::new(Head::Token(1), 0, "dep"),
            DependencyArc::new(Head::Token(2), 1, "dep"),
            DependencyArc::new(Head::Root, 2, "root"),
        ];
        s
    }

    #[test]
    fn spanoie_chain() {
        // All six ranges checked by hand: only the root singleton survives among singletons.
        assert_eq!(
            enumerate_spanoie_spans(&chain3(), SPANOIE_MAX_LEN),
            vec![(0, 1), (0, 2), (1, 2), (2, 2)]
        );
    }

    #[test]
    fn spanoie_length_bound() {
        assert_eq!(enumerate_spanoie_spans(&chain3(), 2), vec![(0, 1), (1, 2), (2, 2)]);
    }
}
