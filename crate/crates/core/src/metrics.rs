//! BestMatch and the Semantic F1 family: pointwise, sample, micro, macro and
//! support-weighted averages.
//!
//! Precision matches each predicted label to its most similar gold label and
//! recall matches each gold label to its most similar prediction. With the
//! identity matrix every score collapses to its conventional multi-label
//! counterpart.
//!
//! Edge cases: `BestMatch(∅, ∅) = 1`, `BestMatch(A, ∅) = BestMatch(∅, B) = 0`,
//! and any harmonic mean with `p + r = 0` is 0.
//!
//! Index order: the sample scores look up `S[a, b]` with `a` drawn from the
//! set being matched. The micro and macro counts always look up
//! `S[gold, pred]`. Both agree on symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{same_universe, EvaluationBatch, LabelSet};
use crate::similarity::SimilarityMatrix;

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

/// `2pr / (p + r)`, or 0 when `p + r == 0`.
#[inline]
pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub source: usize,
    pub target: usize,
    pub similarity: f64,
}

/// Best match in the target set for every label of the source set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchAssignment {
    pub pairs: Vec<Match>,
}

impl MatchAssignment {
    pub fn target_of(&self, source: usize) -> Option<usize> {
        self.pairs.iter().find(|m| m.source == source).map(|m| m.target)
    }
}

/// Argmax of `sim(b)` over `targets`; ties go to the lowest label index
/// because `LabelSet` iterates in ascending order and only a strictly
/// larger value replaces the incumbent.
#[inline]
fn argmax(targets: &LabelSet, sim: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for b in targets {
        let v = sim(b);
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((b, v)),
        }
    }
    best
}

fn best_match_with(a_set: &LabelSet, b_set: &LabelSet, sim: impl Fn(usize, usize) -> f64) -> (f64, MatchAssignment) {
    match (a_set.is_empty(), b_set.is_empty()) {
        (true, true) => return (1.0, MatchAssignment::default()),
        (true, false) | (false, true) => return (0.0, MatchAssignment::default()),
        _ => {}
    }
    let mut total = 0.0;
    let mut pairs = Vec::with_capacity(a_set.len());
    for a in a_set {
        let (b, v) = argmax(b_set, |b| sim(a, b)).expect("target set is nonempty");
        total += v;
        pairs.push(Match {
            source: a,
            target: b,
            similarity: v,
        });
    }
    (total / a_set.len() as f64, MatchAssignment { pairs })
}

fn best_match_score(a_set: &LabelSet, b_set: &LabelSet, s: &SimilarityMatrix) -> f64 {
    match (a_set.is_empty(), b_set.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let total: f64 = a_set
                .iter()
                .map(|a| {
                    let row = s.row(a);
                    b_set.iter().map(|b| row[b]).fold(f64::NEG_INFINITY, f64::max)
                })
                .sum();
            total / a_set.len() as f64
        }
    }
}

fn check_set(set: &LabelSet, s: &SimilarityMatrix) -> Result<()> {
    match set.max_index() {
        Some(m) if m >= s.size() => Err(Error::invalid(format!(
            "label index {m} is outside the similarity matrix universe of {} labels",
            s.size()
        ))),
        _ => Ok(()),
    }
}

pub(crate) fn check_batch(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("evaluation batch is empty"));
    }
    if !same_universe(batch.universe(), s.universe()) {
        return Err(Error::invalid(
            "batch and similarity matrix are defined over different label universes",
        ));
    }
    Ok(())
}

/// Mean over `a ∈ A` of `max_{b ∈ B} S[a, b]`, with the recorded argmax per
/// source label.
pub fn best_match(a_set: &LabelSet, b_set: &LabelSet, s: &SimilarityMatrix) -> Result<(f64, MatchAssignment)> {
    check_set(a_set, s)?;
    check_set(b_set, s)?;
    Ok(best_match_with(a_set, b_set, |a, b| s.get(a, b)))
}

fn pointwise_unchecked(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> Prf {
    Prf::from_pr(best_match_score(pred, gold, s), best_match_score(gold, pred, s))
}

/// Semantic precision, recall and F1 of a single example.
pub fn pointwise_sef1(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> Result<Prf> {
    check_set(pred, s)?;
    check_set(gold, s)?;
    Ok(pointwise_unchecked(pred, gold, s))
}

/// Example-averaged precision, recall and F1.
pub fn sample_scores(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<Prf> {
    check_batch(batch, s)?;
    let n = batch.len() as f64;
    let mut acc = Prf::default();
    for (pred, gold) in batch.pairs() {
        let pw = pointwise_unchecked(pred, gold, s);
        acc.precision += pw.precision;
        acc.recall += pw.recall;
        acc.f1 += pw.f1;
    }
    Ok(Prf {
        precision: acc.precision / n,
        recall: acc.recall / n,
        f1: acc.f1 / n,
    })
}

/// Sample Semantic F1: the mean of the pointwise F1 scores.
pub fn sample_sef1(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<f64> {
    Ok(sample_scores(batch, s)?.f1)
}

/// Globally accumulated semantic counts and the scores derived from them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MicroScores {
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MicroScores {
    pub fn from_counts(tp: f64, fp: f64, fn_: f64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }

    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

/// Semantic true-positive, false-positive and false-negative mass of one
/// example. A label whose opposing set is empty contributes a full unit of
/// FP (prediction) or FN (gold).
pub(crate) fn example_counts(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> (f64, f64, f64) {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for p in pred {
        match argmax(gold, |t| s.get(t, p)) {
            Some((_, v)) => {
                tp += v;
                fp += 1.0 - v;
            }
            None => fp += 1.0,
        }
    }
    for t in gold {
        match argmax(pred, |p| s.get(t, p)) {
            Some((_, v)) => fn_ += 1.0 - v,
            None => fn_ += 1.0,
        }
    }
    (tp, fp, fn_)
}

/// Micro Semantic F1 from globally summed semantic counts.
pub fn micro_sef1(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<MicroScores> {
    check_batch(batch, s)?;
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (pred, gold) in batch.pairs() {
        let (a, b, c) = example_counts(pred, gold, s);
        tp += a;
        fp += b;
        fn_ += c;
    }
    Ok(MicroScores::from_counts(tp, fp, fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Macro,
    Weighted,
}

/// Per-class semantic counts and scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub weighting: Weighting,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassScores>,
}

impl MacroScores {
    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

/// Accumulates per-class counts. A class only collects TP/FP in examples
/// where it is predicted and FN where it is gold.
fn class_scores(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Vec<ClassScores> {
    let n = s.size();
    let mut tp = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut fn_ = vec![0.0; n];
    let mut support = vec![0usize; n];
    for (pred, gold) in batch.pairs() {
        for c in pred {
            match argmax(gold, |t| s.get(t, c)) {
                Some((_, v)) => {
                    tp[c] += v;
                    fp[c] += 1.0 - v;
                }
                None => fp[c] += 1.0,
            }
        }
        for c in gold {
            support[c] += 1;
            match argmax(pred, |p| s.get(c, p)) {
                Some((_, v)) => fn_[c] += 1.0 - v,
                None => fn_[c] += 1.0,
            }
        }
    }
    let universe = s.universe();
    (0..n)
        .map(|c| {
            let precision = ratio(tp[c], tp[c] + fp[c]);
            let recall = ratio(tp[c], tp[c] + fn_[c]);
            ClassScores {
                label: universe.label(c).unwrap_or_default().to_string(),
                tp: tp[c],
                fp: fp[c],
                fn_: fn_[c],
                support: support[c],
                precision,
                recall,
                f1: harmonic_mean(precision, recall),
            }
        })
        .collect()
}

fn average_classes(per_class: &[ClassScores], weighting: Weighting) -> Prf {
    let total_support: usize = per_class.iter().map(|c| c.support).sum();
    let weights: Vec<f64> = match weighting {
        Weighting::Weighted if total_support > 0 => per_class.iter().map(|c| c.support as f64).collect(),
        _ => vec![1.0; per_class.len()],
    };
    let wsum: f64 = weights.iter().sum();
    let avg = |f: fn(&ClassScores) -> f64| -> f64 {
        per_class.iter().zip(&weights).map(|(c, w)| w * f(c)).sum::<f64>() / wsum
    };
    Prf {
        precision: avg(|c| c.precision),
        recall: avg(|c| c.recall),
        f1: avg(|c| c.f1),
    }
}

/// Macro (unweighted over every class in the universe) or support-weighted
/// Semantic F1. Weighted averaging falls back to macro when no class has
/// gold support.
pub fn macro_sef1(batch: &EvaluationBatch, s: &SimilarityMatrix, weighting: Weighting) -> Result<MacroScores> {
    check_batch(batch, s)?;
    let per_class = class_scores(batch, s);
    let avg = average_classes(&per_class, weighting);
    Ok(MacroScores {
        weighting,
        precision: avg.precision,
        recall: avg.recall,
        f1: avg.f1,
        per_class,
    })
}

/// All averages for one similarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBlock {
    pub sample: Prf,
    pub micro: MicroScores,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub weighted: Prf,
}

impl ScoreBlock {
    /// `(average, prf)` in the fixed order sample, micro, macro, weighted.
    pub fn averages(&self) -> [(&'static str, Prf); 4] {
        [
            ("sample", self.sample),
            ("micro", self.micro.prf()),
            ("macro", self.macro_),
            ("weighted", self.weighted),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub examples: usize,
    pub semantic: ScoreBlock,
    pub hard: ScoreBlock,
    /// Per-class semantic breakdown.
    pub per_class: Vec<ClassScores>,
}

impl MetricReport {
    /// Flat `kind_average_stat` names such as `semantic_micro_f1`, in a fixed
    /// order.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(24);
        for (kind, block) in [("semantic", &self.semantic), ("hard", &self.hard)] {
            for (avg, prf) in block.averages() {
                out.push((format!("{kind}_{avg}_precision"), prf.precision));
                out.push((format!("{kind}_{avg}_recall"), prf.recall));
                out.push((format!("{kind}_{avg}_f1"), prf.f1));
            }
        }
        out
    }
}

pub(crate) fn score_block(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<(ScoreBlock, Vec<ClassScores>)> {
    let sample = sample_scores(batch, s)?;
    let micro = micro_sef1(batch, s)?;
    let per_class = class_scores(batch, s);
    let block = ScoreBlock {
        sample,
        micro,
        macro_: average_classes(&per_class, Weighting::Macro),
        weighted: average_classes(&per_class, Weighting::Weighted),
    };
    Ok((block, per_class))
}

/// Every semantic average under `s` next to its hard counterpart under the
/// identity matrix.
pub fn evaluate(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<MetricReport> {
    check_batch(batch, s)?;
    let (semantic, per_class) = score_block(batch, s)?;
    let identity = SimilarityMatrix::identity(s.universe().clone());
    let (hard, _) = score_block(batch, &identity)?;
    Ok(MetricReport {
        examples: batch.len(),
        semantic,
        hard,
        per_class,
    })
}
