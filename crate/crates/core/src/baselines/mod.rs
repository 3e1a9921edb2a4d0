//! Hard multi-label F1, Jaccard, single-direction semantic scores, and the
//! Hungarian-style one-to-one matching baselines.

pub mod hungarian;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::labels::{EvaluationBatch, LabelSet};
use crate::metrics::{self, check_batch, Prf, Weighting};
use crate::similarity::SimilarityMatrix;

use hungarian::{assignment_weight, lexicographic_max_assignment, max_weight_assignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Sample,
    Micro,
    Macro,
    Weighted,
}

/// Conventional exact-match F1: the semantic metrics evaluated at the
/// identity matrix.
pub fn hard_f1(batch: &EvaluationBatch, averaging: Averaging) -> Result<Prf> {
    let identity = SimilarityMatrix::identity(batch.universe().clone());
    match averaging {
        Averaging::Sample => metrics::sample_scores(batch, &identity),
        Averaging::Micro => Ok(metrics::micro_sef1(batch, &identity)?.prf()),
        Averaging::Macro => Ok(metrics::macro_sef1(batch, &identity, Weighting::Macro)?.prf()),
        Averaging::Weighted => Ok(metrics::macro_sef1(batch, &identity, Weighting::Weighted)?.prf()),
    }
}

/// Mean over examples of `|P ∩ T| / |P ∪ T|`, with 1 for two empty sets.
pub fn jaccard(batch: &EvaluationBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(crate::Error::InvalidInput("evaluation batch is empty".into()));
    }
    let total: f64 = batch
        .pairs()
        .map(|(p, t)| {
            let inter = p.intersection_len(t);
            let union = p.len() + t.len() - inter;
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// Mean semantic precision alone (predictions matched to gold).
pub fn semantic_precision_only(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<f64> {
    Ok(metrics::sample_scores(batch, s)?.precision)
}

/// Mean semantic recall alone (gold matched to predictions).
pub fn semantic_recall_only(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<f64> {
    Ok(metrics::sample_scores(batch, s)?.recall)
}

/// Weight table with the smaller set on the rows. Entries are always
/// `S[gold, pred]`. Returns `(weights, rows_are_pred)`.
fn weight_table(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> (Vec<Vec<f64>>, bool) {
    if pred.len() <= gold.len() {
        let w = pred.iter().map(|p| gold.iter().map(|t| s.get(t, p)).collect()).collect();
        (w, true)
    } else {
        let w = gold.iter().map(|t| pred.iter().map(|p| s.get(t, p)).collect()).collect();
        (w, false)
    }
}

/// One-to-one matching score: the maximum-weight assignment on the
/// similarity table padded with zero-similarity dummies, divided by
/// `max(|P|, |T|)`.
///
/// Padding is implicit: a rectangular assignment that matches every label
/// of the smaller set attains the same optimum as the padded square
/// problem since dummy pairs contribute nothing.
pub fn hungarian_score(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let (w, _) = weight_table(pred, gold, s);
    let matched = assignment_weight(&w, &max_weight_assignment(&w));
    matched / pred.len().max(gold.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gold: usize,
    pub similarity: f64,
}

/// The one-to-one matching behind [`hungarian_score`], with ties resolved
/// toward the lexicographically smallest assignment over the smaller set.
pub fn hungarian_matching(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> Vec<MatchedPair> {
    if pred.is_empty() || gold.is_empty() {
        return Vec::new();
    }
    let (w, rows_are_pred) = weight_table(pred, gold, s);
    let assignment = lexicographic_max_assignment(&w);
    let p = pred.as_slice();
    let g = gold.as_slice();
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let (pi, gi) = if rows_are_pred { (p[i], g[j]) } else { (p[j], g[i]) };
            MatchedPair {
                pred: pi,
                gold: gi,
                similarity: w[i][j],
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanKind {
    Arithmetic,
    Harmonic,
}

/// The per-label values behind [`extended_hungarian`]: each one-to-one
/// matched pair contributes its similarity once for the predicted label and
/// once for the gold label; each unmatched label of the larger set
/// contributes the similarity to its closest counterpart.
pub fn extended_hungarian_values(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix) -> Vec<f64> {
    if pred.is_empty() || gold.is_empty() {
        return vec![0.0; pred.len() + gold.len()];
    }
    let (w, _) = weight_table(pred, gold, s);
    let assignment = max_weight_assignment(&w);
    let cols = w[0].len();
    let mut values = Vec::with_capacity(pred.len() + gold.len());
    let mut matched_cols = vec![false; cols];
    for (i, &j) in assignment.iter().enumerate() {
        values.push(w[i][j]);
        values.push(w[i][j]);
        matched_cols[j] = true;
    }
    for j in (0..cols).filter(|&j| !matched_cols[j]) {
        let nearest = w.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
        values.push(nearest);
    }
    values
}

/// Hungarian matching patched with nearest-neighbour fill for unmatched
/// labels, aggregated by the arithmetic or harmonic mean. The harmonic mean
/// is 0 as soon as any value is 0.
pub fn extended_hungarian(pred: &LabelSet, gold: &LabelSet, s: &SimilarityMatrix, mean: MeanKind) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let values = extended_hungarian_values(pred, gold, s);
    let n = values.len() as f64;
    match mean {
        MeanKind::Arithmetic => values.iter().sum::<f64>() / n,
        MeanKind::Harmonic => {
            if values.iter().any(|&v| v <= 0.0) {
                0.0
            } else {
                n / values.iter().map(|v| 1.0 / v).sum::<f64>()
            }
        }
    }
}

/// Example mean of [`hungarian_score`].
pub fn mean_hungarian_score(batch: &EvaluationBatch, s: &SimilarityMatrix) -> Result<f64> {
    check_batch(batch, s)?;
    let total: f64 = batch.pairs().map(|(p, t)| hungarian_score(p, t, s)).sum();
    Ok(total / batch.len() as f64)
}

/// Example mean of [`extended_hungarian`].
pub fn mean_extended_hungarian(batch: &EvaluationBatch, s: &SimilarityMatrix, mean: MeanKind) -> Result<f64> {
    check_batch(batch, s)?;
    let total: f64 = batch.pairs().map(|(p, t)| extended_hungarian(p, t, s, mean)).sum();
    Ok(total / batch.len() as f64)
}
