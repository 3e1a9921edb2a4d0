use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::{EvaluationBatch, LabelSet};
use crate::metrics::{evaluate, MetricReport};
use crate::similarity::SimilarityMatrix;

use super::{monotonicity_index, smoothness_index};

pub const DEFAULT_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// One metric traced across the threshold grid. The indices need at least
/// two thresholds and are `None` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub metric: String,
    pub values: Vec<f64>,
    pub monotonicity: Option<f64>,
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub thresholds: Vec<f64>,
    pub reports: Vec<MetricReport>,
    pub series: Vec<MetricSeries>,
}

impl SweepResult {
    pub fn series(&self, metric: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.metric == metric)
    }
}

/// Binarizes `scores[i][c] >= tau` for every threshold and evaluates every
/// metric against `gold`.
pub fn threshold_sweep(
    scores: &[Vec<f64>],
    gold: &[LabelSet],
    s: &SimilarityMatrix,
    grid: &[f64],
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::param("grid", "threshold grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "thresholds must be finite and strictly increasing"));
    }
    if scores.len() != gold.len() {
        return Err(Error::invalid(format!(
            "score matrix has {} rows but gold has {} examples",
            scores.len(),
            gold.len()
        )));
    }
    let width = s.size();
    for (i, row) in scores.iter().enumerate() {
        if row.len() != width {
            return Err(Error::invalid(format!(
                "score row {i} has {} columns but the universe has {width} labels",
                row.len()
            )));
        }
        if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("score row {i} has a value outside [0, 1]")));
        }
    }

    let mut reports = Vec::with_capacity(grid.len());
    for &tau in grid {
        let pred: Vec<LabelSet> = scores
            .iter()
            .map(|row| LabelSet::from_indices((0..width).filter(|&c| row[c] >= tau)))
            .collect();
        let batch = EvaluationBatch::new(s.universe().clone(), gold.to_vec(), pred)?;
        reports.push(evaluate(&batch, s)?);
    }

    let names: Vec<String> = reports[0].named_values().into_iter().map(|(n, _)| n).collect();
    let columns: Vec<Vec<(String, f64)>> = reports.iter().map(MetricReport::named_values).collect();
    let mut series = Vec::with_capacity(names.len());
    for (k, metric) in names.into_iter().enumerate() {
        let values: Vec<f64> = columns.iter().map(|c| c[k].1).collect();
        let (monotonicity, smoothness) = if values.len() >= 2 {
            (Some(monotonicity_index(&values)?), Some(smoothness_index(&values)?))
        } else {
            (None, None)
        };
        series.push(MetricSeries {
            metric,
            values,
            monotonicity,
            smoothness,
        });
    }
    Ok(SweepResult {
        thresholds: grid.to_vec(),
        reports,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelUniverse;
    use crate::similarity::ring_similarity;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    #[test]
    fn saturated_and_empty_predictions() {
        let s = ring_similarity(6).unwrap();
        let gold = vec![LabelSet::from_indices([0, 1]), LabelSet::from_indices([3])];
        let ones = vec![vec![1.0; 6]; 2];
        let r = threshold_sweep(&ones, &gold, &s, &DEFAULT_GRID).unwrap();
        assert_eq!(r.thresholds.len(), 9);
        let sem = r.series("semantic_sample_recall").unwrap();
        assert!(sem.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(sem.monotonicity, Some(0.0));

        let low = vec![vec![0.05; 6]; 2];
        let r = threshold_sweep(&low, &gold, &s, &[0.5, 0.9]).unwrap();
        assert!(r.series("semantic_sample_f1").unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_sweep_has_identical_columns() {
        let u = Arc::new(LabelUniverse::numbered(7).unwrap());
        let s = SimilarityMatrix::identity(u);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<Vec<f64>> = (0..40).map(|_| (0..7).map(|_| rng.random::<f64>()).collect()).collect();
        let gold: Vec<LabelSet> = (0..40)
            .map(|_| LabelSet::from_indices((0..7).filter(|_| rng.random_bool(0.3))))
            .collect();
        let r = threshold_sweep(&scores, &gold, &s, &DEFAULT_GRID).unwrap();
        for rep in &r.reports {
            assert_eq!(rep.semantic, rep.hard);
        }
    }

    #[test]
    fn rejects_bad_grid_and_shapes() {
        let s = ring_similarity(4).unwrap();
        let gold = vec![LabelSet::from_indices([0])];
        let scores = vec![vec![0.5; 4]];
        assert!(threshold_sweep(&scores, &gold, &s, &[]).is_err());
        assert!(threshold_sweep(&scores, &gold, &s, &[0.5, 0.5]).is_err());
        assert!(threshold_sweep(&[vec![0.5; 3]], &gold, &s, &[0.5]).is_err());
        assert!(threshold_sweep(&[vec![1.5; 4]], &gold, &s, &[0.5]).is_err());
    }
}
