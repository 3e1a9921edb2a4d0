//! Semantic F1 over vector-valued labels, without a precomputed matrix.
//!
//! Similarity between two points is `1 / (1 + beta * D(a, b))`, so the best
//! match of a point is its nearest neighbour under `D`. Neighbours are found
//! exactly, either by a linear scan or by a k-d tree for p-norms in low
//! dimension.

pub mod kdtree;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{MicroScores, Prf};

use kdtree::KdTree;

/// Highest dimension for which [`NeighborSearch::Auto`] picks the k-d tree.
pub const KD_TREE_MAX_DIM: usize = 6;
/// Smallest target set for which [`NeighborSearch::Auto`] picks the k-d tree.
pub const KD_TREE_MIN_POINTS: usize = 32;

/// A set of points of one common dimension. May be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorLabelSet {
    points: Vec<Vec<f64>>,
}

impl VectorLabelSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::invalid("vector labels need at least one dimension"));
            }
            for (i, p) in points.iter().enumerate() {
                if p.len() != d {
                    return Err(Error::invalid(format!(
                        "point {i} has dimension {} but the set has dimension {d}",
                        p.len()
                    )));
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `None` for the empty set.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

pub type DistanceFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DistanceKind {
    /// Minkowski distance; `f64::INFINITY` gives the maximum norm.
    PNorm(f64),
    /// User supplied distance. Must be non-negative; it is called as
    /// `D(source, target)` when matching.
    Custom(DistanceFn),
}

impl fmt::Debug for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::PNorm(p) => write!(f, "PNorm({p})"),
            DistanceKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistanceSpec {
    kind: DistanceKind,
    beta: f64,
}

impl DistanceSpec {
    pub fn p_norm(p: f64, beta: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param("p", format!("p-norm needs p >= 1, got {p}")));
        }
        Self::with_kind(DistanceKind::PNorm(p), beta)
    }

    pub fn euclidean(beta: f64) -> Result<Self> {
        Self::p_norm(2.0, beta)
    }

    pub fn custom(f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static, beta: f64) -> Result<Self> {
        Self::with_kind(DistanceKind::Custom(Arc::new(f)), beta)
    }

    fn with_kind(kind: DistanceKind, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be a positive finite number, got {beta}")));
        }
        Ok(Self { kind, beta })
    }

    pub fn kind(&self) -> &DistanceKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.kind {
            DistanceKind::PNorm(p) => minkowski(a, b, *p),
            DistanceKind::Custom(f) => f(a, b),
        }
    }

    /// `1 / (1 + beta * D(a, b))`.
    pub fn similarity(&self, a: &[f64], b: &[f64]) -> f64 {
        self.similarity_of(self.distance(a, b))
    }

    #[inline]
    fn similarity_of(&self, d: f64) -> f64 {
        1.0 / (1.0 + self.beta * d)
    }

    fn is_p_norm(&self) -> bool {
        matches!(self.kind, DistanceKind::PNorm(_))
    }
}

pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else {
        diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NeighborSearch {
    BruteForce,
    KdTree,
    /// k-d tree for p-norms when `d <= 6` and the target set has at least
    /// 32 points, linear scan otherwise.
    #[default]
    Auto,
}

/// Nearest neighbour of `query` in `targets` under `D(query, target)`, with
/// ties to the lowest index.
fn brute_nearest(query: &[f64], targets: &[Vec<f64>], dist: &DistanceSpec) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, t) in targets.iter().enumerate() {
        let d = dist.distance(query, t);
        if d < best.1 || i == 0 {
            best = (i, d);
        }
    }
    best
}

/// Precomputed nearest-neighbour index over one target set.
enum Index<'a> {
    Scan(&'a [Vec<f64>]),
    Tree(KdTree<'a>),
}

impl<'a> Index<'a> {
    fn new(targets: &'a [Vec<f64>], dist: &DistanceSpec, search: NeighborSearch) -> Result<Self> {
        let dim = targets.first().map_or(0, Vec::len);
        let tree = match search {
            NeighborSearch::BruteForce => false,
            NeighborSearch::KdTree => {
                if !dist.is_p_norm() {
                    return Err(Error::Unsupported(
                        "the k-d tree only supports p-norm distances".into(),
                    ));
                }
                true
            }
            NeighborSearch::Auto => {
                dist.is_p_norm() && dim <= KD_TREE_MAX_DIM && targets.len() >= KD_TREE_MIN_POINTS
            }
        };
        Ok(if tree && !targets.is_empty() {
            Index::Tree(KdTree::build(targets))
        } else {
            Index::Scan(targets)
        })
    }

    fn nearest(&self, query: &[f64], dist: &DistanceSpec) -> (usize, f64) {
        match self {
            Index::Scan(t) => brute_nearest(query, t, dist),
            Index::Tree(tree) => tree.nearest(query, |a, b| dist.distance(a, b)),
        }
    }
}

fn check_dims(a: &VectorLabelSet, b: &VectorLabelSet) -> Result<()> {
    match (a.dim(), b.dim()) {
        (Some(x), Some(y)) if x != y => Err(Error::invalid(format!("dimension mismatch: {x} vs {y}"))),
        _ => Ok(()),
    }
}

/// Nearest-neighbour similarity of every point of `a_set` into `b_set`.
fn nn_similarities(
    a_set: &VectorLabelSet,
    b_set: &VectorLabelSet,
    dist: &DistanceSpec,
    search: NeighborSearch,
) -> Result<Vec<f64>> {
    let index = Index::new(b_set.points(), dist, search)?;
    Ok(a_set
        .points()
        .iter()
        .map(|a| dist.similarity_of(index.nearest(a, dist).1))
        .collect())
}

/// Continuous BestMatch with an explicit neighbour search strategy.
pub fn best_match_continuous_with(
    a_set: &VectorLabelSet,
    b_set: &VectorLabelSet,
    dist: &DistanceSpec,
    search: NeighborSearch,
) -> Result<f64> {
    check_dims(a_set, b_set)?;
    match (a_set.is_empty(), b_set.is_empty()) {
        (true, true) => Ok(1.0),
        (true, false) | (false, true) => Ok(0.0),
        _ => {
            let sims = nn_similarities(a_set, b_set, dist, search)?;
            Ok(sims.iter().sum::<f64>() / sims.len() as f64)
        }
    }
}

/// Mean over `a` of `max_b 1 / (1 + beta * D(a, b))`.
pub fn best_match_continuous(a_set: &VectorLabelSet, b_set: &VectorLabelSet, dist: &DistanceSpec) -> Result<f64> {
    best_match_continuous_with(a_set, b_set, dist, NeighborSearch::Auto)
}

/// Sample and micro Semantic F1 over vector labels. Macro averaging needs a
/// class universe, so `macro_f1` is always `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousScores {
    pub examples: usize,
    pub sample: Prf,
    pub micro: MicroScores,
    pub macro_f1: Option<f64>,
}

/// One `(pred, gold)` example.
pub type VectorExample = (VectorLabelSet, VectorLabelSet);

pub fn continuous_sef1(batch: &[VectorExample], dist: &DistanceSpec) -> Result<ContinuousScores> {
    continuous_sef1_with(batch, dist, NeighborSearch::Auto)
}

pub fn continuous_sef1_with(
    batch: &[VectorExample],
    dist: &DistanceSpec,
    search: NeighborSearch,
) -> Result<ContinuousScores> {
    if batch.is_empty() {
        return Err(Error::invalid("evaluation batch is empty"));
    }
    let mut dim = None;
    for (i, (p, g)) in batch.iter().enumerate() {
        for d in [p.dim(), g.dim()].into_iter().flatten() {
            match dim {
                None => dim = Some(d),
                Some(x) if x != d => {
                    return Err(Error::invalid(format!(
                        "example {i} has dimension {d} but the batch has dimension {x}"
                    )))
                }
                _ => {}
            }
        }
    }

    let mut sample = Prf::default();
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (pred, gold) in batch {
        // Symmetric distances make D(p, t) and D(t, p) interchangeable; a
        // custom callable is always invoked gold-first for the counts.
        let p_sims = if pred.is_empty() || gold.is_empty() {
            vec![0.0; pred.len()]
        } else if dist.is_p_norm() {
            nn_similarities(pred, gold, dist, search)?
        } else {
            gold_first_similarities(pred, gold, dist)
        };
        let g_sims = if pred.is_empty() || gold.is_empty() {
            vec![0.0; gold.len()]
        } else {
            nn_similarities(gold, pred, dist, search)?
        };
        let precision = match (pred.is_empty(), gold.is_empty()) {
            (true, true) => 1.0,
            (false, false) => p_sims.iter().sum::<f64>() / p_sims.len() as f64,
            _ => 0.0,
        };
        let recall = match (pred.is_empty(), gold.is_empty()) {
            (true, true) => 1.0,
            (false, false) => g_sims.iter().sum::<f64>() / g_sims.len() as f64,
            _ => 0.0,
        };
        let pw = Prf::from_pr(precision, recall);
        sample.precision += pw.precision;
        sample.recall += pw.recall;
        sample.f1 += pw.f1;
        for v in &p_sims {
            tp += v;
            fp += 1.0 - v;
        }
        for v in &g_sims {
            fn_ += 1.0 - v;
        }
    }
    let n = batch.len() as f64;
    Ok(ContinuousScores {
        examples: batch.len(),
        sample: Prf {
            precision: sample.precision / n,
            recall: sample.recall / n,
            f1: sample.f1 / n,
        },
        micro: MicroScores::from_counts(tp, fp, fn_),
        macro_f1: None,
    })
}

/// For each prediction, `max_t 1 / (1 + beta * D(t, p))`.
fn gold_first_similarities(pred: &VectorLabelSet, gold: &VectorLabelSet, dist: &DistanceSpec) -> Vec<f64> {
    pred.points()
        .iter()
        .map(|p| {
            let d = gold
                .points()
                .iter()
                .map(|t| dist.distance(t, p))
                .fold(f64::INFINITY, f64::min);
            dist.similarity_of(d)
        })
        .collect()
}
