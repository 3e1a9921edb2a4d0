//! Label similarity matrices and the constructors that derive them from
//! embeddings, correlations, hierarchies and ring geometries.
//!
//! A validated [`SimilarityMatrix`] has entries in `[0, 1]`, an exact unit
//! diagonal and is symmetric to within [`SYMMETRY_TOLERANCE`]. Control
//! matrices used by the synthetic studies (row-permuted, noise mixtures)
//! deliberately break those guarantees and go through
//! [`SimilarityMatrix::new_unchecked`].

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::labels::LabelUniverse;

pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Mean of the Gaussian noise field used by [`SimilarityMatrix::mix_with_noise`].
pub const NOISE_MEAN: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    universe: Arc<LabelUniverse>,
    values: Vec<f64>,
    validated: bool,
}

impl SimilarityMatrix {
    /// Builds and validates a matrix from row-major values.
    pub fn new(universe: Arc<LabelUniverse>, values: Vec<f64>) -> Result<Self> {
        let m = Self::new_unchecked(universe, values)?;
        m.validate()?;
        Ok(Self { validated: true, ..m })
    }

    pub fn from_rows(universe: Arc<LabelUniverse>, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(universe, flatten_square(rows)?)
    }

    /// Skips range, diagonal and symmetry checks. Only the shape is enforced.
    pub fn new_unchecked(universe: Arc<LabelUniverse>, values: Vec<f64>) -> Result<Self> {
        let n = universe.len();
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "similarity matrix has {} entries, expected {n}x{n}",
                values.len()
            )));
        }
        Ok(Self {
            universe,
            values,
            validated: false,
        })
    }

    pub fn identity(universe: Arc<LabelUniverse>) -> Self {
        let n = universe.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self {
            universe,
            values,
            validated: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.size();
        for a in 0..n {
            for b in 0..n {
                let v = self.get(a, b);
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "similarity entry ({a},{b}) = {v} is outside [0, 1]"
                    )));
                }
                if a == b && v != 1.0 {
                    return Err(Error::invalid(format!("diagonal entry ({a},{a}) = {v}, expected 1")));
                }
                if b > a && (v - self.get(b, a)).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "similarity matrix is not symmetric at ({a},{b}): {v} vs {}",
                        self.get(b, a)
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.universe.len() + b]
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn universe(&self) -> &Arc<LabelUniverse> {
        &self.universe
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.size();
        &self.values[a * n..(a + 1) * n]
    }

    /// Whether the matrix passed the full invariant check on construction.
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                worst = worst.max((self.get(a, b) - self.get(b, a)).abs());
            }
        }
        worst
    }

    /// Mixes the matrix with a Gaussian noise field `U ~ N(0.5, sigma)`:
    /// `alpha * S + (1 - alpha) * U`, clipped to `[0, 1]`, symmetrized by
    /// averaging with the transpose, and given a unit diagonal.
    pub fn mix_with_noise(&self, alpha: f64, sigma: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} is outside [0, 1]")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("{sigma} must be positive")));
        }
        if alpha == 1.0 {
            return Ok(self.clone());
        }
        let n = self.size();
        let normal = Normal::new(NOISE_MEAN, sigma).map_err(|e| Error::param("sigma", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mixed: Vec<f64> = self
            .values
            .iter()
            .map(|&s| (alpha * s + (1.0 - alpha) * normal.sample(&mut rng)).clamp(0.0, 1.0))
            .collect();
        for a in 0..n {
            mixed[a * n + a] = 1.0;
            for b in a + 1..n {
                let avg = 0.5 * (mixed[a * n + b] + mixed[b * n + a]);
                mixed[a * n + b] = avg;
                mixed[b * n + a] = avg;
            }
        }
        Self::new_unchecked(self.universe.clone(), mixed)
    }

    /// Permutes rows with a seeded uniformly random permutation, resampling
    /// until the permutation is not the identity (when `n >= 2`).
    pub fn permute_rows(&self, seed: u64) -> Self {
        let n = self.size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        if n >= 2 {
            loop {
                perm.shuffle(&mut rng);
                if perm.iter().enumerate().any(|(i, &p)| i != p) {
                    break;
                }
            }
        }
        let mut values = Vec::with_capacity(n * n);
        for &src in &perm {
            values.extend_from_slice(self.row(src));
        }
        Self {
            universe: self.universe.clone(),
            values,
            validated: false,
        }
    }

    /// Entrywise `k`-th power. Preserves validation status.
    pub fn power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "power must be at least 1"));
        }
        Ok(Self {
            universe: self.universe.clone(),
            values: self.values.iter().map(|v| v.powi(k as i32)).collect(),
            validated: self.validated,
        })
    }
}

fn flatten_square(rows: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut out = Vec::with_capacity(n * n);
    for (i, r) in rows.into_iter().enumerate() {
        if r.len() != n {
            return Err(Error::invalid(format!("row {i} has {} columns, expected {n}", r.len())));
        }
        out.extend(r);
    }
    Ok(out)
}

/// Per-label real vectors of a common dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    universe: Arc<LabelUniverse>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(universe: Arc<LabelUniverse>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != universe.len() {
            return Err(Error::invalid(format!(
                "{} embeddings for {} labels",
                rows.len(),
                universe.len()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "embedding {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("embedding {i} has non-finite entries")));
            }
            data.extend(r);
        }
        Ok(Self { universe, dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn universe(&self) -> &Arc<LabelUniverse> {
        &self.universe
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn symmetric_from_fn(universe: Arc<LabelUniverse>, f: impl Fn(usize, usize) -> f64) -> Result<SimilarityMatrix> {
    let n = universe.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        values[a * n + a] = 1.0;
        for b in a + 1..n {
            let v = f(a, b);
            values[a * n + b] = v;
            values[b * n + a] = v;
        }
    }
    SimilarityMatrix::new(universe, values)
}

fn check_scale(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("beta", format!("{beta} must be a positive finite number")))
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `S[a,b] = 1 / (1 + beta * ||x_a - x_b||_2)`.
pub fn from_euclidean(emb: &EmbeddingTable, beta: f64) -> Result<SimilarityMatrix> {
    check_scale(beta)?;
    symmetric_from_fn(emb.universe.clone(), |a, b| {
        1.0 / (1.0 + beta * euclidean(emb.vector(a), emb.vector(b)))
    })
}

/// `S[a,b] = (0.5 + cos(x_a, x_b) / 2)^power`.
pub fn from_cosine(emb: &EmbeddingTable, power: u32) -> Result<SimilarityMatrix> {
    if power == 0 {
        return Err(Error::param("power", "must be at least 1"));
    }
    let norms: Vec<f64> = (0..emb.universe.len())
        .map(|i| emb.vector(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::invalid(format!(
            "embedding for `{}` is the zero vector",
            emb.universe.label(i).unwrap_or("?")
        )));
    }
    symmetric_from_fn(emb.universe.clone(), |a, b| {
        let dot: f64 = emb.vector(a).iter().zip(emb.vector(b)).map(|(x, y)| x * y).sum();
        let cos = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
        (0.5 + cos / 2.0).powi(power as i32)
    })
}

/// Affine map of a label correlation matrix onto `[0, 1]`:
/// `S[a,b] = 0.5 + corr[a,b] / 2`.
///
/// The correlations are expected to come from data outside the evaluation
/// set; nothing here estimates them.
pub fn from_correlation(universe: Arc<LabelUniverse>, corr: Vec<f64>) -> Result<SimilarityMatrix> {
    let n = universe.len();
    if corr.len() != n * n {
        return Err(Error::invalid(format!(
            "correlation matrix has {} entries, expected {n}x{n}",
            corr.len()
        )));
    }
    for a in 0..n {
        for b in 0..n {
            let c = corr[a * n + b];
            if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
                return Err(Error::invalid(format!("correlation ({a},{b}) = {c} is outside [-1, 1]")));
            }
        }
        let d = corr[a * n + a];
        if (d - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("correlation diagonal ({a},{a}) = {d}, expected 1")));
        }
    }
    let mut values: Vec<f64> = corr.iter().map(|c| 0.5 + c / 2.0).collect();
    for a in 0..n {
        values[a * n + a] = 1.0;
    }
    SimilarityMatrix::new(universe, values)
}

/// Undirected, positively weighted label graph.
#[derive(Debug, Clone)]
pub struct HierarchyGraph {
    universe: Arc<LabelUniverse>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl HierarchyGraph {
    pub fn new(universe: Arc<LabelUniverse>) -> Self {
        let n = universe.len();
        Self {
            universe,
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<()> {
        let n = self.universe.len();
        if a >= n || b >= n {
            return Err(Error::invalid(format!("edge ({a},{b}) references a label outside the graph")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!("edge ({a},{b}) has non-positive weight {weight}")));
        }
        self.adjacency[a].push((b, weight));
        self.adjacency[b].push((a, weight));
        Ok(())
    }

    pub fn universe(&self) -> &Arc<LabelUniverse> {
        &self.universe
    }

    /// Dijkstra from `source`; unreachable labels get `f64::INFINITY`.
    pub fn shortest_paths(&self, source: usize) -> Vec<f64> {
        let n = self.universe.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse(Visit(0.0, source)));
        while let Some(Reverse(Visit(d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse(Visit(nd, v)));
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// `S[a,b] = 1 / (1 + beta * d(a,b))` with `d` the weighted shortest-path
/// distance; disconnected pairs get similarity 0.
pub fn from_hierarchy(graph: &HierarchyGraph, beta: f64) -> Result<SimilarityMatrix> {
    check_scale(beta)?;
    let n = graph.universe.len();
    let dists: Vec<Vec<f64>> = (0..n).map(|s| graph.shortest_paths(s)).collect();
    symmetric_from_fn(graph.universe.clone(), |a, b| {
        let d = dists[a][b];
        if d.is_finite() {
            1.0 / (1.0 + beta * d)
        } else {
            0.0
        }
    })
}

/// Cosine of the angle between ring positions `i` and `j` on an `n`-label
/// ring, computed from the hop distance so that `ring_cos(n, i, j)` depends
/// only on `min(|i-j|, n-|i-j|)` and ties are exact.
pub fn ring_cos(n: usize, i: usize, j: usize) -> f64 {
    let d = i.abs_diff(j) % n;
    let hop = d.min(n - d);
    (2.0 * PI * hop as f64 / n as f64).cos()
}

/// Labels on a unit circle at angles `2*pi*i/n`, with
/// `S[i,j] = 0.5 + cos(theta_i - theta_j) / 2`.
pub fn ring_similarity(n: usize) -> Result<SimilarityMatrix> {
    if n < 2 {
        return Err(Error::param("n", "a ring needs at least 2 labels"));
    }
    let universe = Arc::new(LabelUniverse::numbered(n)?);
    symmetric_from_fn(universe, |i, j| 0.5 + ring_cos(n, i, j) / 2.0)
}
