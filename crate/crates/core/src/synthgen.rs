//! Synthetic label spaces, gold samplers and predictor families.
//!
//! Every sampler draws from a caller-supplied generator so a study cell can
//! own one seeded stream and stay reproducible. Multi-label draws are always
//! without replacement, renormalizing over the labels still available.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelSet, LabelUniverse};
use crate::similarity::{from_euclidean, ring_cos, ring_similarity, EmbeddingTable, SimilarityMatrix};

/// Default similarity ceiling between the two rings of a [`MultiRingSpace`].
pub const DEFAULT_CROSS_CEILING: f64 = 0.2;
/// Axial gap between the two circles of the deceptive embedding.
pub const DECEPTIVE_RING_GAP: f64 = 0.2;

fn check_probability(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} is not a probability")))
    }
}

/// Draws `k` distinct indices; each draw picks index `i` with probability
/// proportional to `exp(logits[i])` among those not yet drawn. Indices with
/// logit `-inf` are only reachable once every remaining logit is `-inf`, at
/// which point the draw is uniform. Returns indices in draw order.
pub fn sample_without_replacement<R: Rng + ?Sized>(logits: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = logits.len();
    if k > n {
        return Err(Error::param("k", format!("cannot draw {k} distinct labels from {n}")));
    }
    if logits.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::invalid("sampling logits must be finite or -inf"));
    }
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    let mut weights = vec![0.0; n];
    for _ in 0..k {
        let max = (0..n)
            .filter(|&i| !taken[i])
            .map(|i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let pick = if max == f64::NEG_INFINITY {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        } else {
            let mut total = 0.0;
            let mut last = 0;
            for i in 0..n {
                weights[i] = if taken[i] { 0.0 } else { (logits[i] - max).exp() };
                if weights[i] > 0.0 {
                    last = i;
                }
                total += weights[i];
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = last;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
            }
            pick
        };
        taken[pick] = true;
        out.push(pick);
    }
    Ok(out)
}

/// `n` labels on a unit circle at angles `2*pi*i/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSpace {
    n: usize,
}

impl RingSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "a ring needs at least 2 labels"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> Arc<LabelUniverse> {
        Arc::new(LabelUniverse::numbered(self.n).expect("n >= 2"))
    }

    pub fn similarity(&self) -> SimilarityMatrix {
        ring_similarity(self.n).expect("n >= 2")
    }

    /// Cosine of the angle between labels `i` and `j`.
    pub fn cos(&self, i: usize, j: usize) -> f64 {
        ring_cos(self.n, i, j)
    }

    /// The label `steps` positions away, wrapping around.
    pub fn hop(&self, label: usize, steps: i64) -> usize {
        (label as i64 + steps).rem_euclid(self.n as i64) as usize
    }

    pub fn antipode(&self, label: usize) -> usize {
        self.hop(label, (self.n / 2) as i64)
    }
}

/// Gold labels in draw order: the first uniformly at random, the rest with
/// probability proportional to their ring similarity to the first.
pub fn sample_gold_ring_ordered<R: Rng + ?Sized>(space: &RingSpace, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || k > space.n {
        return Err(Error::param("k", format!("must be in 1..={}, got {k}", space.n)));
    }
    let first = rng.random_range(0..space.n);
    let others: Vec<usize> = (0..space.n).filter(|&j| j != first).collect();
    let logits: Vec<f64> = others.iter().map(|&j| (0.5 + space.cos(j, first) / 2.0).ln()).collect();
    let mut out = vec![first];
    out.extend(sample_without_replacement(&logits, k - 1, rng)?.into_iter().map(|i| others[i]));
    Ok(out)
}

pub fn sample_gold_ring<R: Rng + ?Sized>(space: &RingSpace, k: usize, rng: &mut R) -> Result<LabelSet> {
    Ok(LabelSet::from_indices(sample_gold_ring_ordered(space, k, rng)?))
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

/// Replaces each gold label, independently with probability `p`, by the
/// label exactly `r` hops away in a uniformly chosen direction.
pub fn perturb_hops<R: Rng + ?Sized>(gold: &LabelSet, space: &RingSpace, p: f64, r: usize, rng: &mut R) -> Result<LabelSet> {
    check_probability("p", p)?;
    if r == 0 {
        return Err(Error::param("r", "hop radius must be at least 1"));
    }
    Ok(gold
        .iter()
        .map(|l| {
            if rng.random::<f64>() < p {
                space.hop(l, random_direction(rng) * r as i64)
            } else {
                l
            }
        })
        .collect())
}

/// The two latent modes of the bimodal setting, centred at angle 0 and pi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Positive,
    Negative,
}

impl Mode {
    pub fn opposite(self) -> Self {
        match self {
            Mode::Positive => Mode::Negative,
            Mode::Negative => Mode::Positive,
        }
    }

    /// `cos(theta_j)` for the positive mode, `cos(theta_j - pi)` for the
    /// negative one.
    pub fn score(self, space: &RingSpace, j: usize) -> f64 {
        match self {
            Mode::Positive => space.cos(j, 0),
            Mode::Negative => -space.cos(j, 0),
        }
    }
}

/// Normalized von Mises-like weights `exp(kappa * score) / Z`.
pub fn mode_weights(space: &RingSpace, mode: Mode, kappa: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..space.n).map(|j| (kappa * mode.score(space, j)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Picks the positive mode with probability `rho`, then draws `k` labels
/// from that mode's weights.
pub fn bimodal_gold<R: Rng + ?Sized>(
    space: &RingSpace,
    k: usize,
    rho: f64,
    kappa: f64,
    rng: &mut R,
) -> Result<(LabelSet, Mode)> {
    check_probability("rho", rho)?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", format!("must be a finite non-negative number, got {kappa}")));
    }
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    let mode = if rng.random::<f64>() < rho { Mode::Positive } else { Mode::Negative };
    let logits: Vec<f64> = (0..space.n).map(|j| kappa * mode.score(space, j)).collect();
    let labels = sample_without_replacement(&logits, k, rng)?;
    Ok((LabelSet::from_indices(labels), mode))
}

/// The mode whose weights sum higher over the gold labels; ties go to the
/// positive mode.
pub fn dominant_mode(gold: &LabelSet, space: &RingSpace, kappa: f64) -> Mode {
    let pos = mode_weights(space, Mode::Positive, kappa);
    let neg = mode_weights(space, Mode::Negative, kappa);
    let (sp, sn) = gold.iter().fold((0.0, 0.0), |(a, b), j| (a + pos[j], b + neg[j]));
    if sn > sp {
        Mode::Negative
    } else {
        Mode::Positive
    }
}

/// All labels ordered by decreasing mode weight, ties by index.
pub fn mode_ranking(space: &RingSpace, mode: Mode) -> Vec<usize> {
    let mut order: Vec<usize> = (0..space.n).collect();
    order.sort_by(|&a, &b| mode.score(space, b).total_cmp(&mode.score(space, a)).then(a.cmp(&b)));
    order
}

/// The `m` highest-weight labels of a mode.
pub fn prototypes(space: &RingSpace, mode: Mode, m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > space.n {
        return Err(Error::param("m", format!("must be in 1..={}, got {m}", space.n)));
    }
    let mut order = mode_ranking(space, mode);
    order.truncate(m);
    Ok(order)
}

fn choose_mode<R: Rng + ?Sized>(gold_mode: Mode, q: f64, rng: &mut R) -> Mode {
    if rng.random::<f64>() < q {
        gold_mode
    } else {
        gold_mode.opposite()
    }
}

/// Emits the gold mode's `m` prototypes with probability `q`, otherwise the
/// opposite mode's.
pub fn prototype_bimodal_predictor<R: Rng + ?Sized>(
    gold_mode: Mode,
    space: &RingSpace,
    m: usize,
    q: f64,
    rng: &mut R,
) -> Result<LabelSet> {
    check_probability("q", q)?;
    let mode = choose_mode(gold_mode, q, rng);
    Ok(LabelSet::from_indices(prototypes(space, mode, m)?))
}

/// Draws `k` labels with weights `exp(-beta_tail * rank)` over the chosen
/// mode's ranking, so mass concentrates on its prototypes. An infinite
/// `beta_tail` returns the top `k` prototypes.
pub fn prototype_within_mode_predictor<R: Rng + ?Sized>(
    gold_mode: Mode,
    space: &RingSpace,
    k: usize,
    q: f64,
    beta_tail: f64,
    rng: &mut R,
) -> Result<LabelSet> {
    check_probability("q", q)?;
    if beta_tail.is_nan() || beta_tail < 0.0 {
        return Err(Error::param("beta_tail", format!("must be non-negative, got {beta_tail}")));
    }
    if k == 0 || k > space.n {
        return Err(Error::param("k", format!("must be in 1..={}, got {k}", space.n)));
    }
    let mode = choose_mode(gold_mode, q, rng);
    let ranking = mode_ranking(space, mode);
    if beta_tail.is_infinite() {
        return Ok(ranking[..k].iter().copied().collect());
    }
    let mut logits = vec![0.0; space.n];
    for (rank, &label) in ranking.iter().enumerate() {
        logits[label] = -beta_tail * rank as f64;
    }
    Ok(LabelSet::from_indices(sample_without_replacement(&logits, k, rng)?))
}

/// Logits `cos(theta_j - theta_center) / temperature`.
pub fn softmax_logits(space: &RingSpace, center: usize, temperature: f64) -> Result<Vec<f64>> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::param("temperature", format!("must be positive, got {temperature}")));
    }
    Ok((0..space.n).map(|j| space.cos(j, center) / temperature).collect())
}

/// `k` labels drawn with probability proportional to
/// `exp(cos(theta_j - theta_center) / temperature)`, in draw order.
pub fn softmax_mode_sampler<R: Rng + ?Sized>(
    space: &RingSpace,
    center: usize,
    k: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let logits = softmax_logits(space, center, temperature)?;
    sample_without_replacement(&logits, k, rng)
}

/// Two rings of `ring_size` labels each. Label `i` of ring 0 is paired with
/// label `i` of ring 1; labels are numbered ring by ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiRingSpace {
    ring_size: usize,
    cross_ceiling: f64,
}

impl MultiRingSpace {
    pub const RINGS: usize = 2;

    pub fn new(ring_size: usize, cross_ceiling: f64) -> Result<Self> {
        if ring_size < 2 {
            return Err(Error::param("n", "each ring needs at least 2 labels"));
        }
        if !(cross_ceiling > 0.0 && cross_ceiling <= 1.0) {
            return Err(Error::param("gamma", format!("cross-ring ceiling must be in (0, 1], got {cross_ceiling}")));
        }
        Ok(Self {
            ring_size,
            cross_ceiling,
        })
    }

    pub fn ring_size(&self) -> usize {
        self.ring_size
    }

    pub fn len(&self) -> usize {
        Self::RINGS * self.ring_size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cross_ceiling(&self) -> f64 {
        self.cross_ceiling
    }

    pub fn ring(&self) -> RingSpace {
        RingSpace { n: self.ring_size }
    }

    pub fn label(&self, ring: usize, pos: usize) -> usize {
        ring * self.ring_size + pos
    }

    pub fn ring_of(&self, label: usize) -> usize {
        label / self.ring_size
    }

    pub fn position(&self, label: usize) -> usize {
        label % self.ring_size
    }

    pub fn pair(&self, label: usize) -> usize {
        (label + self.ring_size) % self.len()
    }

    pub fn universe(&self) -> Arc<LabelUniverse> {
        Arc::new(LabelUniverse::numbered(self.len()).expect("nonempty"))
    }

    /// Ring similarity within a ring; `gamma` times the ring similarity to
    /// the pair label across rings.
    pub fn ideal_similarity(&self) -> SimilarityMatrix {
        let n = self.len();
        let mut values = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let s = 0.5 + ring_cos(self.ring_size, self.position(a), self.position(b)) / 2.0;
                values[a * n + b] = if self.ring_of(a) == self.ring_of(b) {
                    s
                } else {
                    self.cross_ceiling * s
                };
            }
        }
        SimilarityMatrix::new(self.universe(), values).expect("ideal multi-ring matrix is valid")
    }

    /// `1 / (1 + ||x_a - x_b||)` over two unit circles stacked
    /// [`DECEPTIVE_RING_GAP`] apart in three dimensions.
    pub fn deceptive_similarity(&self) -> SimilarityMatrix {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|l| {
                let theta = 2.0 * std::f64::consts::PI * self.position(l) as f64 / self.ring_size as f64;
                vec![theta.cos(), theta.sin(), DECEPTIVE_RING_GAP * self.ring_of(l) as f64]
            })
            .collect();
        let table = EmbeddingTable::new(self.universe(), rows).expect("finite embedding");
        from_euclidean(&table, 1.0).expect("beta = 1 is valid")
    }
}

#[derive(Debug, Clone)]
pub struct MultiRingMatrices {
    pub ideal: SimilarityMatrix,
    pub deceptive: SimilarityMatrix,
    pub permuted: SimilarityMatrix,
}

pub fn multiring_similarity(space: &MultiRingSpace, permutation_seed: u64) -> MultiRingMatrices {
    let ideal = space.ideal_similarity();
    let permuted = ideal.permute_rows(permutation_seed);
    MultiRingMatrices {
        ideal,
        deceptive: space.deceptive_similarity(),
        permuted,
    }
}

/// Gold labels confined to one ring: the first label is uniform over the
/// whole space and the rest follow the ring sampler around it.
pub fn sample_gold_multiring<R: Rng + ?Sized>(space: &MultiRingSpace, k: usize, rng: &mut R) -> Result<LabelSet> {
    let ring = rng.random_range(0..MultiRingSpace::RINGS);
    let local = sample_gold_ring_ordered(&space.ring(), k, rng)?;
    Ok(local.into_iter().map(|pos| space.label(ring, pos)).collect())
}

/// Like [`perturb_hops`], except that a label chosen for a hop first moves
/// to its pair in the other ring with probability `p_jump`.
pub fn jump_perturb<R: Rng + ?Sized>(
    gold: &LabelSet,
    space: &MultiRingSpace,
    p: f64,
    p_jump: f64,
    r: usize,
    rng: &mut R,
) -> Result<LabelSet> {
    check_probability("p", p)?;
    check_probability("p_jump", p_jump)?;
    if r == 0 {
        return Err(Error::param("r", "hop radius must be at least 1"));
    }
    let ring = space.ring();
    Ok(gold
        .iter()
        .map(|l| {
            if rng.random::<f64>() >= p {
                return l;
            }
            let l = if rng.random::<f64>() < p_jump { space.pair(l) } else { l };
            let pos = ring.hop(space.position(l), random_direction(rng) * r as i64);
            space.label(space.ring_of(l), pos)
        })
        .collect())
}
