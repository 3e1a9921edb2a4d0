use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StudyKind {
    A,
    B,
    C,
    D,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::A => "A",
            StudyKind::B => "B",
            StudyKind::C => "C",
            StudyKind::D => "D",
        }
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(StudyKind::A),
            "B" => Ok(StudyKind::B),
            "C" => Ok(StudyKind::C),
            "D" => Ok(StudyKind::D),
            _ => Err(Error::param("study", format!("unknown study `{s}`, expected A, B, C or D"))),
        }
    }
}

/// Near-miss versus far-miss hops on one ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyAConfig {
    pub seed: u64,
    pub examples_per_cell: usize,
    pub n: usize,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
    pub r_near: Vec<usize>,
    pub r_far: Vec<usize>,
    /// Mixture weights of the misspecified matrices.
    pub alphas: Vec<f64>,
    pub noise_sigma: f64,
    pub bootstrap_resamples: usize,
}

impl Default for StudyAConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            examples_per_cell: 1000,
            n: 24,
            k: vec![1, 2, 3, 4],
            p: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            r_near: vec![1, 2, 3, 4],
            r_far: vec![5, 6, 7, 8],
            alphas: vec![0.8, 0.6, 0.4, 0.2],
            noise_sigma: 0.5,
            bootstrap_resamples: 25,
        }
    }
}

/// Mode-level prototype predictors against a near-miss baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyBConfig {
    pub seed: u64,
    pub examples_per_cell: usize,
    pub n: usize,
    pub k: Vec<usize>,
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub m: Vec<usize>,
    pub kappa: f64,
    pub beta_tail: f64,
    pub baseline_p: f64,
    pub baseline_r: usize,
    pub bootstrap_resamples: usize,
}

impl Default for StudyBConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            examples_per_cell: 1000,
            n: 24,
            k: vec![2, 3],
            rho: vec![0.25, 0.5, 0.75],
            q: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            m: vec![2, 3, 4],
            kappa: 2.0,
            beta_tail: 1.0,
            baseline_p: 1.0,
            baseline_r: 1,
            bootstrap_resamples: 20,
        }
    }
}

/// Two paired rings with cross-ring jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyCConfig {
    pub seed: u64,
    pub examples_per_cell: usize,
    pub ring_size: usize,
    pub cross_ceiling: f64,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
    pub r_near: Vec<usize>,
    pub r_far: Vec<usize>,
    pub p_jump: Vec<f64>,
    pub alphas: Vec<f64>,
    pub noise_sigma: f64,
    pub bootstrap_resamples: usize,
}

impl Default for StudyCConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            examples_per_cell: 1000,
            ring_size: 24,
            cross_ceiling: crate::synthgen::DEFAULT_CROSS_CEILING,
            k: vec![1, 2, 3, 4],
            p: vec![1.0],
            r_near: vec![1, 2, 3, 4],
            r_far: vec![4, 5, 6, 7],
            p_jump: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            alphas: vec![0.5],
            noise_sigma: 0.5,
            bootstrap_resamples: 25,
        }
    }
}

/// Stress tests for single-direction and matching-based baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyDConfig {
    pub seed: u64,
    pub examples_per_cell: usize,
    pub n: usize,
    pub gold_temperature: f64,
    pub pred_temperature: f64,
    /// Bimodality frequency grid shared by all three scenarios.
    pub p_b: Vec<f64>,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
    pub hop_radius: usize,
    pub hungarian_k: usize,
    pub prediction_counts: Vec<usize>,
    pub power: u32,
}

impl Default for StudyDConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            examples_per_cell: 1000,
            n: 96,
            gold_temperature: 0.05,
            pred_temperature: 0.1,
            p_b: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            k: vec![6, 8, 10],
            p: vec![1.0],
            hop_radius: 2,
            hungarian_k: 2,
            prediction_counts: (2..=17).collect(),
            power: 3,
        }
    }
}

/// Full parameter grid of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study")]
pub enum StudyConfig {
    A(StudyAConfig),
    B(StudyBConfig),
    C(StudyCConfig),
    D(StudyDConfig),
}

impl StudyConfig {
    pub fn default_for(kind: StudyKind) -> Self {
        match kind {
            StudyKind::A => StudyConfig::A(StudyAConfig::default()),
            StudyKind::B => StudyConfig::B(StudyBConfig::default()),
            StudyKind::C => StudyConfig::C(StudyCConfig::default()),
            StudyKind::D => StudyConfig::D(StudyDConfig::default()),
        }
    }

    /// Defaults for `kind` overridden by the keys of `overrides`, which must
    /// be a JSON object. Unknown keys are rejected.
    pub fn from_overrides(kind: StudyKind, overrides: serde_json::Value) -> Result<Self> {
        let serde_json::Value::Object(over) = overrides else {
            return Err(Error::invalid("study configuration must be a table of settings"));
        };
        let mut base = match serde_json::to_value(Self::default_for(kind)) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => return Err(Error::Internal("default configuration did not serialize to an object".into())),
        };
        for (key, value) in over {
            if key == "study" {
                let named: StudyKind = value
                    .as_str()
                    .ok_or_else(|| Error::param("study", "must be a string"))?
                    .parse()?;
                if named != kind {
                    return Err(Error::param(
                        "study",
                        format!("configuration is for study {} but study {} was requested", named.name(), kind.name()),
                    ));
                }
                continue;
            }
            if !base.contains_key(&key) {
                return Err(Error::param(key, format!("not a setting of study {}", kind.name())));
            }
            base.insert(key, value);
        }
        let config: Self = serde_json::from_value(serde_json::Value::Object(base))
            .map_err(|e| Error::invalid(format!("study configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn kind(&self) -> StudyKind {
        match self {
            StudyConfig::A(_) => StudyKind::A,
            StudyConfig::B(_) => StudyKind::B,
            StudyConfig::C(_) => StudyKind::C,
            StudyConfig::D(_) => StudyKind::D,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            StudyConfig::A(c) => c.seed,
            StudyConfig::B(c) => c.seed,
            StudyConfig::C(c) => c.seed,
            StudyConfig::D(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            StudyConfig::A(c) => c.seed = seed,
            StudyConfig::B(c) => c.seed = seed,
            StudyConfig::C(c) => c.seed = seed,
            StudyConfig::D(c) => c.seed = seed,
        }
    }

    pub fn examples_per_cell(&self) -> usize {
        match self {
            StudyConfig::A(c) => c.examples_per_cell,
            StudyConfig::B(c) => c.examples_per_cell,
            StudyConfig::C(c) => c.examples_per_cell,
            StudyConfig::D(c) => c.examples_per_cell,
        }
    }

    pub fn set_examples_per_cell(&mut self, examples: usize) {
        match self {
            StudyConfig::A(c) => c.examples_per_cell = examples,
            StudyConfig::B(c) => c.examples_per_cell = examples,
            StudyConfig::C(c) => c.examples_per_cell = examples,
            StudyConfig::D(c) => c.examples_per_cell = examples,
        }
    }

    /// Stable JSON form used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.examples_per_cell() == 0 {
            return Err(Error::param("examples_per_cell", "must be at least 1"));
        }
        match self {
            StudyConfig::A(c) => {
                at_least("n", c.n, 2)?;
                counts("k", &c.k, 1, c.n)?;
                probabilities("p", &c.p)?;
                counts("r_near", &c.r_near, 1, usize::MAX)?;
                counts("r_far", &c.r_far, 1, usize::MAX)?;
                probabilities("alphas", &c.alphas)?;
                positive("noise_sigma", c.noise_sigma)?;
                at_least("bootstrap_resamples", c.bootstrap_resamples, 1)
            }
            StudyConfig::B(c) => {
                at_least("n", c.n, 2)?;
                counts("k", &c.k, 1, c.n)?;
                probabilities("rho", &c.rho)?;
                probabilities("q", &c.q)?;
                counts("m", &c.m, 1, c.n)?;
                non_negative("kappa", c.kappa)?;
                if c.beta_tail.is_nan() || c.beta_tail < 0.0 {
                    return Err(Error::param("beta_tail", "must be non-negative"));
                }
                probabilities("baseline_p", &[c.baseline_p])?;
                at_least("baseline_r", c.baseline_r, 1)?;
                at_least("bootstrap_resamples", c.bootstrap_resamples, 1)
            }
            StudyConfig::C(c) => {
                at_least("ring_size", c.ring_size, 2)?;
                if !(c.cross_ceiling > 0.0 && c.cross_ceiling <= 1.0) {
                    return Err(Error::param("cross_ceiling", "must be in (0, 1]"));
                }
                counts("k", &c.k, 1, c.ring_size)?;
                probabilities("p", &c.p)?;
                counts("r_near", &c.r_near, 1, usize::MAX)?;
                counts("r_far", &c.r_far, 1, usize::MAX)?;
                probabilities("p_jump", &c.p_jump)?;
                probabilities("alphas", &c.alphas)?;
                positive("noise_sigma", c.noise_sigma)?;
                at_least("bootstrap_resamples", c.bootstrap_resamples, 1)
            }
            StudyConfig::D(c) => {
                at_least("n", c.n, 2)?;
                positive("gold_temperature", c.gold_temperature)?;
                positive("pred_temperature", c.pred_temperature)?;
                probabilities("p_b", &c.p_b)?;
                // Bimodal gold splits k across two modes of the ring.
                counts("k", &c.k, 1, c.n / 2)?;
                probabilities("p", &c.p)?;
                at_least("hop_radius", c.hop_radius, 1)?;
                if c.hungarian_k == 0 || c.hungarian_k > c.n / 2 {
                    return Err(Error::param("hungarian_k", format!("must be in 1..={}", c.n / 2)));
                }
                counts("prediction_counts", &c.prediction_counts, 1, c.n)?;
                at_least("power", c.power as usize, 1)
            }
        }
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::param(field, format!("must be at least {min}, got {v}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::param(field, format!("must be non-negative, got {v}")));
    }
    Ok(())
}

fn probabilities(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(field, "grid is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::param(field, format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

fn counts(field: &str, values: &[usize], min: usize, max: usize) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(field, "grid is empty"));
    }
    if let Some(v) = values.iter().find(|v| **v < min || **v > max) {
        let range = if max == usize::MAX {
            format!("at least {min}")
        } else {
            format!("in {min}..={max}")
        };
        return Err(Error::param(field, format!("{v} must be {range}")));
    }
    Ok(())
}
