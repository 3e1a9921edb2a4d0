use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{self, MeanKind};
use crate::error::Result;
use crate::labels::{EvaluationBatch, LabelSet};
use crate::metrics::{pointwise_sef1, score_block};
use crate::similarity::SimilarityMatrix;
use crate::stats::bootstrap_mean_with;
use crate::synthgen::{
    bimodal_gold, dominant_mode, jump_perturb, perturb_hops, prototype_bimodal_predictor,
    prototype_within_mode_predictor, sample_gold_multiring, sample_gold_ring, softmax_logits, softmax_mode_sampler,
    sample_without_replacement, MultiRingSpace, RingSpace,
};

use super::config::{StudyAConfig, StudyBConfig, StudyCConfig, StudyConfig, StudyDConfig, StudyKind};

/// Grid coordinates of a cell. Coordinates a study does not sweep are
/// `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Coords {
    pub scenario: Option<&'static str>,
    pub k: Option<usize>,
    pub p: Option<f64>,
    pub r_near: Option<usize>,
    pub r_far: Option<usize>,
    pub p_jump: Option<f64>,
    pub rho: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<usize>,
    pub p_b: Option<f64>,
}

impl Coords {
    pub const COLUMNS: [&'static str; 10] = ["scenario", "k", "p", "r_near", "r_far", "p_jump", "rho", "q", "m", "p_b"];

    pub fn fields(&self) -> [String; 10] {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        [
            opt(self.scenario),
            opt(self.k),
            opt(self.p),
            opt(self.r_near),
            opt(self.r_far),
            opt(self.p_jump),
            opt(self.rho),
            opt(self.q),
            opt(self.m),
            opt(self.p_b),
        ]
    }
}

/// One metric value of one predictor under one matrix in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub cell: usize,
    pub coords: Coords,
    pub predictor: String,
    pub matrix: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub coords: Coords,
}

/// A generated batch kept for export.
#[derive(Debug, Clone)]
pub struct CellBatch {
    pub cell: usize,
    pub predictor: String,
    pub batch: EvaluationBatch,
}

#[derive(Debug, Clone, Default)]
pub struct CellOutput {
    pub records: Vec<Record>,
    pub batches: Vec<CellBatch>,
}

/// Deterministic 64-bit seed from a master seed and a list of tags.
pub fn derive_seed(master: u64, tags: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for t in tags {
        h.update((t.len() as u64).to_le_bytes());
        h.update(t.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

fn cell_rng(config: &StudyConfig, coords: &Coords) -> ChaCha8Rng {
    let coords_json = serde_json::to_string(coords).expect("coordinates serialize");
    ChaCha8Rng::seed_from_u64(derive_seed(config.seed(), &[config.kind().name(), "cell", &coords_json]))
}

pub fn enumerate_cells(config: &StudyConfig) -> Vec<Cell> {
    let mut coords = Vec::new();
    match config {
        StudyConfig::A(c) => {
            for &k in &c.k {
                for &p in &c.p {
                    for &r_near in &c.r_near {
                        for &r_far in &c.r_far {
                            coords.push(Coords {
                                k: Some(k),
                                p: Some(p),
                                r_near: Some(r_near),
                                r_far: Some(r_far),
                                ..Default::default()
                            });
                        }
                    }
                }
            }
        }
        StudyConfig::B(c) => {
            for &k in &c.k {
                for &rho in &c.rho {
                    for &q in &c.q {
                        coords.push(Coords {
                            k: Some(k),
                            rho: Some(rho),
                            q: Some(q),
                            ..Default::default()
                        });
                    }
                }
            }
        }
        StudyConfig::C(c) => {
            for &k in &c.k {
                for &p in &c.p {
                    for &r_near in &c.r_near {
                        for &r_far in &c.r_far {
                            for &p_jump in &c.p_jump {
                                coords.push(Coords {
                                    k: Some(k),
                                    p: Some(p),
                                    r_near: Some(r_near),
                                    r_far: Some(r_far),
                                    p_jump: Some(p_jump),
                                    ..Default::default()
                                });
                            }
                        }
                    }
                }
            }
        }
        StudyConfig::D(c) => {
            for scenario in [SCENARIO_PRECISION, SCENARIO_RECALL] {
                for &k in &c.k {
                    for &p in &c.p {
                        for &p_b in &c.p_b {
                            coords.push(Coords {
                                scenario: Some(scenario),
                                k: Some(k),
                                p: Some(p),
                                p_b: Some(p_b),
                                ..Default::default()
                            });
                        }
                    }
                }
            }
            for &p_b in &c.p_b {
                for &m in &c.prediction_counts {
                    coords.push(Coords {
                        scenario: Some(SCENARIO_HUNGARIAN),
                        k: Some(c.hungarian_k),
                        m: Some(m),
                        p_b: Some(p_b),
                        ..Default::default()
                    });
                }
            }
        }
    }
    coords
        .into_iter()
        .enumerate()
        .map(|(index, coords)| Cell { index, coords })
        .collect()
}

pub const SCENARIO_PRECISION: &str = "precision";
pub const SCENARIO_RECALL: &str = "recall";
pub const SCENARIO_HUNGARIAN: &str = "hungarian";

pub const HARD: &str = "hard";
pub const IDEAL: &str = "ideal";
pub const PERMUTED: &str = "permuted";
pub const DECEPTIVE: &str = "deceptive";
pub const CUBED: &str = "cubed";

pub fn mixture_name(alpha: f64) -> String {
    format!("mix_{alpha}")
}

struct Emitter<'a> {
    cell: &'a Cell,
    out: CellOutput,
    keep_batches: bool,
}

impl<'a> Emitter<'a> {
    fn push(&mut self, predictor: &str, matrix: &str, metric: &str, value: f64) {
        self.out.records.push(Record {
            cell: self.cell.index,
            coords: self.cell.coords,
            predictor: predictor.to_string(),
            matrix: matrix.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    fn push_with_m(&mut self, predictor: &str, m: usize, matrix: &str, metric: &str, value: f64) {
        self.push(predictor, matrix, metric, value);
        self.out.records.last_mut().expect("just pushed").coords.m = Some(m);
    }

    /// All twelve averaged scores of one batch under one matrix.
    fn block(&mut self, predictor: &str, m: Option<usize>, batch: &EvaluationBatch, name: &str, s: &SimilarityMatrix) -> Result<()> {
        let (block, _) = score_block(batch, s)?;
        for (avg, prf) in block.averages() {
            for (stat, v) in [("precision", prf.precision), ("recall", prf.recall), ("f1", prf.f1)] {
                let metric = format!("{avg}_{stat}");
                match m {
                    Some(m) => self.push_with_m(predictor, m, name, &metric, v),
                    None => self.push(predictor, name, &metric, v),
                }
            }
        }
        Ok(())
    }

    fn keep(&mut self, predictor: &str, batch: &EvaluationBatch) {
        if self.keep_batches {
            self.out.batches.push(CellBatch {
                cell: self.cell.index,
                predictor: predictor.to_string(),
                batch: batch.clone(),
            });
        }
    }
}

pub fn run_cell(config: &StudyConfig, cell: &Cell, keep_batches: bool) -> Result<CellOutput> {
    let mut rng = cell_rng(config, &cell.coords);
    let mut em = Emitter {
        cell,
        out: CellOutput::default(),
        keep_batches,
    };
    match config {
        StudyConfig::A(c) => study_a(c, cell, &mut rng, &mut em)?,
        StudyConfig::B(c) => study_b(c, cell, &mut rng, &mut em)?,
        StudyConfig::C(c) => study_c(c, cell, &mut rng, &mut em)?,
        StudyConfig::D(c) => study_d(c, cell, &mut rng, &mut em)?,
    }
    debug_assert!(matches!(config.kind(), StudyKind::A | StudyKind::B | StudyKind::C | StudyKind::D));
    Ok(em.out)
}

fn identity_for(s: &SimilarityMatrix) -> SimilarityMatrix {
    SimilarityMatrix::identity(s.universe().clone())
}

fn study_a(c: &StudyAConfig, cell: &Cell, rng: &mut ChaCha8Rng, em: &mut Emitter) -> Result<()> {
    let (k, p) = (cell.coords.k.unwrap(), cell.coords.p.unwrap());
    let (r_near, r_far) = (cell.coords.r_near.unwrap(), cell.coords.r_far.unwrap());
    let space = RingSpace::new(c.n)?;
    let ideal = space.similarity();
    let gold: Vec<LabelSet> = (0..c.examples_per_cell)
        .map(|_| sample_gold_ring(&space, k, rng))
        .collect::<Result<_>>()?;
    let near: Vec<LabelSet> = gold.iter().map(|g| perturb_hops(g, &space, p, r_near, rng)).collect::<Result<_>>()?;
    let far: Vec<LabelSet> = gold.iter().map(|g| perturb_hops(g, &space, p, r_far, rng)).collect::<Result<_>>()?;

    let mut matrices = vec![(HARD.to_string(), identity_for(&ideal))];
    let permuted = ideal.permute_rows(rng.random());
    matrices.push((IDEAL.to_string(), ideal.clone()));
    matrices.push((PERMUTED.to_string(), permuted));
    for &alpha in &c.alphas {
        matrices.push((mixture_name(alpha), ideal.mix_with_noise(alpha, c.noise_sigma, rng.random())?));
    }

    for (name, pred) in [("near", near), ("far", far)] {
        let batch = EvaluationBatch::new(space.universe(), gold.clone(), pred)?;
        for (mname, s) in &matrices {
            em.block(name, None, &batch, mname, s)?;
        }
        em.keep(name, &batch);
    }
    Ok(())
}

fn study_b(c: &StudyBConfig, cell: &Cell, rng: &mut ChaCha8Rng, em: &mut Emitter) -> Result<()> {
    let (k, rho, q) = (cell.coords.k.unwrap(), cell.coords.rho.unwrap(), cell.coords.q.unwrap());
    let space = RingSpace::new(c.n)?;
    let ideal = space.similarity();
    let hard = identity_for(&ideal);
    let gold: Vec<LabelSet> = (0..c.examples_per_cell)
        .map(|_| bimodal_gold(&space, k, rho, c.kappa, rng).map(|(g, _)| g))
        .collect::<Result<_>>()?;
    let modes: Vec<_> = gold.iter().map(|g| dominant_mode(g, &space, c.kappa)).collect();

    let mut predictors: Vec<(String, Option<usize>, Vec<LabelSet>)> = Vec::new();
    for &m in &c.m {
        let pred = modes
            .iter()
            .map(|&mode| prototype_bimodal_predictor(mode, &space, m, q, rng))
            .collect::<Result<_>>()?;
        predictors.push(("prototype_bimodal".into(), Some(m), pred));
    }
    let within = modes
        .iter()
        .map(|&mode| prototype_within_mode_predictor(mode, &space, k, q, c.beta_tail, rng))
        .collect::<Result<_>>()?;
    predictors.push(("within_mode".into(), None, within));
    let baseline = gold
        .iter()
        .map(|g| perturb_hops(g, &space, c.baseline_p, c.baseline_r, rng))
        .collect::<Result<_>>()?;
    predictors.push(("near_miss".into(), None, baseline));

    for (name, m, pred) in predictors {
        let batch = EvaluationBatch::new(space.universe(), gold.clone(), pred)?;
        for (mname, s) in [(HARD, &hard), (IDEAL, &ideal)] {
            em.block(&name, m, &batch, mname, s)?;
            let pointwise: Vec<f64> = batch
                .pairs()
                .map(|(p, g)| pointwise_sef1(p, g, s).map(|x| x.f1))
                .collect::<Result<_>>()?;
            let ci = bootstrap_mean_with(&pointwise, c.bootstrap_resamples, rng)?;
            for (metric, v) in [("sample_f1_ci_low", ci.ci_low), ("sample_f1_ci_high", ci.ci_high)] {
                match m {
                    Some(m) => em.push_with_m(&name, m, mname, metric, v),
                    None => em.push(&name, mname, metric, v),
                }
            }
        }
        let label = match m {
            Some(m) => format!("{name}_m{m}"),
            None => name.clone(),
        };
        em.keep(&label, &batch);
    }
    Ok(())
}

fn study_c(c: &StudyCConfig, cell: &Cell, rng: &mut ChaCha8Rng, em: &mut Emitter) -> Result<()> {
    let co = &cell.coords;
    let (k, p, p_jump) = (co.k.unwrap(), co.p.unwrap(), co.p_jump.unwrap());
    let (r_near, r_far) = (co.r_near.unwrap(), co.r_far.unwrap());
    let space = MultiRingSpace::new(c.ring_size, c.cross_ceiling)?;
    let ideal = space.ideal_similarity();
    let gold: Vec<LabelSet> = (0..c.examples_per_cell)
        .map(|_| sample_gold_multiring(&space, k, rng))
        .collect::<Result<_>>()?;
    let near: Vec<LabelSet> = gold
        .iter()
        .map(|g| jump_perturb(g, &space, p, p_jump, r_near, rng))
        .collect::<Result<_>>()?;
    let far: Vec<LabelSet> = gold
        .iter()
        .map(|g| jump_perturb(g, &space, p, p_jump, r_far, rng))
        .collect::<Result<_>>()?;

    let mut matrices = vec![
        (HARD.to_string(), identity_for(&ideal)),
        (IDEAL.to_string(), ideal.clone()),
        (DECEPTIVE.to_string(), space.deceptive_similarity()),
        (PERMUTED.to_string(), ideal.permute_rows(rng.random())),
    ];
    for &alpha in &c.alphas {
        matrices.push((mixture_name(alpha), ideal.mix_with_noise(alpha, c.noise_sigma, rng.random())?));
    }

    for (name, pred) in [("near", near), ("far", far)] {
        let batch = EvaluationBatch::new(space.universe(), gold.clone(), pred)?;
        for (mname, s) in &matrices {
            em.block(name, None, &batch, mname, s)?;
        }
        em.keep(name, &batch);
    }
    Ok(())
}

/// `k - k/2` labels around `center` and, when `bimodal`, `k/2` more around
/// the antipode. Returns the two groups in draw order.
fn modal_gold(
    space: &RingSpace,
    center: usize,
    k: usize,
    bimodal: bool,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !bimodal {
        return Ok((softmax_mode_sampler(space, center, k, temperature, rng)?, Vec::new()));
    }
    let first = softmax_mode_sampler(space, center, k - k / 2, temperature, rng)?;
    let mut logits = softmax_logits(space, space.antipode(center), temperature)?;
    for &l in &first {
        logits[l] = f64::NEG_INFINITY;
    }
    let second = sample_without_replacement(&logits, k / 2, rng)?;
    Ok((first, second))
}

fn study_d(c: &StudyDConfig, cell: &Cell, rng: &mut ChaCha8Rng, em: &mut Emitter) -> Result<()> {
    let space = RingSpace::new(c.n)?;
    let ideal = space.similarity();
    let co = &cell.coords;
    let p_b = co.p_b.unwrap();
    let k = co.k.unwrap();
    let scenario = co.scenario.unwrap();

    let mut gold = Vec::with_capacity(c.examples_per_cell);
    let mut pred = Vec::with_capacity(c.examples_per_cell);
    for _ in 0..c.examples_per_cell {
        let center = rng.random_range(0..space.n());
        let bimodal = rng.random::<f64>() < p_b;
        match scenario {
            SCENARIO_PRECISION => {
                let (main, other) = modal_gold(&space, center, k, bimodal, c.gold_temperature, rng)?;
                let main = LabelSet::from_indices(main);
                pred.push(perturb_hops(&main, &space, co.p.unwrap(), c.hop_radius, rng)?);
                gold.push(main.iter().chain(other).collect());
            }
            SCENARIO_RECALL => {
                let labels = softmax_mode_sampler(&space, center, k, c.gold_temperature, rng)?;
                let g = LabelSet::from_indices(labels.iter().copied());
                let p = co.p.unwrap();
                let guess = if bimodal {
                    let kept = LabelSet::from_indices(labels[..k - k / 2].iter().copied());
                    let local = perturb_hops(&kept, &space, p, c.hop_radius, rng)?;
                    let mut logits = softmax_logits(&space, space.antipode(center), c.gold_temperature)?;
                    for l in &local {
                        logits[l] = f64::NEG_INFINITY;
                    }
                    let remote = sample_without_replacement(&logits, k / 2, rng)?;
                    local.iter().chain(remote).collect()
                } else {
                    perturb_hops(&g, &space, p, c.hop_radius, rng)?
                };
                gold.push(g);
                pred.push(guess);
            }
            _ => {
                let (main, other) = modal_gold(&space, center, k, bimodal, c.gold_temperature, rng)?;
                gold.push(main.into_iter().chain(other).collect());
                let m = co.m.unwrap();
                pred.push(LabelSet::from_indices(softmax_mode_sampler(
                    &space,
                    center,
                    m,
                    c.pred_temperature,
                    rng,
                )?));
            }
        }
    }
    let batch = EvaluationBatch::new(space.universe(), gold, pred)?;
    let predictor = match scenario {
        SCENARIO_PRECISION => "unimodal",
        SCENARIO_RECALL => "bimodal",
        _ => "same_mode",
    };
    if scenario == SCENARIO_HUNGARIAN {
        let cubed = ideal.power(c.power)?;
        for (mname, s) in [(IDEAL, &ideal), (CUBED, &cubed)] {
            em.block(predictor, None, &batch, mname, s)?;
            em.push(predictor, mname, "hungarian", baselines::mean_hungarian_score(&batch, s)?);
            for (metric, kind) in [
                ("extended_hungarian_arithmetic", MeanKind::Arithmetic),
                ("extended_hungarian_harmonic", MeanKind::Harmonic),
            ] {
                em.push(predictor, mname, metric, baselines::mean_extended_hungarian(&batch, s, kind)?);
            }
        }
    } else {
        em.block(predictor, None, &batch, HARD, &identity_for(&ideal))?;
        em.block(predictor, None, &batch, IDEAL, &ideal)?;
        em.push(predictor, IDEAL, "precision_only", baselines::semantic_precision_only(&batch, &ideal)?);
        em.push(predictor, IDEAL, "recall_only", baselines::semantic_recall_only(&batch, &ideal)?);
    }
    em.keep(predictor, &batch);
    Ok(())
}
