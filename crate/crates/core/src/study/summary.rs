use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::stats::{bootstrap_mean, kendall_tau};

use super::cells::{
    derive_seed, mixture_name, Record, CUBED, DECEPTIVE, HARD, IDEAL, PERMUTED, SCENARIO_HUNGARIAN,
    SCENARIO_PRECISION, SCENARIO_RECALL,
};
use super::config::{StudyAConfig, StudyBConfig, StudyCConfig, StudyConfig, StudyDConfig};

/// Cell-mean curve of one metric against one swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub group: String,
    pub predictor: String,
    pub matrix: String,
    pub metric: String,
    pub x_name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub kendall_tau: f64,
    /// `max(y) - min(y)`.
    pub range: f64,
    /// `y.last() - y.first()`.
    pub change: f64,
}

/// Bootstrap interval of the mean per-cell Near minus Far difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub matrix: String,
    pub metric: String,
    pub cells: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl GapSummary {
    pub fn excludes_zero_above(&self) -> bool {
        self.ci_low > 0.0
    }

    pub fn contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub group: String,
    pub matrix: String,
    pub metric: String,
    pub left_predictor: String,
    pub left: f64,
    pub right_predictor: String,
    pub right: f64,
}

/// A headline pass/fail condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub study: String,
    pub cells: usize,
    pub records: usize,
    pub series: Vec<SeriesSummary>,
    pub gaps: Vec<GapSummary>,
    pub comparisons: Vec<Comparison>,
    pub checks: Vec<Check>,
}

impl StudySummary {
    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find_series(&self, group: &str, matrix: &str, metric: &str) -> Option<&SeriesSummary> {
        self.series
            .iter()
            .find(|s| s.group == group && s.matrix == matrix && s.metric == metric)
    }

    pub fn gap(&self, matrix: &str, metric: &str) -> Option<&GapSummary> {
        self.gaps.iter().find(|g| g.matrix == matrix && g.metric == metric)
    }
}

/// Groups `(x, y)` points by exact `x` and averages `y`, in increasing `x`.
fn mean_curve(points: impl IntoIterator<Item = (f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for (x, y) in points {
        // Order-preserving key for finite non-negative and negative floats.
        let bits = x.to_bits();
        let key = if x.is_sign_negative() { !bits } else { bits | (1 << 63) };
        let e = groups.entry(key).or_insert((x, 0.0, 0));
        e.1 += y;
        e.2 += 1;
    }
    groups.into_values().map(|(x, sum, n)| (x, sum / n as f64)).unzip()
}

struct SeriesSpec<'a> {
    group: String,
    predictor: &'a str,
    matrix: &'a str,
    metric: &'a str,
    x_name: &'a str,
}

fn series(
    records: &[Record],
    spec: SeriesSpec<'_>,
    keep: impl Fn(&Record) -> bool,
    x: impl Fn(&Record) -> Option<f64>,
) -> Result<SeriesSummary> {
    let (xs, ys) = mean_curve(
        records
            .iter()
            .filter(|r| r.matrix == spec.matrix && r.metric == spec.metric && keep(r))
            .filter_map(|r| x(r).map(|x| (x, r.value))),
    );
    let tau = if xs.len() >= 2 { kendall_tau(&xs, &ys)? } else { 0.0 };
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeriesSummary {
        group: spec.group,
        predictor: spec.predictor.to_string(),
        matrix: spec.matrix.to_string(),
        metric: spec.metric.to_string(),
        x_name: spec.x_name.to_string(),
        change: match (ys.first(), ys.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        },
        range: if ys.is_empty() { 0.0 } else { max - min },
        kendall_tau: tau,
        x: xs,
        y: ys,
    })
}

/// Near minus Far per cell, restricted to cells that perturb at all.
fn near_far_gap(
    records: &[Record],
    matrix: &str,
    metric: &str,
    resamples: usize,
    seed: u64,
) -> Result<GapSummary> {
    let mut near: BTreeMap<usize, f64> = BTreeMap::new();
    let mut far: BTreeMap<usize, f64> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.matrix == matrix && r.metric == metric && r.coords.p.is_some_and(|p| p > 0.0))
    {
        match r.predictor.as_str() {
            "near" => near.insert(r.cell, r.value),
            "far" => far.insert(r.cell, r.value),
            _ => None,
        };
    }
    let gaps: Vec<f64> = near
        .iter()
        .filter_map(|(cell, n)| far.get(cell).map(|f| n - f))
        .collect();
    let ci = bootstrap_mean(&gaps, resamples, seed)?;
    Ok(GapSummary {
        matrix: matrix.to_string(),
        metric: metric.to_string(),
        cells: gaps.len(),
        mean: ci.mean,
        ci_low: ci.ci_low,
        ci_high: ci.ci_high,
    })
}

fn fmt_gap(g: &GapSummary) -> String {
    format!("{} {}: [{:.6}, {:.6}]", g.matrix, g.metric, g.ci_low, g.ci_high)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn radius(r: &Record) -> Option<f64> {
    match r.predictor.as_str() {
        "near" => r.coords.r_near.map(|v| v as f64),
        "far" => r.coords.r_far.map(|v| v as f64),
        _ => None,
    }
}

pub fn summarize(config: &StudyConfig, cells: usize, records: &[Record]) -> Result<StudySummary> {
    let mut summary = StudySummary {
        study: config.kind().name().to_string(),
        cells,
        records: records.len(),
        series: Vec::new(),
        gaps: Vec::new(),
        comparisons: Vec::new(),
        checks: Vec::new(),
    };
    match config {
        StudyConfig::A(c) => summarize_a(c, records, &mut summary)?,
        StudyConfig::B(c) => summarize_b(c, records, &mut summary)?,
        StudyConfig::C(c) => summarize_c(c, records, &mut summary)?,
        StudyConfig::D(c) => summarize_d(c, records, &mut summary)?,
    }
    Ok(summary)
}

const F1_AVERAGES: [&str; 3] = ["sample_f1", "micro_f1", "macro_f1"];

fn summarize_a(c: &StudyAConfig, records: &[Record], out: &mut StudySummary) -> Result<()> {
    let p_max = max_of(&c.p);
    let mut tau_semantic = Vec::new();
    let mut tau_hard = Vec::new();
    for &k in &c.k {
        for matrix in [HARD, IDEAL] {
            for metric in F1_AVERAGES {
                let s = series(
                    records,
                    SeriesSpec {
                        group: format!("k={k}"),
                        predictor: "near+far",
                        matrix,
                        metric,
                        x_name: "r",
                    },
                    |r| r.coords.k == Some(k) && r.coords.p == Some(p_max),
                    radius,
                )?;
                let line = format!("k={k} {matrix} {metric} tau={:.4}", s.kendall_tau);
                if matrix == IDEAL {
                    tau_semantic.push((s.kendall_tau <= -0.9, line));
                } else {
                    tau_hard.push((s.kendall_tau.abs() <= 0.2, line));
                }
                out.series.push(s);
            }
        }
    }

    let mut matrices = vec![HARD.to_string(), IDEAL.to_string(), PERMUTED.to_string()];
    matrices.extend(c.alphas.iter().map(|&a| mixture_name(a)));
    for m in &matrices {
        let seed = derive_seed(c.seed, &["A", "gap", m, "micro_f1"]);
        out.gaps.push(near_far_gap(records, m, "micro_f1", c.bootstrap_resamples, seed)?);
    }

    out.checks.push(all_check(
        "A.a",
        "semantic sample/micro/macro F1 against hop radius at the largest p has Kendall tau <= -0.9 for every k",
        tau_semantic,
    ));
    out.checks.push(all_check(
        "A.b",
        "hard sample/micro/macro F1 against hop radius at the largest p has |tau| <= 0.2 for every k",
        tau_hard,
    ));
    let ideal = out.gap(IDEAL, "micro_f1").expect("ideal gap").clone();
    let hard = out.gap(HARD, "micro_f1").expect("hard gap").clone();
    out.checks.push(Check {
        id: "A.c".into(),
        description: "Near minus Far micro F1 gap CI is above 0 for the ideal matrix and contains 0 for hard".into(),
        passed: ideal.excludes_zero_above() && hard.contains_zero(),
        detail: format!("{}; {}", fmt_gap(&ideal), fmt_gap(&hard)),
    });
    let low_alpha = c.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    if low_alpha.is_finite() {
        let g = out.gap(&mixture_name(low_alpha), "micro_f1").expect("mixture gap").clone();
        out.checks.push(Check {
            id: "A.d".into(),
            description: format!("mixture alpha={low_alpha} keeps a Near minus Far gap CI above 0"),
            passed: g.excludes_zero_above(),
            detail: fmt_gap(&g),
        });
    }
    let g = out.gap(PERMUTED, "micro_f1").expect("permuted gap").clone();
    out.checks.push(Check {
        id: "A.e".into(),
        description: "row-permuted matrix gap CI contains 0".into(),
        passed: g.contains_zero(),
        detail: fmt_gap(&g),
    });
    Ok(())
}

fn all_check(id: &str, description: &str, parts: Vec<(bool, String)>) -> Check {
    Check {
        id: id.into(),
        description: description.into(),
        passed: parts.iter().all(|(ok, _)| *ok),
        detail: parts.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join("; "),
    }
}

fn cell_mean(records: &[Record], keep: impl Fn(&Record) -> bool) -> Option<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| keep(r))
        .fold((0.0, 0usize), |(s, n), r| (s + r.value, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize_b(c: &StudyBConfig, records: &[Record], out: &mut StudySummary) -> Result<()> {
    let q_max = max_of(&c.q);
    let m = if c.m.contains(&2) { 2 } else { *c.m.iter().min().expect("validated") };
    let mut parts = Vec::new();
    for &k in &c.k {
        for &rho in &c.rho {
            let group = format!("k={k} rho={rho}");
            let at = |predictor: &'static str, matrix: &'static str, with_m: bool| {
                move |r: &Record| {
                    r.predictor == predictor
                        && r.matrix == matrix
                        && r.metric == "sample_f1"
                        && r.coords.k == Some(k)
                        && r.coords.rho == Some(rho)
                        && r.coords.q == Some(q_max)
                        && (!with_m || r.coords.m == Some(m))
                }
            };
            let mut pair = |matrix: &'static str| -> (f64, f64) {
                let left = cell_mean(records, at("prototype_bimodal", matrix, true)).unwrap_or(f64::NAN);
                let right = cell_mean(records, at("near_miss", matrix, false)).unwrap_or(f64::NAN);
                out.comparisons.push(Comparison {
                    group: group.clone(),
                    matrix: matrix.into(),
                    metric: "sample_f1".into(),
                    left_predictor: format!("prototype_bimodal_m{m}"),
                    left,
                    right_predictor: "near_miss".into(),
                    right,
                });
                (left, right)
            };
            let (ph, nh) = pair(HARD);
            let (ps, ns) = pair(IDEAL);
            parts.push((
                ph >= nh && ps < ns,
                format!("{group}: hard {ph:.4} vs {nh:.4}, semantic {ps:.4} vs {ns:.4}"),
            ));
        }
    }
    out.checks.push(all_check(
        "B",
        &format!("prototype-bimodal (q={q_max}, m={m}) has hard sample F1 >= the near-miss baseline and strictly lower semantic sample F1"),
        parts,
    ));

    for &k in &c.k {
        for predictor in ["prototype_bimodal", "within_mode"] {
            for matrix in [HARD, IDEAL] {
                out.series.push(series(
                    records,
                    SeriesSpec {
                        group: format!("k={k}"),
                        predictor,
                        matrix,
                        metric: "sample_f1",
                        x_name: "q",
                    },
                    |r| r.predictor == predictor && r.coords.k == Some(k) && (r.coords.m.is_none() || r.coords.m == Some(m)),
                    |r| r.coords.q,
                )?);
            }
        }
    }
    Ok(())
}

fn summarize_c(c: &StudyCConfig, records: &[Record], out: &mut StudySummary) -> Result<()> {
    let p_max = max_of(&c.p);
    let mut take = |matrix: &str| -> Result<SeriesSummary> {
        let s = series(
            records,
            SeriesSpec {
                group: "all".into(),
                predictor: "near+far",
                matrix,
                metric: "sample_f1",
                x_name: "p_jump",
            },
            |r| r.coords.p == Some(p_max),
            |r| r.coords.p_jump,
        )?;
        out.series.push(s.clone());
        Ok(s)
    };
    let ideal = take(IDEAL)?;
    let hard = take(HARD)?;
    let deceptive = take(DECEPTIVE)?;
    for &k in &c.k {
        for matrix in [HARD, IDEAL, DECEPTIVE] {
            out.series.push(series(
                records,
                SeriesSpec {
                    group: format!("k={k}"),
                    predictor: "near+far",
                    matrix,
                    metric: "sample_f1",
                    x_name: "p_jump",
                },
                |r| r.coords.p == Some(p_max) && r.coords.k == Some(k),
                |r| r.coords.p_jump,
            )?);
        }
    }

    let mut matrices = vec![HARD.to_string(), IDEAL.to_string(), DECEPTIVE.to_string(), PERMUTED.to_string()];
    matrices.extend(c.alphas.iter().map(|&a| mixture_name(a)));
    for m in &matrices {
        let seed = derive_seed(c.seed, &["C", "gap", m, "micro_f1"]);
        out.gaps.push(near_far_gap(records, m, "micro_f1", c.bootstrap_resamples, seed)?);
    }

    out.checks.push(Check {
        id: "C.a".into(),
        description: "ideal-matrix semantic sample F1 against p_jump has Kendall tau <= -0.9".into(),
        passed: ideal.kendall_tau <= -0.9,
        detail: format!("tau={:.4}", ideal.kendall_tau),
    });
    out.checks.push(Check {
        id: "C.b".into(),
        description: "hard and deceptive-matrix sample F1 against p_jump have |tau| <= 0.2".into(),
        passed: hard.kendall_tau.abs() <= 0.2 && deceptive.kendall_tau.abs() <= 0.2,
        detail: format!(
            "hard tau={:.4} range={:.4}; deceptive tau={:.4} range={:.4}",
            hard.kendall_tau, hard.range, deceptive.kendall_tau, deceptive.range
        ),
    });
    let permuted = out.gap(PERMUTED, "micro_f1").expect("permuted gap").clone();
    let mut parts = vec![(permuted.contains_zero(), fmt_gap(&permuted))];
    let mut excluding = vec![IDEAL.to_string()];
    excluding.extend(c.alphas.iter().map(|&a| mixture_name(a)));
    for m in &excluding {
        let g = out.gap(m, "micro_f1").expect("gap").clone();
        parts.push((!g.contains_zero(), fmt_gap(&g)));
    }
    out.checks.push(all_check(
        "C.c",
        "permuted-matrix gap CI contains 0 while the ideal and mixture gap CIs exclude 0",
        parts,
    ));
    Ok(())
}

fn summarize_d(c: &StudyDConfig, records: &[Record], out: &mut StudySummary) -> Result<()> {
    for (id, scenario, single, label) in [
        ("D.a", SCENARIO_PRECISION, "precision_only", "gold"),
        ("D.b", SCENARIO_RECALL, "recall_only", "predictor"),
    ] {
        let mut parts = Vec::new();
        for &k in &c.k {
            for &p in &c.p {
                let keep = |r: &Record| r.coords.scenario == Some(scenario) && r.coords.k == Some(k) && r.coords.p == Some(p);
                let spec = |metric| SeriesSpec {
                    group: format!("{scenario} k={k} p={p}"),
                    predictor: "",
                    matrix: IDEAL,
                    metric,
                    x_name: "p_b",
                };
                let one_sided = series(records, spec(single), keep, |r| r.coords.p_b)?;
                let sef1 = series(records, spec("sample_f1"), keep, |r| r.coords.p_b)?;
                parts.push((
                    one_sided.change.abs() < 0.02 && sef1.change < -0.1,
                    format!(
                        "k={k} p={p}: {single} change {:.4}, sample F1 change {:.4}",
                        one_sided.change, sef1.change
                    ),
                ));
                out.series.push(one_sided);
                out.series.push(sef1);
            }
        }
        out.checks.push(all_check(
            id,
            &format!("{single} moves by < 0.02 across {label} bimodality 0 to 1 while sample semantic F1 drops by > 0.1"),
            parts,
        ));
    }

    let p_b = max_of(&c.p_b);
    for &pb in &c.p_b {
        for matrix in [IDEAL, CUBED] {
            for metric in ["sample_f1", "hungarian", "extended_hungarian_arithmetic", "extended_hungarian_harmonic"] {
                out.series.push(series(
                    records,
                    SeriesSpec {
                        group: format!("{SCENARIO_HUNGARIAN} p_b={pb}"),
                        predictor: "same_mode",
                        matrix,
                        metric,
                        x_name: "m",
                    },
                    |r| r.coords.scenario == Some(SCENARIO_HUNGARIAN) && r.coords.p_b == Some(pb),
                    |r| r.coords.m.map(|m| m as f64),
                )?);
            }
        }
    }
    let group = format!("{SCENARIO_HUNGARIAN} p_b={p_b}");
    let ext = out
        .find_series(&group, CUBED, "extended_hungarian_arithmetic")
        .expect("series")
        .clone();
    let sef1 = out.find_series(&group, CUBED, "sample_f1").expect("series").clone();
    out.checks.push(Check {
        id: "D.c".into(),
        description: format!(
            "arithmetic extended Hungarian rises with the same-mode prediction count (tau >= 0.9) while sample semantic F1 under the cubed matrix stays in a 0.05 band (p_b={p_b})"
        ),
        passed: ext.kendall_tau >= 0.9 && sef1.range <= 0.05,
        detail: format!(
            "extended Hungarian tau={:.4} ({:.4} to {:.4}); sample F1 range={:.4}",
            ext.kendall_tau,
            ext.y.first().copied().unwrap_or(f64::NAN),
            ext.y.last().copied().unwrap_or(f64::NAN),
            sef1.range
        ),
    });
    Ok(())
}
