//! Acceptance suite: one line per criterion.
//!
//! ```text
//! cargo test --release -p semf1-core --test acceptance
//! ```
//!
//! Criteria listed in [`KNOWN_FAILURES`] are reproducible divergences of the
//! synthetic studies (see "Known divergences" in the README). They still
//! print as FAIL. The run exits nonzero when any other criterion fails, or
//! when a known failure starts passing so the list can be pruned.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semf1_core::baselines::{extended_hungarian, hungarian_score, MeanKind};
use semf1_core::similarity::ring_similarity;
use semf1_core::stats::{ccc, kendall_tau, smoothness_index, spearman};
use semf1_core::study::{run_study, write_records_csv, RunOptions, StudyConfig, StudyKind, StudyOutput};
use semf1_core::{best_match, evaluate, pointwise_sef1, EvaluationBatch, LabelSet, Prf, SimilarityMatrix};

use common::*;

const TOL: f64 = 1e-12;

const KNOWN_FAILURES: [&str; 5] = ["A.b", "A.c", "A.e", "C.b", "C.c"];

struct Outcome {
    name: String,
    passed: bool,
    known: bool,
    detail: String,
}

#[derive(Default)]
struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.push(name.into(), passed, false, detail.into());
    }

    fn push(&mut self, name: String, passed: bool, known: bool, detail: String) {
        let tag = match (passed, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (listed as known failure)",
        };
        println!("[{tag}] {name}: {detail}");
        self.outcomes.push(Outcome {
            name,
            passed,
            known,
            detail,
        });
    }

    /// Failures not on the known list, plus known failures that now pass.
    fn unexpected(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed == o.known).count()
    }
}

fn identity_collapse(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = (0.0f64, String::new());
    let mut mismatched = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=30);
        let examples = rng.random_range(1..=200);
        let max_len = rng.random_range(0..=n.min(8));
        let batch = random_batch(&mut rng, n, examples, max_len);
        let s = SimilarityMatrix::identity(batch.universe().clone());
        let report = evaluate(&batch, &s).unwrap();
        let (d, name) = max_diff(&report.semantic, &conventional(&batch));
        if d > worst.0 {
            worst = (d, name);
        }
        if d > TOL || report.semantic != report.hard {
            mismatched += 1;
        }
    }
    let elapsed = start.elapsed();
    report.record(
        "identity collapse",
        mismatched == 0 && elapsed < Duration::from_secs(10),
        format!(
            "1000 batches, {mismatched} mismatched, max diff {:.1e} ({}), {:.2?}",
            worst.0, worst.1, elapsed
        ),
    );
}

/// Every subset of `0..n` with at most `max` elements.
fn small_subsets(n: usize, max: usize) -> Vec<LabelSet> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| LabelSet::from_indices((0..n).filter(|i| m >> i & 1 == 1)))
        .collect()
}

fn small_instance_oracle(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut batches = 0usize;
    for n in 1..=6 {
        let u = universe(n);
        let mut matrices = vec![SimilarityMatrix::identity(u.clone())];
        if n >= 2 {
            matrices.push(ring_similarity(n).unwrap());
        }
        for _ in 0..3 {
            matrices.push(random_similarity(&mut rng, u.clone()));
        }
        let sets = small_subsets(n, 3);
        for s in &matrices {
            let get = |a: usize, b: usize| s.get(a, b);
            for p in &sets {
                for t in &sets {
                    let pv: Vec<usize> = p.iter().collect();
                    let tv: Vec<usize> = t.iter().collect();
                    let precision = naive_best_match(&pv, &tv, &get);
                    let recall = naive_best_match(&tv, &pv, &get);
                    let f = if precision + recall > 0.0 {
                        2.0 * precision * recall / (precision + recall)
                    } else {
                        0.0
                    };
                    let got = pointwise_sef1(p, t, s).unwrap();
                    worst = worst
                        .max((got.precision - precision).abs())
                        .max((got.recall - recall).abs())
                        .max((got.f1 - f).abs());
                    pairs += 1;
                }
            }
            // Whole batches of enumerated pairs through every average.
            for _ in 0..20 {
                let m = rng.random_range(1..=12);
                let gold = (0..m).map(|_| sets[rng.random_range(0..sets.len())].clone()).collect();
                let pred = (0..m).map(|_| sets[rng.random_range(0..sets.len())].clone()).collect();
                let batch = EvaluationBatch::new(u.clone(), gold, pred).unwrap();
                let got = evaluate(&batch, s).unwrap();
                worst = worst.max(max_diff(&got.semantic, &naive_semantic(&batch, s)).0);
                batches += 1;
            }
        }
    }
    report.record(
        "small-instance oracle",
        worst <= TOL,
        format!("{pairs} set pairs and {batches} batches over |L| <= 6, max diff {worst:.1e}"),
    );
}

fn study_criteria(report: &mut Report, kind: StudyKind, ids: &[&str], budget: Duration) -> StudyOutput {
    let start = Instant::now();
    let out = run_study(&StudyConfig::default_for(kind), RunOptions::default()).unwrap();
    let elapsed = start.elapsed();
    for id in ids {
        match out.summary.check(id) {
            Some(c) => report.push(
                format!("study {} ({})", id, c.description),
                c.passed,
                KNOWN_FAILURES.contains(id),
                c.detail.clone(),
            ),
            None => report.record(format!("study {id}"), false, "check missing from summary"),
        }
    }
    report.record(
        format!("study {} runtime", kind.name()),
        elapsed < budget,
        format!("{} cells in {:.1?} (budget {:?})", out.cells.len(), elapsed, budget),
    );
    out
}

/// Best one-to-one total over every injection of the smaller side into the
/// larger, with every optimal assignment returned.
fn optimal_assignments(w: &[Vec<f64>]) -> (f64, Vec<Vec<usize>>) {
    fn go(i: usize, w: &[Vec<f64>], used: &mut Vec<bool>, cur: &mut Vec<usize>, all: &mut Vec<(f64, Vec<usize>)>) {
        if i == w.len() {
            let total = cur.iter().enumerate().map(|(r, &c)| w[r][c]).sum();
            all.push((total, cur.clone()));
            return;
        }
        for c in 0..w[0].len() {
            if !used[c] {
                used[c] = true;
                cur.push(c);
                go(i + 1, w, used, cur, all);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut all = Vec::new();
    go(0, w, &mut vec![false; w[0].len()], &mut Vec::new(), &mut all);
    let best = all.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let winners = all.into_iter().filter(|a| (a.0 - best).abs() <= 1e-12).map(|a| a.1).collect();
    (best, winners)
}

/// Extended matching value from an explicit assignment on a table with the
/// smaller set on the rows.
fn extended_from_assignment(w: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let cols = w[0].len();
    let mut values: Vec<f64> = assignment.iter().enumerate().flat_map(|(r, &c)| [w[r][c], w[r][c]]).collect();
    for c in (0..cols).filter(|c| !assignment.contains(c)) {
        values.push(w.iter().map(|row| row[c]).fold(f64::NEG_INFINITY, f64::max));
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn baseline_pathologies(report: &mut Report) {
    // Two predictions each 0.9 from the single gold label.
    let u = universe(3);
    #[rustfmt::skip]
    let s = SimilarityMatrix::new(u, vec![
        1.0, 0.0, 0.9,
        0.0, 1.0, 0.9,
        0.9, 0.9, 1.0,
    ]).unwrap();
    let (p, t) = (LabelSet::from_indices([0, 1]), LabelSet::from_indices([2]));
    let h = hungarian_score(&p, &t, &s);
    let (best, _) = optimal_assignments(&[vec![0.9, 0.9]]);
    let oracle_h = best / 2.0;
    let sef1 = pointwise_sef1(&p, &t, &s).unwrap().f1;
    let ok_a = (h - 0.45).abs() <= TOL && (oracle_h - 0.45).abs() <= TOL && (sef1 - 0.9).abs() <= TOL;

    // Gold {t1, t2}; five predictions identical to t1 and unrelated to t2.
    let u = universe(7);
    let mut v = vec![0.0; 49];
    for a in 0..7 {
        for b in 0..7 {
            let t1_like = |x: usize| x == 0 || x >= 2;
            v[a * 7 + b] = if a == b || (t1_like(a) && t1_like(b)) { 1.0 } else { 0.0 };
        }
    }
    let s = SimilarityMatrix::new(u, v).unwrap();
    let gold = LabelSet::from_indices([0, 1]);
    let pred = LabelSet::from_indices(2..7);
    let w: Vec<Vec<f64>> = gold.iter().map(|t| pred.iter().map(|p| s.get(t, p)).collect()).collect();
    let (_, winners) = optimal_assignments(&w);
    let oracle: Vec<f64> = winners.iter().map(|a| extended_from_assignment(&w, a)).collect();
    let ext = extended_hungarian(&pred, &gold, &s, MeanKind::Arithmetic);
    let sef1_game = pointwise_sef1(&pred, &gold, &s).unwrap().f1;
    let ok_b = (ext - 5.0 / 7.0).abs() <= TOL
        && oracle.iter().all(|o| (o - 5.0 / 7.0).abs() <= TOL)
        && (sef1_game - 2.0 / 3.0).abs() <= TOL;

    report.record(
        "baseline pathologies",
        ok_a && ok_b,
        format!(
            "hungarian {h:.6} (oracle {oracle_h:.6}) vs SeF1 {sef1:.6}; extended arithmetic {ext:.6} \
             over {} optimal assignments vs SeF1 {sef1_game:.6}",
            winners.len()
        ),
    );
}

fn edge_case_table(report: &mut Report) {
    let u = universe(6);
    let identity = SimilarityMatrix::identity(u);
    let ring = ring_similarity(6).unwrap();
    let e = LabelSet::empty;
    let one = |i: usize| LabelSet::from_indices([i]);
    let prf = |p: f64, r: f64, f1: f64| Prf { precision: p, recall: r, f1 };
    // (case, pred, gold, matrix, expected)
    let cases: Vec<(&str, LabelSet, LabelSet, &SimilarityMatrix, Prf)> = vec![
        ("empty/empty, S=I", e(), e(), &identity, prf(1.0, 1.0, 1.0)),
        ("empty/empty, ring", e(), e(), &ring, prf(1.0, 1.0, 1.0)),
        ("empty pred, S=I", e(), one(0), &identity, prf(0.0, 0.0, 0.0)),
        ("empty pred, ring", e(), one(0), &ring, prf(0.0, 0.0, 0.0)),
        ("empty gold, S=I", one(0), e(), &identity, prf(0.0, 0.0, 0.0)),
        ("empty gold, ring", one(0), e(), &ring, prf(0.0, 0.0, 0.0)),
        ("disjoint, S=I (zero P+R)", one(0), one(1), &identity, prf(0.0, 0.0, 0.0)),
        ("adjacent, ring", one(0), one(1), &ring, prf(0.75, 0.75, 0.75)),
        ("antipodal, ring (zero P+R)", one(0), one(3), &ring, prf(0.0, 0.0, 0.0)),
    ];
    let mut failures = Vec::new();
    for (name, p, t, s, want) in &cases {
        let got = pointwise_sef1(p, t, s).unwrap();
        let bm_ok = best_match(p, t, s).unwrap().0 == want.precision && best_match(t, p, s).unwrap().0 == want.recall;
        if got != *want || !bm_ok {
            failures.push(format!("{name}: got {got:?}"));
        }
    }
    report.record(
        "edge-case table",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} cases exact", cases.len())
        } else {
            failures.join("; ")
        },
    );
}

fn stats_correctness(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_tau = 0.0f64;
    let mut worst_rho = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        let levels = rng.random_range(2..=50u32);
        let mut draw = || (0..n).map(|_| rng.random_range(0..levels) as f64).collect::<Vec<_>>();
        let (x, y) = (draw(), draw());
        worst_tau = worst_tau.max((kendall_tau(&x, &y).unwrap() - kendall_naive(&x, &y)).abs());
        worst_rho = worst_rho.max((spearman(&x, &y).unwrap() - spearman_naive(&x, &y)).abs());
    }
    let smooth = smoothness_index(&[0.9, 0.7, 0.5, 0.3]).unwrap();
    let x: Vec<f64> = (0..25).map(|i| (i as f64 * 0.7).sin()).collect();
    let self_ccc = ccc(&x, &x).unwrap();
    report.record(
        "stats correctness",
        worst_tau <= TOL && worst_rho <= TOL && smooth == 1.0 / 3.0 && self_ccc == 1.0,
        format!(
            "200 series: kendall diff {worst_tau:.1e}, spearman diff {worst_rho:.1e}; smoothness {smooth}; ccc(x,x) {self_ccc}"
        ),
    );
}

fn csv_bytes(out: &StudyOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records_csv(out.config.kind(), &out.records, &mut buf).unwrap();
    buf
}

fn determinism(report: &mut Report, defaults: &BTreeMap<&'static str, Vec<u8>>) {
    let mut detail = Vec::new();
    let mut passed = true;
    for kind in [StudyKind::A, StudyKind::B, StudyKind::C, StudyKind::D] {
        let config = StudyConfig::default_for(kind);
        let mut digests = vec![defaults[kind.name()].clone()];
        for workers in [1, 3] {
            let out = run_study(&config, RunOptions { workers, keep_batches: false }).unwrap();
            digests.push(csv_bytes(&out));
        }
        let same = digests.windows(2).all(|w| w[0] == w[1]);
        passed &= same;
        detail.push(format!("{} {}", kind.name(), if same { "identical" } else { "DIFFERS" }));
    }
    report.record(
        "determinism",
        passed,
        format!("default seed, all cores vs 1 and 3 workers: {}", detail.join(", ")),
    );
}

fn main() {
    // Cargo passes harness flags such as --list; there is nothing to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut report = Report::default();
    identity_collapse(&mut report);
    small_instance_oracle(&mut report);

    let mut defaults = BTreeMap::new();
    let five_min = Duration::from_secs(300);
    let a = study_criteria(&mut report, StudyKind::A, &["A.a", "A.b", "A.c", "A.d", "A.e"], five_min);
    defaults.insert("A", csv_bytes(&a));
    let b = study_criteria(&mut report, StudyKind::B, &["B"], five_min);
    defaults.insert("B", csv_bytes(&b));
    let c = study_criteria(&mut report, StudyKind::C, &["C.a", "C.b", "C.c"], five_min);
    defaults.insert("C", csv_bytes(&c));
    let d = study_criteria(&mut report, StudyKind::D, &["D.a", "D.b", "D.c"], five_min);
    defaults.insert("D", csv_bytes(&d));

    baseline_pathologies(&mut report);
    edge_case_table(&mut report);
    stats_correctness(&mut report);
    determinism(&mut report, &defaults);

    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    let unexpected = report.unexpected();
    println!(
        "\n{} of {} criteria passed; {} known failures, {} unexpected results",
        report.outcomes.len() - failed,
        report.outcomes.len(),
        report.outcomes.iter().filter(|o| o.known && !o.passed).count(),
        unexpected
    );
    if unexpected > 0 {
        for o in report.outcomes.iter().filter(|o| o.passed == o.known) {
            eprintln!("unexpected: {} ({})", o.name, o.detail);
        }
        std::process::exit(1);
    }
}
