//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls the library's metric code.

#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use semf1_core::{EvaluationBatch, LabelSet, LabelUniverse, SimilarityMatrix};

pub fn universe(n: usize) -> Arc<LabelUniverse> {
    Arc::new(LabelUniverse::numbered(n).unwrap())
}

pub fn random_set<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> LabelSet {
    let len = rng.random_range(0..=max_len.min(n));
    let mut picks: Vec<usize> = (0..n).collect();
    for i in 0..len {
        let j = rng.random_range(i..n);
        picks.swap(i, j);
    }
    LabelSet::from_indices(picks[..len].iter().copied())
}

pub fn random_batch<R: Rng>(rng: &mut R, n: usize, examples: usize, max_len: usize) -> EvaluationBatch {
    let u = universe(n);
    let gold = (0..examples).map(|_| random_set(rng, n, max_len)).collect();
    let pred = (0..examples).map(|_| random_set(rng, n, max_len)).collect();
    EvaluationBatch::new(u, gold, pred).unwrap()
}

/// Symmetric, unit diagonal, entries in `[0, 1]`, with some exact 0s and 1s
/// so that argmax ties occur.
pub fn random_similarity<R: Rng>(rng: &mut R, u: Arc<LabelUniverse>) -> SimilarityMatrix {
    let n = u.len();
    let mut v = vec![0.0; n * n];
    for a in 0..n {
        v[a * n + a] = 1.0;
        for b in a + 1..n {
            let x = match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                2 => 0.5,
                _ => rng.random::<f64>(),
            };
            v[a * n + b] = x;
            v[b * n + a] = x;
        }
    }
    SimilarityMatrix::new(u, v).unwrap()
}

/// Precision, recall and F1 of one averaging mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub sample: Triple,
    pub micro: Triple,
    pub macro_: Triple,
    pub weighted: Triple,
}

impl Averages {
    pub fn flat(&self) -> [(&'static str, f64); 12] {
        let t = |x: &Triple| [x.p, x.r, x.f];
        let [a, b, c] = t(&self.sample);
        let [d, e, f] = t(&self.micro);
        let [g, h, i] = t(&self.macro_);
        let [j, k, l] = t(&self.weighted);
        [
            ("sample_precision", a),
            ("sample_recall", b),
            ("sample_f1", c),
            ("micro_precision", d),
            ("micro_recall", e),
            ("micro_f1", f),
            ("macro_precision", g),
            ("macro_recall", h),
            ("macro_f1", i),
            ("weighted_precision", j),
            ("weighted_recall", k),
            ("weighted_f1", l),
        ]
    }
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn f1(p: f64, r: f64) -> f64 {
    div(2.0 * p * r, p + r)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Conventional exact-match multi-label F1 from set intersections and
/// per-class confusion counts. Two empty sets count as a perfect example.
pub fn conventional(batch: &EvaluationBatch) -> Averages {
    let n = batch.universe().len();
    let (mut sp, mut sr, mut sf) = (Vec::new(), Vec::new(), Vec::new());
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    let mut ctp = vec![0.0; n];
    let mut cfp = vec![0.0; n];
    let mut cfn = vec![0.0; n];
    for (pred, gold) in batch.pairs() {
        let inter = pred.iter().filter(|&x| gold.contains(x)).count() as f64;
        let (np, ng) = (pred.len() as f64, gold.len() as f64);
        let (p, r) = match (np == 0.0, ng == 0.0) {
            (true, true) => (1.0, 1.0),
            (true, false) | (false, true) => (0.0, 0.0),
            _ => (inter / np, inter / ng),
        };
        sp.push(p);
        sr.push(r);
        sf.push(f1(p, r));
        tp += inter;
        fp += np - inter;
        fn_ += ng - inter;
        for c in 0..n {
            match (pred.contains(c), gold.contains(c)) {
                (true, true) => ctp[c] += 1.0,
                (true, false) => cfp[c] += 1.0,
                (false, true) => cfn[c] += 1.0,
                _ => {}
            }
        }
    }
    let micro_p = div(tp, tp + fp);
    let micro_r = div(tp, tp + fn_);
    class_averages(
        Triple {
            p: mean(&sp),
            r: mean(&sr),
            f: mean(&sf),
        },
        Triple {
            p: micro_p,
            r: micro_r,
            f: f1(micro_p, micro_r),
        },
        &ctp,
        &cfp,
        &cfn,
        &support(batch),
    )
}

fn support(batch: &EvaluationBatch) -> Vec<f64> {
    let mut s = vec![0.0; batch.universe().len()];
    for g in batch.gold() {
        for c in g {
            s[c] += 1.0;
        }
    }
    s
}

fn class_averages(sample: Triple, micro: Triple, tp: &[f64], fp: &[f64], fn_: &[f64], support: &[f64]) -> Averages {
    let n = tp.len();
    let per: Vec<Triple> = (0..n)
        .map(|c| {
            let p = div(tp[c], tp[c] + fp[c]);
            let r = div(tp[c], tp[c] + fn_[c]);
            Triple {
                p,
                r,
                f: div(2.0 * tp[c], 2.0 * tp[c] + fp[c] + fn_[c]),
            }
        })
        .collect();
    let total: f64 = support.iter().sum();
    let avg = |w: &dyn Fn(usize) -> f64| {
        let wsum: f64 = (0..n).map(w).sum();
        Triple {
            p: (0..n).map(|c| w(c) * per[c].p).sum::<f64>() / wsum,
            r: (0..n).map(|c| w(c) * per[c].r).sum::<f64>() / wsum,
            f: (0..n).map(|c| w(c) * per[c].f).sum::<f64>() / wsum,
        }
    };
    let macro_ = avg(&|_| 1.0);
    let weighted = if total > 0.0 { avg(&|c| support[c]) } else { macro_ };
    Averages {
        sample,
        micro,
        macro_,
        weighted,
    }
}

/// Mean of `max_b S[a][b]` over `a`, with the empty-set conventions.
pub fn naive_best_match(a: &[usize], b: &[usize], s: &dyn Fn(usize, usize) -> f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &x in a {
        let mut best = f64::NEG_INFINITY;
        for &y in b {
            if s(x, y) > best {
                best = s(x, y);
            }
        }
        total += best;
    }
    total / a.len() as f64
}

/// Double-loop semantic averages straight from the definitions.
pub fn naive_semantic(batch: &EvaluationBatch, m: &SimilarityMatrix) -> Averages {
    let n = batch.universe().len();
    let s = |a: usize, b: usize| m.get(a, b);
    let (mut sp, mut sr, mut sf) = (Vec::new(), Vec::new(), Vec::new());
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    let mut ctp = vec![0.0; n];
    let mut cfp = vec![0.0; n];
    let mut cfn = vec![0.0; n];
    for (pred, gold) in batch.pairs() {
        let p: Vec<usize> = pred.iter().collect();
        let t: Vec<usize> = gold.iter().collect();
        let prec = naive_best_match(&p, &t, &s);
        let rec = naive_best_match(&t, &p, &s);
        sp.push(prec);
        sr.push(rec);
        sf.push(f1(prec, rec));
        for &x in &p {
            // Gold-side index first.
            let best = t.iter().map(|&y| s(y, x)).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            let (a, b) = match best {
                Some(v) => (v, 1.0 - v),
                None => (0.0, 1.0),
            };
            tp += a;
            fp += b;
            ctp[x] += a;
            cfp[x] += b;
        }
        for &y in &t {
            let best = p.iter().map(|&x| s(y, x)).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            let miss = best.map_or(1.0, |v| 1.0 - v);
            fn_ += miss;
            cfn[y] += miss;
        }
    }
    let micro_p = div(tp, tp + fp);
    let micro_r = div(tp, tp + fn_);
    class_averages(
        Triple {
            p: mean(&sp),
            r: mean(&sr),
            f: mean(&sf),
        },
        Triple {
            p: micro_p,
            r: micro_r,
            f: f1(micro_p, micro_r),
        },
        &ctp,
        &cfp,
        &cfn,
        &support(batch),
    )
}

/// Library values in the same flat order as [`Averages::flat`].
pub fn library_flat(block: &semf1_core::metrics::ScoreBlock) -> Vec<(String, f64)> {
    block
        .averages()
        .into_iter()
        .flat_map(|(avg, prf)| {
            [
                (format!("{avg}_precision"), prf.precision),
                (format!("{avg}_recall"), prf.recall),
                (format!("{avg}_f1"), prf.f1),
            ]
        })
        .collect()
}

/// Largest absolute difference between a library block and a reference.
pub fn max_diff(block: &semf1_core::metrics::ScoreBlock, reference: &Averages) -> (f64, String) {
    let lib = library_flat(block);
    let mut worst = (0.0, String::new());
    for ((name, v), (rname, r)) in lib.iter().zip(reference.flat()) {
        assert_eq!(name, rname);
        let d = (v - r).abs();
        if d > worst.0 || d.is_nan() {
            worst = (d, name.clone());
        }
    }
    worst
}

/// Kendall tau-b by counting every pair.
pub fn kendall_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - tx) * (n0 - ty)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (c - d) as f64 / denom
    }
}

/// Average ranks by counting smaller and equal values.
pub fn ranks_naive(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

pub fn spearman_naive(x: &[f64], y: &[f64]) -> f64 {
    pearson_naive(&ranks_naive(x), &ranks_naive(y))
}
