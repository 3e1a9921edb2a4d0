mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semf1_core::continuous::{
    best_match_continuous, best_match_continuous_with, continuous_sef1, DistanceSpec, NeighborSearch, VectorExample,
    VectorLabelSet,
};
use semf1_core::similarity::{
    from_correlation, from_cosine, from_euclidean, from_hierarchy, ring_similarity, EmbeddingTable, HierarchyGraph,
};
use semf1_core::{best_match, evaluate, EvaluationBatch, LabelSet, SimilarityMatrix};

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_points<R: Rng>(r: &mut R, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| r.random_range(-3.0..3.0)).collect())
        .collect()
}

fn assert_valid(s: &SimilarityMatrix) -> Result<(), TestCaseError> {
    let n = s.size();
    for a in 0..n {
        prop_assert_eq!(s.get(a, a), 1.0);
        for b in 0..n {
            let v = s.get(a, b);
            prop_assert!((0.0..=1.0).contains(&v), "S[{},{}] = {}", a, b, v);
            prop_assert_eq!(v, s.get(b, a));
        }
    }
    Ok(())
}

fn vectors_of(set: &LabelSet, points: &[Vec<f64>]) -> VectorLabelSet {
    VectorLabelSet::new(set.iter().map(|i| points[i].clone()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn euclidean_and_cosine_matrices_are_valid(seed: u64, n in 1usize..12, dim in 1usize..6, beta in 0.05f64..5.0, power in 1u32..4) {
        let mut r = rng(seed);
        let emb = EmbeddingTable::new(universe(n), random_points(&mut r, n, dim)).unwrap();
        assert_valid(&from_euclidean(&emb, beta).unwrap())?;
        let cos = from_cosine(&emb, power).unwrap();
        assert_valid(&cos)?;
        // Higher powers sharpen: every off-diagonal entry can only shrink.
        let sharper = from_cosine(&emb, power + 1).unwrap();
        for (a, b) in sharper.values().iter().zip(cos.values()) {
            prop_assert!(*a <= *b + 1e-15);
        }
    }

    #[test]
    fn correlation_matrix_is_valid(seed: u64, n in 1usize..10, dim in 2usize..30) {
        let mut r = rng(seed);
        // Correlations of random indicator columns, one column duplicated.
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 }).collect())
            .collect();
        for c in &mut cols {
            c[0] = 0.0;
            c[1] = 1.0;
        }
        if n >= 2 {
            cols[1] = cols[0].clone();
        }
        let mut corr = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                corr[a * n + b] = if a == b { 1.0 } else { pearson_naive(&cols[a], &cols[b]).clamp(-1.0, 1.0) };
            }
        }
        let s = from_correlation(universe(n), corr).unwrap();
        assert_valid(&s)?;
        if n >= 2 {
            prop_assert!((s.get(0, 1) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn hierarchy_matrix_is_valid(seed: u64, n in 1usize..12, edges in 0usize..20, beta in 0.1f64..3.0) {
        let mut r = rng(seed);
        let u = universe(n);
        let mut g = HierarchyGraph::new(u);
        for _ in 0..edges {
            let a = r.random_range(0..n);
            let b = r.random_range(0..n);
            if a != b {
                g.add_edge(a, b, r.random_range(0.5..2.0)).unwrap();
            }
        }
        let s = from_hierarchy(&g, beta).unwrap();
        assert_valid(&s)?;
        for a in 0..n {
            let d = g.shortest_paths(a);
            for (b, db) in d.iter().enumerate() {
                let expected = if db.is_finite() { 1.0 / (1.0 + beta * db) } else { 0.0 };
                prop_assert!((s.get(a, b) - expected).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn ring_matrix_is_circulant(n in 2usize..40) {
        let s = ring_similarity(n).unwrap();
        assert_valid(&s)?;
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(s.get(a, b), s.get((a + 1) % n, (b + 1) % n));
            }
        }
    }

    #[test]
    fn matrix_power_never_raises_similarity(seed: u64, n in 1usize..10, k in 1u32..5) {
        let mut r = rng(seed);
        let s = random_similarity(&mut r, universe(n));
        let p = s.power(k).unwrap();
        assert_valid(&p)?;
        for (a, b) in p.values().iter().zip(s.values()) {
            prop_assert!(*a <= *b);
        }
    }

    #[test]
    fn continuous_agrees_with_discrete_euclidean(seed: u64, n in 1usize..10, dim in 1usize..4, examples in 1usize..8, beta in 0.1f64..3.0) {
        let mut r = rng(seed);
        let u = universe(n);
        let points = random_points(&mut r, n, dim);
        let s = from_euclidean(&EmbeddingTable::new(u.clone(), points.clone()).unwrap(), beta).unwrap();
        let dist = DistanceSpec::euclidean(beta).unwrap();

        let gold: Vec<LabelSet> = (0..examples).map(|_| random_set(&mut r, n, 4)).collect();
        let pred: Vec<LabelSet> = (0..examples).map(|_| random_set(&mut r, n, 4)).collect();
        for (p, g) in pred.iter().zip(&gold) {
            let discrete = best_match(p, g, &s).unwrap().0;
            let continuous = best_match_continuous(&vectors_of(p, &points), &vectors_of(g, &points), &dist).unwrap();
            prop_assert!((discrete - continuous).abs() <= 1e-12);
        }

        let vb: Vec<VectorExample> = pred.iter().zip(&gold).map(|(p, g)| (vectors_of(p, &points), vectors_of(g, &points))).collect();
        let cont = continuous_sef1(&vb, &dist).unwrap();
        let disc = evaluate(&EvaluationBatch::new(u, gold, pred).unwrap(), &s).unwrap().semantic;
        prop_assert!((cont.sample.f1 - disc.sample.f1).abs() <= 1e-12);
        prop_assert!((cont.micro.f1 - disc.micro.f1).abs() <= 1e-12);
        prop_assert!(cont.macro_f1.is_none());
    }

    #[test]
    fn larger_scale_lowers_continuous_credit(seed: u64, dim in 1usize..5, a in 1usize..6, b in 1usize..6, beta in 0.1f64..3.0, factor in 1.0f64..4.0) {
        let mut r = rng(seed);
        let x = VectorLabelSet::new(random_points(&mut r, a, dim)).unwrap();
        let y = VectorLabelSet::new(random_points(&mut r, b, dim)).unwrap();
        let low = best_match_continuous(&x, &y, &DistanceSpec::euclidean(beta).unwrap()).unwrap();
        let high = best_match_continuous(&x, &y, &DistanceSpec::euclidean(beta * factor).unwrap()).unwrap();
        prop_assert!(high <= low + 1e-15);
    }

    #[test]
    fn kd_tree_matches_linear_scan(seed: u64, dim in 1usize..8, a in 1usize..40, b in 1usize..120, p_idx in 0usize..4) {
        let mut r = rng(seed);
        let x = VectorLabelSet::new(random_points(&mut r, a, dim)).unwrap();
        let y = VectorLabelSet::new(random_points(&mut r, b, dim)).unwrap();
        let p = [1.0, 2.0, 3.5, f64::INFINITY][p_idx];
        let dist = DistanceSpec::p_norm(p, 1.0).unwrap();
        let brute = best_match_continuous_with(&x, &y, &dist, NeighborSearch::BruteForce).unwrap();
        let tree = best_match_continuous_with(&x, &y, &dist, NeighborSearch::KdTree).unwrap();
        prop_assert!((brute - tree).abs() <= 1e-12, "{} vs {}", brute, tree);
    }
}
