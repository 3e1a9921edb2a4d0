//! Dense O(n^2 m) Hungarian method (shortest augmenting paths with
//! potentials) for rectangular assignment problems with `rows <= cols`.

/// Minimum-cost assignment of every row to a distinct column.
///
/// Returns the column chosen for each row. Panics if the matrix is ragged
/// or has more rows than columns.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");
    assert!(n <= m, "assignment needs rows <= cols ({n} > {m})");

    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-weight assignment, solved as minimum cost on `1 - w`.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|w| 1.0 - w).collect()).collect();
    min_cost_assignment(&cost)
}

pub fn assignment_weight(weights: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| weights[i][j]).sum()
}

const TIE_TOLERANCE: f64 = 1e-12;

/// Maximum-weight assignment, choosing the lexicographically smallest
/// column vector among all optimal assignments.
///
/// Fixes rows one at a time to the smallest column that still admits an
/// optimal completion, so it costs `O(n m)` solves. Meant for reporting
/// matchings on small label sets, not for bulk scoring.
pub fn lexicographic_max_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m = weights[0].len();
    let optimum = assignment_weight(weights, &max_weight_assignment(weights));
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut fixed_sum = 0.0;
    for i in 0..n {
        let mut chosen = None;
        for j in 0..m {
            if fixed.contains(&j) {
                continue;
            }
            let free_cols: Vec<usize> = (0..m).filter(|c| *c != j && !fixed.contains(c)).collect();
            let rest: Vec<Vec<f64>> = weights[i + 1..]
                .iter()
                .map(|row| free_cols.iter().map(|&c| row[c]).collect())
                .collect();
            let rest_best = if rest.is_empty() {
                0.0
            } else {
                assignment_weight(&rest, &max_weight_assignment(&rest))
            };
            if fixed_sum + weights[i][j] + rest_best >= optimum - TIE_TOLERANCE {
                chosen = Some(j);
                break;
            }
        }
        let j = chosen.expect("an optimal completion always exists");
        fixed_sum += weights[i][j];
        fixed.push(j);
    }
    fixed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_max(weights: &[Vec<f64>]) -> f64 {
        fn rec(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == w.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + rec(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let m = weights.first().map_or(0, |r| r.len());
        rec(weights, 0, &mut vec![false; m])
    }

    #[test]
    fn solves_small_min_cost() {
        let costs = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&costs);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| costs[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn rectangular_matches_enumeration() {
        let w = vec![vec![0.1, 0.9, 0.3, 0.2], vec![0.8, 0.85, 0.1, 0.0]];
        let a = max_weight_assignment(&w);
        assert!((assignment_weight(&w, &a) - brute_force_max(&w)).abs() < 1e-12);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn lexicographic_tie_break() {
        let w = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(lexicographic_max_assignment(&w), vec![0, 1]);
        let w = vec![vec![0.5, 0.5, 0.9], vec![0.9, 0.5, 0.5]];
        assert_eq!(lexicographic_max_assignment(&w), vec![2, 0]);
    }

    #[test]
    fn random_instances_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(n..=6);
            let w: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| (rng.random_range(0..5) as f64) / 4.0).collect())
                .collect();
            let best = brute_force_max(&w);
            let a = max_weight_assignment(&w);
            assert!((assignment_weight(&w, &a) - best).abs() < 1e-12);
            let lex = lexicographic_max_assignment(&w);
            assert!((assignment_weight(&w, &lex) - best).abs() < 1e-12);
            let mut cols = lex.clone();
            cols.sort_unstable();
            cols.dedup();
            assert_eq!(cols.len(), n);
        }
    }
}
