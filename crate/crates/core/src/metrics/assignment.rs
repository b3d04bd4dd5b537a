//! Dense Hungarian solver over real-valued costs.
//!
//! O(n^2 m) for an n x m matrix with n <= m. Used to align key and response
//! entities for CEAF.

/// Returns, for each row, the column minimizing the total cost. Requires
/// `rows <= cols` and finite costs.
pub(crate) fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m, "more rows than columns");
    debug_assert!(cost.iter().all(|row| row.len() == m));

    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row matched to column j (1-based, 0 = free)
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut rows = vec![0; n];
    for j in 1..=m {
        if p[j] > 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    rows
}

/// Maximum-weight one-to-one matching value for an arbitrary rectangular
/// matrix of non-negative weights.
pub(crate) fn max_weight_matching(weights: &[Vec<f64>]) -> f64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let transposed;
    let w: &[Vec<f64>] = if rows <= cols {
        weights
    } else {
        transposed = (0..cols)
            .map(|j| (0..rows).map(|i| weights[i][j]).collect())
            .collect::<Vec<Vec<f64>>>();
        &transposed
    };
    let cost: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    min_cost_assignment(&cost)
        .iter()
        .enumerate()
        .map(|(i, &j)| w[i][j])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(weights: &[Vec<f64>]) -> f64 {
        fn go(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == w.len() {
                return 0.0;
            }
            // a row may also stay unmatched when rows outnumber columns
            let mut best = if w.len() > w[0].len() { go(w, row + 1, used) } else { f64::MIN };
            for j in 0..w[0].len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + go(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(weights, 0, &mut vec![false; weights[0].len()])
    }

    #[test]
    fn classic_square() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let w = vec![
            vec![0.2, 0.9, 0.0],
            vec![0.8, 0.7, 0.1],
        ];
        assert!((max_weight_matching(&w) - brute(&w)).abs() < 1e-12);
        let t: Vec<Vec<f64>> = (0..3).map(|j| (0..2).map(|i| w[i][j]).collect()).collect();
        assert!((max_weight_matching(&t) - brute(&w)).abs() < 1e-12);
    }

    #[test]
    fn empty() {
        assert_eq!(max_weight_matching(&[]), 0.0);
    }
}
