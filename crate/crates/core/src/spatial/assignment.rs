//! Dense rectangular assignment (Hungarian method with potentials).

/// Minimum-cost assignment of every row to a distinct column of a row-major
/// `rows x cols` cost matrix with `rows <= cols`. Returns the column chosen
/// for each row.
fn min_cost_rows(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols);
    debug_assert_eq!(cost.len(), rows * cols);
    let at = |i: usize, j: usize| cost[(i - 1) * cols + (j - 1)];
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    // p[j]: row assigned to column j (1-based, 0 = none)
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = at(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
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
    let mut out = vec![0usize; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Maximum-weight assignment over a row-major `rows x cols` weight matrix.
/// Entries `<= 0` mark forbidden pairs and never appear in the result.
/// Returns `(row, col)` pairs sorted by row.
pub fn max_weight_assignment(weights: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(weights.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = if rows <= cols {
        let cost: Vec<f64> = weights.iter().map(|w| -w.max(0.0)).collect();
        min_cost_rows(&cost, rows, cols)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let mut cost = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                cost[j * rows + i] = -weights[i * cols + j].max(0.0);
            }
        }
        min_cost_rows(&cost, cols, rows)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect()
    };
    pairs.retain(|&(i, j)| weights[i * cols + j] > 0.0);
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(weights: &[f64], rows: usize, cols: usize) -> f64 {
        fn go(w: &[f64], rows: usize, cols: usize, i: usize, used: &mut Vec<bool>) -> f64 {
            if i == rows {
                return 0.0;
            }
            let mut best = go(w, rows, cols, i + 1, used);
            for j in 0..cols {
                if !used[j] && w[i * cols + j] > 0.0 {
                    used[j] = true;
                    best = best.max(w[i * cols + j] + go(w, rows, cols, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(weights, rows, cols, 0, &mut vec![false; cols])
    }

    #[test]
    fn picks_the_cross_assignment_when_it_is_heavier() {
        let w = [1.0, 3.0, 3.0, 1.0];
        assert_eq!(max_weight_assignment(&w, 2, 2), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn forbidden_entries_stay_unmatched() {
        let w = [0.0, 0.0, 0.0, 2.0];
        assert_eq!(max_weight_assignment(&w, 2, 2), vec![(1, 1)]);
        assert!(max_weight_assignment(&[0.0; 6], 2, 3).is_empty());
        assert!(max_weight_assignment(&[], 0, 4).is_empty());
    }

    proptest! {
        #[test]
        fn matches_brute_force_optimum(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in proptest::collection::vec(0u32..6, 16),
        ) {
            let w: Vec<f64> = (0..rows * cols)
                .map(|k| {
                    let s = seed[k % seed.len()];
                    if s < 2 { 0.0 } else { f64::from(s) + k as f64 * 0.01 }
                })
                .collect();
            let got = max_weight_assignment(&w, rows, cols);
            let total: f64 = got.iter().map(|&(i, j)| w[i * cols + j]).sum();
            prop_assert!((total - brute_force(&w, rows, cols)).abs() < 1e-9);
            let mut rs: Vec<_> = got.iter().map(|p| p.0).collect();
            let mut cs: Vec<_> = got.iter().map(|p| p.1).collect();
            rs.dedup();
            cs.sort_unstable();
            cs.dedup();
            prop_assert_eq!(rs.len(), got.len());
            prop_assert_eq!(cs.len(), got.len());
        }
    }
}
