//! Exact maximum-weight bipartite matching on small dense matrices.
//!
//! The decoder matches a handful of detections against a handful of people
//! per joint, so an O(n^3) Hungarian solve on the padded square matrix is
//! both exact and effectively free.

/// Assignment of rows to columns over the admissible pairs.
///
/// `weight(r, c)` returns `None` for forbidden pairs. Among all assignments
/// the result first maximizes the number of matched admissible pairs, then
/// the total weight. Deterministic: the same weights always produce the
/// same assignment.
pub fn max_cardinality_max_weight<F>(rows: usize, cols: usize, weight: F) -> Vec<Option<usize>>
where
    F: Fn(usize, usize) -> Option<f64>,
{
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);

    let mut w_abs_max = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            if let Some(w) = weight(r, c) {
                w_abs_max = w_abs_max.max(w.abs());
            }
        }
    }
    // Any single admissible match must outweigh every possible total of the
    // remaining weights, so that cardinality dominates weight.
    let bonus = (2.0 * n as f64 + 1.0) * (w_abs_max + 1.0);

    // Minimization matrix: admissible cells cost -(w + bonus) < 0, forbidden
    // and padding cells cost 0 (equivalent to staying unmatched).
    let mut cost = vec![0.0f64; n * n];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(w) = weight(r, c) {
                cost[r * n + c] = -(w + bonus);
            }
        }
    }

    let row_to_col = assignment_min_cost(n, &cost);
    (0..rows)
        .map(|r| {
            let c = row_to_col[r];
            if c < cols && weight(r, c).is_some() {
                Some(c)
            } else {
                None
            }
        })
        .collect()
}

/// Classic Hungarian algorithm with potentials on an `n x n` cost matrix.
/// Returns the column assigned to each row of a minimum-cost perfect
/// matching.
fn assignment_min_cost(n: usize, cost: &[f64]) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j] = row matched to column j; column n is the virtual start column.
    let mut p = vec![n; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 0..n {
        p[n] = i;
        let mut j0 = n;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = n;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 * n + j] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == n {
                break;
            }
        }
        // Augment along the alternating path back to the virtual column.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 0..n {
        if p[j] != n {
            row_to_col[p[j]] = j;
        }
    }
    row_to_col
}
