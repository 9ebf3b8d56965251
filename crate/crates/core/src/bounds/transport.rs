//! Exact 1-Wasserstein distance between equal-size empirical measures.
//!
//! For two uniform empirical measures on `n` points each, `W1` equals the
//! optimal-assignment average distance, so it reduces to a dense linear
//! assignment problem. The solver is the shortest-augmenting-path
//! algorithm with dual potentials (Jonker-Volgenant family), `O(n³)`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;

/// Hard cap on the empirical measure size; larger inputs should be
/// subsampled by the caller.
pub const MAX_POINTS: usize = 1024;

/// Exact `W1` between the uniform empirical measures on `a` and `b`.
///
/// Zero iff the multisets coincide; symmetric in its arguments.
pub fn wasserstein_w1(a: &[Array1<f64>], b: &[Array1<f64>]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "empirical measures must have equal sizes ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("empirical measures must be nonempty"));
    }
    if a.len() > MAX_POINTS {
        return Err(Error::Budget(format!(
            "assignment limited to {MAX_POINTS} points, got {}; subsample first",
            a.len()
        )));
    }
    let dim = a[0].len();
    for p in a.iter().chain(b.iter()) {
        if p.len() != dim {
            return Err(Error::invalid("points must share one dimension"));
        }
    }
    let n = a.len();
    let mut cost = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            cost[[i, j]] = linalg::norm2(&(&a[i] - &b[j]));
        }
    }
    let assignment = solve_assignment(&cost)?;
    // Sum the matched distances in a canonical order so both argument
    // orders produce the identical float.
    let mut matched: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[[i, j]])
        .collect();
    matched.sort_by(|x, y| x.total_cmp(y));
    Ok(matched.iter().sum::<f64>() / n as f64)
}

/// Solves the square dense assignment problem, returning `row -> column`.
///
/// Shortest augmenting path with dual potentials; costs must be finite.
pub fn solve_assignment(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let (n, m) = cost.dim();
    if n != m {
        return Err(Error::invalid("assignment requires a square cost matrix"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::numeric("assignment costs must be finite".into()));
    }

    let mut u = vec![0.0_f64; n]; // row duals
    let mut v = vec![0.0_f64; n]; // column duals
    let mut col4row = vec![usize::MAX; n];
    let mut row4col = vec![usize::MAX; n];
    let mut shortest = vec![0.0_f64; n];
    let mut path = vec![usize::MAX; n];

    for cur_row in 0..n {
        for x in shortest.iter_mut() {
            *x = f64::INFINITY;
        }
        let mut remaining: Vec<usize> = (0..n).rev().collect();
        let mut scanned_rows: Vec<usize> = Vec::new();
        let mut scanned_cols: Vec<usize> = Vec::new();
        let mut min_val = 0.0_f64;
        let mut i = cur_row;

        let sink = loop {
            scanned_rows.push(i);
            let mut lowest = f64::INFINITY;
            let mut index = usize::MAX;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + cost[[i, j]] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest
                    || (shortest[j] == lowest && row4col[j] == usize::MAX)
                {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if !min_val.is_finite() {
                return Err(Error::numeric("assignment search stalled".into()));
            }
            let j = remaining[index];
            if row4col[j] == usize::MAX {
                break j;
            }
            i = row4col[j];
            scanned_cols.push(j);
            remaining.swap_remove(index);
        };

        u[cur_row] += min_val;
        for &r in &scanned_rows {
            if r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for &j in &scanned_cols {
            v[j] -= min_val - shortest[j];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Ok(col4row)
}
