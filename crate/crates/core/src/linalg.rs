//! Small dense linear-algebra helpers over `ndarray`.
//!
//! Everything here targets the desk-scale regime (matrices up to a few
//! dozen entries), so the implementations favor determinism and zero
//! dependencies over asymptotics: spectral norms come from power iteration
//! on `AᵀA`, orthonormalization from modified Gram-Schmidt.

use ndarray::{Array1, Array2};

/// Iteration cap for [`spectral_norm`] power iteration.
const POWER_ITERS: usize = 200;
/// Relative tolerance at which power iteration stops early.
const POWER_TOL: f64 = 1e-12;

/// Frobenius inner product `tr(AᵀB)`.
pub fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Frobenius norm.
pub fn frobenius_norm(a: &Array2<f64>) -> f64 {
    frobenius_inner(a, a).sqrt()
}

/// Largest singular value of a (possibly rectangular) matrix.
///
/// Power iteration on `AᵀA` with a fixed deterministic start vector,
/// 200 iterations max, 1e-12 relative tolerance.
pub fn spectral_norm(a: &Array2<f64>) -> f64 {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    // AᵀA is cols x cols; iterate on the smaller Gram matrix.
    let gram: Array2<f64> = if cols <= rows {
        a.t().dot(a)
    } else {
        a.dot(&a.t())
    };
    let n = gram.nrows();
    // Deterministic start with unequal entries so no eigenvector is
    // orthogonal to it by symmetry accident.
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + (i as f64) * 0.137));
    let mut norm = norm2(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v.mapv_inplace(|x| x / norm);
    let mut lambda = 0.0_f64;
    for _ in 0..POWER_ITERS {
        let w = gram.dot(&v);
        norm = norm2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.mapv(|x| x / norm);
        let new_lambda = next.dot(&gram.dot(&next));
        let done = (new_lambda - lambda).abs() <= POWER_TOL * new_lambda.abs().max(1.0);
        v = next;
        lambda = new_lambda;
        if done {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}

/// Euclidean norm of a vector.
pub fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max-absolute-entry norm.
pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `‖a - b‖_max`.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Identity matrix.
pub fn eye(d: usize) -> Array2<f64> {
    Array2::eye(d)
}

/// Planar rotation by `theta`, embedded block-diagonally in `d` dimensions
/// (`d` even): each consecutive coordinate pair rotates by the same angle.
pub fn block_rotation(d: usize, theta: f64) -> Array2<f64> {
    assert!(d % 2 == 0, "block_rotation requires even dimension");
    let (s, c) = theta.sin_cos();
    let mut m = Array2::zeros((d, d));
    for b in 0..d / 2 {
        let i = 2 * b;
        m[[i, i]] = c;
        m[[i, i + 1]] = -s;
        m[[i + 1, i]] = s;
        m[[i + 1, i + 1]] = c;
    }
    m
}

/// Modified Gram-Schmidt under the Frobenius inner product.
///
/// Returns an orthonormal basis of the span; inputs with residual norm
/// below `tol` are dropped.
pub fn gram_schmidt(mats: &[Array2<f64>], tol: f64) -> Vec<Array2<f64>> {
    let mut basis: Vec<Array2<f64>> = Vec::new();
    for m in mats {
        let mut r = m.clone();
        for b in &basis {
            let coef = frobenius_inner(&r, b);
            r.zip_mut_with(b, |x, &y| *x -= coef * y);
        }
        let norm = frobenius_norm(&r);
        if norm > tol {
            r.mapv_inplace(|x| x / norm);
            basis.push(r);
        }
    }
    basis
}
