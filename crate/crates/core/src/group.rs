//! Finite groups of orthogonal matrices and the Reynolds projection.
//!
//! A group is stored extensionally as its list of representation matrices.
//! The representation acts identically on every time step of a sample
//! window, so the group action on a sample multiplies each lag state and
//! the target state by the same matrix.
//!
//! The Reynolds projection `P(W) = (1/|G|) Σ_g ρ(g)⁻¹ W ρ(g)` is the
//! orthogonal projection (in the Frobenius inner product) onto the
//! commutant `{W : Wρ(g) = ρ(g)W for all g}`, which for linear forecasters
//! is exactly the set of strictly equivariant lag matrices.

use ndarray::Array2;

use crate::dynamics::Sample;
use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for algebraic identities (closure, commutation, projections).
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Tolerance for pure orthogonal arithmetic (norm preservation, inverses).
pub const ORTHO_TOL: f64 = 1e-12;

/// A finite group of `d x d` real orthogonal matrices.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    elements: Vec<Array2<f64>>,
    identity_index: usize,
}

impl FiniteGroup {
    /// Builds a group from an explicit list of matrices and validates the
    /// group axioms numerically: every element orthogonal within 1e-10,
    /// closure under products within 1e-10, and the identity present.
    pub fn new(elements: Vec<Array2<f64>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("group must have at least one element"));
        }
        let d = elements[0].nrows();
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::invalid(format!(
                    "element {i} is {}x{}, expected {d}x{d}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            let gram = e.t().dot(e);
            if linalg::max_abs_diff(&gram, &linalg::eye(d)) > ALGEBRA_TOL {
                return Err(Error::invalid(format!("element {i} is not orthogonal")));
            }
        }
        let identity_index = elements
            .iter()
            .position(|e| linalg::max_abs_diff(e, &linalg::eye(d)) <= ALGEBRA_TOL)
            .ok_or_else(|| Error::invalid("group does not contain the identity"))?;
        let group = FiniteGroup {
            elements,
            identity_index,
        };
        group.check_closure()?;
        Ok(group)
    }

    /// The cyclic rotation group `C_order` acting on even-dimensional space
    /// by block-diagonal planar rotations of `2πj/order`.
    ///
    /// Element 0 is the identity.
    pub fn cyclic_rotation(order: usize, dim: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("cyclic group order must be positive"));
        }
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::invalid(format!(
                "cyclic rotation group needs a positive even dimension, got {dim}"
            )));
        }
        let elements = (0..order)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * (j as f64) / (order as f64);
                linalg::block_rotation(dim, theta)
            })
            .collect();
        FiniteGroup::new(elements)
    }

    /// The trivial group `{I}` in any dimension.
    pub fn trivial(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        FiniteGroup::new(vec![linalg::eye(dim)])
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn identity_index(&self) -> usize {
        self.identity_index
    }

    pub fn elements(&self) -> &[Array2<f64>] {
        &self.elements
    }

    pub fn element(&self, g: usize) -> &Array2<f64> {
        &self.elements[g]
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Index of the element matching `m` within the closure tolerance.
    pub fn index_of(&self, m: &Array2<f64>) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| linalg::max_abs_diff(e, m) <= ALGEBRA_TOL)
    }

    /// Index of `g⁻¹`, found as the transpose (elements are orthogonal).
    pub fn inverse_index(&self, g: usize) -> Result<usize> {
        let inv = self.elements[g].t().to_owned();
        self.index_of(&inv).ok_or_else(|| {
            Error::integrity(format!("inverse of element {g} is not in the group"))
        })
    }

    fn check_closure(&self) -> Result<()> {
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let prod = a.dot(b);
                if self.index_of(&prod).is_none() {
                    return Err(Error::invalid(format!(
                        "closure violated: element {i} * element {j} is not in the group"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies `ρ(g)` to every lag state and the target of a sample.
    pub fn act_on_sample(&self, g: usize, sample: &Sample) -> Result<Sample> {
        let rho = &self.elements[g];
        let d = self.dim();
        if sample.target.len() != d || sample.window.iter().any(|x| x.len() != d) {
            return Err(Error::invalid(format!(
                "sample dimension does not match group dimension {d}"
            )));
        }
        Ok(Sample {
            window: sample.window.iter().map(|x| rho.dot(x)).collect(),
            target: rho.dot(&sample.target),
            t_index: sample.t_index,
            series_index: sample.series_index,
        })
    }

    /// Reynolds projection `P(W) = (1/|G|) Σ_g ρ(g)⁻¹ W ρ(g)`.
    ///
    /// The result commutes with every `ρ(g)`; `P` is idempotent and
    /// self-adjoint in the Frobenius inner product.
    pub fn reynolds_project(&self, w: &Array2<f64>) -> Result<Array2<f64>> {
        let d = self.dim();
        if w.nrows() != d || w.ncols() != d {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected {d}x{d}",
                w.nrows(),
                w.ncols()
            )));
        }
        let mut sum = Array2::<f64>::zeros((d, d));
        for rho in &self.elements {
            // ρ(g)⁻¹ = ρ(g)ᵀ for orthogonal representations.
            sum += &rho.t().dot(w).dot(rho);
        }
        Ok(sum / self.order() as f64)
    }

    /// Orthonormal basis (Frobenius inner product) of the commutant,
    /// computed by Reynolds-projecting the d² elementary matrices and
    /// orthonormalizing.
    pub fn commutant_basis(&self) -> Result<Vec<Array2<f64>>> {
        let d = self.dim();
        let mut projected = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = Array2::<f64>::zeros((d, d));
                e[[i, j]] = 1.0;
                projected.push(self.reynolds_project(&e)?);
            }
        }
        Ok(linalg::gram_schmidt(&projected, 1e-8))
    }

    /// `max_g ‖Wρ(g) − ρ(g)W‖₂` (spectral norm of the worst commutator).
    pub fn commutator_norm(&self, w: &Array2<f64>) -> Result<f64> {
        let d = self.dim();
        if w.nrows() != d || w.ncols() != d {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected {d}x{d}",
                w.nrows(),
                w.ncols()
            )));
        }
        let mut worst = 0.0_f64;
        for rho in &self.elements {
            let comm = w.dot(rho) - rho.dot(w);
            worst = worst.max(linalg::spectral_norm(&comm));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use ndarray::Array1;
    use rand::Rng;

    fn random_matrix(d: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_for(seed, &[7]);
        Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0))
    }

    fn sample_2d(window: Vec<[f64; 2]>, target: [f64; 2]) -> Sample {
        Sample {
            window: window
                .into_iter()
                .map(|x| Array1::from_vec(x.to_vec()))
                .collect(),
            target: Array1::from_vec(target.to_vec()),
            t_index: 2,
            series_index: 0,
        }
    }

    #[test]
    fn order_one_is_trivial() {
        let g = FiniteGroup::cyclic_rotation(1, 2).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.identity_index(), 0);
        assert!(linalg::max_abs_diff(g.element(0), &linalg::eye(2)) == 0.0);
    }

    #[test]
    fn c4_quarter_turn_matrix() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let r = g.element(1);
        assert!((r[[0, 0]]).abs() < 1e-15);
        assert!((r[[0, 1]] + 1.0).abs() < 1e-15);
        assert!((r[[1, 0]] - 1.0).abs() < 1e-15);
        assert!((r[[1, 1]]).abs() < 1e-15);
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(FiniteGroup::cyclic_rotation(0, 2).is_err());
        assert!(FiniteGroup::cyclic_rotation(4, 3).is_err());
    }

    #[test]
    fn c8_closure_by_brute_force() {
        // Oracle: multiply all 64 pairs and locate each product in the list.
        let g = FiniteGroup::cyclic_rotation(8, 2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let prod = g.element(i).dot(g.element(j));
                let m = g.index_of(&prod).expect("product must be an element");
                assert_eq!(m, (i + j) % 8);
            }
        }
        // Element 2 of C_8 is the quarter turn, element 1 of C_4.
        let c4 = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        assert!(linalg::max_abs_diff(g.element(2), c4.element(1)) <= 1e-15);
    }

    #[test]
    fn act_identity_is_identity() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let s = sample_2d(vec![[1.0, 0.5]], [0.2, -0.3]);
        let out = g.act_on_sample(g.identity_index(), &s).unwrap();
        assert_eq!(out.window[0], s.window[0]);
        assert_eq!(out.target, s.target);
    }

    #[test]
    fn act_quarter_turn_rotates_axis_points() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let s = sample_2d(vec![[1.0, 0.0]], [2.0, 0.0]);
        let out = g.act_on_sample(1, &s).unwrap();
        assert!((out.window[0][0]).abs() < 1e-12 && (out.window[0][1] - 1.0).abs() < 1e-12);
        assert!((out.target[0]).abs() < 1e-12 && (out.target[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn act_then_inverse_restores_sample() {
        let g = FiniteGroup::cyclic_rotation(8, 2).unwrap();
        let s = sample_2d(vec![[0.4, -0.7], [0.1, 0.9]], [0.3, 0.2]);
        for gi in 0..g.order() {
            let inv = g.inverse_index(gi).unwrap();
            let back = g
                .act_on_sample(inv, &g.act_on_sample(gi, &s).unwrap())
                .unwrap();
            for (a, b) in back.window.iter().zip(s.window.iter()) {
                assert!(linalg::norm2(&(a - b)) <= ORTHO_TOL);
            }
            assert!(linalg::norm2(&(&back.target - &s.target)) <= ORTHO_TOL);
        }
    }

    #[test]
    fn act_preserves_state_norms() {
        let g = FiniteGroup::cyclic_rotation(8, 2).unwrap();
        let s = sample_2d(vec![[0.4, -0.7]], [0.3, 0.2]);
        for gi in 0..g.order() {
            let out = g.act_on_sample(gi, &s).unwrap();
            assert!((linalg::norm2(&out.window[0]) - linalg::norm2(&s.window[0])).abs() <= ORTHO_TOL);
            assert!((linalg::norm2(&out.target) - linalg::norm2(&s.target)).abs() <= ORTHO_TOL);
        }
    }

    #[test]
    fn act_rejects_dimension_mismatch() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let bad = Sample {
            window: vec![Array1::zeros(3)],
            target: Array1::zeros(3),
            t_index: 2,
            series_index: 0,
        };
        assert!(g.act_on_sample(0, &bad).is_err());
    }

    #[test]
    fn reynolds_fixes_identity() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let p = g.reynolds_project(&linalg::eye(2)).unwrap();
        assert!(linalg::max_abs_diff(&p, &linalg::eye(2)) <= ALGEBRA_TOL);
    }

    #[test]
    fn reynolds_of_diag_10_under_c4() {
        // Oracle: explicit sum over the four rotations gives 0.5 I.
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let mut w = Array2::<f64>::zeros((2, 2));
        w[[0, 0]] = 1.0;
        let mut oracle = Array2::<f64>::zeros((2, 2));
        for rho in g.elements() {
            oracle += &rho.t().dot(&w).dot(rho);
        }
        oracle /= 4.0;
        let p = g.reynolds_project(&w).unwrap();
        assert!(linalg::max_abs_diff(&p, &oracle) <= 1e-15);
        let half_eye = linalg::eye(2) * 0.5;
        assert!(linalg::max_abs_diff(&p, &half_eye) <= ALGEBRA_TOL);
    }

    #[test]
    fn reynolds_is_idempotent_and_self_adjoint() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        for seed in 0..100 {
            let w = random_matrix(2, seed);
            let p = g.reynolds_project(&w).unwrap();
            let pp = g.reynolds_project(&p).unwrap();
            assert!(linalg::max_abs_diff(&pp, &p) <= ALGEBRA_TOL);
            // commutator of the projection vanishes
            assert!(g.commutator_norm(&p).unwrap() <= ALGEBRA_TOL);
        }
        for seed in 0..50 {
            let a = random_matrix(2, 1000 + seed);
            let b = random_matrix(2, 2000 + seed);
            let pa = g.reynolds_project(&a).unwrap();
            let pb = g.reynolds_project(&b).unwrap();
            let lhs = linalg::frobenius_inner(&pa, &b);
            let rhs = linalg::frobenius_inner(&a, &pb);
            assert!((lhs - rhs).abs() <= ALGEBRA_TOL);
        }
    }

    #[test]
    fn commutant_basis_trivial_group_is_full_space() {
        let g = FiniteGroup::trivial(2).unwrap();
        assert_eq!(g.commutant_basis().unwrap().len(), 4);
    }

    #[test]
    fn commutant_basis_c4_spans_rotations() {
        // Oracle: brute-force rank of the projected elementary matrices.
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let basis = g.commutant_basis().unwrap();
        assert_eq!(basis.len(), 2);
        for (i, a) in basis.iter().enumerate() {
            assert!(g.commutator_norm(a).unwrap() <= ALGEBRA_TOL);
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::frobenius_inner(a, b) - want).abs() <= ALGEBRA_TOL);
            }
        }
        // Span contains I and the quarter turn J.
        let j_mat = g.element(1);
        let coeffs: Vec<f64> = basis
            .iter()
            .map(|b| linalg::frobenius_inner(j_mat, b))
            .collect();
        let mut recon = Array2::<f64>::zeros((2, 2));
        for (c, b) in coeffs.iter().zip(basis.iter()) {
            recon += &(b * *c);
        }
        assert!(linalg::max_abs_diff(&recon, j_mat) <= ALGEBRA_TOL);
    }

    #[test]
    fn commutant_reconstruction_matches_reynolds() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let basis = g.commutant_basis().unwrap();
        for seed in 0..50 {
            let w = random_matrix(2, 3000 + seed);
            let p = g.reynolds_project(&w).unwrap();
            let mut recon = Array2::<f64>::zeros((2, 2));
            for b in &basis {
                recon += &(b * linalg::frobenius_inner(&w, b));
            }
            assert!(linalg::max_abs_diff(&recon, &p) <= 1e-9);
        }
    }

    #[test]
    fn commutator_norm_closed_form_for_perturbed_diag() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        for &eps in &[0.01, 0.3, 1.5] {
            let mut w = linalg::eye(2);
            w[[0, 0]] = 1.0 + eps;
            let norm = g.commutator_norm(&w).unwrap();
            assert!((norm - eps).abs() <= 1e-10, "eps {eps}, norm {norm}");
        }
        // Grid-search oracle over unit vectors for eps = 0.3.
        let mut w = linalg::eye(2);
        w[[0, 0]] = 1.3;
        let mut best = 0.0_f64;
        for rho in g.elements() {
            let comm = w.dot(rho) - rho.dot(&w);
            for k in 0..10_000 {
                let phi = 2.0 * std::f64::consts::PI * (k as f64) / 10_000.0;
                let v = Array1::from_vec(vec![phi.cos(), phi.sin()]);
                best = best.max(linalg::norm2(&comm.dot(&v)));
            }
        }
        assert!((best - g.commutator_norm(&w).unwrap()).abs() <= 1e-4);
    }

    #[test]
    fn commutator_norm_scales_linearly() {
        let g = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let w = random_matrix(2, 11);
        let base = g.commutator_norm(&w).unwrap();
        for &c in &[0.0, 0.5, 2.0, 7.5] {
            let scaled = g.commutator_norm(&(&w * c)).unwrap();
            assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + c));
        }
    }

    #[test]
    fn reynolds_projection_kills_commutators_randomly() {
        let g = FiniteGroup::cyclic_rotation(8, 2).unwrap();
        for seed in 0..100 {
            let w = random_matrix(2, 5000 + seed);
            let p = g.reynolds_project(&w).unwrap();
            assert!(g.commutator_norm(&p).unwrap() <= ALGEBRA_TOL);
        }
    }

    #[test]
    fn block_diagonal_extension_to_dim_4() {
        let g = FiniteGroup::cyclic_rotation(4, 4).unwrap();
        assert_eq!(g.dim(), 4);
        assert_eq!(g.order(), 4);
    }
}
