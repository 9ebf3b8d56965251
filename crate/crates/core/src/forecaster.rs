//! Linear lag forecasters, the clipped squared loss, and the constraint
//! sets used by the four estimators.
//!
//! A forecaster is a tuple of lag matrices `(W_1, …, W_k)` predicting
//! `Σ_j W_j X_{t-j}` from the window of the `k` most recent states. Three
//! parameter spaces constrain training:
//!
//! * the full Frobenius ball of radius `R`,
//! * its intersection with the commutant of the group (strictly
//!   equivariant maps), and
//! * the approximately equivariant set, where the equivariance error of
//!   the forecaster is capped by a budget `ε`.
//!
//! The loss is the squared prediction error clipped at `M`, so all risks
//! live in `[0, M]` and every bound constant stays finite.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dynamics::Sample;
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg;
use crate::rng::rng_for;
use rand::Rng;

/// Tolerance slack allowed on space membership after projection.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A linear lag forecaster `f(window) = Σ_j W_j · window[j-1]`.
///
/// `lag_matrices[0]` multiplies the most recent state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecaster {
    pub lag_matrices: Vec<Array2<f64>>,
}

impl LinearForecaster {
    pub fn new(lag_matrices: Vec<Array2<f64>>) -> Result<Self> {
        if lag_matrices.is_empty() {
            return Err(Error::invalid("forecaster needs at least one lag matrix"));
        }
        let d = lag_matrices[0].nrows();
        for (j, w) in lag_matrices.iter().enumerate() {
            if w.nrows() != d || w.ncols() != d {
                return Err(Error::invalid(format!("lag matrix {j} is not {d}x{d}")));
            }
            if !w.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("lag matrix {j} has non-finite entries")));
            }
        }
        Ok(LinearForecaster { lag_matrices })
    }

    pub fn zeros(k: usize, d: usize) -> Self {
        LinearForecaster {
            lag_matrices: vec![Array2::zeros((d, d)); k],
        }
    }

    /// Entries i.i.d. uniform in `[-scale, scale]`.
    pub fn random(k: usize, d: usize, scale: f64, seed: u64) -> Self {
        let mut rng = rng_for(seed, &[0x71]);
        LinearForecaster {
            lag_matrices: (0..k)
                .map(|_| Array2::from_shape_fn((d, d), |_| rng.gen_range(-scale..=scale)))
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.lag_matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.lag_matrices[0].nrows()
    }

    /// Frobenius norm of the stacked parameter block.
    pub fn stacked_norm(&self) -> f64 {
        self.lag_matrices
            .iter()
            .map(|w| linalg::frobenius_inner(w, w))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        LinearForecaster {
            lag_matrices: self.lag_matrices.iter().map(|w| w * c).collect(),
        }
    }

    /// `self + c * other`, entrywise over all lag matrices.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        LinearForecaster {
            lag_matrices: self
                .lag_matrices
                .iter()
                .zip(other.lag_matrices.iter())
                .map(|(a, b)| a + &(b * c))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    /// `Σ_j W_j · window[j-1]` with `window[0]` the most recent state.
    pub fn predict(&self, window: &[Array1<f64>]) -> Result<Array1<f64>> {
        if window.len() != self.k() {
            return Err(Error::invalid(format!(
                "window has {} states, forecaster expects {}",
                window.len(),
                self.k()
            )));
        }
        let mut out = Array1::<f64>::zeros(self.dim());
        for (w, x) in self.lag_matrices.iter().zip(window.iter()) {
            if x.len() != self.dim() {
                return Err(Error::invalid("window state dimension mismatch"));
            }
            out += &w.dot(x);
        }
        Ok(out)
    }

    /// JSON encoding `{"k":…, "d":…, "lag_matrices":[[[row], …], …]}`.
    pub fn to_json(&self) -> Result<String> {
        let rec = ForecasterRecord {
            k: self.k(),
            d: self.dim(),
            lag_matrices: self
                .lag_matrices
                .iter()
                .map(|w| w.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ForecasterRecord = serde_json::from_str(text)?;
        let mats = rec
            .lag_matrices
            .into_iter()
            .map(|rows| {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Array2::from_shape_vec((rec.d, rec.d), flat)
                    .map_err(|e| Error::integrity(format!("bad lag matrix shape: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if mats.len() != rec.k {
            return Err(Error::integrity(format!(
                "k = {} but {} lag matrices present",
                rec.k,
                mats.len()
            )));
        }
        LinearForecaster::new(mats)
    }
}

#[derive(Serialize, Deserialize)]
struct ForecasterRecord {
    k: usize,
    d: usize,
    lag_matrices: Vec<Vec<Vec<f64>>>,
}

/// Clipped squared loss configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Clip bound `M`; loss values live in `[0, M]`.
    pub clip_bound: f64,
}

impl LossSpec {
    pub fn new(clip_bound: f64) -> Result<Self> {
        if clip_bound <= 0.0 || !clip_bound.is_finite() {
            return Err(Error::invalid("clip bound M must be positive and finite"));
        }
        Ok(LossSpec { clip_bound })
    }
}

/// `min(‖f(window) − target‖², M)`.
pub fn loss(theta: &LinearForecaster, sample: &Sample, spec: &LossSpec) -> Result<f64> {
    let pred = theta.predict(&sample.window)?;
    let err = &pred - &sample.target;
    let sq = err.iter().map(|e| e * e).sum::<f64>();
    Ok(sq.min(spec.clip_bound))
}

/// Gradient of the clipped squared loss with the shape of `theta`.
///
/// Inside the clip region `∂L/∂W_j = 2(ŷ − y)·xⱼᵀ`; beyond it the loss is
/// flat and the gradient is zero. At the boundary the inside-region
/// formula is used.
pub fn loss_grad(
    theta: &LinearForecaster,
    sample: &Sample,
    spec: &LossSpec,
) -> Result<LinearForecaster> {
    let pred = theta.predict(&sample.window)?;
    let err = &pred - &sample.target;
    let sq = err.iter().map(|e| e * e).sum::<f64>();
    if sq > spec.clip_bound {
        return Ok(LinearForecaster::zeros(theta.k(), theta.dim()));
    }
    let d = theta.dim();
    let grads = sample
        .window
        .iter()
        .map(|x| {
            let mut g = Array2::<f64>::zeros((d, d));
            for r in 0..d {
                for c in 0..d {
                    g[[r, c]] = 2.0 * err[r] * x[c];
                }
            }
            g
        })
        .collect();
    Ok(LinearForecaster { lag_matrices: grads })
}

/// Orbit-averaged loss `L̄(θ, Z) = (1/|G|) Σ_g L(θ, gZ)` over the full
/// group orbit.
pub fn orbit_averaged_loss(
    theta: &LinearForecaster,
    sample: &Sample,
    group: &FiniteGroup,
    spec: &LossSpec,
) -> Result<f64> {
    let mut sum = 0.0;
    for g in 0..group.order() {
        let transformed = group.act_on_sample(g, sample)?;
        sum += loss(theta, &transformed, spec)?;
    }
    Ok(sum / group.order() as f64)
}

/// Equivariance error of a linear forecaster over the input ball of
/// radius `domain_bound`.
///
/// Viewing the window as one stacked vector of norm at most the bound,
/// the deviation from equivariance under `g` is the linear map with
/// blocks `C_j(g) = W_j ρ(g) − ρ(g) W_j`, so the supremum is exactly
/// `bound · max_g σ_max([C_1(g) … C_k(g)])`.
pub fn equivariance_error(
    theta: &LinearForecaster,
    group: &FiniteGroup,
    domain_bound: f64,
) -> Result<f64> {
    let d = theta.dim();
    if group.dim() != d {
        return Err(Error::invalid("group dimension does not match forecaster"));
    }
    let k = theta.k();
    let mut worst = 0.0_f64;
    for rho in group.elements() {
        let mut stacked = Array2::<f64>::zeros((d, k * d));
        for (j, w) in theta.lag_matrices.iter().enumerate() {
            let comm = w.dot(rho) - rho.dot(w);
            stacked
                .slice_mut(ndarray::s![.., j * d..(j + 1) * d])
                .assign(&comm);
        }
        worst = worst.max(linalg::spectral_norm(&stacked));
    }
    Ok(domain_bound * worst)
}

/// Random-search lower bound on the equivariance error, for cross-checking
/// the closed form. Samples stacked window vectors of norm `domain_bound`.
pub fn sampled_equivariance_error(
    theta: &LinearForecaster,
    group: &FiniteGroup,
    domain_bound: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let d = theta.dim();
    let k = theta.k();
    let mut rng = rng_for(seed, &[0x5E]);
    let mut best = 0.0_f64;
    for _ in 0..n_samples {
        let raw: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let window: Vec<Array1<f64>> = (0..k)
            .map(|j| {
                Array1::from_iter(
                    raw[j * d..(j + 1) * d]
                        .iter()
                        .map(|&x| x / norm * domain_bound),
                )
            })
            .collect();
        let f_x = theta.predict(&window)?;
        for rho in group.elements() {
            let gw: Vec<Array1<f64>> = window.iter().map(|x| rho.dot(x)).collect();
            let f_gx = theta.predict(&gw)?;
            let dev = &f_gx - &rho.dot(&f_x);
            best = best.max(linalg::norm2(&dev));
        }
    }
    Ok(best)
}

/// One of the three constraint sets for training.
#[derive(Debug, Clone)]
pub enum ParameterSpace {
    /// Frobenius ball of radius `radius`.
    Full { radius: f64 },
    /// Commutant of `group` intersected with the ball.
    Equivariant { radius: f64, group: FiniteGroup },
    /// Ball with the equivariance error capped at `ee_budget` over the
    /// input ball of radius `domain_bound`.
    ApproxEquivariant {
        radius: f64,
        ee_budget: f64,
        group: FiniteGroup,
        domain_bound: f64,
    },
}

impl ParameterSpace {
    pub fn full(radius: f64) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        Ok(ParameterSpace::Full { radius })
    }

    pub fn equivariant(radius: f64, group: FiniteGroup) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        Ok(ParameterSpace::Equivariant { radius, group })
    }

    pub fn approx_equivariant(
        radius: f64,
        ee_budget: f64,
        group: FiniteGroup,
        domain_bound: f64,
    ) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        if ee_budget < 0.0 {
            return Err(Error::invalid("equivariance budget must be nonnegative"));
        }
        if domain_bound <= 0.0 {
            return Err(Error::invalid("domain bound must be positive"));
        }
        Ok(ParameterSpace::ApproxEquivariant {
            radius,
            ee_budget,
            group,
            domain_bound,
        })
    }

    pub fn radius(&self) -> f64 {
        match self {
            ParameterSpace::Full { radius } => *radius,
            ParameterSpace::Equivariant { radius, .. } => *radius,
            ParameterSpace::ApproxEquivariant { radius, .. } => *radius,
        }
    }

    /// Same constraint set with a different ball radius.
    pub fn with_radius(&self, radius: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ParameterSpace::Full { radius: r } => *r = radius,
            ParameterSpace::Equivariant { radius: r, .. } => *r = radius,
            ParameterSpace::ApproxEquivariant { radius: r, .. } => *r = radius,
        }
        out
    }

    /// Projects (or retracts) `theta` into the set.
    ///
    /// Full: radial scaling into the ball. Equivariant: Reynolds projection
    /// per lag matrix, then radial scaling. ApproxEquivariant: split each
    /// lag matrix into its commutant part and residual, scale the residuals
    /// so the equivariance error meets the budget, then radially scale.
    /// The approximate case is a feasible idempotent retraction, not the
    /// exact metric projection (the exact projection onto a spectral-norm
    /// commutator constraint has no closed form).
    pub fn project(&self, theta: &LinearForecaster) -> Result<LinearForecaster> {
        match self {
            ParameterSpace::Full { radius } => Ok(ball_scale(theta.clone(), *radius)),
            ParameterSpace::Equivariant { radius, group } => {
                let mats = theta
                    .lag_matrices
                    .iter()
                    .map(|w| group.reynolds_project(w))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ball_scale(LinearForecaster { lag_matrices: mats }, *radius))
            }
            ParameterSpace::ApproxEquivariant {
                radius,
                ee_budget,
                group,
                domain_bound,
            } => {
                let commutant = theta
                    .lag_matrices
                    .iter()
                    .map(|w| group.reynolds_project(w))
                    .collect::<Result<Vec<_>>>()?;
                let commutant = LinearForecaster {
                    lag_matrices: commutant,
                };
                let residual = theta.sub(&commutant);
                // The commutant part has zero commutators, so the
                // equivariance error of theta equals that of the residual.
                let ee = equivariance_error(&residual, group, *domain_bound)?;
                let scaled_residual = if ee > *ee_budget {
                    residual.scale(ee_budget / ee)
                } else {
                    residual
                };
                Ok(ball_scale(
                    commutant.add_scaled(&scaled_residual, 1.0),
                    *radius,
                ))
            }
        }
    }

    /// Exact membership check with the documented tolerance slack.
    pub fn contains(&self, theta: &LinearForecaster) -> Result<bool> {
        let in_ball = theta.stacked_norm() <= self.radius() + 1e-12;
        match self {
            ParameterSpace::Full { .. } => Ok(in_ball),
            ParameterSpace::Equivariant { group, .. } => {
                let ee = equivariance_error(theta, group, 1.0)?;
                Ok(in_ball && ee <= MEMBERSHIP_TOL)
            }
            ParameterSpace::ApproxEquivariant {
                ee_budget,
                group,
                domain_bound,
                ..
            } => {
                let ee = equivariance_error(theta, group, *domain_bound)?;
                Ok(in_ball && ee <= ee_budget + MEMBERSHIP_TOL)
            }
        }
    }

    pub fn group(&self) -> Option<&FiniteGroup> {
        match self {
            ParameterSpace::Full { .. } => None,
            ParameterSpace::Equivariant { group, .. } => Some(group),
            ParameterSpace::ApproxEquivariant { group, .. } => Some(group),
        }
    }
}

fn ball_scale(theta: LinearForecaster, radius: f64) -> LinearForecaster {
    let norm = theta.stacked_norm();
    if norm > radius {
        if radius == 0.0 {
            LinearForecaster::zeros(theta.k(), theta.dim())
        } else {
            theta.scale(radius / norm)
        }
    } else {
        theta
    }
}

/// Uniform Lipschitz constant of the clipped squared loss with respect to
/// the stacked parameters: `2·√M·B_x·√k`.
///
/// Derivation: inside the clip region the parameter gradient is
/// `∂L/∂W_j = 2(ŷ − y)·xⱼᵀ`, so its stacked Frobenius norm is
/// `2‖ŷ − y‖·‖window‖ ≤ 2·√M·(B_x·√k)` because the clipped error norm is
/// at most `√M` and each of the `k` window states lies in the ball of
/// radius `B_x`. Beyond the clip the loss is flat, so the bound holds
/// everywhere.
pub fn lipschitz_bound(domain_bound: f64, k: usize, clip_bound: f64) -> f64 {
    2.0 * clip_bound.sqrt() * domain_bound * (k as f64).sqrt()
}
