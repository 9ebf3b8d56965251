//! Weighted-loss objectives over a fixed sample set.
//!
//! Every training objective and every inner maximization in the bound
//! estimators has the form `f(θ) = Σ_s w_s · L(θ, Z_s)` for a fixed list
//! of samples and signed weights. Two evaluation paths implement it:
//!
//! * [`PerSampleObjective`] walks the samples and applies the clipped
//!   loss directly; always correct.
//! * [`QuadObjective`] exploits that whenever the clip can never activate
//!   on the feasible set, the objective is exactly the quadratic
//!   `tr(W A Wᵀ) − 2⟨B, W⟩ + c` in the stacked parameter block
//!   `W = [W_1 … W_k]`, with `A, B, c` accumulated once from the samples.
//!   Evaluations then cost `O((kd)²·d)` instead of `O(n·kd²)`, which is
//!   what makes the Rademacher estimators affordable.
//!
//! [`clip_never_active`] certifies the switch: every window state lies in
//! the ball of radius `B_x`, so for `‖θ‖ ≤ R` the prediction error norm is
//! at most `R·B_x·√k + B_x`; if its square is below the clip bound the
//! quadratic path is exact.

use ndarray::{Array1, Array2};

use crate::dynamics::Sample;
use crate::error::Result;
use crate::forecaster::{loss, loss_grad, LinearForecaster, LossSpec};

/// True when the clipped region is unreachable for `‖θ‖ ≤ radius` on
/// windows whose states lie in the `domain_bound` ball.
pub fn clip_never_active(radius: f64, domain_bound: f64, k: usize, clip_bound: f64) -> bool {
    let worst_err = radius * domain_bound * (k as f64).sqrt() + domain_bound;
    worst_err * worst_err <= clip_bound
}

/// A weighted-loss objective, evaluated through whichever path is exact.
pub enum LossObjective<'a> {
    Quad(QuadObjective),
    PerSample(PerSampleObjective<'a>),
}

impl<'a> LossObjective<'a> {
    /// Builds the objective `θ ↦ Σ_s weights[s] · L(θ, samples[s])`,
    /// selecting the quadratic path when `radius` certifies it exact.
    pub fn build(
        samples: &'a [Sample],
        weights: &[f64],
        loss_spec: &LossSpec,
        domain_bound: f64,
        radius: f64,
    ) -> LossObjective<'a> {
        assert_eq!(samples.len(), weights.len());
        let k = samples.first().map(|s| s.window.len()).unwrap_or(1);
        if clip_never_active(radius, domain_bound, k, loss_spec.clip_bound) {
            LossObjective::Quad(QuadObjective::from_weighted_samples(samples, weights))
        } else {
            LossObjective::PerSample(PerSampleObjective {
                samples,
                weights: weights.to_vec(),
                loss_spec: *loss_spec,
            })
        }
    }

    pub fn value(&self, theta: &LinearForecaster) -> Result<f64> {
        match self {
            LossObjective::Quad(q) => Ok(q.value(theta)),
            LossObjective::PerSample(p) => p.value(theta),
        }
    }

    pub fn value_grad(&self, theta: &LinearForecaster) -> Result<(f64, LinearForecaster)> {
        match self {
            LossObjective::Quad(q) => Ok(q.value_grad(theta)),
            LossObjective::PerSample(p) => p.value_grad(theta),
        }
    }
}

/// Exact quadratic form of the unclipped weighted squared loss.
pub struct QuadObjective {
    /// `Σ_s w_s x_s x_sᵀ` over stacked windows, `(kd) x (kd)`.
    a: Array2<f64>,
    /// `Σ_s w_s y_s x_sᵀ`, `d x (kd)`.
    b: Array2<f64>,
    /// `Σ_s w_s ‖y_s‖²`.
    c0: f64,
    k: usize,
    d: usize,
}

impl QuadObjective {
    pub fn from_weighted_samples(samples: &[Sample], weights: &[f64]) -> Self {
        assert!(!samples.is_empty(), "objective needs at least one sample");
        let k = samples[0].window.len();
        let d = samples[0].target.len();
        let kd = k * d;
        let mut a = Array2::<f64>::zeros((kd, kd));
        let mut b = Array2::<f64>::zeros((d, kd));
        let mut c0 = 0.0;
        let mut stacked = vec![0.0; kd];
        for (s, &w) in samples.iter().zip(weights.iter()) {
            if w == 0.0 {
                continue;
            }
            for (j, x) in s.window.iter().enumerate() {
                for r in 0..d {
                    stacked[j * d + r] = x[r];
                }
            }
            for r in 0..kd {
                let wr = w * stacked[r];
                for c in 0..kd {
                    a[[r, c]] += wr * stacked[c];
                }
            }
            for r in 0..d {
                let wy = w * s.target[r];
                for c in 0..kd {
                    b[[r, c]] += wy * stacked[c];
                }
                c0 += w * s.target[r] * s.target[r];
            }
        }
        QuadObjective { a, b, c0, k, d }
    }

    fn stack(&self, theta: &LinearForecaster) -> Array2<f64> {
        let mut w = Array2::<f64>::zeros((self.d, self.k * self.d));
        for (j, m) in theta.lag_matrices.iter().enumerate() {
            w.slice_mut(ndarray::s![.., j * self.d..(j + 1) * self.d])
                .assign(m);
        }
        w
    }

    fn unstack(&self, w: &Array2<f64>) -> LinearForecaster {
        LinearForecaster {
            lag_matrices: (0..self.k)
                .map(|j| {
                    w.slice(ndarray::s![.., j * self.d..(j + 1) * self.d])
                        .to_owned()
                })
                .collect(),
        }
    }

    pub fn value(&self, theta: &LinearForecaster) -> f64 {
        let w = self.stack(theta);
        let wa = w.dot(&self.a);
        let quad: f64 = wa.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        let lin: f64 = self.b.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        quad - 2.0 * lin + self.c0
    }

    pub fn value_grad(&self, theta: &LinearForecaster) -> (f64, LinearForecaster) {
        let w = self.stack(theta);
        let wa = w.dot(&self.a);
        let quad: f64 = wa.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        let lin: f64 = self.b.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        let value = quad - 2.0 * lin + self.c0;
        let grad = self.unstack(&(&wa * 2.0 - &(&self.b * 2.0)));
        (value, grad)
    }
}

/// Direct evaluation of the clipped weighted loss.
pub struct PerSampleObjective<'a> {
    samples: &'a [Sample],
    weights: Vec<f64>,
    loss_spec: LossSpec,
}

impl<'a> PerSampleObjective<'a> {
    pub fn new(samples: &'a [Sample], weights: Vec<f64>, loss_spec: LossSpec) -> Self {
        assert_eq!(samples.len(), weights.len());
        PerSampleObjective {
            samples,
            weights,
            loss_spec,
        }
    }

    pub fn value(&self, theta: &LinearForecaster) -> Result<f64> {
        let mut sum = 0.0;
        for (s, &w) in self.samples.iter().zip(self.weights.iter()) {
            if w == 0.0 {
                continue;
            }
            sum += w * loss(theta, s, &self.loss_spec)?;
        }
        Ok(sum)
    }

    pub fn value_grad(&self, theta: &LinearForecaster) -> Result<(f64, LinearForecaster)> {
        let mut sum = 0.0;
        let mut grad = LinearForecaster::zeros(theta.k(), theta.dim());
        for (s, &w) in self.samples.iter().zip(self.weights.iter()) {
            if w == 0.0 {
                continue;
            }
            sum += w * loss(theta, s, &self.loss_spec)?;
            let g = loss_grad(theta, s, &self.loss_spec)?;
            grad = grad.add_scaled(&g, w);
        }
        Ok((sum, grad))
    }
}

/// Expands samples into their full group orbit, dividing weights by `|G|`.
///
/// The expanded objective is exactly the orbit-averaged loss objective.
pub fn orbit_expand(
    samples: &[Sample],
    weights: &[f64],
    group: &crate::group::FiniteGroup,
) -> Result<(Vec<Sample>, Vec<f64>)> {
    let order = group.order() as f64;
    let mut out_samples = Vec::with_capacity(samples.len() * group.order());
    let mut out_weights = Vec::with_capacity(samples.len() * group.order());
    for (s, &w) in samples.iter().zip(weights.iter()) {
        for g in 0..group.order() {
            out_samples.push(group.act_on_sample(g, s)?);
            out_weights.push(w / order);
        }
    }
    Ok((out_samples, out_weights))
}

/// Transforms every sample by a single group element, keeping weights.
pub fn transform_samples(
    samples: &[Sample],
    group: &crate::group::FiniteGroup,
    g: usize,
) -> Result<Vec<Sample>> {
    samples.iter().map(|s| group.act_on_sample(g, s)).collect()
}
