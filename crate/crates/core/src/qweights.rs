//! Sample-weight vectors on the probability simplex.
//!
//! Weights are restricted to nonnegative entries summing to one, so
//! `‖q‖₁ = 1` is fixed and the bound's `‖q‖₂` trade-off is well scaled;
//! signed weights are a non-goal. Entry `t` of a weight vector applies to
//! the training samples with target time `k + 1 + t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative weights summing to 1 over the usable horizon `t = k+1 … T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let wv = Self::raw(values)?;
        let sum: f64 = wv.values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
        }
        Ok(wv)
    }

    /// Nonnegative weights without the simplex normalization, for
    /// degenerate diagnostic cases (e.g. the all-zero vector). Every
    /// standard scheme goes through [`WeightVector::new`] instead.
    pub fn raw(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weight vector must be nonempty"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        Ok(WeightVector { values })
    }

    /// All entries `1 / horizon`.
    pub fn uniform(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(WeightVector {
            values: vec![1.0 / horizon as f64; horizon],
        })
    }

    /// Exponentially decaying weights `q_t ∝ λ^{T-t}`, normalized; the most
    /// recent time gets the largest weight. `λ = 1` reduces to uniform.
    pub fn exp_decay(horizon: usize, lambda: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid("lambda must lie in (0, 1]"));
        }
        let raw: Vec<f64> = (0..horizon)
            .map(|i| lambda.powi((horizon - 1 - i) as i32))
            .collect();
        let sum: f64 = raw.iter().sum();
        Ok(WeightVector {
            values: raw.into_iter().map(|v| v / sum).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.values[slot]
    }

    /// `(‖q‖₁, ‖q‖₂)`.
    pub fn norms(&self) -> (f64, f64) {
        let l1 = self.values.iter().map(|v| v.abs()).sum();
        let l2 = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        (l1, l2)
    }
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-based algorithm: find the largest prefix whose shifted entries stay
/// positive, then clamp.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0, "cannot project an empty vector");
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite weight"));
    let mut cumsum = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            rho = i + 1;
            theta = candidate;
        }
    }
    debug_assert!(rho > 0);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Options for [`optimize_q`].
#[derive(Debug, Clone)]
pub struct QOptConfig {
    pub max_iters: usize,
    pub step: f64,
    /// Central-difference step for the oracle gradient; the oracle is a
    /// Monte-Carlo estimate, so a small step drowns in noise.
    pub fd_step: f64,
}

impl Default for QOptConfig {
    fn default() -> Self {
        QOptConfig {
            max_iters: 40,
            step: 0.05,
            fd_step: 1e-3,
        }
    }
}

/// Minimizes `g(q) = 2·disc_oracle(q) + ‖q‖₂ · (M √(8 ln(1/δ)) + 1)` over
/// the simplex by projected gradient descent from the uniform start.
///
/// The oracle gradient is estimated per coordinate by central differences
/// with re-projection; the best iterate (including the start) is returned,
/// so the result never scores worse than uniform weights.
pub fn optimize_q<F>(
    disc_oracle: F,
    horizon: usize,
    clip_bound: f64,
    delta: f64,
    config: &QOptConfig,
) -> Result<WeightVector>
where
    F: Fn(&WeightVector) -> Result<f64>,
{
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let kappa = clip_bound * (8.0 * (1.0 / delta).ln()).sqrt() + 1.0;
    let objective = |q: &WeightVector| -> Result<f64> {
        let (_, l2) = q.norms();
        Ok(2.0 * disc_oracle(q)? + l2 * kappa)
    };

    let mut q = WeightVector::uniform(horizon)?.values;
    let mut best_q = q.clone();
    let mut best_val = objective(&WeightVector::new(q.clone())?)?;

    for _ in 0..config.max_iters {
        // Central-difference gradient of the full objective, coordinatewise
        // with re-projection so probes stay feasible.
        let mut grad = vec![0.0; horizon];
        for i in 0..horizon {
            let mut plus = q.clone();
            plus[i] += config.fd_step;
            let plus = simplex_project(&plus);
            let mut minus = q.clone();
            minus[i] -= config.fd_step;
            let minus = simplex_project(&minus);
            let f_plus = objective(&WeightVector::new(plus)?)?;
            let f_minus = objective(&WeightVector::new(minus)?)?;
            grad[i] = (f_plus - f_minus) / (2.0 * config.fd_step);
        }
        for i in 0..horizon {
            q[i] -= config.step * grad[i];
        }
        q = simplex_project(&q);
        let val = objective(&WeightVector::new(q.clone())?)?;
        if val < best_val {
            best_val = val;
            best_q = q.clone();
        }
    }
    WeightVector::new(best_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng;

    #[test]
    fn uniform_weights() {
        let q = WeightVector::uniform(4).unwrap();
        assert_eq!(q.values(), &[0.25, 0.25, 0.25, 0.25]);
        let (l1, l2) = q.norms();
        assert!((l1 - 1.0).abs() < 1e-15);
        assert!((l2 - 0.5).abs() < 1e-15);
        assert_eq!(WeightVector::uniform(1).unwrap().values(), &[1.0]);
        assert!(WeightVector::uniform(0).is_err());
    }

    #[test]
    fn uniform_l2_closed_form() {
        for h in 1..50 {
            let q = WeightVector::uniform(h).unwrap();
            let (_, l2) = q.norms();
            assert!((l2 - 1.0 / (h as f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_decay_normalizes() {
        // Oracle: normalize (0.25, 0.5, 1).
        let q = WeightVector::exp_decay(3, 0.5).unwrap();
        let want = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];
        for (a, b) in q.values().iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        // λ = 1 reduces to uniform.
        let q1 = WeightVector::exp_decay(5, 1.0).unwrap();
        assert_eq!(q1, WeightVector::uniform(5).unwrap());
        // λ < 1: last entry is the max.
        let qd = WeightVector::exp_decay(6, 0.8).unwrap();
        let last = *qd.values().last().unwrap();
        assert!(qd.values().iter().all(|&v| v <= last));
        assert!(WeightVector::exp_decay(3, 0.0).is_err());
        assert!(WeightVector::exp_decay(3, 1.5).is_err());
    }

    #[test]
    fn norms_of_one_hot() {
        let q = WeightVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        let (l1, l2) = q.norms();
        assert_eq!(l1, 1.0);
        assert_eq!(l2, 1.0);
    }

    #[test]
    fn l2_at_most_l1_on_simplex() {
        let mut rng = rng_for(1, &[4]);
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let q = WeightVector::new(simplex_project(&raw)).unwrap();
            let (l1, l2) = q.norms();
            assert!(l2 <= l1 + 1e-12);
        }
    }

    #[test]
    fn simplex_projection_idempotent_and_matches_grid() {
        let mut rng = rng_for(2, &[4]);
        for trial in 0..50 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let p = simplex_project(&v);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
            let pp = simplex_project(&p);
            let drift: f64 = p
                .iter()
                .zip(pp.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(drift <= 1e-12);

            // Brute-force QP oracle on a grid over the 3-simplex.
            let mut best = f64::INFINITY;
            let mut best_pt = [0.0; 3];
            let steps = 200;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = i as f64 / steps as f64;
                    let b = j as f64 / steps as f64;
                    let c = 1.0 - a - b;
                    let dist = (a - v[0]).powi(2) + (b - v[1]).powi(2) + (c - v[2]).powi(2);
                    if dist < best {
                        best = dist;
                        best_pt = [a, b, c];
                    }
                }
            }
            let proj_dist: f64 = p
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(
                proj_dist <= best + 1e-6,
                "trial {trial}: projection {p:?} worse than grid point {best_pt:?}"
            );
        }
    }

    #[test]
    fn uniform_minimizes_l2_over_simplex() {
        let mut rng = rng_for(3, &[4]);
        let h = 8;
        let (_, uniform_l2) = WeightVector::uniform(h).unwrap().norms();
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let q = WeightVector::new(simplex_project(&raw)).unwrap();
            let (_, l2) = q.norms();
            assert!(uniform_l2 <= l2 + 1e-12);
        }
    }

    #[test]
    fn optimizer_with_zero_oracle_stays_near_uniform() {
        let q = optimize_q(|_| Ok(0.0), 6, 1.0, 0.1, &QOptConfig::default()).unwrap();
        let uniform = WeightVector::uniform(6).unwrap();
        for (a, b) in q.values().iter().zip(uniform.values().iter()) {
            assert!((a - b).abs() < 1e-6, "{:?}", q.values());
        }
    }

    #[test]
    fn optimizer_beats_or_matches_uniform() {
        let oracle = |q: &WeightVector| {
            // Reward recency: discrepancy falls as mass moves to the last slot.
            Ok(0.3 * (1.0 - q.values().last().unwrap()))
        };
        let kappa = 1.0 * (8.0f64 * (1.0 / 0.1f64).ln()).sqrt() + 1.0;
        let g = |q: &WeightVector| {
            let (_, l2) = q.norms();
            2.0 * oracle(q).unwrap() + l2 * kappa
        };
        let best = optimize_q(oracle, 5, 1.0, 0.1, &QOptConfig::default()).unwrap();
        let uniform = WeightVector::uniform(5).unwrap();
        assert!(g(&best) <= g(&uniform) + 1e-9);
    }

    #[test]
    fn optimizer_concentrates_on_recency_when_reward_dominates() {
        // Two-point simplex: q = (1-s, s), objective
        // g(s) = 2c(1-s) + κ √((1-s)² + s²). Grid-search oracle for s*.
        let horizon = 2;
        let delta = 0.2;
        let m = 1.0;
        let kappa = m * (8.0f64 * (1.0 / delta).ln()).sqrt() + 1.0;
        let mut last_s = 0.0;
        for &c in &[0.5, 2.0, 8.0] {
            let oracle = move |q: &WeightVector| Ok(c * (1.0 - q.values()[1]));
            let cfg = QOptConfig {
                max_iters: 300,
                step: 0.02,
                fd_step: 1e-4,
            };
            let best = optimize_q(oracle, horizon, m, delta, &cfg).unwrap();
            let s_hat = best.values()[1];

            let mut s_star = 0.0;
            let mut best_val = f64::INFINITY;
            for i in 0..=10_000 {
                let s = i as f64 / 10_000.0;
                let val = 2.0 * c * (1.0 - s) + kappa * ((1.0 - s).powi(2) + s * s).sqrt();
                if val < best_val {
                    best_val = val;
                    s_star = s;
                }
            }
            assert!(
                (s_hat - s_star).abs() < 2e-2,
                "c={c}: optimizer {s_hat} vs grid {s_star}"
            );
            assert!(s_hat >= last_s - 1e-9, "mass should move toward recency");
            last_s = s_hat;
        }
    }

    #[test]
    fn optimizer_output_is_feasible() {
        let oracle = |q: &WeightVector| Ok(q.values()[0] * 0.7);
        let q = optimize_q(oracle, 4, 2.0, 0.05, &QOptConfig::default()).unwrap();
        assert!((q.values().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(q.values().iter().all(|&v| v >= 0.0));
    }
}
