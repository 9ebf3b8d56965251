//! Weighted empirical risk minimization for the four estimators.
//!
//! All estimators minimize the q-weighted empirical risk
//! `(1/N) Σ_i Σ_t q_t L(θ, Z_t^{(i)})` by multi-restart projected gradient
//! descent with backtracking; they differ in the constraint set and in
//! whether the plain loss or the orbit-averaged loss is used:
//!
//! * `Vanilla` — plain loss over the full ball,
//! * `DataAug` — orbit-averaged loss over the full ball (training on the
//!   group orbit of every sample, as an exact orbit sum),
//! * `Equivariant` — plain loss over the commutant,
//! * `ApproxEquivariant` — plain loss with the equivariance error capped.
//!
//! A population-minimizer surrogate is fit the same way on a much larger
//! fresh pool with uniform weights; its weighted empirical risk on a
//! training set gives the `ξ` ingredient of the approximate-equivariance
//! bound.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{make_dataset, Dataset, GeneratorSpec};
use crate::error::{Error, Result};
use crate::forecaster::{LinearForecaster, LossSpec, ParameterSpace};
use crate::group::FiniteGroup;
use crate::optim::{self, PgdConfig, TraceRow};
use crate::qweights::WeightVector;
use crate::quadform::{orbit_expand, LossObjective};
use crate::rng::mix64;

/// Which of the four estimators to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Vanilla,
    DataAug,
    Equivariant,
    ApproxEquivariant,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Vanilla,
        EstimatorKind::DataAug,
        EstimatorKind::Equivariant,
        EstimatorKind::ApproxEquivariant,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Vanilla => "vanilla",
            EstimatorKind::DataAug => "data_aug",
            EstimatorKind::Equivariant => "equivariant",
            EstimatorKind::ApproxEquivariant => "approx_equivariant",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "vanilla" => Ok(EstimatorKind::Vanilla),
            "data_aug" => Ok(EstimatorKind::DataAug),
            "equivariant" => Ok(EstimatorKind::Equivariant),
            "approx_equivariant" => Ok(EstimatorKind::ApproxEquivariant),
            other => Err(Error::invalid(format!(
                "unknown estimator kind '{other}' (expected vanilla, data_aug, equivariant, approx_equivariant)"
            ))),
        }
    }

    fn space_matches(&self, space: &ParameterSpace) -> bool {
        matches!(
            (self, space),
            (EstimatorKind::Vanilla, ParameterSpace::Full { .. })
                | (EstimatorKind::DataAug, ParameterSpace::Full { .. })
                | (EstimatorKind::Equivariant, ParameterSpace::Equivariant { .. })
                | (
                    EstimatorKind::ApproxEquivariant,
                    ParameterSpace::ApproxEquivariant { .. }
                )
        )
    }
}

/// Optimizer settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Initial learning rate.
    pub eta0: f64,
    /// Harmonic step decay per iteration.
    pub decay: f64,
    pub max_iters: usize,
    pub n_restarts: usize,
    pub seed: u64,
    /// Projected-gradient stationarity threshold; also the slack allowed
    /// in the non-underfitting check.
    pub convergence_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta0: 0.5,
            decay: 0.0,
            max_iters: 400,
            n_restarts: 5,
            seed: 0,
            convergence_tol: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta0 <= 0.0 {
            return Err(Error::invalid("eta0 must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.n_restarts == 0 {
            return Err(Error::invalid("n_restarts must be at least 1"));
        }
        Ok(())
    }

    fn pgd(&self) -> PgdConfig {
        PgdConfig {
            eta0: self.eta0,
            decay: self.decay,
            max_iters: self.max_iters,
            max_backtracks: 30,
            tol: self.convergence_tol,
        }
    }
}

/// Record of one multi-restart optimization.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    /// Per-iteration rows of the winning restart.
    pub rows: Vec<TraceRow>,
    pub best_restart: usize,
    pub final_objectives: Vec<f64>,
    pub monotone_violations: usize,
}

impl TrainingTrace {
    /// CSV with columns `iter,objective,grad_norm,step_size`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,objective,grad_norm,step_size")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.iter, row.objective, row.grad_norm, row.step_size
            )?;
        }
        Ok(())
    }
}

fn train_weights(dataset: &Dataset, q: &WeightVector) -> Result<Vec<f64>> {
    if q.len() != dataset.horizon() {
        return Err(Error::invalid(format!(
            "weight vector has {} entries, horizon is {}",
            q.len(),
            dataset.horizon()
        )));
    }
    let n = dataset.n_series() as f64;
    Ok(dataset
        .train_samples
        .iter()
        .map(|s| q.get(dataset.weight_slot(s.t_index)) / n)
        .collect())
}

/// The q-weighted empirical risk `(1/N) Σ_i Σ_t q_t L(θ, Z_t^{(i)})`,
/// using the orbit-averaged loss for `DataAug`.
pub fn weighted_risk(
    theta: &LinearForecaster,
    dataset: &Dataset,
    q: &WeightVector,
    kind: EstimatorKind,
    group: &FiniteGroup,
    loss_spec: &LossSpec,
) -> Result<f64> {
    let weights = train_weights(dataset, q)?;
    let mut sum = 0.0;
    match kind {
        EstimatorKind::DataAug => {
            for (s, w) in dataset.train_samples.iter().zip(weights.iter()) {
                sum += w * crate::forecaster::orbit_averaged_loss(theta, s, group, loss_spec)?;
            }
        }
        _ => {
            for (s, w) in dataset.train_samples.iter().zip(weights.iter()) {
                sum += w * crate::forecaster::loss(theta, s, loss_spec)?;
            }
        }
    }
    Ok(sum)
}

/// Trains one estimator by multi-restart projected gradient descent.
///
/// Restart `r` starts from i.i.d. uniform entries in `[-0.1, 0.1]` seeded
/// by `mix64(config.seed, r)`; the best restart by final objective wins.
/// The returned forecaster always satisfies the space membership test.
pub fn weighted_erm(
    dataset: &Dataset,
    q: &WeightVector,
    space: &ParameterSpace,
    kind: EstimatorKind,
    group: &FiniteGroup,
    config: &TrainConfig,
    loss_spec: &LossSpec,
) -> Result<(LinearForecaster, TrainingTrace)> {
    config.validate()?;
    if !kind.space_matches(space) {
        return Err(Error::invalid(format!(
            "estimator kind {} does not match the parameter space",
            kind.name()
        )));
    }
    let weights = train_weights(dataset, q)?;
    let (samples, weights) = match kind {
        EstimatorKind::DataAug => orbit_expand(&dataset.train_samples, &weights, group)?,
        _ => (dataset.train_samples.clone(), weights),
    };
    let objective = LossObjective::build(
        &samples,
        &weights,
        loss_spec,
        dataset.spec.state_bound,
        space.radius(),
    );
    let obj_fn = |theta: &LinearForecaster| objective.value_grad(theta);

    let k = dataset.k;
    let d = dataset.dim();
    let mut best: Option<(usize, optim::PgdOutcome)> = None;
    let mut final_objectives = Vec::with_capacity(config.n_restarts);
    for restart in 0..config.n_restarts {
        let init = LinearForecaster::random(k, d, 0.1, mix64(config.seed, restart as u64));
        let outcome = optim::minimize(obj_fn, space, &init, &config.pgd(), true)?;
        final_objectives.push(outcome.value);
        let better = match &best {
            None => true,
            Some((_, cur)) => outcome.value < cur.value,
        };
        if better {
            best = Some((restart, outcome));
        }
    }
    let (best_restart, outcome) = best.expect("at least one restart");
    debug_assert!(space.contains(&outcome.theta)?);
    Ok((
        outcome.theta,
        TrainingTrace {
            rows: outcome.trace,
            best_restart,
            final_objectives,
            monotone_violations: outcome.monotone_violations,
        },
    ))
}

/// Fits the population-minimizer surrogate on a fresh pool of
/// `pool_n ≥ 50 × experiment_n` series with uniform weights, over the full
/// (unconstrained-by-symmetry) ball.
///
/// The surrogate carries Monte-Carlo error of its own; callers treat it as
/// an estimate of the population minimizer, not the exact object.
pub fn fit_population_surrogate(
    spec: &GeneratorSpec,
    pool_n: usize,
    experiment_n: usize,
    t_len: usize,
    k: usize,
    space: &ParameterSpace,
    config: &TrainConfig,
    loss_spec: &LossSpec,
    pool_seed: u64,
) -> Result<LinearForecaster> {
    if pool_n < 50 * experiment_n {
        return Err(Error::invalid(format!(
            "surrogate pool of {pool_n} series is too small for experiment N = {experiment_n} (need ≥ {})",
            50 * experiment_n
        )));
    }
    if !matches!(space, ParameterSpace::Full { .. }) {
        return Err(Error::invalid(
            "population surrogate is fit over the full parameter space",
        ));
    }
    let pool = make_dataset(spec, pool_n, t_len, k, pool_seed)?;
    let q = WeightVector::uniform(pool.horizon())?;
    let (theta, _) = weighted_erm(
        &pool,
        &q,
        space,
        EstimatorKind::Vanilla,
        &FiniteGroup::trivial(spec.dim)?,
        config,
        loss_spec,
    )?;
    Ok(theta)
}

/// `ξ`: the weighted empirical risk of the population surrogate on the
/// given training set.
pub fn xi_bound(
    theta_star: &LinearForecaster,
    dataset: &Dataset,
    q: &WeightVector,
    loss_spec: &LossSpec,
) -> Result<f64> {
    weighted_risk(
        theta_star,
        dataset,
        q,
        EstimatorKind::Vanilla,
        &FiniteGroup::trivial(dataset.dim())?,
        loss_spec,
    )
}

/// Non-underfitting check: the trained estimator's risk must not exceed
/// the risk of the surrogate projected into the same space, beyond the
/// convergence tolerance. Returns `true` when the check passes; callers
/// flag and exclude failing runs.
pub fn non_underfitting_ok(
    theta_hat: &LinearForecaster,
    theta_star: &LinearForecaster,
    dataset: &Dataset,
    q: &WeightVector,
    space: &ParameterSpace,
    kind: EstimatorKind,
    group: &FiniteGroup,
    loss_spec: &LossSpec,
    tol: f64,
) -> Result<bool> {
    let projected_star = space.project(theta_star)?;
    let hat_risk = weighted_risk(theta_hat, dataset, q, kind, group, loss_spec)?;
    let star_risk = weighted_risk(&projected_star, dataset, q, kind, group, loss_spec)?;
    Ok(hat_risk <= star_risk + tol.max(1e-9))
}
