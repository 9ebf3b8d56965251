//! Projected gradient descent/ascent with backtracking line search.
//!
//! One loop serves both the trainers (minimize a weighted risk over a
//! constraint set) and the bound estimators (maximize a signed weighted
//! loss). Each iteration takes a gradient step, projects back onto the
//! set, and halves the step until the objective strictly improves; if no
//! improvement is found within the backtracking budget the iterate is a
//! projected stationary point and the loop stops.

use crate::error::{Error, Result};
use crate::forecaster::{LinearForecaster, ParameterSpace};

#[derive(Debug, Clone)]
pub struct PgdConfig {
    /// Initial step size per iteration.
    pub eta0: f64,
    /// Harmonic decay rate: iteration `i` starts from `eta0 / (1 + decay·i)`.
    pub decay: f64,
    pub max_iters: usize,
    /// Line-search halving budget.
    pub max_backtracks: usize,
    /// Stop when the projected step moves the iterate less than
    /// `tol · step` (projected-gradient stationarity).
    pub tol: f64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            eta0: 0.5,
            decay: 0.0,
            max_iters: 200,
            max_backtracks: 30,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone)]
pub struct PgdOutcome {
    pub theta: LinearForecaster,
    pub value: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    /// Accepted iterations where the objective failed to decrease
    /// (should stay 0 under strict-decrease backtracking).
    pub monotone_violations: usize,
}

/// Minimizes `objective` over `space` starting from `init`.
///
/// `objective` returns the value and gradient at a feasible point. The
/// starting point is projected first, so any `init` is acceptable.
pub fn minimize<F>(
    objective: F,
    space: &ParameterSpace,
    init: &LinearForecaster,
    config: &PgdConfig,
    record_trace: bool,
) -> Result<PgdOutcome>
where
    F: Fn(&LinearForecaster) -> Result<(f64, LinearForecaster)>,
{
    let mut theta = space.project(init)?;
    let (mut value, mut grad) = objective(&theta)?;
    if !value.is_finite() {
        return Err(Error::numeric(
            "objective is non-finite at the starting point".to_string(),
        ));
    }
    let mut trace = Vec::new();
    let mut monotone_violations = 0usize;
    let mut iterations = 0usize;

    for iter in 0..config.max_iters {
        let grad_norm = grad.stacked_norm();
        let eta_start = config.eta0 / (1.0 + config.decay * iter as f64);
        let mut eta = eta_start;
        let mut accepted: Option<(LinearForecaster, f64)> = None;
        for _ in 0..=config.max_backtracks {
            let candidate = space.project(&theta.add_scaled(&grad, -eta))?;
            let cand_value = objective(&candidate)?.0;
            if !cand_value.is_finite() {
                return Err(Error::numeric(format!(
                    "objective became non-finite at iteration {iter}"
                )));
            }
            if cand_value < value {
                accepted = Some((candidate, cand_value));
                break;
            }
            eta *= 0.5;
        }
        if record_trace {
            trace.push(TraceRow {
                iter,
                objective: value,
                grad_norm,
                step_size: accepted.as_ref().map(|_| eta).unwrap_or(0.0),
            });
        }
        match accepted {
            None => break, // projected stationary point
            Some((next, next_value)) => {
                if next_value > value {
                    monotone_violations += 1;
                }
                let moved = next.sub(&theta).stacked_norm();
                theta = next;
                value = next_value;
                iterations = iter + 1;
                if moved <= config.tol * eta.max(f64::MIN_POSITIVE) {
                    break;
                }
                grad = objective(&theta)?.1;
            }
        }
    }

    Ok(PgdOutcome {
        theta,
        value,
        iterations,
        trace,
        monotone_violations,
    })
}

/// Maximizes `objective` over `space`: minimizes its negation.
pub fn maximize<F>(
    objective: F,
    space: &ParameterSpace,
    init: &LinearForecaster,
    config: &PgdConfig,
) -> Result<PgdOutcome>
where
    F: Fn(&LinearForecaster) -> Result<(f64, LinearForecaster)>,
{
    let negated = |theta: &LinearForecaster| -> Result<(f64, LinearForecaster)> {
        let (v, g) = objective(theta)?;
        Ok((-v, g.scale(-1.0)))
    };
    let mut out = minimize(negated, space, init, config, false)?;
    out.value = -out.value;
    for row in &mut out.trace {
        row.objective = -row.objective;
    }
    Ok(out)
}
