//! Monte-Carlo estimation of every generalization-bound ingredient and
//! assembly of the bound right-hand sides.
//!
//! All supremum-over-parameters quantities (discrepancy, sequential
//! Rademacher complexity, the variance-reduction term) are approximated by
//! multi-start projected gradient ascent and are therefore lower bounds on
//! the analytic quantities; every estimate ships with a standard error and
//! the reports carry an explicit sup-approximation caveat.

pub mod assemble;
pub mod bias;
pub mod diagnostics;
pub mod discrepancy;
pub mod rademacher;
pub mod transport;

pub use assemble::{
    assemble_cor_ae, assemble_cor_da, assemble_cor_eq, assemble_theorem1, capacity_coefficient,
    confidence_terms, AssembledBound, ConfidenceTerms,
};
pub use bias::{symmetry_bias_terms, BiasTerms};
pub use diagnostics::{diagnostic_terms, DiagnosticTerms};
pub use discrepancy::{estimate_discrepancy, DiscEstimate};
pub use rademacher::{
    check_lemma1, estimate_delta, estimate_seq_rademacher, rademacher_suite, DeltaRecord,
    Lemma1Record, LossVariant, RademacherSuite,
};
pub use transport::{solve_assignment, wasserstein_w1, MAX_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Budgets for the Monte-Carlo estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCConfig {
    /// Rademacher sign draws.
    pub n_sigma: usize,
    /// Fresh series for expectation estimates.
    pub n_fresh: usize,
    /// Multi-start budget of every inner maximization.
    pub sup_restarts: usize,
    /// Iteration cap of every inner maximization.
    pub sup_iters: usize,
    pub seed: u64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            n_sigma: 128,
            n_fresh: 256,
            sup_restarts: 3,
            sup_iters: 80,
            seed: 0,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sigma == 0 || self.n_fresh == 0 || self.sup_restarts == 0 || self.sup_iters == 0
        {
            return Err(Error::invalid("all Monte-Carlo budgets must be positive"));
        }
        Ok(())
    }
}

/// A Monte-Carlo mean with its standard error and the raw draws.
#[derive(Debug, Clone)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub per_draw: Vec<f64>,
}

impl MCEstimate {
    pub fn from_draws(per_draw: Vec<f64>) -> MCEstimate {
        let n = per_draw.len() as f64;
        let mean = per_draw.iter().sum::<f64>() / n;
        let stderr = if per_draw.len() > 1 {
            let var = per_draw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MCEstimate {
            mean,
            stderr,
            per_draw,
        }
    }
}
