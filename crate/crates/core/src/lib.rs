//! Numerical laboratory for symmetry-aware forecasting of non-stationary
//! dynamics.
//!
//! The crate is organized around one experiment pipeline:
//!
//! 1. [`dynamics`] generates families of damped, drifting rotations with a
//!    tunable symmetry-breaking strength and packs them into windowed
//!    forecasting datasets.
//! 2. [`group`] provides finite groups of orthogonal matrices, their action
//!    on samples, and the Reynolds projection onto the commutant.
//! 3. [`forecaster`] defines linear lag forecasters, the clipped squared
//!    loss, equivariance error, and the three constraint sets (full ball,
//!    equivariant, approximately equivariant).
//! 4. [`trainer`] runs weighted empirical risk minimization to produce the
//!    four estimators (vanilla, data augmentation, equivariant, approximately
//!    equivariant) plus a population-minimizer surrogate.
//! 5. [`bounds`] estimates every ingredient of the generalization bounds
//!    (discrepancy, sequential Rademacher complexity, the variance-reduction
//!    term, Wasserstein bias terms) and assembles the bound right-hand sides.
//! 6. [`qweights`] supplies sample-weight vectors on the simplex and a
//!    bound-minimizing weight optimizer.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod forecaster;
pub mod group;
pub mod linalg;
pub mod optim;
pub mod qweights;
pub mod quadform;
pub mod report;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use group::FiniteGroup;
pub use dynamics::{Dataset, GeneratorSpec, Sample, TimeSeries};
pub use forecaster::{LinearForecaster, LossSpec, ParameterSpace};
pub use qweights::WeightVector;
pub use report::BoundReport;
pub use trainer::{EstimatorKind, TrainConfig};
