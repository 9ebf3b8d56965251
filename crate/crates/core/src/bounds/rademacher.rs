//! Sequential Rademacher complexity, the variance-reduction term, and the
//! complexity-ordering check.
//!
//! The forecasting-form complexity of a loss class is
//!
//! ```text
//! R = E_σ [ sup_θ (1/N) Σ_i Σ_t σ_t q_t L(θ, Z_t^{(i)}) ]
//! ```
//!
//! with one sign `σ_t` per time index shared across the `N` series. Each
//! inner supremum is approximated by multi-start projected gradient
//! ascent, so every estimate is a lower bound on the analytic value.
//!
//! Paired quantities (the variance-reduction term `Δ` and the ordering of
//! the equivariant-class complexity against the orbit-averaged one) reuse
//! the same sign draws and the same ascent seeds on both sides, and
//! additionally evaluate each side's best point as a candidate for the
//! enclosing side. Those cross-evaluations are plain feasible-point
//! evaluations, so the estimates stay honest lower bounds while the
//! mathematical orderings survive the approximation.

use ndarray::Array1;

use crate::dynamics::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::forecaster::{LinearForecaster, LossSpec, ParameterSpace};
use crate::group::FiniteGroup;
use crate::optim::{self, PgdConfig};
use crate::qweights::WeightVector;
use crate::quadform::{orbit_expand, transform_samples, LossObjective};
use crate::rng::{rademacher_sign, rng_for};

use super::{MCConfig, MCEstimate};

const TAG_SIGMA: u64 = 0x51;
const TAG_SUP_INIT: u64 = 0x52;

/// Which loss the complexity is taken over.
#[derive(Debug, Clone, Copy)]
pub enum LossVariant<'g> {
    /// The plain clipped loss.
    Plain,
    /// The orbit-averaged loss over the given group.
    OrbitAveraged(&'g FiniteGroup),
}

/// Draws the sign matrix: `n_sigma` rows of one sign per time index.
fn sigma_draws(mc: &MCConfig, horizon: usize) -> Vec<Vec<f64>> {
    (0..mc.n_sigma)
        .map(|draw| {
            let mut rng = rng_for(mc.seed, &[TAG_SIGMA, draw as u64]);
            (0..horizon).map(|_| rademacher_sign(&mut rng)).collect()
        })
        .collect()
}

/// Weights `σ_t q_t / N` aligned with the dataset's training samples.
fn signed_weights(dataset: &Dataset, q: &WeightVector, sigma: &[f64]) -> Result<Vec<f64>> {
    if q.len() != dataset.horizon() {
        return Err(Error::invalid(format!(
            "weight vector has {} entries, horizon is {}",
            q.len(),
            dataset.horizon()
        )));
    }
    if sigma.len() != dataset.horizon() {
        return Err(Error::invalid("sign vector length mismatch"));
    }
    let n = dataset.n_series() as f64;
    Ok(dataset
        .train_samples
        .iter()
        .map(|s| {
            let slot = dataset.weight_slot(s.t_index);
            sigma[slot] * q.get(slot) / n
        })
        .collect())
}

struct SupSolver {
    config: PgdConfig,
    restarts: usize,
    seed: u64,
    k: usize,
    d: usize,
    radius_hint: f64,
}

impl SupSolver {
    fn new(mc: &MCConfig, space: &ParameterSpace, k: usize, d: usize) -> SupSolver {
        SupSolver {
            config: PgdConfig {
                eta0: 0.5,
                decay: 0.0,
                max_iters: mc.sup_iters,
                max_backtracks: 30,
                tol: 1e-9,
            },
            restarts: mc.sup_restarts,
            seed: mc.seed,
            k,
            d,
            radius_hint: space.radius(),
        }
    }

    /// Maximizes the objective over `space` from the draw-indexed start
    /// set (origin, small random, boundary-scaled random), then folds in
    /// `candidates` by plain evaluation.
    fn solve(
        &self,
        objective: &LossObjective,
        space: &ParameterSpace,
        draw: usize,
        candidates: &[LinearForecaster],
    ) -> Result<(f64, LinearForecaster)> {
        let mut best: Option<(f64, LinearForecaster)> = None;
        for restart in 0..self.restarts + 1 {
            let init = if restart == 0 {
                LinearForecaster::zeros(self.k, self.d)
            } else {
                let seed = crate::rng::mix_chain(
                    self.seed,
                    &[TAG_SUP_INIT, draw as u64, restart as u64],
                );
                let raw = LinearForecaster::random(self.k, self.d, 0.1, seed);
                if restart == self.restarts {
                    // boundary start: scaled to the ball radius
                    let norm = raw.stacked_norm();
                    if norm > 0.0 && self.radius_hint > 0.0 {
                        raw.scale(self.radius_hint / norm)
                    } else {
                        raw
                    }
                } else {
                    raw
                }
            };
            let outcome = optim::maximize(
                |theta| objective.value_grad(theta),
                space,
                &init,
                &self.config,
            )?;
            let better = match &best {
                None => true,
                Some((v, _)) => outcome.value > *v,
            };
            if better {
                best = Some((outcome.value, outcome.theta));
            }
        }
        let (mut best_val, mut best_theta) = best.expect("at least one restart");
        for cand in candidates {
            let v = objective.value(cand)?;
            if v > best_val {
                best_val = v;
                best_theta = cand.clone();
            }
        }
        Ok((best_val, best_theta))
    }
}

fn build_objective<'a>(
    samples: &'a [Sample],
    weights: &[f64],
    loss_spec: &LossSpec,
    dataset: &Dataset,
    space: &ParameterSpace,
) -> LossObjective<'a> {
    LossObjective::build(
        samples,
        weights,
        loss_spec,
        dataset.spec.state_bound,
        space.radius(),
    )
}

/// Estimates the forecasting-form sequential Rademacher complexity of the
/// loss class over `space`.
pub fn estimate_seq_rademacher(
    dataset: &Dataset,
    q: &WeightVector,
    space: &ParameterSpace,
    variant: LossVariant,
    mc: &MCConfig,
    loss_spec: &LossSpec,
) -> Result<MCEstimate> {
    mc.validate()?;
    let sigmas = sigma_draws(mc, dataset.horizon());
    let solver = SupSolver::new(mc, space, dataset.k, dataset.dim());
    let mut per_draw = Vec::with_capacity(mc.n_sigma);
    for (draw, sigma) in sigmas.iter().enumerate() {
        let weights = signed_weights(dataset, q, sigma)?;
        let value = match variant {
            LossVariant::Plain => {
                let objective =
                    build_objective(&dataset.train_samples, &weights, loss_spec, dataset, space);
                solver.solve(&objective, space, draw, &[])?.0
            }
            LossVariant::OrbitAveraged(group) => {
                let (samples, weights) = orbit_expand(&dataset.train_samples, &weights, group)?;
                let objective = build_objective(&samples, &weights, loss_spec, dataset, space);
                solver.solve(&objective, space, draw, &[])?.0
            }
        };
        per_draw.push(value);
    }
    Ok(MCEstimate::from_draws(per_draw))
}

/// The variance-reduction term and its paired standard error.
#[derive(Debug, Clone)]
pub struct DeltaRecord {
    /// Paired differences, expected nonpositive.
    pub delta: MCEstimate,
    /// Sup of the orbit-averaged signed loss.
    pub sup_of_average: MCEstimate,
    /// Group average of the per-element sups.
    pub average_of_sup: MCEstimate,
}

/// Estimates `Δ = E_σ[sup_θ Σ σ_t q_t E_G L(θ, gZ_t)]
///              − E_σ E_G[sup_θ Σ σ_t q_t L(θ, gZ_t)]`
/// with common sign draws on both terms (paired differences).
///
/// Each per-element supremum also evaluates the first term's maximizer as
/// a feasible candidate, so the average-of-sups dominates the sup-of-
/// averages draw by draw and the sign of `Δ` survives the approximate
/// inner maximization.
pub fn estimate_delta(
    dataset: &Dataset,
    q: &WeightVector,
    group: &FiniteGroup,
    space: &ParameterSpace,
    mc: &MCConfig,
    loss_spec: &LossSpec,
) -> Result<DeltaRecord> {
    mc.validate()?;
    let sigmas = sigma_draws(mc, dataset.horizon());
    let solver = SupSolver::new(mc, space, dataset.k, dataset.dim());
    let mut deltas = Vec::with_capacity(mc.n_sigma);
    let mut term1 = Vec::with_capacity(mc.n_sigma);
    let mut term2 = Vec::with_capacity(mc.n_sigma);
    for (draw, sigma) in sigmas.iter().enumerate() {
        let weights = signed_weights(dataset, q, sigma)?;
        let (orbit_samples, orbit_weights) =
            orbit_expand(&dataset.train_samples, &weights, group)?;
        let bar_objective =
            build_objective(&orbit_samples, &orbit_weights, loss_spec, dataset, space);
        let (v_bar, theta_bar) = solver.solve(&bar_objective, space, draw, &[])?;

        let mut sup_sum = 0.0;
        for g in 0..group.order() {
            let transformed = transform_samples(&dataset.train_samples, group, g)?;
            let objective = build_objective(&transformed, &weights, loss_spec, dataset, space);
            let (v_g, _) =
                solver.solve(&objective, space, draw, std::slice::from_ref(&theta_bar))?;
            sup_sum += v_g;
        }
        let avg_sup = sup_sum / group.order() as f64;
        term1.push(v_bar);
        term2.push(avg_sup);
        deltas.push(v_bar - avg_sup);
    }
    Ok(DeltaRecord {
        delta: MCEstimate::from_draws(deltas),
        sup_of_average: MCEstimate::from_draws(term1),
        average_of_sup: MCEstimate::from_draws(term2),
    })
}

/// Paired comparison of the equivariant-class complexity against the
/// orbit-averaged-class complexity.
#[derive(Debug, Clone)]
pub struct Lemma1Record {
    pub r_eq: MCEstimate,
    pub r_bar: MCEstimate,
    /// Paired differences `r_eq − r_bar`, expected nonpositive.
    pub diff: MCEstimate,
    /// True when the paired mean is within two paired standard errors of
    /// nonpositivity.
    pub pass: bool,
}

/// Checks `R(L ∘ Θ_E) ≤ R(L̄ ∘ Θ)` on common sign draws.
///
/// The enclosing-side supremum evaluates the equivariant maximizer as a
/// feasible candidate (the orbit-averaged objective agrees with the plain
/// one on equivariant parameters), so the ordering holds draw by draw up
/// to float roundoff.
pub fn check_lemma1(
    dataset: &Dataset,
    q: &WeightVector,
    group: &FiniteGroup,
    radius: f64,
    mc: &MCConfig,
    loss_spec: &LossSpec,
) -> Result<Lemma1Record> {
    mc.validate()?;
    let eq_space = ParameterSpace::equivariant(radius, group.clone())?;
    let full_space = ParameterSpace::full(radius)?;
    let sigmas = sigma_draws(mc, dataset.horizon());
    let eq_solver = SupSolver::new(mc, &eq_space, dataset.k, dataset.dim());
    let bar_solver = SupSolver::new(mc, &full_space, dataset.k, dataset.dim());
    let mut eq_draws = Vec::with_capacity(mc.n_sigma);
    let mut bar_draws = Vec::with_capacity(mc.n_sigma);
    let mut diffs = Vec::with_capacity(mc.n_sigma);
    for (draw, sigma) in sigmas.iter().enumerate() {
        let weights = signed_weights(dataset, q, sigma)?;
        let eq_objective =
            build_objective(&dataset.train_samples, &weights, loss_spec, dataset, &eq_space);
        let (v_eq, theta_eq) = eq_solver.solve(&eq_objective, &eq_space, draw, &[])?;

        let (orbit_samples, orbit_weights) =
            orbit_expand(&dataset.train_samples, &weights, group)?;
        let bar_objective =
            build_objective(&orbit_samples, &orbit_weights, loss_spec, dataset, &full_space);
        let (v_bar, _) =
            bar_solver.solve(&bar_objective, &full_space, draw, std::slice::from_ref(&theta_eq))?;

        eq_draws.push(v_eq);
        bar_draws.push(v_bar);
        diffs.push(v_eq - v_bar);
    }
    let diff = MCEstimate::from_draws(diffs);
    let pass = diff.mean <= 2.0 * diff.stderr;
    Ok(Lemma1Record {
        r_eq: MCEstimate::from_draws(eq_draws),
        r_bar: MCEstimate::from_draws(bar_draws),
        diff,
        pass,
    })
}

/// All Rademacher-type estimates of one experiment on common sign draws.
#[derive(Debug, Clone)]
pub struct RademacherSuite {
    /// Plain loss over the full ball.
    pub r_plain: MCEstimate,
    /// Orbit-averaged loss over the full ball.
    pub r_bar: MCEstimate,
    /// Plain loss over the equivariant class.
    pub r_eq: MCEstimate,
    /// Plain loss over the approximately equivariant class.
    pub r_ae: MCEstimate,
    pub delta: DeltaRecord,
    pub lemma1: Lemma1Record,
}

/// Computes every complexity estimate on one shared set of sign draws,
/// with cross-candidate evaluations along the set inclusions
/// `Θ_E ⊆ Θ_AE ⊆ Θ` and `Θ_E ⊆ Θ` (orbit-averaged).
pub fn rademacher_suite(
    dataset: &Dataset,
    q: &WeightVector,
    group: &FiniteGroup,
    full_space: &ParameterSpace,
    eq_space: &ParameterSpace,
    ae_space: &ParameterSpace,
    mc: &MCConfig,
    loss_spec: &LossSpec,
) -> Result<RademacherSuite> {
    mc.validate()?;
    let sigmas = sigma_draws(mc, dataset.horizon());
    let k = dataset.k;
    let d = dataset.dim();
    let solver_full = SupSolver::new(mc, full_space, k, d);
    let solver_eq = SupSolver::new(mc, eq_space, k, d);
    let solver_ae = SupSolver::new(mc, ae_space, k, d);

    let n = mc.n_sigma;
    let (mut plain, mut bar, mut eq, mut ae) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let (mut deltas, mut term1, mut term2) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut lemma_diffs = Vec::with_capacity(n);

    for (draw, sigma) in sigmas.iter().enumerate() {
        let weights = signed_weights(dataset, q, sigma)?;

        let eq_objective =
            build_objective(&dataset.train_samples, &weights, loss_spec, dataset, eq_space);
        let (v_eq, theta_eq) = solver_eq.solve(&eq_objective, eq_space, draw, &[])?;

        let ae_objective =
            build_objective(&dataset.train_samples, &weights, loss_spec, dataset, ae_space);
        let (v_ae, theta_ae) =
            solver_ae.solve(&ae_objective, ae_space, draw, std::slice::from_ref(&theta_eq))?;

        let plain_objective =
            build_objective(&dataset.train_samples, &weights, loss_spec, dataset, full_space);
        let (v_plain, _) = solver_full.solve(
            &plain_objective,
            full_space,
            draw,
            &[theta_eq.clone(), theta_ae],
        )?;

        let (orbit_samples, orbit_weights) =
            orbit_expand(&dataset.train_samples, &weights, group)?;
        let bar_objective =
            build_objective(&orbit_samples, &orbit_weights, loss_spec, dataset, full_space);
        let (v_bar, theta_bar) =
            solver_full.solve(&bar_objective, full_space, draw, std::slice::from_ref(&theta_eq))?;

        let mut sup_sum = 0.0;
        for g in 0..group.order() {
            let transformed = transform_samples(&dataset.train_samples, group, g)?;
            let objective =
                build_objective(&transformed, &weights, loss_spec, dataset, full_space);
            let (v_g, _) =
                solver_full.solve(&objective, full_space, draw, std::slice::from_ref(&theta_bar))?;
            sup_sum += v_g;
        }
        let avg_sup = sup_sum / group.order() as f64;

        plain.push(v_plain);
        bar.push(v_bar);
        eq.push(v_eq);
        ae.push(v_ae);
        term1.push(v_bar);
        term2.push(avg_sup);
        deltas.push(v_bar - avg_sup);
        lemma_diffs.push(v_eq - v_bar);
    }

    let diff = MCEstimate::from_draws(lemma_diffs);
    let pass = diff.mean <= 2.0 * diff.stderr;
    Ok(RademacherSuite {
        r_plain: MCEstimate::from_draws(plain),
        r_bar: MCEstimate::from_draws(bar.clone()),
        r_eq: MCEstimate::from_draws(eq.clone()),
        r_ae: MCEstimate::from_draws(ae),
        delta: DeltaRecord {
            delta: MCEstimate::from_draws(deltas),
            sup_of_average: MCEstimate::from_draws(term1),
            average_of_sup: MCEstimate::from_draws(term2),
        },
        lemma1: Lemma1Record {
            r_eq: MCEstimate::from_draws(eq),
            r_bar: MCEstimate::from_draws(bar),
            diff,
            pass,
        },
    })
}

/// Convenience: mean loss of `theta` at the held-out target samples.
pub fn target_risk(
    theta: &LinearForecaster,
    targets: &[Sample],
    loss_spec: &LossSpec,
) -> Result<f64> {
    let mut sum = 0.0;
    for s in targets {
        sum += crate::forecaster::loss(theta, s, loss_spec)?;
    }
    Ok(sum / targets.len() as f64)
}

/// Flattens samples for transport computations.
pub fn flatten_samples(samples: &[&Sample]) -> Vec<Array1<f64>> {
    samples.iter().map(|s| s.flatten()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_dataset, GeneratorSpec};

    fn loss16() -> LossSpec {
        LossSpec::new(16.0).unwrap()
    }

    fn small_mc(n_sigma: usize, seed: u64) -> MCConfig {
        MCConfig {
            n_sigma,
            n_fresh: 32,
            sup_restarts: 2,
            sup_iters: 40,
            seed,
        }
    }

    #[test]
    fn zero_radius_estimate_is_sign_noise() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 8, 12, 1, 3).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let space = ParameterSpace::full(0.0).unwrap();
        let est = estimate_seq_rademacher(
            &ds,
            &q,
            &space,
            LossVariant::Plain,
            &small_mc(512, 4),
            &loss16(),
        )
        .unwrap();
        assert!(
            est.mean.abs() <= 2.0 * est.stderr,
            "mean {} stderr {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn zero_weights_give_exactly_zero() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 4, 10, 1, 5).unwrap();
        let q = WeightVector::raw(vec![0.0; ds.horizon()]).unwrap();
        let space = ParameterSpace::full(1.0).unwrap();
        let est = estimate_seq_rademacher(
            &ds,
            &q,
            &space,
            LossVariant::Plain,
            &small_mc(8, 6),
            &loss16(),
        )
        .unwrap();
        assert!(est.per_draw.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orbit_variant_with_trivial_group_matches_plain_bitwise() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 6, 12, 1, 7).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let space = ParameterSpace::full(1.0).unwrap();
        let trivial = FiniteGroup::trivial(2).unwrap();
        let mc = small_mc(16, 11);
        let plain =
            estimate_seq_rademacher(&ds, &q, &space, LossVariant::Plain, &mc, &loss16()).unwrap();
        let bar = estimate_seq_rademacher(
            &ds,
            &q,
            &space,
            LossVariant::OrbitAveraged(&trivial),
            &mc,
            &loss16(),
        )
        .unwrap();
        assert_eq!(plain.per_draw, bar.per_draw);
    }

    #[test]
    fn estimates_monotone_in_radius() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 8, 12, 1, 13).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let mc = small_mc(48, 17);
        let small = estimate_seq_rademacher(
            &ds,
            &q,
            &ParameterSpace::full(0.5).unwrap(),
            LossVariant::Plain,
            &mc,
            &loss16(),
        )
        .unwrap();
        let large = estimate_seq_rademacher(
            &ds,
            &q,
            &ParameterSpace::full(1.0).unwrap(),
            LossVariant::Plain,
            &mc,
            &loss16(),
        )
        .unwrap();
        assert!(
            small.mean <= large.mean + 2.0 * (small.stderr + large.stderr),
            "small {} large {}",
            small.mean,
            large.mean
        );
    }

    #[test]
    fn doubling_draws_is_stable() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 6, 10, 1, 19).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let space = ParameterSpace::full(1.0).unwrap();
        for rep in 0..10 {
            let small = estimate_seq_rademacher(
                &ds,
                &q,
                &space,
                LossVariant::Plain,
                &small_mc(32, 100 + rep),
                &loss16(),
            )
            .unwrap();
            let large = estimate_seq_rademacher(
                &ds,
                &q,
                &space,
                LossVariant::Plain,
                &small_mc(64, 100 + rep),
                &loss16(),
            )
            .unwrap();
            assert!(
                (large.mean - small.mean).abs() <= 4.0 * small.stderr.max(1e-12),
                "rep {rep}: {} vs {} (stderr {})",
                small.mean,
                large.mean,
                small.stderr
            );
        }
    }

    #[test]
    fn delta_zero_for_trivial_group() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 6, 12, 1, 23).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let space = ParameterSpace::full(1.0).unwrap();
        let trivial = FiniteGroup::trivial(2).unwrap();
        let rec = estimate_delta(&ds, &q, &trivial, &space, &small_mc(16, 29), &loss16()).unwrap();
        assert!(rec.delta.per_draw.iter().all(|&v| v == 0.0), "{:?}", rec.delta.per_draw);
    }

    #[test]
    fn delta_zero_for_zero_radius() {
        let spec = GeneratorSpec {
            sym_break: 0.0,
            ..GeneratorSpec::default()
        };
        let ds = make_dataset(&spec, 6, 12, 1, 31).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let space = ParameterSpace::full(0.0).unwrap();
        let group = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let rec = estimate_delta(&ds, &q, &group, &space, &small_mc(8, 37), &loss16()).unwrap();
        // Sup over a single point commutes with the group average; only
        // float summation order distinguishes the two terms.
        for &v in &rec.delta.per_draw {
            assert!(v.abs() <= 1e-12, "delta draw {v}");
        }
    }

    #[test]
    fn delta_nonpositive_on_symmetric_data() {
        let spec = GeneratorSpec {
            sym_break: 0.0,
            ..GeneratorSpec::default()
        };
        let group = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let space = ParameterSpace::full(1.0).unwrap();
        for seed in 0..5 {
            let ds = make_dataset(&spec, 8, 16, 1, 500 + seed).unwrap();
            let q = WeightVector::uniform(ds.horizon()).unwrap();
            let rec =
                estimate_delta(&ds, &q, &group, &space, &small_mc(32, 41 + seed), &loss16())
                    .unwrap();
            assert!(
                rec.delta.mean <= 2.0 * rec.delta.stderr,
                "seed {seed}: delta {} stderr {}",
                rec.delta.mean,
                rec.delta.stderr
            );
            // The candidate evaluation makes the ordering hold per draw.
            for &v in &rec.delta.per_draw {
                assert!(v <= 1e-10, "draw value {v}");
            }
        }
    }

    #[test]
    fn lemma1_trivial_group_diff_exactly_zero() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 6, 12, 1, 43).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let trivial = FiniteGroup::trivial(2).unwrap();
        let rec = check_lemma1(&ds, &q, &trivial, 1.0, &small_mc(16, 47), &loss16()).unwrap();
        assert!(rec.diff.per_draw.iter().all(|&v| v == 0.0));
        assert!(rec.pass);
    }

    #[test]
    fn lemma1_holds_on_symmetric_data() {
        let spec = GeneratorSpec {
            sym_break: 0.0,
            ..GeneratorSpec::default()
        };
        let group = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        for seed in 0..5 {
            let ds = make_dataset(&spec, 8, 16, 1, 700 + seed).unwrap();
            let q = WeightVector::uniform(ds.horizon()).unwrap();
            let rec =
                check_lemma1(&ds, &q, &group, 1.0, &small_mc(32, 53 + seed), &loss16()).unwrap();
            assert!(rec.pass, "seed {seed}: diff {}", rec.diff.mean);
            for &v in &rec.diff.per_draw {
                assert!(v <= 1e-10, "draw diff {v}");
            }
        }
    }

    #[test]
    fn lemma1_zero_radius_degenerates() {
        let spec = GeneratorSpec::default();
        let ds = make_dataset(&spec, 4, 10, 1, 59).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let group = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let rec = check_lemma1(&ds, &q, &group, 0.0, &small_mc(8, 61), &loss16()).unwrap();
        for &v in &rec.diff.per_draw {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn suite_agrees_with_standalone_estimates() {
        let spec = GeneratorSpec {
            sym_break: 0.1,
            ..GeneratorSpec::default()
        };
        let ds = make_dataset(&spec, 6, 12, 1, 67).unwrap();
        let q = WeightVector::uniform(ds.horizon()).unwrap();
        let group = FiniteGroup::cyclic_rotation(4, 2).unwrap();
        let mc = small_mc(16, 71);
        let full = ParameterSpace::full(1.0).unwrap();
        let eq = ParameterSpace::equivariant(1.0, group.clone()).unwrap();
        let ae = ParameterSpace::approx_equivariant(1.0, 0.1, group.clone(), 1.0).unwrap();
        let suite =
            rademacher_suite(&ds, &q, &group, &full, &eq, &ae, &mc, &loss16()).unwrap();
        // The eq estimate has no candidates in either path, so it matches
        // the standalone call bitwise.
        let eq_standalone =
            estimate_seq_rademacher(&ds, &q, &eq, LossVariant::Plain, &mc, &loss16()).unwrap();
        assert_eq!(suite.r_eq.per_draw, eq_standalone.per_draw);
        // Candidate evaluations only tighten the lower bounds.
        let plain_standalone =
            estimate_seq_rademacher(&ds, &q, &full, LossVariant::Plain, &mc, &loss16()).unwrap();
        for (with_cand, without) in suite
            .r_plain
            .per_draw
            .iter()
            .zip(plain_standalone.per_draw.iter())
        {
            assert!(with_cand >= without);
        }
        // Set inclusions hold per draw thanks to the candidate chain.
        for ((e, a), p) in suite
            .r_eq
            .per_draw
            .iter()
            .zip(suite.r_ae.per_draw.iter())
            .zip(suite.r_plain.per_draw.iter())
        {
            assert!(e <= a && a <= p);
        }
    }
}
