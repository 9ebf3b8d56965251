//! Synthetic non-stationary dynamics and dataset construction.
//!
//! Each series follows the deterministic step map
//!
//! ```text
//! x_{t+1} = clip_B( c_t · R(ω_t) · x_t + ε · B · x_t )
//! ```
//!
//! where `R` is a (block-)planar rotation, `c_t` a damping factor, both
//! drifting linearly in `t` and perturbed per series by i.i.d.-drawn
//! offsets, `B = diag(1, -1, 1, -1, …)` a fixed reflection-like matrix,
//! and `ε` the symmetry-breaking strength. At `ε = 0` the map commutes
//! with every block rotation, so the data are exactly symmetric under the
//! cyclic rotation groups; `ε` is the single knob controlling how far the
//! dynamics deviate from equivariance. States are clipped into the ball of
//! radius `state_bound`, which keeps the clipped squared loss bounded.
//!
//! Optional observation noise is added to the stored states (the
//! underlying trajectory stays clean) and re-clipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{mix64, rng_for, standard_normal};
use rand::Rng;

const TAG_PARAMS: u64 = 0x11;
const TAG_INIT: u64 = 0x12;
const TAG_NOISE: u64 = 0x13;

/// Ranges for the per-series parameter draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDist {
    /// Per-series rotation-rate offset is uniform in `[-omega_jitter, omega_jitter]`.
    pub omega_jitter: f64,
    /// Per-series damping offset is uniform in `[-damping_jitter, damping_jitter]`.
    pub damping_jitter: f64,
}

impl Default for ParamDist {
    fn default() -> Self {
        ParamDist {
            omega_jitter: 0.3,
            damping_jitter: 0.02,
        }
    }
}

/// Configuration of the synthetic dynamics family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    /// State dimension (even).
    pub dim: usize,
    /// Symmetry-breaking strength ε ≥ 0.
    pub sym_break: f64,
    /// Base rotation rate (radians per step).
    pub omega0: f64,
    /// Linear drift of the rotation rate per step.
    pub omega_drift: f64,
    /// Base contraction factor in (0, 1].
    pub damping0: f64,
    /// Linear drift of the contraction factor per step.
    pub damping_drift: f64,
    /// Observation noise standard deviation (0 disables noise).
    pub noise_std: f64,
    /// Ranges for per-series parameter draws.
    pub param_dist: ParamDist,
    /// Radius of the ball states are clipped into.
    pub state_bound: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            dim: 2,
            sym_break: 0.0,
            omega0: 0.5,
            omega_drift: 0.02,
            damping0: 0.97,
            damping_drift: 0.0,
            noise_std: 0.05,
            param_dist: ParamDist::default(),
            state_bound: 1.0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim % 2 != 0 {
            return Err(Error::invalid("dim must be positive and even"));
        }
        if self.sym_break < 0.0 {
            return Err(Error::invalid("sym_break must be nonnegative"));
        }
        if !(self.damping0 > 0.0 && self.damping0 <= 1.0) {
            return Err(Error::invalid("damping0 must lie in (0, 1]"));
        }
        if self.state_bound <= 0.0 {
            return Err(Error::invalid("state_bound must be positive"));
        }
        if self.noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be nonnegative"));
        }
        if self.param_dist.omega_jitter < 0.0 || self.param_dist.damping_jitter < 0.0 {
            return Err(Error::invalid("param jitter ranges must be nonnegative"));
        }
        Ok(())
    }

    /// The fixed symmetry-breaking matrix `diag(1, -1, 1, -1, …)`.
    pub fn breaking_matrix(&self) -> Array2<f64> {
        let mut b = Array2::<f64>::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            b[[i, i]] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        b
    }

    /// Rotation rate at step `t` for the given per-series params.
    pub fn omega_at(&self, t: usize, params: &SeriesParams) -> f64 {
        self.omega0 + params.omega_offset + (t as f64) * self.omega_drift
    }

    /// Damping factor at step `t`, clipped into (0, 1].
    pub fn damping_at(&self, t: usize, params: &SeriesParams) -> f64 {
        (self.damping0 + params.damping_offset + (t as f64) * self.damping_drift)
            .clamp(1e-6, 1.0)
    }

    /// The full linear step map `c_t R(ω_t) + ε B` at time `t`.
    pub fn step_matrix(&self, t: usize, params: &SeriesParams) -> Array2<f64> {
        let rot = linalg::block_rotation(self.dim, self.omega_at(t, params));
        let mut m = rot * self.damping_at(t, params);
        if self.sym_break != 0.0 {
            m += &(self.breaking_matrix() * self.sym_break);
        }
        m
    }
}

/// Per-series system parameters, drawn i.i.d. from [`ParamDist`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub omega_offset: f64,
    pub damping_offset: f64,
}

/// One observed trajectory of length `T + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub states: Vec<Array1<f64>>,
    pub params: SeriesParams,
    pub seed: u64,
}

/// One windowed training or target sample `Z_t = (lag window, target)`.
///
/// `window[0]` is the most recent lag state; `window[j]` is the state
/// `j + 1` steps before the target. `t_index` is the 1-based time index of
/// the target state, in `[k+1, T+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub window: Vec<Array1<f64>>,
    pub target: Array1<f64>,
    pub t_index: usize,
    pub series_index: usize,
}

impl Sample {
    /// Flattens the sample to a point in `R^{(k+1)d}`: lag states in window
    /// order, then the target.
    pub fn flatten(&self) -> Array1<f64> {
        let d = self.target.len();
        let mut out = Array1::<f64>::zeros((self.window.len() + 1) * d);
        for (j, x) in self.window.iter().enumerate() {
            out.slice_mut(ndarray::s![j * d..(j + 1) * d]).assign(x);
        }
        out.slice_mut(ndarray::s![self.window.len() * d..])
            .assign(&self.target);
        out
    }
}

/// A full experiment dataset: `N` series plus their windowed samples.
///
/// Training samples cover target times `t = k+1 … T`; the sample at
/// `t = T+1` per series is held out as the forecasting target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: Vec<TimeSeries>,
    pub k: usize,
    pub t_len: usize,
    pub spec: GeneratorSpec,
    pub train_samples: Vec<Sample>,
    pub target_samples: Vec<Sample>,
}

/// One deterministic step of the dynamics.
pub fn step(spec: &GeneratorSpec, x: &Array1<f64>, t: usize, params: &SeriesParams) -> Array1<f64> {
    let m = spec.step_matrix(t, params);
    clip_to_ball(m.dot(x), spec.state_bound)
}

fn clip_to_ball(x: Array1<f64>, radius: f64) -> Array1<f64> {
    let norm = linalg::norm2(&x);
    if norm > radius {
        x * (radius / norm)
    } else {
        x
    }
}

/// Draws a point uniformly from the ball of radius `r` by rejection from
/// the enclosing cube.
fn uniform_ball(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, r: f64) -> Array1<f64> {
    loop {
        let x = Array1::from_iter((0..dim).map(|_| rng.gen_range(-r..=r)));
        if linalg::norm2(&x) <= r {
            return x;
        }
    }
}

/// Simulates one series of `T + 1` states, bit-reproducible from `seed`.
///
/// Per-series parameters come from the `params` stream of `seed`, the
/// initial state is uniform in the ball of radius `state_bound / 2`, and
/// observation noise (if any) is added to every stored state and re-clipped.
pub fn simulate_series(spec: &GeneratorSpec, t_len: usize, k: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::invalid("lag count k must be at least 1"));
    }
    if t_len < k + 1 {
        return Err(Error::invalid(format!(
            "series length T = {t_len} must be at least k + 1 = {}",
            k + 1
        )));
    }
    let mut params_rng = rng_for(seed, &[TAG_PARAMS]);
    let params = SeriesParams {
        omega_offset: if spec.param_dist.omega_jitter > 0.0 {
            params_rng.gen_range(-spec.param_dist.omega_jitter..=spec.param_dist.omega_jitter)
        } else {
            0.0
        },
        damping_offset: if spec.param_dist.damping_jitter > 0.0 {
            params_rng.gen_range(-spec.param_dist.damping_jitter..=spec.param_dist.damping_jitter)
        } else {
            0.0
        },
    };

    let mut init_rng = rng_for(seed, &[TAG_INIT]);
    let mut clean = Vec::with_capacity(t_len + 1);
    clean.push(uniform_ball(&mut init_rng, spec.dim, spec.state_bound / 2.0));
    for t in 1..=t_len {
        let next = step(spec, &clean[t - 1], t, &params);
        clean.push(next);
    }

    let states = if spec.noise_std > 0.0 {
        let mut noise_rng = rng_for(seed, &[TAG_NOISE]);
        clean
            .into_iter()
            .map(|x| {
                let noisy = Array1::from_iter(
                    x.iter()
                        .map(|&v| v + spec.noise_std * standard_normal(&mut noise_rng)),
                );
                clip_to_ball(noisy, spec.state_bound)
            })
            .collect()
    } else {
        clean
    };

    Ok(TimeSeries {
        states,
        params,
        seed,
    })
}

/// Builds `N` series with child seeds `mix64(seed, i)` and extracts the
/// windowed samples.
pub fn make_dataset(
    spec: &GeneratorSpec,
    n_series: usize,
    t_len: usize,
    k: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_series == 0 {
        return Err(Error::invalid("dataset needs at least one series"));
    }
    let series: Vec<TimeSeries> = (0..n_series)
        .map(|i| simulate_series(spec, t_len, k, mix64(seed, i as u64)))
        .collect::<Result<_>>()?;
    let (train_samples, target_samples) = extract_samples(&series, t_len, k);
    Ok(Dataset {
        series,
        k,
        t_len,
        spec: spec.clone(),
        train_samples,
        target_samples,
    })
}

fn extract_samples(series: &[TimeSeries], t_len: usize, k: usize) -> (Vec<Sample>, Vec<Sample>) {
    let mut train = Vec::with_capacity(series.len() * (t_len - k));
    let mut targets = Vec::with_capacity(series.len());
    for (i, s) in series.iter().enumerate() {
        // states[j] holds X_{j+1}; the sample at target time t uses lags
        // X_{t-1}, …, X_{t-k} (most recent first).
        for t in (k + 1)..=(t_len + 1) {
            let window: Vec<Array1<f64>> =
                (1..=k).map(|j| s.states[t - j - 1].clone()).collect();
            let sample = Sample {
                window,
                target: s.states[t - 1].clone(),
                t_index: t,
                series_index: i,
            };
            if t <= t_len {
                train.push(sample);
            } else {
                targets.push(sample);
            }
        }
    }
    (train, targets)
}

impl Dataset {
    pub fn n_series(&self) -> usize {
        self.series.len()
    }

    /// Number of weighted time indices, `T - k`.
    pub fn horizon(&self) -> usize {
        self.t_len - self.k
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Maps a training sample's `t_index` to its weight-vector slot.
    pub fn weight_slot(&self, t_index: usize) -> usize {
        t_index - self.k - 1
    }

    /// Training samples with target time `t` pooled across series.
    pub fn samples_at(&self, t_index: usize) -> Vec<&Sample> {
        self.train_samples
            .iter()
            .filter(|s| s.t_index == t_index)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let n = self.series.len();
        let expected_train = n * (self.t_len - self.k);
        if self.train_samples.len() != expected_train {
            return Err(Error::integrity(format!(
                "expected {expected_train} train samples, found {}",
                self.train_samples.len()
            )));
        }
        if self.target_samples.len() != n {
            return Err(Error::integrity(format!(
                "expected {n} target samples, found {}",
                self.target_samples.len()
            )));
        }
        let bound = self.spec.state_bound * (1.0 + 1e-12);
        for (i, s) in self.series.iter().enumerate() {
            if s.states.len() != self.t_len + 1 {
                return Err(Error::integrity(format!(
                    "series {i} has {} states, expected {}",
                    s.states.len(),
                    self.t_len + 1
                )));
            }
            for (t, x) in s.states.iter().enumerate() {
                if x.len() != self.spec.dim {
                    return Err(Error::integrity(format!(
                        "series {i} state {t} has dimension {}",
                        x.len()
                    )));
                }
                if !x.iter().all(|v| v.is_finite()) {
                    return Err(Error::integrity(format!(
                        "series {i} state {t} has non-finite entries"
                    )));
                }
                if linalg::norm2(x) > bound {
                    return Err(Error::integrity(format!(
                        "series {i} state {t} escapes the state bound"
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Serialization: JSON lines, one record per series, floats with 17
// significant digits so values round-trip exactly.
// ---------------------------------------------------------------------------

struct Dec17Formatter;

impl serde_json::ser::Formatter for Dec17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Dec17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: usize,
    k: usize,
    spec: GeneratorSpec,
}

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    i: usize,
    seed: u64,
    params: SeriesParams,
    states: Vec<Vec<f64>>,
}

/// Writes the dataset as JSON lines: a header record followed by one
/// record per series.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let header = DatasetHeader {
        n: dataset.n_series(),
        t: dataset.t_len,
        k: dataset.k,
        spec: dataset.spec.clone(),
    };
    writeln!(w, "{}", to_json_17(&header)?)?;
    for (i, s) in dataset.series.iter().enumerate() {
        let rec = SeriesRecord {
            i,
            seed: s.seed,
            params: s.params,
            states: s.states.iter().map(|x| x.to_vec()).collect(),
        };
        writeln!(w, "{}", to_json_17(&rec)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a dataset written by [`save_dataset`], re-extracting the windowed
/// samples and validating every invariant.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty file, expected a header record".into(),
        })?;
    let header_line = header_line?;
    let header: DatasetHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    header.spec.validate().map_err(|e| {
        Error::integrity(format!("header spec invalid: {e}"))
    })?;

    let mut series: Vec<TimeSeries> = Vec::with_capacity(header.n);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeriesRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad series record (last good line {}): {e}", line_no - 1),
        })?;
        if rec.i != series.len() {
            return Err(Error::integrity(format!(
                "series record {} out of order at line {line_no}",
                rec.i
            )));
        }
        let states: Vec<Array1<f64>> = rec.states.into_iter().map(Array1::from_vec).collect();
        series.push(TimeSeries {
            states,
            params: rec.params,
            seed: rec.seed,
        });
    }

    if series.len() != header.n {
        return Err(Error::integrity(format!(
            "header says N = {}, body has {} series",
            header.n,
            series.len()
        )));
    }
    let (train_samples, target_samples) = extract_samples(&series, header.t, header.k);
    let dataset = Dataset {
        series,
        k: header.k,
        t_len: header.t,
        spec: header.spec,
        train_samples,
        target_samples,
    };
    dataset.validate()?;
    Ok(dataset)
}
