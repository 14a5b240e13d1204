//! Benchmark data from stochastic differential equations with additive noise
//! `dX = f(X) dt + sigma dB`.
//!
//! Integration uses the second-order stochastic Runge-Kutta (stochastic Heun)
//! scheme with the same Gaussian increment in predictor and corrector.
//! Every series draws from its own ChaCha8 stream (`stream = series index`),
//! so results do not depend on how series are scheduled across threads.
//! Gaussians come from the inverse normal CDF applied to open-interval
//! uniforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::{reindex_interleave, Dataset};
use crate::error::{Error, Result};

pub type DriftFn = fn(&[f64], &mut [f64]);

#[derive(Debug, Clone)]
pub struct SdeModel {
    name: String,
    dim: usize,
    drift: DriftFn,
    sigma: f64,
}

impl SdeModel {
    pub fn new(name: impl Into<String>, dim: usize, drift: DriftFn, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("model dimension must be positive"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::param(format!("noise amplitude must be >= 0, got {sigma}")));
        }
        Ok(SdeModel {
            name: name.into(),
            dim,
            drift,
            sigma,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.drift)(x, &mut out);
        out
    }
}

fn double_well_drift(x: &[f64], out: &mut [f64]) {
    out[0] = x[0] * (1.0 - x[0] * x[0]);
}

fn saddle_drift(x: &[f64], out: &mut [f64]) {
    let (p, q) = (x[0], x[1]);
    out[0] = q;
    out[1] = -4.0 * q + p * (1.0 - p * p);
}

/// `dx = x (1 - x^2) dt + sigma dB`: sinks at +-1, source at 0.
pub fn double_well_1d(sigma: f64) -> SdeModel {
    SdeModel::new("dw1d", 1, double_well_drift, sigma).expect("valid builtin")
}

/// `dx = y dt + sigma dB_x`, `dy = (-4y + x (1 - x^2)) dt + sigma dB_y`:
/// sinks at (+-1, 0), saddle at the origin.
pub fn saddle_2d(sigma: f64) -> SdeModel {
    SdeModel::new("saddle2d", 2, saddle_drift, sigma).expect("valid builtin")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinModel {
    Dw1d,
    Saddle2d,
}

impl BuiltinModel {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dw1d" => Ok(BuiltinModel::Dw1d),
            "saddle2d" => Ok(BuiltinModel::Saddle2d),
            other => Err(Error::param(format!("unknown model {other:?} (expected dw1d or saddle2d)"))),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            BuiltinModel::Dw1d => 1,
            BuiltinModel::Saddle2d => 2,
        }
    }

    pub fn build(self, sigma: f64) -> SdeModel {
        match self {
            BuiltinModel::Dw1d => double_well_1d(sigma),
            BuiltinModel::Saddle2d => saddle_2d(sigma),
        }
    }

    /// Noise variance used by the reference experiments.
    pub fn reference_sigma2(self) -> f64 {
        match self {
            BuiltinModel::Dw1d => 0.2,
            BuiltinModel::Saddle2d => 0.08,
        }
    }
}

/// One step: `F1 = f(x)`, `F2 = f(x + dt F1 + sigma sqrt(dt) xi)`,
/// `x + dt/2 (F1 + F2) + sigma sqrt(dt) xi`.
pub fn srk2_step(model: &SdeModel, state: &[f64], dt: f64, xi: &[f64]) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::param(format!("time step must be positive, got {dt}")));
    }
    if state.len() != model.dim || xi.len() != model.dim {
        return Err(Error::param("state and noise must match the model dimension"));
    }
    let mut x = state.to_vec();
    let mut scratch = Scratch::new(model.dim);
    step_in_place(model, &mut x, dt, xi, &mut scratch);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::NonFiniteState)
    }
}

struct Scratch {
    f1: Vec<f64>,
    f2: Vec<f64>,
    pred: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            f1: vec![0.0; dim],
            f2: vec![0.0; dim],
            pred: vec![0.0; dim],
        }
    }
}

fn step_in_place(model: &SdeModel, x: &mut [f64], dt: f64, xi: &[f64], s: &mut Scratch) {
    let kick = model.sigma * dt.sqrt();
    (model.drift)(x, &mut s.f1);
    for l in 0..x.len() {
        s.pred[l] = x[l] + dt * s.f1[l] + kick * xi[l];
    }
    (model.drift)(&s.pred, &mut s.f2);
    for l in 0..x.len() {
        x[l] += 0.5 * dt * (s.f1[l] + s.f2[l]) + kick * xi[l];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_series: usize,
    /// Recorded steps after the initial point; each series has `steps + 1` points.
    pub steps: usize,
    pub dt_out: f64,
    pub dt_int: f64,
    /// Initial points are uniform on this box, one interval per axis.
    #[serde(rename = "box")]
    pub init_box: Vec<(f64, f64)>,
    pub seed: u64,
}

impl SimConfig {
    fn substeps(&self) -> Result<usize> {
        if !(self.dt_int > 0.0 && self.dt_out >= self.dt_int) {
            return Err(Error::param(format!(
                "need 0 < dt_int <= dt_out, got dt_int = {}, dt_out = {}",
                self.dt_int, self.dt_out
            )));
        }
        let ratio = self.dt_out / self.dt_int;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * k {
            return Err(Error::param(format!(
                "dt_out / dt_int = {ratio} is not an integer"
            )));
        }
        Ok(k as usize)
    }
}

/// Serialized form: `{model, n_series, steps, dt_out, dt_int, sigma2, box, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub model: BuiltinModel,
    pub sigma2: f64,
    #[serde(flatten)]
    pub config: SimConfig,
}

impl SimulationSpec {
    pub fn model(&self) -> Result<SdeModel> {
        if !(self.sigma2 >= 0.0) {
            return Err(Error::param(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        Ok(self.model.build(self.sigma2.sqrt()))
    }

    pub fn run(&self) -> Result<Dataset> {
        simulate(&self.model()?, &self.config)
    }
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn series_rng(seed: u64, series: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(series as u64);
    rng
}

fn simulate_series(model: &SdeModel, cfg: &SimConfig, substeps: usize, k: usize) -> Result<Vec<f64>> {
    let dim = model.dim;
    let normal = Normal::standard();
    let mut rng = series_rng(cfg.seed, k);
    let mut x: Vec<f64> = cfg
        .init_box
        .iter()
        .map(|&(lo, hi)| lo + (hi - lo) * open_unit(&mut rng))
        .collect();
    let mut out = Vec::with_capacity((cfg.steps + 1) * dim);
    out.extend_from_slice(&x);
    let mut xi = vec![0.0; dim];
    let mut scratch = Scratch::new(dim);
    for step in 1..=cfg.steps {
        for _ in 0..substeps {
            for z in xi.iter_mut() {
                *z = normal.inverse_cdf(open_unit(&mut rng));
            }
            step_in_place(model, &mut x, cfg.dt_int, &xi, &mut scratch);
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Blowup { series: k, step });
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// `n_series` trajectories from uniform initial points, recorded every
/// `dt_out`. Series ids are the series indices.
pub fn simulate(model: &SdeModel, cfg: &SimConfig) -> Result<Dataset> {
    if cfg.init_box.len() != model.dim {
        return Err(Error::param(format!(
            "initial box has {} axes, model has {}",
            cfg.init_box.len(),
            model.dim
        )));
    }
    if let Some(&(lo, hi)) = cfg.init_box.iter().find(|&&(lo, hi)| !(lo <= hi && lo.is_finite() && hi.is_finite())) {
        return Err(Error::param(format!("invalid initial interval [{lo}, {hi}]")));
    }
    let substeps = cfg.substeps()?;
    let series = (0..cfg.n_series)
        .into_par_iter()
        .map(|k| simulate_series(model, cfg, substeps, k))
        .collect::<Result<Vec<_>>>()?;
    let mut d = Dataset::new(model.dim)?;
    for (k, flat) in series.into_iter().enumerate() {
        d.push_series(k.to_string(), &flat)?;
    }
    Ok(d)
}

/// Reference experiment shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Many one-step pairs: 10^6 initial points, one step of 0.1.
    D1,
    /// Few long series: 30 series of 400 points spaced 0.025, re-indexed
    /// into 120 series of 100 points spaced 0.1.
    D2,
}

/// Interleave stride turning the D2 series into series with spacing 0.1.
pub const D2_STRIDE: usize = 4;

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "D1" | "d1" => Ok(Preset::D1),
            "D2" | "d2" => Ok(Preset::D2),
            other => Err(Error::param(format!("unknown preset {other:?} (expected D1 or D2)"))),
        }
    }

    pub fn spec(self, model: BuiltinModel, seed: u64) -> SimulationSpec {
        let (n_series, steps, dt_out) = match self {
            Preset::D1 => (1_000_000, 1, 0.1),
            Preset::D2 => (30, 399, 0.025),
        };
        SimulationSpec {
            model,
            sigma2: model.reference_sigma2(),
            config: SimConfig {
                n_series,
                steps,
                dt_out,
                dt_int: 0.001,
                init_box: vec![(-2.0, 2.0); model.dim()],
                seed,
            },
        }
    }

    /// Simulates `spec` and applies the preset's re-indexing.
    pub fn generate(self, spec: &SimulationSpec) -> Result<Dataset> {
        let raw = spec.run()?;
        match self {
            Preset::D1 => Ok(raw),
            Preset::D2 => reindex_interleave(&raw, D2_STRIDE),
        }
    }
}
