//! Exponential Euler integration of the Galerkin system with the linear
//! part and the noise sampled exactly in law on every step.
//!
//! Random streams: path `i` uses ChaCha8 seeded from the master seed with
//! stream id `i`; within a step the modes draw their stable variates in
//! increasing mode order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::stable::{sample_standard_stable, StableIndex};
use crate::stats::{mean_stderr, quantile_sorted, sorted_copy};
use crate::special::gamma_fn;
use crate::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub h: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(t_end: f64, h: f64, n_paths: usize, master_seed: u64) -> Result<Self> {
        let cfg = Self { t_end, h, n_paths, master_seed, record_stride: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(self, record_stride: usize) -> Result<Self> {
        let cfg = Self { record_stride, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("need h > 0 and T >= 0 (h = {}, T = {})", self.h, self.t_end)));
        }
        if self.t_end > 0.0 && self.h > self.t_end * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("step h = {} exceeds horizon T = {}", self.h, self.t_end)));
        }
        if self.n_paths == 0 || self.record_stride == 0 {
            return Err(Error::InvalidParameter("n_paths and record_stride must be positive".into()));
        }
        steps_for(self.t_end, self.h).map(|_| ())
    }

    pub fn steps(&self) -> usize {
        steps_for(self.t_end, self.h).expect("validated config")
    }
}

/// Number of steps of size `h` covering `[0, t]`; `t` must be a multiple of `h`.
pub fn steps_for(t: f64, h: f64) -> Result<usize> {
    let ratio = t / h;
    if !(ratio < 1e12) {
        return Err(Error::InvalidParameter(format!("T/h = {ratio} is out of range")));
    }
    let steps = ratio.round();
    if (steps - ratio).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!("T = {t} is not a whole number of steps h = {h}")));
    }
    Ok(steps as usize)
}

/// Recorded states of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// CSV with header `t,x1,...,xN`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for k in 1..=n {
            let _ = write!(out, ",x{k}");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }
}

/// Stable scale of `∫_0^h e^{-γ(h-s)} β dz(s)`, i.e.
/// `β ((1 - e^{-αγh}) / (αγ))^{1/α}`, with the `γ → 0` limit `β h^{1/α}`.
pub fn linear_increment_scale(alpha: StableIndex, gamma: f64, beta: f64, h: f64) -> f64 {
    let a = alpha.value();
    let x = a * gamma * h;
    // (1 - e^{-x}) / x, stable for small x
    let ratio = if x.abs() < 1e-10 { 1.0 - x / 2.0 } else { -(-x).exp_m1() / x };
    beta * (h * ratio).powf(1.0 / a)
}

/// Per-step coefficients of the exponential Euler scheme.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    model: &'a ModelSpec,
    pub h: f64,
    decay: Vec<f64>,
    drift_weight: Vec<f64>,
    noise_scale: Vec<f64>,
    f_buf: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ModelSpec, h: f64) -> Self {
        let alpha = model.alpha();
        let mut decay = Vec::with_capacity(model.dim());
        let mut drift_weight = Vec::with_capacity(model.dim());
        let mut noise_scale = Vec::with_capacity(model.dim());
        for (&g, &b) in model.gammas().iter().zip(model.betas()) {
            decay.push((-g * h).exp());
            drift_weight.push(-(-g * h).exp_m1() / g);
            noise_scale.push(linear_increment_scale(alpha, g, b, h));
        }
        Self { model, h, decay, drift_weight, noise_scale, f_buf: vec![0.0; model.dim()] }
    }

    /// Fills `zeta` with the scaled stable increments of one step.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R, zeta: &mut [f64]) {
        let alpha = self.model.alpha();
        for (z, s) in zeta.iter_mut().zip(&self.noise_scale) {
            *z = s * sample_standard_stable(alpha, rng);
        }
    }

    /// Advances `x` by one step given pre-drawn increments.
    pub fn advance(&mut self, x: &mut [f64], zeta: &[f64]) {
        let nonlinear = !self.model.nonlinearity().is_zero();
        if nonlinear {
            self.model.nonlinearity().eval_into(x, &mut self.f_buf);
        }
        for k in 0..x.len() {
            let f = if nonlinear { self.f_buf[k] * self.drift_weight[k] } else { 0.0 };
            x[k] = self.decay[k] * x[k] + f + zeta[k];
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, x: &mut [f64], zeta: &mut [f64], rng: &mut R) {
        self.draw_noise(rng, zeta);
        self.advance(x, zeta);
    }
}

/// One exponential Euler step from `x`.
pub fn step<R: Rng + ?Sized>(m: &ModelSpec, x: &[f64], h: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_state(m, x)?;
    let mut stepper = Stepper::new(m, h);
    let mut out = x.to_vec();
    let mut zeta = vec![0.0; m.dim()];
    stepper.step(&mut out, &mut zeta, rng);
    Ok(out)
}

pub(crate) fn check_state(m: &ModelSpec, x: &[f64]) -> Result<()> {
    if x.len() != m.dim() {
        return Err(Error::Dimension(format!("state has {} entries, model has {} modes", x.len(), m.dim())));
    }
    Ok(())
}

/// Random stream of path `path_index` under `master_seed`.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Runs `steps` steps from `x0` on the stream of `path_index`, calling
/// `visit(step, state)` at step 0 and after every step.
pub fn run_path<V: FnMut(usize, &[f64])>(
    m: &ModelSpec,
    x0: &[f64],
    h: f64,
    steps: usize,
    master_seed: u64,
    path_index: u64,
    mut visit: V,
) -> Result<Vec<f64>> {
    check_state(m, x0)?;
    let mut rng = path_rng(master_seed, path_index);
    let mut stepper = Stepper::new(m, h);
    let mut x = x0.to_vec();
    let mut zeta = vec![0.0; m.dim()];
    visit(0, &x);
    for n in 1..=steps {
        stepper.step(&mut x, &mut zeta, &mut rng);
        visit(n, &x);
    }
    Ok(x)
}

pub fn simulate_path(m: &ModelSpec, x0: &[f64], cfg: &SimConfig, path_index: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let stride = cfg.record_stride;
    let mut times = Vec::new();
    let mut states = Vec::new();
    run_path(m, x0, cfg.h, cfg.steps(), cfg.master_seed, path_index, |n, x| {
        if n % stride == 0 {
            times.push(n as f64 * cfg.h);
            states.push(x.to_vec());
        }
    })?;
    Ok(Trajectory { times, states })
}

/// All `cfg.n_paths` trajectories, in path order.
pub fn simulate_ensemble(m: &ModelSpec, x0: &[f64], cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    check_state(m, x0)?;
    par_map(cfg.n_paths, |i| simulate_path(m, x0, cfg, i as u64)).into_iter().collect()
}

/// `X(t)` on every path (`t` a multiple of `h`).
pub fn terminal_states(m: &ModelSpec, x0: &[f64], t: f64, h: f64, n_paths: usize, master_seed: u64) -> Result<Vec<Vec<f64>>> {
    let steps = steps_for(t, h)?;
    check_state(m, x0)?;
    par_map(n_paths, |i| run_path(m, x0, h, steps, master_seed, i as u64, |_, _| {})).into_iter().collect()
}

/// Exact-in-law sample of the stochastic convolution `Z_A(t)`.
pub fn sample_za<R: Rng + ?Sized>(m: &ModelSpec, t: f64, rng: &mut R) -> Vec<f64> {
    let alpha = m.alpha();
    m.gammas()
        .iter()
        .zip(m.betas())
        .map(|(&g, &b)| linear_increment_scale(alpha, g, b, t) * sample_standard_stable(alpha, rng))
        .collect()
}

/// Per-time ensemble aggregates; `mean[i][k]` is the mean of mode `k` at `t[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub t: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub quantiles: BTreeMap<String, Vec<Vec<f64>>>,
}

pub const SUMMARY_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Reduces trajectories in path order. Means of heavy-tailed modes are
/// reported as is; the quantiles are the robust companions.
pub fn summarize(paths: &[Trajectory]) -> EnsembleSummary {
    let t = paths.first().map(|p| p.times.clone()).unwrap_or_default();
    let n_modes = paths.first().and_then(|p| p.states.first()).map_or(0, Vec::len);
    let mut mean = Vec::with_capacity(t.len());
    let mut stderr = Vec::with_capacity(t.len());
    let mut quantiles: BTreeMap<String, Vec<Vec<f64>>> =
        SUMMARY_QUANTILES.iter().map(|q| (format!("{q}"), Vec::with_capacity(t.len()))).collect();
    for i in 0..t.len() {
        let mut m_row = Vec::with_capacity(n_modes);
        let mut s_row = Vec::with_capacity(n_modes);
        let mut q_rows = vec![Vec::with_capacity(n_modes); SUMMARY_QUANTILES.len()];
        for k in 0..n_modes {
            let column: Vec<f64> = paths.iter().map(|p| p.states[i][k]).collect();
            let e = mean_stderr(&column);
            m_row.push(e.mean);
            s_row.push(e.stderr);
            let sorted = sorted_copy(&column);
            for (row, q) in q_rows.iter_mut().zip(SUMMARY_QUANTILES) {
                row.push(quantile_sorted(&sorted, q));
            }
        }
        mean.push(m_row);
        stderr.push(s_row);
        for (q, row) in SUMMARY_QUANTILES.iter().zip(q_rows) {
            quantiles.get_mut(&format!("{q}")).expect("key inserted above").push(row);
        }
    }
    EnsembleSummary { t, mean, stderr, quantiles }
}

/// `E|ξ|^p` for a standard symmetric stable `ξ` (finite for `p < α`).
pub fn stable_abs_moment(alpha: StableIndex, p: f64) -> Result<f64> {
    let a = alpha.value();
    if p >= a {
        return Err(Error::InfiniteMoment { p, alpha: a });
    }
    if p <= -1.0 {
        return Err(Error::InvalidParameter(format!("moment order {p} must exceed -1")));
    }
    Ok(2f64.powf(p) * gamma_fn((1.0 + p) / 2.0) * gamma_fn(1.0 - p / a) / (gamma_fn(1.0 - p / 2.0) * std::f64::consts::PI.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZaMomentReport {
    pub p: f64,
    pub t: f64,
    pub n: usize,
    /// Estimate of `E|Z_A(t)|^p` over all `2n` samples.
    pub estimate: f64,
    pub stderr: f64,
    /// Independent halves of size `n`, compared for stabilization.
    pub first_half: f64,
    pub second_half: f64,
    pub stabilized: bool,
    /// Estimate at `t/2` on the same random numbers.
    pub half_time_estimate: f64,
    pub half_time_stderr: f64,
    pub monotone_in_t: bool,
    pub pass: bool,
}

/// Monte Carlo `E|Z_A(t)|_H^p` with stabilization and monotonicity checks.
pub fn za_moment_check(m: &ModelSpec, p: f64, t: f64, n: usize, seed: u64) -> Result<ZaMomentReport> {
    let a = m.alpha().value();
    if p >= a {
        return Err(Error::InfiniteMoment { p, alpha: a });
    }
    if !(p > 0.0 && t > 0.0 && n >= 2) {
        return Err(Error::InvalidParameter("need p > 0, t > 0 and n >= 2".into()));
    }
    let alpha = m.alpha();
    let pairs: Vec<(f64, f64)> = par_map(2 * n, |i| {
        let mut rng = path_rng(seed, i as u64);
        let mut full = 0.0;
        let mut half = 0.0;
        for (&g, &b) in m.gammas().iter().zip(m.betas()) {
            let z = sample_standard_stable(alpha, &mut rng);
            full += (linear_increment_scale(alpha, g, b, t) * z).powi(2);
            half += (linear_increment_scale(alpha, g, b, t / 2.0) * z).powi(2);
        }
        (full.sqrt().powf(p), half.sqrt().powf(p))
    });
    let full: Vec<f64> = pairs.iter().map(|v| v.0).collect();
    let half: Vec<f64> = pairs.iter().map(|v| v.1).collect();
    let all = mean_stderr(&full);
    let a1 = mean_stderr(&full[..n]);
    let a2 = mean_stderr(&full[n..]);
    let stabilized = (a1.mean - a2.mean).abs() <= 3.0 * (a1.stderr.powi(2) + a2.stderr.powi(2)).sqrt();
    let h = mean_stderr(&half);
    let combined_rel = (all.stderr.powi(2) + h.stderr.powi(2)).sqrt() / all.mean.max(f64::MIN_POSITIVE);
    let monotone_in_t = h.mean <= all.mean * (1.0 + 3.0 * combined_rel);
    Ok(ZaMomentReport {
        p,
        t,
        n,
        estimate: all.mean,
        stderr: all.stderr,
        first_half: a1.mean,
        second_half: a2.mean,
        stabilized,
        half_time_estimate: h.mean,
        half_time_stderr: h.stderr,
        monotone_in_t,
        pass: stabilized && monotone_in_t,
    })
}
