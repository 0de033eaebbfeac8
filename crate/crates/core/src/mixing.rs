//! Invariant averages `μ(f)`, decay curves `|P_t f(x) - μ(f)|`, exponential
//! rate fits and their comparison with the theoretical exponents.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{derived_constants, DerivedConstants, ModelSpec};
use crate::observable::TestFunction;
use crate::par_map;
use crate::semigroup::{estimate_ptf, SemigroupEstimate};
use crate::simulator::{check_state, run_path, steps_for, SimConfig};
use crate::stats::{batch_means, mean_stderr};

/// Minimum number of points in a fitting window.
pub const MIN_WINDOW: usize = 5;
const BATCHES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantEstimate {
    /// Primary estimate: time average along one long path.
    pub value: f64,
    pub stderr: f64,
    pub time_average: SemigroupEstimate,
    /// Ensemble mean at `t = burn_in`.
    pub ensemble: SemigroupEstimate,
    pub burn_in: f64,
    /// Both estimators agree within 3 combined standard errors.
    pub consistent: bool,
}

/// Default burn-in `10 / γ₁`, rounded up to the step lattice.
pub fn default_burn_in(m: &ModelSpec, h: f64) -> f64 {
    ((10.0 / m.gamma1()) / h).ceil() * h
}

/// `μ(f)` by (a) a time average over `[burn_in, burn_in + cfg.t_end]` on
/// path 0 started at the origin, with batch-means error, and (b) an
/// ensemble of `cfg.n_paths` paths observed at `burn_in`.
pub fn estimate_invariant(m: &ModelSpec, f: &TestFunction, cfg: &SimConfig, burn_in: f64) -> Result<InvariantEstimate> {
    cfg.validate()?;
    f.check_dim(m.dim())?;
    let burn = steps_for(burn_in, cfg.h)?;
    if f.is_constant() {
        let c = f.eval(&[]);
        let exact = SemigroupEstimate { value: c, stderr: 0.0, n: cfg.steps(), t: cfg.t_end };
        return Ok(InvariantEstimate { value: c, stderr: 0.0, time_average: exact, ensemble: SemigroupEstimate { n: cfg.n_paths, t: burn_in, ..exact }, burn_in, consistent: true });
    }
    let total = burn + cfg.steps();
    let origin = vec![0.0; m.dim()];
    let mut series = Vec::with_capacity(cfg.steps());
    run_path(m, &origin, cfg.h, total, cfg.master_seed, 0, |n, x| {
        if n > burn {
            series.push(f.eval(x));
        }
    })?;
    let ta = batch_means(&series, BATCHES);
    let time_average = SemigroupEstimate { value: ta.mean, stderr: ta.stderr, n: ta.n, t: cfg.t_end };
    let ens_cfg = SimConfig { master_seed: cfg.master_seed.wrapping_add(1), ..*cfg };
    let ensemble = estimate_ptf(m, f, &origin, burn_in, &ens_cfg)?;
    let combined = time_average.stderr.hypot(ensemble.stderr);
    let consistent = (time_average.value - ensemble.value).abs() <= 3.0 * combined;
    if !consistent {
        log::warn!(
            "time average {} and ensemble average {} disagree beyond 3 combined stderr; consider a longer burn-in",
            time_average.value,
            ensemble.value
        );
    }
    Ok(InvariantEstimate { value: ta.mean, stderr: ta.stderr, time_average, ensemble, burn_in, consistent })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Raw `P_t f(x)` estimates behind `delta`.
    pub ptf: Vec<f64>,
    pub ptf_stderr: Vec<f64>,
    pub mu: f64,
    pub mu_stderr: f64,
}

impl DecayCurve {
    pub fn new(t: Vec<f64>, delta: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        let c = Self { ptf: vec![f64::NAN; t.len()], ptf_stderr: vec![f64::NAN; t.len()], t, delta, stderr, mu: f64::NAN, mu_stderr: f64::NAN };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.delta.len() != n || self.stderr.len() != n {
            return Err(Error::Dimension("decay curve columns differ in length".into()));
        }
        if self.t.iter().chain(&self.delta).chain(&self.stderr).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("decay curve entries must be finite".into()));
        }
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("decay curve times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// CSV with header `t,delta,stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,delta,stderr\n");
        for i in 0..self.t.len() {
            s.push_str(&format!("{},{},{}\n", self.t[i], self.delta[i], self.stderr[i]));
        }
        s
    }

    /// No point rises above an earlier one by more than 3 combined stderr.
    pub fn nonincreasing_within_noise(&self) -> bool {
        (1..self.t.len()).all(|j| (0..j).all(|i| self.delta[j] - self.delta[i] <= 3.0 * self.stderr[i].hypot(self.stderr[j])))
    }
}

/// `|P_t f(x) - μ̂|` on `t_grid`. All times share the same path streams;
/// when every time lies on the `cfg.h` lattice each path is run once.
pub fn decay_curve(
    m: &ModelSpec,
    f: &TestFunction,
    x: &[f64],
    t_grid: &[f64],
    cfg: &SimConfig,
    mu: &InvariantEstimate,
) -> Result<DecayCurve> {
    check_state(m, x)?;
    f.check_dim(m.dim())?;
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be nonempty, nonnegative and strictly increasing".into()));
    }
    let lattice: Option<Vec<usize>> = t_grid.iter().map(|&t| steps_for(t, cfg.h).ok()).collect();
    let estimates: Vec<SemigroupEstimate> = match lattice {
        Some(steps) => {
            let last = *steps.last().unwrap();
            let per_path: Vec<Vec<f64>> = par_map(cfg.n_paths, |i| {
                let mut vals = Vec::with_capacity(steps.len());
                let mut next = 0;
                run_path(m, x, cfg.h, last, cfg.master_seed, i as u64, |n, s| {
                    while next < steps.len() && steps[next] == n {
                        vals.push(f.eval(s));
                        next += 1;
                    }
                })
                .expect("state checked above");
                vals
            });
            (0..steps.len())
                .map(|j| {
                    let col: Vec<f64> = per_path.iter().map(|p| p[j]).collect();
                    let e = mean_stderr(&col);
                    if t_grid[j] == 0.0 {
                        SemigroupEstimate { value: f.eval(x), stderr: 0.0, n: e.n, t: 0.0 }
                    } else {
                        SemigroupEstimate { value: e.mean, stderr: e.stderr, n: e.n, t: t_grid[j] }
                    }
                })
                .collect()
        }
        None => t_grid.iter().map(|&t| estimate_ptf(m, f, x, t, cfg)).collect::<Result<_>>()?,
    };
    let curve = DecayCurve {
        t: t_grid.to_vec(),
        delta: estimates.iter().map(|e| (e.value - mu.value).abs()).collect(),
        stderr: estimates.iter().map(|e| e.stderr.hypot(mu.stderr)).collect(),
        ptf: estimates.iter().map(|e| e.value).collect(),
        ptf_stderr: estimates.iter().map(|e| e.stderr).collect(),
        mu: mu.value,
        mu_stderr: mu.stderr,
    };
    curve.validate()?;
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub c_emp: f64,
    #[serde(rename = "C_emp")]
    pub big_c_emp: f64,
    pub r2: f64,
    /// Half-open index range `[start, end)` of the fitted points.
    pub window: (usize, usize),
}

/// Largest contiguous run with `delta > 3 stderr` (earliest on ties).
pub fn signal_window(curve: &DecayCurve) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=curve.t.len() {
        let ok = i < curve.t.len() && curve.delta[i] > 3.0 * curve.stderr[i] && curve.delta[i] > 0.0;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.map_or(true, |(a, b)| i - s > b - a) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.filter(|(a, b)| b - a >= MIN_WINDOW)
}

/// Weighted least squares of `ln delta` against `t` over the signal
/// window. Weights are `(delta / stderr)²`, the inverse variance of
/// `ln delta`; with any zero stderr in the window all weights are 1.
pub fn fit_exponential_rate(curve: &DecayCurve) -> Result<RateFit> {
    curve.validate()?;
    let (a, b) = signal_window(curve).ok_or(Error::NoSignalWindow { min: MIN_WINDOW })?;
    let ts = &curve.t[a..b];
    let ys: Vec<f64> = curve.delta[a..b].iter().map(|d| d.ln()).collect();
    let exact = curve.stderr[a..b].iter().any(|s| *s == 0.0);
    let ws: Vec<f64> = (a..b).map(|i| if exact { 1.0 } else { (curve.delta[i] / curve.stderr[i]).powi(2) }).collect();
    let sw: f64 = ws.iter().sum();
    let tm = ws.iter().zip(ts).map(|(w, t)| w * t).sum::<f64>() / sw;
    let ym = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((w, t), y) in ws.iter().zip(ts).zip(&ys) {
        sxy += w * (t - tm) * (y - ym);
        sxx += w * (t - tm) * (t - tm);
        syy += w * (y - ym) * (y - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit { c_emp: -slope, big_c_emp: intercept.exp(), r2, window: (a, b) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub delta: f64,
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub omega: f64,
    /// `γ₁ - L_F`, used as the exponent under the Lipschitz condition.
    pub contraction_rate: f64,
    pub c_emp: f64,
    #[serde(rename = "C_emp")]
    pub big_c_emp: f64,
    pub r2: f64,
    pub condition_i: bool,
    pub condition_ii: bool,
    /// Exponent the envelope is tested with, if any condition holds.
    pub guaranteed_exponent: Option<f64>,
    pub guarantee: String,
    pub c_emp_positive: bool,
    pub envelope: Vec<EnvelopePoint>,
    pub envelope_pass: bool,
    pub constants: DerivedConstants,
    pub pass: bool,
}

/// Checks `delta(t) <= C_emp e^{-r t} (1 + 3 stderr/delta)` over the fitted
/// window, `r` the smaller of the exponents whose condition holds.
pub fn compare_with_theory(m: &ModelSpec, curve: &DecayCurve, fit: &RateFit) -> Result<TheoryReport> {
    let constants = derived_constants(m)?;
    compare_with_constants(&constants, curve, fit)
}

pub fn compare_with_constants(constants: &DerivedConstants, curve: &DecayCurve, fit: &RateFit) -> Result<TheoryReport> {
    let mut exps = Vec::new();
    if constants.condition_i {
        exps.push(constants.contraction_rate);
    }
    if constants.condition_ii {
        exps.push(constants.omega);
    }
    let guaranteed = exps.into_iter().reduce(f64::min);
    let guarantee = match (constants.condition_i, constants.condition_ii) {
        (true, true) => "both conditions hold".to_string(),
        (true, false) => "Lipschitz condition L_F < gamma_1 holds; exponent gamma_1 - L_F".to_string(),
        (false, true) => "omega > 0 holds; exponent omega".to_string(),
        (false, false) => "no theoretical guarantee".to_string(),
    };
    let envelope = envelope_points(curve, fit, guaranteed.unwrap_or(0.0));
    let envelope_pass = guaranteed.is_none() || envelope.iter().all(|p| p.pass);
    let c_emp_positive = fit.c_emp > 0.0;
    log::info!(
        "omega = {:.6}, gamma_1 - L_F = {:.6}, c_emp = {:.6}",
        constants.omega,
        constants.contraction_rate,
        fit.c_emp
    );
    Ok(TheoryReport {
        omega: constants.omega,
        contraction_rate: constants.contraction_rate,
        c_emp: fit.c_emp,
        big_c_emp: fit.big_c_emp,
        r2: fit.r2,
        condition_i: constants.condition_i,
        condition_ii: constants.condition_ii,
        guaranteed_exponent: guaranteed,
        guarantee,
        c_emp_positive,
        pass: c_emp_positive && envelope_pass,
        envelope,
        envelope_pass,
        constants: constants.clone(),
    })
}

/// Window points tested against `C_emp e^{-rate t} (1 + 3 stderr/delta)`.
pub fn envelope_points(curve: &DecayCurve, fit: &RateFit, rate: f64) -> Vec<EnvelopePoint> {
    (fit.window.0..fit.window.1)
        .map(|i| {
            let (t, d, s) = (curve.t[i], curve.delta[i], curve.stderr[i]);
            let envelope = fit.big_c_emp * (-rate * t).exp() * (1.0 + 3.0 * s / d);
            EnvelopePoint { t, delta: d, envelope, pass: d <= envelope }
        })
        .collect()
}

/// `P_t cos(<e_k, ·>)(x)` for the linear single-mode dynamics:
/// `cos(x e^{-γt}) exp(-β^α (1 - e^{-αγt}) / (αγ))`.
pub fn ou_cosine_closed_form(alpha: f64, gamma: f64, beta: f64, x: f64, t: f64) -> f64 {
    let spread = beta.powf(alpha) * (-(-alpha * gamma * t).exp_m1()) / (alpha * gamma);
    (x * (-gamma * t).exp()).cos() * (-spread).exp()
}
