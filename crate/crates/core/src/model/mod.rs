//! Truncated spectral model, its structural assumptions and the explicit
//! constants built from them.

mod file;
mod heat;
mod nonlinearity;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_fn, henry_bound, HenryParams};
use crate::stable::{fisher_integral, frac_lap_normalizer, StableIndex};

pub use file::{LawSpec, ModelFile, HeatSpec};
pub use heat::{heat_example, HeatExample};
pub use nonlinearity::{NonlinearitySpec, Saturator};

/// Closed-form continuation `v_k = scale * k^exponent` for modes `k > N`
/// (1-based `k`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn value(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(self.exponent)
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite() && self.exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!("{what} tail law needs a positive finite scale and finite exponent")));
        }
        Ok(())
    }
}

/// Eigenvalues `γ_k` of `-A` on the retained modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralOperator {
    gammas: Vec<f64>,
    tail_law: Option<PowerLaw>,
}

impl SpectralOperator {
    pub fn new(gammas: Vec<f64>, tail_law: Option<PowerLaw>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Dimension("at least one mode is required".into()));
        }
        for (k, g) in gammas.iter().enumerate() {
            if !(*g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma_{} = {g} is not positive", k + 1)));
            }
            if k > 0 && *g < gammas[k - 1] {
                return Err(Error::NonMonotone { index: k + 1, value: *g, previous: gammas[k - 1] });
            }
        }
        if let Some(law) = tail_law {
            law.validate("gamma")?;
            if law.exponent <= 0.0 {
                return Err(Error::InvalidParameter("gamma tail law must grow to infinity (exponent > 0)".into()));
            }
        }
        Ok(Self { gammas, tail_law })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn tail_law(&self) -> Option<PowerLaw> {
        self.tail_law
    }

    pub fn gamma1(&self) -> f64 {
        self.gammas[0]
    }
}

/// Noise amplitudes `β_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSpec {
    betas: Vec<f64>,
    tail_law: Option<PowerLaw>,
}

impl NoiseSpec {
    /// Amplitudes may be zero only for deterministic test models; the
    /// assumption checker reports such models as failing.
    pub fn new(betas: Vec<f64>, tail_law: Option<PowerLaw>) -> Result<Self> {
        if let Some((k, b)) = betas.iter().enumerate().find(|(_, b)| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("beta_{} = {b} is negative or not finite", k + 1)));
        }
        if let Some(law) = tail_law {
            law.validate("beta")?;
        }
        Ok(Self { betas, tail_law })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn tail_law(&self) -> Option<PowerLaw> {
        self.tail_law
    }
}

/// Galerkin system `dX_k = [-γ_k X_k + F_k(X)] dt + β_k dz_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    operator: SpectralOperator,
    noise: NoiseSpec,
    nonlinearity: NonlinearitySpec,
    alpha: StableIndex,
    sigma: f64,
}

impl ModelSpec {
    pub fn new(
        operator: SpectralOperator,
        noise: NoiseSpec,
        nonlinearity: NonlinearitySpec,
        alpha: StableIndex,
        sigma: f64,
    ) -> Result<Self> {
        let n = operator.gammas.len();
        if noise.betas.len() != n {
            return Err(Error::Dimension(format!("{n} eigenvalues but {} noise amplitudes", noise.betas.len())));
        }
        nonlinearity.validate(n)?;
        check_sigma(sigma)?;
        Ok(Self { operator, noise, nonlinearity, alpha, sigma })
    }

    /// Plain finite model without tail laws.
    pub fn finite(gammas: Vec<f64>, betas: Vec<f64>, nonlinearity: NonlinearitySpec, alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(
            SpectralOperator::new(gammas, None)?,
            NoiseSpec::new(betas, None)?,
            nonlinearity,
            StableIndex::new(alpha)?,
            sigma,
        )
    }

    pub fn dim(&self) -> usize {
        self.operator.gammas.len()
    }
    pub fn gammas(&self) -> &[f64] {
        &self.operator.gammas
    }
    pub fn betas(&self) -> &[f64] {
        &self.noise.betas
    }
    pub fn operator(&self) -> &SpectralOperator {
        &self.operator
    }
    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }
    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }
    pub fn alpha(&self) -> StableIndex {
        self.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn gamma1(&self) -> f64 {
        self.operator.gamma1()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { sigma, ..self.clone() })
    }

    pub fn with_nonlinearity(&self, nonlinearity: NonlinearitySpec) -> Result<Self> {
        nonlinearity.validate(self.dim())?;
        Ok(Self { nonlinearity, ..self.clone() })
    }

    /// Same model with `F = 0`, i.e. the Ornstein–Uhlenbeck system.
    pub fn linear_part(&self) -> Self {
        Self { nonlinearity: NonlinearitySpec::Zero {}, ..self.clone() }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}

/// Outcome of a symbolic tail test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Convergent,
    Divergent,
    FiniteTruncationOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub gamma_monotone: bool,
    pub positive_noise: bool,
    /// `Σ_{k≤N} β_k^α / γ_k`
    pub summability_partial: f64,
    pub summability_tail: TailVerdict,
    /// `sup_k γ_k^{1/α-σ} / β_k`, tail included when a bounded tail law is declared.
    pub b: f64,
    /// 1-based mode attaining `b` (`N + 1` when the tail dominates).
    pub b_mode: usize,
    pub b_tail: TailVerdict,
    pub pass: bool,
}

/// Structural checks on the eigenvalues and noise amplitudes.
pub fn check_assumptions(m: &ModelSpec) -> Result<AssumptionReport> {
    let gammas = m.gammas();
    let betas = m.betas();
    let a = m.alpha.value();
    let n = gammas.len();
    if let Some(k) = (1..n).find(|&k| gammas[k] < gammas[k - 1]) {
        return Err(Error::NonMonotone { index: k + 1, value: gammas[k], previous: gammas[k - 1] });
    }
    let positive_noise = betas.iter().all(|b| *b > 0.0);
    let summability_partial: f64 = gammas.iter().zip(betas).map(|(g, b)| b.powf(a) / g).sum();

    let expo = 1.0 / a - m.sigma;
    let (mut b, mut b_mode) = (0.0f64, 1);
    for (k, (g, beta)) in gammas.iter().zip(betas).enumerate() {
        let v = g.powf(expo) / beta;
        if v > b {
            b = v;
            b_mode = k + 1;
        }
    }

    let laws = m.operator.tail_law.zip(m.noise.tail_law);
    let (summability_tail, b_tail) = match laws {
        None => (TailVerdict::FiniteTruncationOnly, TailVerdict::FiniteTruncationOnly),
        Some((gl, bl)) => {
            // β^α/γ ~ k^{α e_β - e_γ}: summable iff the exponent is below -1
            let sum_tail = if gl.exponent - a * bl.exponent > 1.0 { TailVerdict::Convergent } else { TailVerdict::Divergent };
            let b_exponent = gl.exponent * expo - bl.exponent;
            let b_tail = if b_exponent > 1e-12 {
                b = f64::INFINITY;
                b_mode = n + 1;
                TailVerdict::Divergent
            } else {
                // nonincreasing along the tail: the first tail mode is the sup
                let first = gl.value(n + 1).powf(expo) / bl.value(n + 1);
                if first > b {
                    b = first;
                    b_mode = n + 1;
                }
                TailVerdict::Convergent
            };
            (sum_tail, b_tail)
        }
    };

    let pass = positive_noise
        && summability_tail != TailVerdict::Divergent
        && b_tail != TailVerdict::Divergent
        && b.is_finite();
    Ok(AssumptionReport { gamma_monotone: true, positive_noise, summability_partial, summability_tail, b, b_mode, b_tail, pass })
}

/// `ĉ = B 2^{2/α - σ} σ^σ / e^σ`.
pub fn hat_c(b: f64, alpha: f64, sigma: f64) -> f64 {
    b * 2f64.powf(2.0 / alpha - sigma) * sigma.powf(sigma) / E.powf(sigma)
}

/// `ĉ e^{-γ₁ t / 2} / t^σ`.
pub fn kt_envelope(hat_c: f64, gamma1: f64, sigma: f64, t: f64) -> f64 {
    hat_c * (-gamma1 * t / 2.0).exp() / t.powf(sigma)
}

/// `k_t = sup_k e^{-γ_k t} γ_k^{1/α} / β_k` together with the maximizing
/// mode (1-based; tail modes are reported by their approximate index).
pub fn kt_value(m: &ModelSpec, t: f64) -> (f64, usize) {
    let inv_a = 1.0 / m.alpha.value();
    let mut best = (0.0f64, 1usize);
    for (k, (g, b)) in m.gammas().iter().zip(m.betas()).enumerate() {
        let v = (-g * t + inv_a * g.ln() - b.ln()).exp();
        if v > best.0 {
            best = (v, k + 1);
        }
    }
    if let Some((gl, bl)) = m.operator.tail_law.zip(m.noise.tail_law) {
        let n = m.dim();
        // β as a function of γ along the tail: β = s_β (γ/s_γ)^r
        let r = bl.exponent / gl.exponent;
        let q = inv_a - r;
        let g_first = gl.value(n + 1);
        let g_star = if q > 0.0 { (q / t).max(g_first) } else { g_first };
        let v = (-g_star * t + q * g_star.ln() + r * gl.scale.ln() - bl.scale.ln()).exp();
        if v > best.0 {
            let k = (g_star / gl.scale).powf(1.0 / gl.exponent).round().max((n + 1) as f64);
            best = (v, k as usize);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KtPoint {
    pub t: f64,
    pub kt: f64,
    pub mode: usize,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KtEnvelopeReport {
    pub hat_c: f64,
    pub max_ratio: f64,
    pub worst: Option<KtPoint>,
    pub points: Vec<KtPoint>,
    pub pass: bool,
}

/// Evaluates `k_t` against `ĉ e^{-γ₁t/2}/t^σ` on every grid point without
/// failing; see [`kt_envelope_check`] for the strict form.
pub fn kt_envelope_scan(m: &ModelSpec, t_grid: &[f64]) -> Result<KtEnvelopeReport> {
    let report = check_assumptions(m)?;
    if !report.pass {
        return Err(Error::InvalidParameter("k_t envelope needs a model passing the structural assumptions".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("t grid entries must be positive, got {t}")));
    }
    let c = hat_c(report.b, m.alpha.value(), m.sigma);
    let points: Vec<KtPoint> = t_grid
        .iter()
        .map(|&t| {
            let (kt, mode) = kt_value(m, t);
            let envelope = kt_envelope(c, m.gamma1(), m.sigma, t);
            KtPoint { t, kt, mode, envelope, ratio: kt / envelope }
        })
        .collect();
    let worst = points.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).cloned();
    let max_ratio = worst.as_ref().map_or(0.0, |p| p.ratio);
    // relative rounding allowance for the single-mode equality case
    let pass = max_ratio <= 1.0 + 1e-12;
    Ok(KtEnvelopeReport { hat_c: c, max_ratio, worst, points, pass })
}

/// Asserts `k_t ≤ ĉ e^{-γ₁t/2}/t^σ` on `t_grid` and returns the largest ratio.
pub fn kt_envelope_check(m: &ModelSpec, t_grid: &[f64]) -> Result<f64> {
    let scan = kt_envelope_scan(m, t_grid)?;
    match scan.worst {
        Some(p) if !scan.pass => Err(Error::EnvelopeViolation { mode: p.mode, t: p.t, kt: p.kt, envelope: p.envelope }),
        _ => Ok(scan.max_ratio),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub b: f64,
    pub hat_c: f64,
    pub fisher: f64,
    pub c0: f64,
    pub c_alpha: f64,
    /// Normalizer `C_α` of the fractional generator.
    pub generator_normalizer: f64,
    pub f_sup: f64,
    pub lipschitz: f64,
    pub gamma1: f64,
    pub omega: f64,
    /// `(C₀ ‖F‖₀ Γ(1-σ))^{1/(1-σ)}`
    pub theta: f64,
    /// `γ₁ - L_F`, the synchronous-coupling rate.
    pub contraction_rate: f64,
    pub condition_i: bool,
    pub condition_ii: bool,
    /// `C₀/Γ(1-σ) (γ₁/2)^{1-σ}` as displayed in the smallness condition.
    pub threshold_displayed: f64,
    /// `(γ₁/2)^{1-σ} / (C₀ Γ(1-σ))`, equivalent to `ω > 0`.
    pub threshold_omega: f64,
}

impl DerivedConstants {
    /// Henry parameters of the gradient Volterra inequality per unit `‖Df‖₀`.
    pub fn henry_params(&self, sigma: f64) -> Result<HenryParams> {
        HenryParams::new(1.0, self.c0 * self.f_sup, 1.0 - sigma)
    }

    /// `e^{-γ₁t/2} G_{1-σ}(θ t) ‖Df‖₀`, the explicit gradient bound.
    pub fn gradient_bound(&self, sigma: f64, t: f64, df_norm: f64) -> Result<f64> {
        let p = self.henry_params(sigma)?;
        Ok((-self.gamma1 * t / 2.0).exp() * henry_bound(&p, t)? * df_norm)
    }
}

/// Fills every constant from the model (the Fisher integral is memoized).
pub fn derived_constants(m: &ModelSpec) -> Result<DerivedConstants> {
    let fisher = fisher_integral(m.alpha)?;
    derived_constants_with_fisher(m, fisher)
}

/// As [`derived_constants`] with a supplied `∫ (p')²/p`.
pub fn derived_constants_with_fisher(m: &ModelSpec, fisher: f64) -> Result<DerivedConstants> {
    let report = check_assumptions(m)?;
    let a = m.alpha.value();
    let sigma = m.sigma;
    let hat = hat_c(report.b, a, sigma);
    let c0 = hat * fisher;
    let f_sup = m.nonlinearity.sup_norm();
    let lipschitz = m.nonlinearity.lipschitz();
    let gamma1 = m.gamma1();
    let g = gamma_fn(1.0 - sigma);
    let theta = if f_sup == 0.0 { 0.0 } else { (c0 * f_sup * g).powf(1.0 / (1.0 - sigma)) };
    let omega = gamma1 / 2.0 - theta;
    let half_pow = (gamma1 / 2.0).powf(1.0 - sigma);
    Ok(DerivedConstants {
        b: report.b,
        hat_c: hat,
        fisher,
        c0,
        c_alpha: fisher / 8.0,
        generator_normalizer: frac_lap_normalizer(m.alpha)?,
        f_sup,
        lipschitz,
        gamma1,
        omega,
        theta,
        contraction_rate: gamma1 - lipschitz,
        condition_i: lipschitz < gamma1,
        condition_ii: omega > 0.0,
        threshold_displayed: c0 / g * half_pow,
        threshold_omega: half_pow / (c0 * g),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSweepPoint {
    pub sigma: f64,
    pub assumptions_pass: bool,
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSweep {
    pub points: Vec<SigmaSweepPoint>,
    pub best: Option<SigmaSweepPoint>,
}

/// Scans `σ ∈ (max(0, 1/α - slack), 1)` in steps of 0.01 and reports the
/// largest `ω` among admissible values.
pub fn sigma_sweep(m: &ModelSpec, slack: f64) -> Result<SigmaSweep> {
    let fisher = fisher_integral(m.alpha)?;
    let lo = (1.0 / m.alpha.value() - slack).max(0.0);
    let mut points = Vec::new();
    let mut j = (lo / 0.01).floor() as i64 + 1;
    loop {
        let sigma = j as f64 * 0.01;
        if sigma >= 1.0 - 1e-12 {
            break;
        }
        let candidate = m.with_sigma(sigma)?;
        let pass = check_assumptions(&candidate)?.pass;
        let omega = if pass { Some(derived_constants_with_fisher(&candidate, fisher)?.omega) } else { None };
        points.push(SigmaSweepPoint { sigma, assumptions_pass: pass, omega });
        j += 1;
    }
    let best = points
        .iter()
        .filter(|p| p.omega.is_some())
        .max_by(|a, b| a.omega.unwrap().total_cmp(&b.omega.unwrap()))
        .cloned();
    Ok(SigmaSweep { points, best })
}
