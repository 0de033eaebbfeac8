//! Gamma function wrappers and the comparison function `G_beta` of Henry's
//! Gronwall-type inequality for singular Volterra kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this argument `G_beta` is replaced by its `(1/beta) e^z` asymptote.
pub const HENRY_ASYMPTOTIC_THRESHOLD: f64 = 700.0;

/// Euler's gamma function for real arguments (poles excluded).
pub fn gamma_fn(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Natural logarithm of `|Gamma(x)|`, accurate for large arguments.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `G_beta(z) = sum_{n>=0} z^{n beta} / Gamma(n beta + 1)`.
///
/// Summed until the next term drops below `1e-15` of the running sum (after
/// the peak term). Past [`HENRY_ASYMPTOTIC_THRESHOLD`] the asymptote
/// `(1/beta) e^z` is used and a warning is logged.
pub fn henry_g(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("G_beta needs beta in (0, 1], got {beta}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidParameter(format!("G_beta needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z > HENRY_ASYMPTOTIC_THRESHOLD {
        let log_value = z - beta.ln();
        if log_value > f64::MAX.ln() {
            return Err(Error::Overflow(z));
        }
        log::warn!("G_{beta}({z}) evaluated through the (1/beta) e^z asymptote");
        return Ok(log_value.exp());
    }
    let ln_z = z.ln();
    let mut sum = 1.0;
    let mut n = 1u64;
    loop {
        let p = n as f64 * beta;
        let term = if p + 1.0 < 170.0 && p * ln_z < 700.0 {
            z.powf(p) / gamma_fn(p + 1.0)
        } else {
            (p * ln_z - ln_gamma(p + 1.0)).exp()
        };
        sum += term;
        if p > z && term < 1e-15 * sum {
            break;
        }
        n += 1;
        if n > 10_000_000 {
            return Err(Error::NonConvergence(format!("G_{beta}({z}) series")));
        }
    }
    Ok(sum)
}

/// Parameters of the Volterra inequality `u(t) <= a + b ∫_0^t (t-s)^{beta-1} u(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenryParams {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl HenryParams {
    pub fn new(a: f64, b: f64, beta: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidParameter(format!("Henry bound needs a, b >= 0 (a = {a}, b = {b})")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("Henry bound needs beta in (0, 1], got {beta}")));
        }
        Ok(Self { a, b, beta })
    }

    /// `theta = (b Gamma(beta))^{1/beta}`, the exponential rate of the bound.
    pub fn theta(&self) -> f64 {
        (self.b * gamma_fn(self.beta)).powf(1.0 / self.beta)
    }
}

/// `a G_beta(theta t)`; equal to `a` when `b = 0`.
pub fn henry_bound(p: &HenryParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("Henry bound needs t >= 0, got {t}")));
    }
    if p.b == 0.0 {
        return Ok(p.a);
    }
    Ok(p.a * henry_g(p.beta, p.theta() * t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_panels, geometric_breaks, Tolerance};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma_fn(1.0), 1.0) < 1e-14);
        assert!(rel(gamma_fn(5.0), 24.0) < 1e-14);
        assert!(rel(gamma_fn(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(1.5), 0.5 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(-0.5), -2.0 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn gamma_matches_euler_integral() {
        // Γ(x) = ∫_0^∞ t^{x-1} e^{-t} dt, integrated independently.
        let tol = Tolerance::new(1e-15, 1e-14);
        for &x in &[5.0 / 3.0, 0.7, 2.5, 7.25, 13.1, 19.9] {
            let breaks = geometric_breaks(120.0 + 4.0 * x, 1e-8);
            let e = integrate_panels(|t: f64| t.powf(x - 1.0) * (-t).exp(), &breaks, &tol).unwrap();
            assert!(rel(gamma_fn(x), e.value) < 1e-12, "x = {x}: {} vs {}", gamma_fn(x), e.value);
        }
        assert!(rel(gamma_fn(5.0 / 3.0), 0.902_745_292_950_934) < 1e-12);
    }

    #[test]
    fn ln_gamma_consistent() {
        for &x in &[0.3, 1.7, 10.5, 150.0] {
            assert!((ln_gamma(x) - gamma_fn(x).ln()).abs() < 1e-12 * ln_gamma(x).abs().max(1.0));
        }
    }

    #[test]
    fn henry_g_exponential_case() {
        for &z in &[0.0, 0.5, 3.0, 10.0] {
            assert!(rel(henry_g(1.0, z).unwrap(), z.exp()) < 1e-12);
        }
        assert!(rel(henry_g(1.0, 3.0).unwrap(), 20.085_536_923_187_668) < 1e-13);
    }

    #[test]
    fn henry_g_half_is_mittag_leffler() {
        // E_{1/2}(z^{1/2}) = e^z (1 + erf(√z)); erf(1) from quadrature of its definition.
        let erf1 = 2.0 / PI.sqrt()
            * crate::quad::integrate(|t: f64| (-t * t).exp(), 0.0, 1.0, &Tolerance::default()).unwrap().value;
        let expected = 1f64.exp() * (1.0 + erf1);
        assert!((henry_g(0.5, 1.0).unwrap() - expected).abs() < 1e-8);
        assert!((expected - 5.008_980_080_762_283).abs() < 1e-9);
    }

    #[test]
    fn henry_g_at_zero_is_one() {
        for &b in &[0.05, 0.3, 0.5, 1.0] {
            assert_eq!(henry_g(b, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn henry_g_asymptote_and_overflow() {
        let g = henry_g(0.5, 650.0).unwrap();
        assert!(rel(g, 2.0 * 650f64.exp()) < 1e-6);
        let asym = henry_g(1.0, 705.0).unwrap();
        assert!(rel(asym, 705f64.exp()) < 1e-12);
        assert!(matches!(henry_g(0.5, 710.0), Err(Error::Overflow(_))));
        assert!(henry_g(0.0, 1.0).is_err());
        assert!(henry_g(0.5, -1.0).is_err());
    }

    #[test]
    fn henry_bound_cases() {
        let p = HenryParams::new(1.0, 0.0, 0.3).unwrap();
        assert_eq!(henry_bound(&p, 17.0).unwrap(), 1.0);
        let p = HenryParams::new(2.0, 1.0, 1.0).unwrap();
        assert!(rel(henry_bound(&p, 1.0).unwrap(), 2.0 * 1f64.exp()) < 1e-13);
        let p = HenryParams::new(1.0, 0.5, 0.5).unwrap();
        let theta = (0.5 * PI.sqrt()).powi(2);
        assert!(rel(p.theta(), theta) < 1e-14);
        assert!((theta - 0.785_398_163_397_448_3).abs() < 1e-12);
        // G_{1/2}(θ) by explicit partial sums
        let mut sum = 0.0;
        for n in 0..200 {
            let k = n as f64 * 0.5;
            sum += theta.powf(k) / gamma_fn(k + 1.0);
        }
        assert!(rel(henry_bound(&p, 1.0).unwrap(), sum) < 1e-13);
    }

    /// Product-trapezoid fixed point of u = a + b ∫ (t-s)^{β-1} u(s) ds.
    fn volterra_fixed_point(a: f64, b: f64, beta: f64, t_max: f64, n: usize) -> Vec<f64> {
        let h = t_max / n as f64;
        // weights for ∫_{s_j}^{s_{j+1}} (t_i - s)^{β-1} ℓ(s) ds with linear interpolation ℓ
        let mut u = vec![a; n + 1];
        for i in 1..=n {
            let ti = i as f64 * h;
            let mut acc = 0.0;
            let mut diag = 0.0;
            for j in 0..i {
                let (s0, s1) = (j as f64 * h, (j + 1) as f64 * h);
                // ∫ K ds and ∫ s K ds over [s0, s1], K(s) = (t_i - s)^{β-1}
                let m0 = ((ti - s0).powf(beta) - (ti - s1).powf(beta)) / beta;
                let m1 = ti * m0 - ((ti - s0).powf(beta + 1.0) - (ti - s1).powf(beta + 1.0)) / (beta + 1.0);
                let w_right = (m1 - s0 * m0) / h;
                let w_left = m0 - w_right;
                acc += w_left * u[j];
                if j + 1 < i {
                    acc += w_right * u[j + 1];
                } else {
                    diag = w_right;
                }
            }
            u[i] = (a + b * acc) / (1.0 - b * diag);
        }
        u
    }

    #[test]
    fn henry_bound_dominates_volterra_solution() {
        for &(a, b, beta) in &[(1.0, 0.5, 0.5), (2.0, 0.4, 0.3), (0.7, 0.2, 0.9)] {
            let p = HenryParams::new(a, b, beta).unwrap();
            let n = 2000;
            let t_max = 2.0;
            let u = volterra_fixed_point(a, b, beta, t_max, n);
            for (i, ui) in u.iter().enumerate().step_by(100) {
                let t = i as f64 * t_max / n as f64;
                let bound = henry_bound(&p, t).unwrap();
                assert!(*ui <= bound * (1.0 + 1e-3), "a={a} b={b} beta={beta} t={t}: {ui} > {bound}");
            }
        }
    }
}
