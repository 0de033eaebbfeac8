//! Numerics for the standardized symmetric α-stable law `z(1)` with
//! characteristic function `E e^{iλ z(t)} = e^{-t|λ|^α}`.
//!
//! Densities are inverted from the characteristic function by quadrature.
//! The inversion integral `(1/π)∫_0^∞ cos(λx) e^{-λ^α} dλ` is evaluated along
//! the ray `λ = r e^{iφ}` with `φ = min(π/2, π/(4α))`; on that ray both
//! `e^{iλx}` and `e^{-λ^α}` decay, so the integrand is damped instead of
//! oscillating and the same code path is accurate from `x = 0` far into the
//! tails. Beyond `|x| = 1000` the tail series is used instead.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par_map;
use crate::quad::{geometric_breaks, integrate, integrate_panels, Tolerance};
use crate::special::gamma_fn;

/// Smallest supported stability index.
pub const ALPHA_MIN: f64 = 0.3;
/// Largest supported stability index.
pub const ALPHA_MAX: f64 = 1.9;

/// Default density grid: `[-50, 50]` with `2^14` points.
pub const DEFAULT_HALF_WIDTH: f64 = 50.0;
pub const DEFAULT_GRID_POINTS: usize = 1 << 14;

const SERIES_SWITCH: f64 = 1.0e3;
const DAMPING: f64 = 50.0;

/// Stability index `α`, restricted to `[0.3, 1.9]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StableIndex(f64);

impl StableIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::IndexOutOfRange(alpha));
        }
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
            return Err(Error::UnsupportedIndex(alpha));
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StableIndex {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<StableIndex> for f64 {
    fn from(a: StableIndex) -> f64 {
        a.0
    }
}

/// One draw of `z(1)` by the Chambers–Mallows–Stuck transform (symmetric case).
pub fn sample_standard_stable<R: Rng + ?Sized>(alpha: StableIndex, rng: &mut R) -> f64 {
    let a = alpha.0;
    let v = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break PI * (u - 0.5);
        }
    };
    let w = loop {
        let e = -(1.0 - rng.gen::<f64>()).ln();
        if e > 0.0 {
            break e;
        }
    };
    if a == 1.0 {
        return v.tan();
    }
    (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
}

fn rotation(a: f64) -> f64 {
    (PI / (4.0 * a)).min(PI / 2.0)
}

/// Upper end of the rotated ray where the integrand is below `e^{-50}`.
fn ray_cutoff(a: f64, phi: f64, x: f64) -> f64 {
    let from_alpha = (DAMPING / (a * phi).cos()).powf(1.0 / a);
    if x > 0.0 {
        from_alpha.min(DAMPING / (x * phi.sin()))
    } else {
        from_alpha
    }
}

fn ray_tolerance() -> Tolerance {
    Tolerance { abs: 1e-16, rel: 1e-12, max_intervals: 20_000 }
}

/// `(1/π)∫_0^∞ (iλ)^m e^{iλx - λ^α} dλ` along the rotated ray, `x >= 0`.
fn inversion_moment(a: f64, x: f64, m: u32) -> Result<Complex64> {
    let phi = rotation(a);
    let dir = Complex64::from_polar(1.0, phi);
    let dir_a = Complex64::from_polar(1.0, a * phi);
    let upper = ray_cutoff(a, phi, x);
    let f = |r: f64| {
        let lam = dir * r;
        let expo = Complex64::i() * lam * x - dir_a * r.powf(a);
        let mut v = dir * expo.exp();
        for _ in 0..m {
            v *= Complex64::i() * lam;
        }
        v
    };
    let e = integrate_panels(f, &geometric_breaks(upper, upper * 1e-7), &ray_tolerance())?;
    Ok(e.value / PI)
}

/// Asymptotic (α > 1) or convergent (α <= 1) series in `x^{-kα}`.
///
/// `coeff(k)` returns `(envelope, oscillating factor)`; the k-th term is their
/// product times `x^{-kα}`. Stopping decisions look at the envelope only, so a
/// vanishing `sin(kαπ/2)` does not end the sum early. For α > 1 the sum stops
/// at the smallest envelope term.
fn tail_series(a: f64, x: f64, coeff: impl Fn(usize) -> (f64, f64)) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..400 {
        let (env, osc) = coeff(k);
        let env = env.abs() * x.powf(-(k as f64) * a);
        if !env.is_finite() || (a > 1.0 && env > prev) {
            break;
        }
        sum += env * osc;
        if env < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        prev = env;
    }
    sum
}

fn factorial(k: usize) -> f64 {
    gamma_fn(k as f64 + 1.0)
}

/// Series for `p_α(x)`, `x > 0` large: `(1/π)Σ (-1)^{k+1} Γ(kα+1)/k! sin(kαπ/2) x^{-kα-1}`.
pub fn density_tail_series(alpha: StableIndex, x: f64) -> f64 {
    let a = alpha.0;
    let x = x.abs();
    tail_series(a, x, |k| {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        (gamma_fn(kf * a + 1.0) / factorial(k), sign * (kf * a * PI / 2.0).sin())
    }) / (PI * x)
}

/// Series for `p'_α(x)` matching [`density_tail_series`], odd in `x`.
pub fn density_derivative_tail_series(alpha: StableIndex, x: f64) -> f64 {
    let a = alpha.0;
    let ax = x.abs();
    let s = tail_series(a, ax, |k| {
        let kf = k as f64;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        (gamma_fn(kf * a + 1.0) * (kf * a + 1.0) / factorial(k), sign * (kf * a * PI / 2.0).sin())
    }) / (PI * ax * ax);
    s * x.signum()
}

/// `P(z(1) > x)` for `x > 0` large, from the integrated tail series.
pub fn tail_probability_series(alpha: StableIndex, x: f64) -> f64 {
    let a = alpha.0;
    tail_series(a, x, |k| {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        (gamma_fn(kf * a + 1.0) / (factorial(k) * kf * a), sign * (kf * a * PI / 2.0).sin())
    }) / PI
}

/// Density `p_α(x)` of `z(1)`.
pub fn stable_density(alpha: StableIndex, x: f64) -> Result<f64> {
    let ax = x.abs();
    if ax > SERIES_SWITCH {
        return Ok(density_tail_series(alpha, ax));
    }
    Ok(inversion_moment(alpha.0, ax, 0)?.re)
}

/// Derivative `p'_α(x) = -(1/π)∫_0^∞ λ sin(λx) e^{-λ^α} dλ`.
pub fn stable_density_derivative(alpha: StableIndex, x: f64) -> Result<f64> {
    let ax = x.abs();
    if ax > SERIES_SWITCH {
        return Ok(density_derivative_tail_series(alpha, x));
    }
    Ok(inversion_moment(alpha.0, ax, 1)?.re * x.signum())
}

/// Distribution function `P(z(1) <= x) = 1/2 + (1/π)∫_0^∞ sin(λx)/λ e^{-λ^α} dλ`.
pub fn stable_cdf(alpha: StableIndex, x: f64) -> Result<f64> {
    let a = alpha.0;
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(0.5);
    }
    let upper_tail = if ax > SERIES_SWITCH {
        tail_probability_series(alpha, ax)
    } else {
        let phi = rotation(a);
        let dir = Complex64::from_polar(1.0, phi);
        let dir_a = Complex64::from_polar(1.0, a * phi);
        let upper = (DAMPING / (a * phi).cos()).powf(1.0 / a);
        let f = |r: f64| {
            let lam = dir * r;
            let z = Complex64::i() * lam * ax;
            // (e^{z} - 1)/(iλ), expanded near zero to avoid cancellation
            let kernel = if z.norm() < 1e-4 {
                ax * (1.0 + z / 2.0 + z * z / 6.0)
            } else {
                (z.exp() - 1.0) / (Complex64::i() * lam)
            };
            dir * kernel * (-dir_a * r.powf(a)).exp()
        };
        let e = integrate_panels(f, &geometric_breaks(upper, upper * 1e-7), &ray_tolerance())?;
        0.5 - e.value.re / PI
    };
    Ok(if x > 0.0 { 1.0 - upper_tail } else { upper_tail })
}

/// Density and derivative of `z(1)` tabulated on a symmetric grid.
///
/// Grid points are `x_i = sinh(u_i)` for uniform `u_i`, which concentrates
/// nodes near the origin where small indices give a sharply peaked density.
/// Integrals use the trapezoid rule in `u` (weights carry the Jacobian).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityTable {
    pub alpha: StableIndex,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub half_width: f64,
}

impl DensityTable {
    pub fn build(alpha: StableIndex, points: usize, half_width: f64) -> Result<Self> {
        if points < 16 || points % 2 != 0 {
            return Err(Error::InvalidParameter(format!("density grid needs an even point count >= 16, got {points}")));
        }
        if !(half_width > 1.0) {
            return Err(Error::InvalidParameter(format!("density grid half width must exceed 1, got {half_width}")));
        }
        let u_max = half_width.asinh();
        let du = 2.0 * u_max / (points - 1) as f64;
        let half = points / 2;
        // positive half, mirrored afterwards
        let u_pos: Vec<f64> = (0..half).map(|j| -u_max + (half + j) as f64 * du).collect();
        let values: Vec<Result<(f64, f64)>> = par_map(half, |j| {
            let x = u_pos[j].sinh();
            Ok((stable_density(alpha, x)?, stable_density_derivative(alpha, x)?))
        });
        let mut pos = Vec::with_capacity(half);
        for v in values {
            pos.push(v?);
        }
        let mut grid = Vec::with_capacity(points);
        let mut weights = Vec::with_capacity(points);
        let mut p = Vec::with_capacity(points);
        let mut dp = Vec::with_capacity(points);
        for i in 0..points {
            let (j, sign) = if i < half { (half - 1 - i, -1.0) } else { (i - half, 1.0) };
            let u = u_pos[j];
            let end = i == 0 || i == points - 1;
            grid.push(sign * u.sinh());
            weights.push(u.cosh() * du * if end { 0.5 } else { 1.0 });
            p.push(pos[j].0);
            dp.push(sign * pos[j].1);
        }
        Ok(Self { alpha, grid, weights, p, dp, half_width })
    }

    pub fn default_for(alpha: StableIndex) -> Result<Self> {
        Self::build(alpha, DEFAULT_GRID_POINTS, DEFAULT_HALF_WIDTH)
    }

    /// Probability mass on the grid plus both analytic tails.
    pub fn mass(&self) -> f64 {
        let interior: f64 = self.weights.iter().zip(&self.p).map(|(w, p)| w * p).sum();
        interior + 2.0 * tail_probability_series(self.alpha, self.half_width)
    }

    /// Largest relative deviation `|p(x) - p(-x)| / p(x)` over mirrored nodes.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.p.len();
        (0..n / 2).map(|i| ((self.p[i] - self.p[n - 1 - i]) / self.p[i]).abs()).fold(0.0, f64::max)
    }

    /// `∫ (p')²/p dz` on the grid plus tail integrals.
    pub fn fisher(&self) -> Result<FisherIntegral> {
        let interior: f64 = self
            .weights
            .iter()
            .zip(self.p.iter().zip(&self.dp))
            .map(|(w, (p, dp))| w * dp * dp / p)
            .sum();
        let a = self.alpha.0;
        let l = self.half_width;
        // leading-order remainder, used as the sufficiency test
        let c = gamma_fn(1.0 + a) * (PI * a / 2.0).sin() / PI;
        let asymptotic_tail = 2.0 * c * (1.0 + a).powi(2) * l.powf(-2.0 - a) / (2.0 + a);
        // tail value from the series, x = L/s
        let alpha = self.alpha;
        let integrand = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let x = l / s;
            let p = density_tail_series(alpha, x);
            let dp = density_derivative_tail_series(alpha, x);
            dp * dp / p * l / (s * s)
        };
        let tail = 2.0 * integrate(integrand, 0.0, 1.0, &Tolerance::new(1e-16, 1e-10))?.value;
        let total = interior + tail;
        let ratio = asymptotic_tail / total;
        if ratio > 1e-2 {
            return Err(Error::GridInsufficient { ratio });
        }
        Ok(FisherIntegral { value: total, interior, tail, tail_bound: asymptotic_tail })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherIntegral {
    pub value: f64,
    pub interior: f64,
    pub tail: f64,
    pub tail_bound: f64,
}

fn fisher_cache() -> &'static Mutex<BTreeMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<BTreeMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// `I_α = ∫_R (p'_α)²/p_α dz` on the default grid. Results are memoized per `α`.
pub fn fisher_integral(alpha: StableIndex) -> Result<f64> {
    let key = alpha.0.to_bits();
    if let Some(v) = fisher_cache().lock().expect("fisher cache poisoned").get(&key) {
        return Ok(*v);
    }
    let value = DensityTable::default_for(alpha)?.fisher()?.value;
    fisher_cache().lock().expect("fisher cache poisoned").insert(key, value);
    Ok(value)
}

/// `C_α = ∫_R (1 - cos y) |y|^{-1-α} dy`.
pub fn frac_lap_normalizer(alpha: StableIndex) -> Result<f64> {
    frac_lap_normalizer_with_split(alpha, 1.0)
}

/// [`frac_lap_normalizer`] with the series/quadrature split placed at `split`.
///
/// On `[0, split]` the integrand is expanded in powers of `y`; on
/// `[split, ∞)` the oscillatory part is integrated along `y = split + is`.
pub fn frac_lap_normalizer_with_split(alpha: StableIndex, split: f64) -> Result<f64> {
    if !(split > 0.0 && split <= 4.0) {
        return Err(Error::InvalidParameter(format!("split point must be in (0, 4], got {split}")));
    }
    let a = alpha.0;
    let mut near = 0.0;
    let mut fact = 1.0;
    for k in 1..60 {
        let two_k = 2 * k;
        fact *= (two_k - 1) as f64 * two_k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * split.powf(two_k as f64 - a) / (fact * (two_k as f64 - a));
        near += term;
        if term.abs() < 1e-18 * near.abs() {
            break;
        }
    }
    // ∫_split^∞ e^{iy} y^{-1-α} dy = i e^{i split} ∫_0^∞ e^{-s} (split + is)^{-1-α} ds
    let g = |s: f64| (-s).exp() * Complex64::new(split, s).powf(-1.0 - a);
    let e = integrate_panels(g, &geometric_breaks(60.0, 0.1), &Tolerance::new(1e-17, 1e-13))?;
    let oscillatory = (Complex64::i() * Complex64::from_polar(1.0, split) * e.value).re;
    let far = split.powf(-a) / a - oscillatory;
    Ok(2.0 * (near + far))
}

/// `∂^α f(x) = (1/C_α)∫_R (f(x+y) - f(x)) |y|^{-1-α} dy` for a smooth bounded `f`.
///
/// The integrand is symmetrized to `f(x+y) + f(x-y) - 2f(x)` on `y > 0`.
/// Near zero it is replaced by its second-difference quadratic; beyond
/// `y = 2^14` the bracket is replaced by its mean over `[2^13, 2^14]`.
pub fn apply_fractional_generator(alpha: StableIndex, f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    const NEAR: f64 = 1e-3;
    const FAR: f64 = 16_384.0;
    let a = alpha.0;
    let fx = f(x);
    let bracket = |y: f64| f(x + y) + f(x - y) - 2.0 * fx;
    let curvature = bracket(NEAR) / (NEAR * NEAR);
    let near = curvature * NEAR.powf(2.0 - a) / (2.0 - a);
    let mut breaks = vec![NEAR];
    while *breaks.last().expect("nonempty") < FAR {
        let next = breaks.last().expect("nonempty") * 2.0;
        breaks.push(next.min(FAR));
    }
    let tol = Tolerance { abs: 1e-11, rel: 1e-10, max_intervals: 200_000 };
    let mid = integrate_panels(|y: f64| bracket(y) * y.powf(-1.0 - a), &breaks, &tol)?.value;
    let mean = integrate(|y: f64| f(x + y) + f(x - y), FAR / 2.0, FAR, &tol)?.value / (FAR / 2.0);
    let far = (mean - 2.0 * fx) * FAR.powf(-a) / a;
    Ok((near + mid + far) / frac_lap_normalizer(alpha)?)
}

/// Distribution function of `z(1)` interpolated from tabulated values.
///
/// Nodes are `sinh`-spaced on `[0, half_width]`; between nodes a cubic
/// Hermite interpolant uses the density as slope. Outside the table the tail
/// series is used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdfTable {
    pub alpha: StableIndex,
    x: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl CdfTable {
    pub fn build(alpha: StableIndex, points: usize, half_width: f64) -> Result<Self> {
        if points < 8 || !(half_width > 1.0 && half_width <= SERIES_SWITCH) {
            return Err(Error::InvalidParameter(format!(
                "cdf table needs >= 8 points and half width in (1, {SERIES_SWITCH}]"
            )));
        }
        let u_max = half_width.asinh();
        let x: Vec<f64> = (0..points).map(|i| (u_max * i as f64 / (points - 1) as f64).sinh()).collect();
        let rows: Vec<Result<(f64, f64)>> = par_map(points, |i| Ok((stable_cdf(alpha, x[i])?, stable_density(alpha, x[i])?)));
        let mut cdf = Vec::with_capacity(points);
        let mut pdf = Vec::with_capacity(points);
        for r in rows {
            let (c, p) = r?;
            cdf.push(c);
            pdf.push(p);
        }
        Ok(Self { alpha, x, cdf, pdf })
    }

    /// 4001 nodes on `[0, 1000]`.
    pub fn default_for(alpha: StableIndex) -> Result<Self> {
        Self::build(alpha, 4001, SERIES_SWITCH)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let last = *self.x.last().expect("table is nonempty");
        let upper = if ax >= last {
            tail_probability_series(self.alpha, ax)
        } else {
            let i = self.x.partition_point(|v| *v <= ax).saturating_sub(1).min(self.x.len() - 2);
            let (x0, x1) = (self.x[i], self.x[i + 1]);
            let h = x1 - x0;
            let s = (ax - x0) / h;
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            let c = h00 * self.cdf[i] + h10 * h * self.pdf[i] + h01 * self.cdf[i + 1] + h11 * h * self.pdf[i + 1];
            1.0 - c
        };
        if x >= 0.0 {
            1.0 - upper
        } else {
            upper
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    #[test]
    fn index_range() {
        assert!(matches!(StableIndex::new(2.0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(StableIndex::new(0.0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(StableIndex::new(1.95), Err(Error::UnsupportedIndex(_))));
        assert!(matches!(StableIndex::new(0.2), Err(Error::UnsupportedIndex(_))));
        assert!(StableIndex::new(1.9).is_ok());
        let parsed: StableIndex = serde_json::from_str("1.5").unwrap();
        assert_eq!(parsed.value(), 1.5);
        assert!(serde_json::from_str::<StableIndex>("2.5").is_err());
    }

    #[test]
    fn cauchy_density_values() {
        let a = idx(1.0);
        assert!((stable_density(a, 0.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!((stable_density(a, 2.0).unwrap() - 1.0 / (5.0 * PI)).abs() < 1e-12);
        assert!(stable_density_derivative(a, 0.0).unwrap().abs() < 1e-14);
        assert!((stable_density_derivative(a, 1.0).unwrap() + 2.0 / (4.0 * PI)).abs() < 1e-12);
        let x = 3000.0;
        assert!((stable_density(a, x).unwrap() - 1.0 / (PI * (1.0 + x * x))).abs() < 1e-18);
    }

    #[test]
    fn density_at_origin_matches_closed_form() {
        for &a in &[0.3, 0.5, 0.8, 1.2, 1.5, 1.9] {
            let expected = gamma_fn(1.0 + 1.0 / a) / PI;
            let got = stable_density(idx(a), 0.0).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected.max(1.0), "alpha {a}: {got} vs {expected}");
        }
        assert!((stable_density(idx(1.5), 0.0).unwrap() - 0.287_352).abs() < 1e-5);
    }

    #[test]
    fn rotated_ray_agrees_with_real_axis_cosine_transform() {
        // direct cosine transform on the real axis, panelled between zeros
        for &a in &[1.2, 1.5, 1.9] {
            let upper = 45f64.powf(1.0 / a);
            for &x in &[0.3, 1.0, 2.5, 7.0] {
                let breaks: Vec<f64> = (0..=400).map(|k| upper * k as f64 / 400.0).collect();
                let direct = integrate_panels(|l: f64| (l * x).cos() * (-l.powf(a)).exp(), &breaks, &Tolerance::default())
                    .unwrap()
                    .value
                    / PI;
                let ddirect =
                    -integrate_panels(|l: f64| l * (l * x).sin() * (-l.powf(a)).exp(), &breaks, &Tolerance::default())
                        .unwrap()
                        .value
                        / PI;
                assert!((stable_density(idx(a), x).unwrap() - direct).abs() < 1e-11, "a={a} x={x}");
                assert!((stable_density_derivative(idx(a), x).unwrap() - ddirect).abs() < 1e-11, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for &(a, x) in &[(1.5, 0.5), (0.8, 1.3), (1.9, -2.0), (0.4, 6.0)] {
            let h = 1e-4;
            let fd = (stable_density(idx(a), x + h).unwrap() - stable_density(idx(a), x - h).unwrap()) / (2.0 * h);
            let d = stable_density_derivative(idx(a), x).unwrap();
            assert!((fd - d).abs() < 1e-6, "a={a} x={x}: {d} vs {fd}");
        }
    }

    #[test]
    fn series_and_quadrature_overlap() {
        for &a in &[0.5, 1.0, 1.5] {
            for &x in &[60.0, 200.0] {
                let q = stable_density(idx(a), x).unwrap();
                let s = density_tail_series(idx(a), x);
                assert!(((q - s) / s).abs() < 1e-8, "a={a} x={x}: {q} vs {s}");
                let dq = stable_density_derivative(idx(a), x).unwrap();
                let ds = density_derivative_tail_series(idx(a), x);
                assert!(((dq - ds) / ds).abs() < 1e-7, "a={a} x={x}: {dq} vs {ds}");
                let cq = 1.0 - stable_cdf(idx(a), x).unwrap();
                let cs = tail_probability_series(idx(a), x);
                assert!(((cq - cs) / cs).abs() < 1e-7, "a={a} x={x}: {cq} vs {cs}");
            }
        }
    }

    #[test]
    fn cdf_cauchy_and_symmetry() {
        let a = idx(1.0);
        for &x in &[-7.0, -1.0, 0.25, 3.0, 40.0] {
            let f = stable_cdf(a, x).unwrap();
            assert!((f - (0.5 + x.atan() / PI)).abs() < 1e-12, "x={x}");
        }
        let b = idx(0.7);
        assert!((stable_cdf(b, 2.0).unwrap() + stable_cdf(b, -2.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_table_invariants() {
        for &a in &[0.5, 1.0, 1.7] {
            let t = DensityTable::build(idx(a), 4096, 50.0).unwrap();
            assert!(t.grid.windows(2).all(|w| w[0] < w[1]));
            assert!(t.p.iter().all(|p| *p > 0.0));
            assert!(t.symmetry_defect() <= 1e-10);
            assert!((t.mass() - 1.0).abs() < 1e-6, "alpha {a}: mass {}", t.mass());
        }
    }

    #[test]
    fn small_grid_is_refused() {
        let t = DensityTable::build(idx(0.5), 256, 2.0).unwrap();
        assert!(matches!(t.fisher(), Err(Error::GridInsufficient { .. })));
    }

    #[test]
    fn cauchy_fisher_integral() {
        // ∫ 4x²/(π(1+x²)³) dx = 1/2
        let v = fisher_integral(idx(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-5, "{v}");
        assert!((v / 8.0 - 1.0 / 16.0).abs() < 2e-6);
    }

    #[test]
    fn normalizer_closed_forms() {
        assert!((frac_lap_normalizer(idx(1.0)).unwrap() - PI).abs() < 1e-8);
        for &a in &[0.3, 0.5, 0.8, 1.3, 1.9] {
            // 2 Γ(1-α) cos(πα/2) / α
            let closed = 2.0 * gamma_fn(1.0 - a) * (PI * a / 2.0).cos() / a;
            let got = frac_lap_normalizer(idx(a)).unwrap();
            assert!(got > 0.0);
            assert!(((got - closed) / closed).abs() < 1e-9, "alpha {a}: {got} vs {closed}");
        }
        let one = frac_lap_normalizer_with_split(idx(0.5), 1.0).unwrap();
        let two = frac_lap_normalizer_with_split(idx(0.5), 2.0).unwrap();
        assert!(((one - two) / one).abs() < 1e-7);
    }

    #[test]
    fn generator_on_constants_and_cosine() {
        for &a in &[0.3, 0.8, 1.0, 1.5, 1.9] {
            let c = apply_fractional_generator(idx(a), |_| 2.5, 0.7).unwrap();
            assert!(c.abs() < 1e-12);
            let v = apply_fractional_generator(idx(a), f64::cos, 0.0).unwrap();
            assert!((v + 1.0).abs() < 1e-4, "alpha {a}: {v}");
        }
        // ∂^α cos = -cos at a generic point
        let v = apply_fractional_generator(idx(1.2), f64::cos, 0.9).unwrap();
        assert!((v + 0.9f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn generator_matches_monte_carlo_limit() {
        // (E f(z(h)) - f(0))/h at h and 2h, Richardson-extrapolated
        let a = idx(1.0);
        let n = 400_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 0.02;
        let mut acc_h = Vec::with_capacity(n);
        let mut acc_2h = Vec::with_capacity(n);
        for _ in 0..n {
            let z = sample_standard_stable(a, &mut rng);
            acc_h.push(((h * z).cos() - 1.0) / h);
            acc_2h.push(((2.0 * h * z).cos() - 1.0) / (2.0 * h));
        }
        let est: Vec<f64> = acc_h.iter().zip(&acc_2h).map(|(a, b)| 2.0 * a - b).collect();
        let mean = est.iter().sum::<f64>() / n as f64;
        let var = est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let gen = apply_fractional_generator(a, f64::cos, 0.0).unwrap();
        assert!((mean - gen).abs() < 3.0 * se, "{mean} ± {se} vs {gen}");
    }

    #[test]
    fn cauchy_sampler_quartiles() {
        let a = idx(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let inside = (0..n).filter(|_| sample_standard_stable(a, &mut rng).abs() < 1.0).count();
        let frac = inside as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn cdf_table_matches_direct_evaluation() {
        for &a in &[0.8, 1.5] {
            let t = CdfTable::build(idx(a), 1001, 1000.0).unwrap();
            for &x in &[-2000.0, -37.3, -1.1, -0.013, 0.0, 0.4, 2.71, 15.0, 999.0, 1500.0] {
                let direct = stable_cdf(idx(a), x).unwrap();
                assert!((t.eval(x) - direct).abs() < 1e-7, "alpha {a}, x {x}: {} vs {direct}", t.eval(x));
            }
        }
    }
}
