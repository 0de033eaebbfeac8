//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Works for real and complex integrands. Semi-infinite integrals are handled
//! by the callers through contour rotation or variable substitution, and by
//! splitting the range into geometric panels with [`geometric_breaks`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-12, max_intervals: 20_000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

fn kronrod<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).magnitude())
}

struct Interval<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Interval<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Interval<T> {}
impl<T> PartialOrd for Interval<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Interval<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total error meets `tol`.
pub fn integrate<T: QuadValue>(f: impl Fn(f64) -> T, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate { value: T::zero(), error: 0.0, evaluations: 0 });
    }
    let (value, error) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::NonConvergence(format!(
                "[{a}, {b}]: error {total_err:.3e} above target {target:.3e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point; accept it.
            heap.push(Interval { error: 0.0, ..worst });
            total_err = heap.iter().map(|i| i.error).sum();
            if total_err <= target {
                break;
            }
            continue;
        }
        let (lv, le) = kronrod(&f, worst.a, mid);
        let (rv, re) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + lv + rv;
        total_err += le + re - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Interval { a: mid, b: worst.b, value: rv, error: re });
        if total_err < 0.0 {
            total_err = heap.iter().map(|i| i.error).sum();
        }
    }
    // Resum to shed the drift accumulated by incremental updates.
    let mut value = T::zero();
    let mut error = 0.0;
    for iv in heap.iter() {
        value = value + iv.value;
        error += iv.error;
    }
    Ok(Estimate { value, error, evaluations })
}

/// Integrates over consecutive panels `breaks[i]..breaks[i+1]`, each with its
/// own adaptive refinement. The absolute tolerance is shared evenly.
pub fn integrate_panels<T: QuadValue>(f: impl Fn(f64) -> T, breaks: &[f64], tol: &Tolerance) -> Result<Estimate<T>> {
    let panels = breaks.len().saturating_sub(1).max(1);
    let local = Tolerance { abs: tol.abs / panels as f64, ..*tol };
    let mut acc = Estimate { value: T::zero(), error: 0.0, evaluations: 0 };
    for w in breaks.windows(2) {
        let e = integrate(&f, w[0], w[1], &local)?;
        acc.value = acc.value + e.value;
        acc.error += e.error;
        acc.evaluations += e.evaluations;
    }
    Ok(acc)
}

/// Breakpoints `0, R 2^-k, ..., R/2, R` with the smallest positive break
/// at or below `floor`.
pub fn geometric_breaks(upper: f64, floor: f64) -> Vec<f64> {
    let mut breaks = vec![upper];
    let mut x = upper;
    while x > floor && breaks.len() < 200 {
        x *= 0.5;
        breaks.push(x);
    }
    breaks.push(0.0);
    breaks.reverse();
    breaks
}
