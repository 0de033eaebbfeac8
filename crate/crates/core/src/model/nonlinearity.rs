use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded 1-Lipschitz saturating map with `s(0) = 0`, `s'(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturator {
    #[default]
    Tanh,
    /// `(2/π) atan(πu/2)`
    Arctan,
}

impl Saturator {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Saturator::Tanh => u.tanh(),
            Saturator::Arctan => 2.0 / PI * (PI * u / 2.0).atan(),
        }
    }
}

/// Parametric bounded Lipschitz nonlinearity `F: R^N -> R^N`.
///
/// * `diagonal_saturating`: `F_k(x) = c_k s(x_{perm[k]})` (0-based `perm`,
///   identity when omitted).
/// * `finite_rank_saturating`: `F_j(x) = c_j s(<w_j, x>)` for `j < r`, zero
///   on the remaining modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero {},
    DiagonalSaturating {
        c: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perm: Option<Vec<usize>>,
        #[serde(default)]
        saturator: Saturator,
    },
    FiniteRankSaturating {
        c: Vec<f64>,
        w: Vec<Vec<f64>>,
        #[serde(default)]
        saturator: Saturator,
    },
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Zero {}
    }
}

impl NonlinearitySpec {
    pub fn diagonal(c: Vec<f64>, saturator: Saturator) -> Self {
        NonlinearitySpec::DiagonalSaturating { c, perm: None, saturator }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NonlinearitySpec::Zero {} => true,
            NonlinearitySpec::DiagonalSaturating { c, .. } | NonlinearitySpec::FiniteRankSaturating { c, .. } => {
                c.iter().all(|v| *v == 0.0)
            }
        }
    }

    /// Checks the descriptor against a state dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            NonlinearitySpec::Zero {} => Ok(()),
            NonlinearitySpec::DiagonalSaturating { c, perm, .. } => {
                if c.len() != n {
                    return Err(Error::Dimension(format!("diagonal nonlinearity has {} amplitudes for {n} modes", c.len())));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("nonlinearity amplitudes must be finite".into()));
                }
                if let Some(p) = perm {
                    let mut seen = vec![false; n];
                    if p.len() != n {
                        return Err(Error::Dimension(format!("permutation has length {}, expected {n}", p.len())));
                    }
                    for &i in p {
                        if i >= n || seen[i] {
                            return Err(Error::InvalidParameter(format!("perm is not a permutation of 0..{n}")));
                        }
                        seen[i] = true;
                    }
                }
                Ok(())
            }
            NonlinearitySpec::FiniteRankSaturating { c, w, .. } => {
                if c.len() != w.len() {
                    return Err(Error::Dimension(format!("{} amplitudes but {} weight vectors", c.len(), w.len())));
                }
                if c.len() > n {
                    return Err(Error::Dimension(format!("rank {} exceeds {n} modes", c.len())));
                }
                if let Some(bad) = w.iter().find(|row| row.len() > n) {
                    return Err(Error::Dimension(format!("weight vector of length {} for {n} modes", bad.len())));
                }
                if c.iter().chain(w.iter().flatten()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("nonlinearity parameters must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Writes `F(x)` into `out` (same length as `x`).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NonlinearitySpec::Zero {} => out.iter_mut().for_each(|o| *o = 0.0),
            NonlinearitySpec::DiagonalSaturating { c, perm, saturator } => {
                for (k, o) in out.iter_mut().enumerate() {
                    let src = perm.as_ref().map_or(k, |p| p[k]);
                    *o = c[k] * saturator.apply(x[src]);
                }
            }
            NonlinearitySpec::FiniteRankSaturating { c, w, saturator } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (j, (cj, wj)) in c.iter().zip(w).enumerate() {
                    let u: f64 = wj.iter().zip(x).map(|(a, b)| a * b).sum();
                    out[j] = cj * saturator.apply(u);
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `‖F‖_0 = sup_x |F(x)|`, the ℓ² norm of the amplitudes.
    pub fn sup_norm(&self) -> f64 {
        match self {
            NonlinearitySpec::Zero {} => 0.0,
            NonlinearitySpec::DiagonalSaturating { c, .. } | NonlinearitySpec::FiniteRankSaturating { c, .. } => {
                c.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    }

    /// Best Lipschitz constant `L_F`.
    ///
    /// Diagonal family: `max |c_k|`. Finite-rank family: spectral norm of the
    /// matrix with rows `c_j w_j` (attained at the origin where `s' = 1`).
    pub fn lipschitz(&self) -> f64 {
        match self {
            NonlinearitySpec::Zero {} => 0.0,
            NonlinearitySpec::DiagonalSaturating { c, .. } => c.iter().fold(0.0, |m, v| m.max(v.abs())),
            NonlinearitySpec::FiniteRankSaturating { c, w, .. } => {
                let r = c.len();
                // Gram matrix G = M M^T, M_j = c_j w_j
                let mut g = vec![vec![0.0; r]; r];
                for i in 0..r {
                    for j in 0..r {
                        let dot: f64 = w[i].iter().zip(&w[j]).map(|(a, b)| a * b).sum();
                        g[i][j] = c[i] * c[j] * dot;
                    }
                }
                symmetric_max_eigenvalue(g).max(0.0).sqrt()
            }
        }
    }

    /// Same family with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            NonlinearitySpec::Zero {} => {}
            NonlinearitySpec::DiagonalSaturating { c, .. } | NonlinearitySpec::FiniteRankSaturating { c, .. } => {
                c.iter_mut().for_each(|v| *v *= factor)
            }
        }
        out
    }

    /// Whether `F(-x) = -F(x)` (both saturators are odd, so every family is).
    pub fn is_odd(&self) -> bool {
        true
    }
}

/// Largest eigenvalue of a small symmetric matrix by cyclic Jacobi rotations.
fn symmetric_max_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}
