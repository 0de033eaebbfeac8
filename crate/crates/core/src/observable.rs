//! Cylindrical test functions `f(x) = g(<w, x> + b)`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Cosine,
    Tanh,
    /// `e^{-u²}`
    GaussBump,
}

impl Profile {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Profile::Cosine => u.cos(),
            Profile::Tanh => u.tanh(),
            Profile::GaussBump => (-u * u).exp(),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Profile::Cosine => -u.sin(),
            Profile::Tanh => 1.0 / (u.cosh() * u.cosh()),
            Profile::GaussBump => -2.0 * u * (-u * u).exp(),
        }
    }

    pub fn sup(self) -> f64 {
        1.0
    }

    pub fn derivative_sup(self) -> f64 {
        match self {
            Profile::Cosine | Profile::Tanh => 1.0,
            Profile::GaussBump => (2.0 / E).sqrt(),
        }
    }
}

/// `f(x) = g(<w, x> + b)`; `w` may be shorter than the state, the missing
/// entries count as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub family: Profile,
    pub w: Vec<f64>,
    #[serde(default)]
    pub b: f64,
}

impl TestFunction {
    pub fn new(family: Profile, w: Vec<f64>, b: f64) -> Result<Self> {
        let f = Self { family, w, b };
        f.validate()?;
        Ok(f)
    }

    /// `g(x_k)` on the 0-based coordinate `k` of an `n`-mode state.
    pub fn coordinate(family: Profile, k: usize) -> Self {
        let mut w = vec![0.0; k + 1];
        w[k] = 1.0;
        Self { family, w, b: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        // cos(b) = c
        Self { family: Profile::Cosine, w: Vec::new(), b: c.clamp(-1.0, 1.0).acos() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().chain(std::iter::once(&self.b)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("test function parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.w.len() > n && self.w[n..].iter().any(|v| *v != 0.0) {
            return Err(Error::Dimension(format!("test function weights reach beyond {n} modes")));
        }
        Ok(())
    }

    fn argument(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.family.value(self.argument(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.family.derivative(self.argument(x));
        let mut g = vec![0.0; x.len()];
        for (gk, wk) in g.iter_mut().zip(&self.w) {
            *gk = d * wk;
        }
        g
    }

    fn weight_norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_constant(&self) -> bool {
        self.weight_norm() == 0.0
    }

    /// `‖f‖₀`
    pub fn sup_norm(&self) -> f64 {
        if self.is_constant() {
            self.family.value(self.b).abs()
        } else {
            self.family.sup()
        }
    }

    /// `‖Df‖₀ = |w| ‖g'‖₀`
    pub fn gradient_sup_norm(&self) -> f64 {
        self.weight_norm() * self.family.derivative_sup()
    }

    /// 0-based coordinates the function depends on.
    pub fn support(&self) -> Vec<usize> {
        self.w.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k).collect()
    }

    /// `2^{1-s} ‖f‖₀^{1-s} ‖Df‖₀^s`, the interpolation bound on `[f]_s`.
    pub fn holder_bound(&self, s: f64) -> f64 {
        2f64.powf(1.0 - s) * self.sup_norm().powf(1.0 - s) * self.gradient_sup_norm().powf(s)
    }

    /// Whether `g` is odd and `b = 0`, so `f(-x) = -f(x)`.
    pub fn is_odd(&self) -> bool {
        self.family == Profile::Tanh && self.b == 0.0
    }
}
