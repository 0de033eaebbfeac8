use std::f64::consts::PI;

use serde::Serialize;

use super::{ModelSpec, NoiseSpec, NonlinearitySpec, PowerLaw, SpectralOperator};
use crate::error::{Error, Result};
use crate::special::gamma_fn;
use crate::stable::StableIndex;

/// Dirichlet Laplacian on `(0, π)^d` with noise `β_k = |k|^η`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatExample {
    pub model: ModelSpec,
    pub d: usize,
    pub eta: f64,
    /// `2 > d + αη`: the noise is summable.
    pub summable: bool,
    /// `2/α - η < 2`
    pub regular: bool,
    /// Multi-indices in the order of the retained modes.
    pub indices: Vec<Vec<usize>>,
}

/// Builds the truncated heat model with `γ_k = |k|²` over `k ∈ {1..n}^d`,
/// modes sorted by eigenvalue (ties in lexicographic order).
///
/// Rejects triples violating `2 > d + αη` or `2/α - η < 2`, naming the
/// failed inequality. The declared tail laws follow Weyl's count
/// `γ_(n) ≈ (2^d n / ω_d)^{2/d}` (exact for `d = 1`).
pub fn heat_example(d: usize, alpha: StableIndex, eta: f64, n_per_axis: usize, sigma: f64) -> Result<HeatExample> {
    if d == 0 || n_per_axis == 0 {
        return Err(Error::InvalidParameter("heat example needs d >= 1 and N_per_axis >= 1".into()));
    }
    let a = alpha.value();
    let summable = 2.0 > d as f64 + a * eta;
    let regular = 2.0 / a - eta < 2.0;
    if !summable {
        return Err(Error::HeatExampleRejected(format!("2 > d + alpha*eta fails: 2 > {}", d as f64 + a * eta)));
    }
    if !regular {
        return Err(Error::HeatExampleRejected(format!("2/alpha - eta < 2 fails: {} >= 2", 2.0 / a - eta)));
    }
    let total = n_per_axis
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 20)
        .ok_or_else(|| Error::InvalidParameter(format!("{n_per_axis}^{d} modes is too many")))?;

    let mut indices: Vec<Vec<usize>> = (0..total)
        .map(|mut flat| {
            let mut k = vec![0; d];
            for slot in k.iter_mut().rev() {
                *slot = flat % n_per_axis + 1;
                flat /= n_per_axis;
            }
            k
        })
        .collect();
    let norm2 = |k: &Vec<usize>| k.iter().map(|v| v * v).sum::<usize>();
    indices.sort_by(|x, y| norm2(x).cmp(&norm2(y)).then_with(|| x.cmp(y)));

    let gammas: Vec<f64> = indices.iter().map(|k| norm2(k) as f64).collect();
    let betas: Vec<f64> = gammas.iter().map(|g| g.powf(eta / 2.0)).collect();

    let ball = PI.powf(d as f64 / 2.0) / gamma_fn(d as f64 / 2.0 + 1.0);
    let gamma_scale = if d == 1 { 1.0 } else { (2f64.powi(d as i32) / ball).powf(2.0 / d as f64) };
    let gamma_law = PowerLaw { scale: gamma_scale, exponent: 2.0 / d as f64 };
    let beta_law = PowerLaw { scale: gamma_scale.powf(eta / 2.0), exponent: eta / d as f64 };

    let model = ModelSpec::new(
        SpectralOperator::new(gammas, Some(gamma_law))?,
        NoiseSpec::new(betas, Some(beta_law))?,
        NonlinearitySpec::Zero {},
        alpha,
        sigma,
    )?;
    Ok(HeatExample { model, d, eta, summable, regular, indices })
}
