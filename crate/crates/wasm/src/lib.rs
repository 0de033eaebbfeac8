//! Browser bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use stablemix::mixing::ou_cosine_closed_form;
use stablemix::model::{ModelSpec, NonlinearitySpec, Saturator};
use stablemix::observable::{Profile, TestFunction};
use stablemix::semigroup::estimate_ptf;
use stablemix::simulator::{simulate_path, SimConfig};
use stablemix::stable::{stable_density, StableIndex};

fn js(e: stablemix::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Density of the standard symmetric stable law on `n` points of `[-x_max, x_max]`.
#[wasm_bindgen]
pub fn density_curve(alpha: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let a = StableIndex::new(alpha).map_err(js)?;
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let x = -x_max + 2.0 * x_max * i as f64 / (n - 1) as f64;
            stable_density(a, x).map_err(js)
        })
        .collect()
}

/// One path of `dx = (-γx + c tanh x) dt + β dz`, values at every step.
#[wasm_bindgen]
pub fn sample_path(alpha: f64, gamma: f64, beta: f64, c: f64, x0: f64, t_end: f64, h: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    let nl = NonlinearitySpec::diagonal(vec![c], Saturator::Tanh);
    let m = ModelSpec::finite(vec![gamma], vec![beta], nl, alpha, 0.5).map_err(js)?;
    let cfg = SimConfig::new(t_end, h, 1, seed).map_err(js)?;
    Ok(simulate_path(&m, &[x0], &cfg, 0).map_err(js)?.states.into_iter().map(|s| s[0]).collect())
}

/// Monte Carlo `P_t cos(x)` for the linear single mode against its closed
/// form, as rows `[t, estimate, stderr, exact]` flattened.
#[wasm_bindgen]
pub fn cosine_decay(alpha: f64, gamma: f64, beta: f64, x0: f64, t_max: f64, points: usize, paths: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let m = ModelSpec::finite(vec![gamma], vec![beta], NonlinearitySpec::Zero {}, alpha, 0.5).map_err(js)?;
    let f = TestFunction::coordinate(Profile::Cosine, 0);
    let h = 0.02;
    let cfg = SimConfig::new(t_max.max(h), h, paths.max(2), seed).map_err(js)?;
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points.max(2) {
        let t = t_max * i as f64 / (points.max(2) - 1) as f64;
        let e = estimate_ptf(&m, &f, &[x0], t, &cfg).map_err(js)?;
        out.extend_from_slice(&[t, e.value, e.stderr, ou_cosine_closed_form(alpha, gamma, beta, x0, t)]);
    }
    Ok(out)
}
