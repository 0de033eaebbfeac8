//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stablemix::mixing::{compare_with_theory, decay_curve, envelope_points, estimate_invariant, fit_exponential_rate};
use stablemix::model::{derived_constants, hat_c, heat_example, kt_envelope_check, ModelSpec, NonlinearitySpec, Saturator};
use stablemix::observable::{Profile, TestFunction};
use stablemix::semigroup::{
    coupling_contraction_check, estimate_gradient_ptf, mild_kolmogorov_residual, ou_gradient_bound_check,
};
use stablemix::simulator::{terminal_states, SimConfig};
use stablemix::special::henry_g;
use stablemix::stable::{fisher_integral, frac_lap_normalizer, sample_standard_stable, stable_density, CdfTable, StableIndex};
use stablemix::stats::{ks_critical_one, ks_critical_two, ks_one_sample, ks_two_sample};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(start: Instant, budget_s: u64) -> (bool, Duration) {
    let el = start.elapsed();
    (el <= Duration::from_secs(budget_s), el)
}

fn cauchy_density() -> Outcome {
    let start = Instant::now();
    let a = StableIndex::new(1.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let x = -10.0 + 0.1 * i as f64;
        worst = worst.max((stable_density(a, x).unwrap() - 1.0 / (PI * (1.0 + x * x))).abs());
    }
    let (fast, el) = within(start, 5);
    outcome(worst <= 1e-8 && fast, format!("max abs error {worst:.2e} (limit 1e-8), {el:.2?}"))
}

fn fisher_and_normalizer() -> Outcome {
    let a = StableIndex::new(1.0).unwrap();
    let s = Instant::now();
    let fi = fisher_integral(a).unwrap();
    let (f_fast, f_el) = within(s, 10);
    let s = Instant::now();
    let cn = frac_lap_normalizer(a).unwrap();
    let (c_fast, c_el) = within(s, 10);
    let ok = (fi - 0.5).abs() <= 1e-5 && (cn - PI).abs() <= 1e-8 && f_fast && c_fast;
    outcome(ok, format!("I(1) = {fi:.10} ({f_el:.2?}), C(1) - pi = {:.2e} ({c_el:.2?})", cn - PI))
}

fn henry_function() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let z = 0.1 * i as f64;
        worst = worst.max((henry_g(1.0, z).unwrap() - z.exp()).abs() / z.exp());
    }
    let half = henry_g(0.5, 1.0).unwrap();
    let expected = E * (1.0 + statrs::function::erf::erf(1.0));
    let ok = worst <= 1e-12 && (half - expected).abs() <= 1e-8;
    outcome(ok, format!("max rel error G_1 vs e^z {worst:.2e}; G_1/2(1) - e(1+erf 1) = {:.2e}", half - expected))
}

fn sampler_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let crit = ks_critical_one(n, 0.001);
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &alpha) in [0.8, 1.5].iter().enumerate() {
        let a = StableIndex::new(alpha).unwrap();
        let table = CdfTable::default_for(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let xs: Vec<f64> = (0..n).map(|_| sample_standard_stable(a, &mut rng)).collect();
        let d = ks_one_sample(&xs, |x| table.eval(x));
        ok &= d < crit;
        parts.push(format!("alpha {alpha}: D = {d:.5}"));
    }
    let (fast, el) = within(start, 60);
    outcome(ok && fast, format!("{} (critical {crit:.5}), {el:.2?}", parts.join(", ")))
}

fn exact_linear_law() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::finite(vec![1.0], vec![1.0], NonlinearitySpec::Zero {}, 1.5, 0.5).unwrap();
    let n = 100_000;
    let coarse: Vec<f64> = terminal_states(&m, &[1.0], 2.0, 0.5, n, 201).unwrap().into_iter().map(|x| x[0]).collect();
    let fine: Vec<f64> = terminal_states(&m, &[1.0], 2.0, 0.05, n, 202).unwrap().into_iter().map(|x| x[0]).collect();
    let d = ks_two_sample(&coarse, &fine);
    let crit = ks_critical_two(n, n, 0.001);
    let (fast, el) = within(start, 120);
    outcome(d < crit && fast, format!("D = {d:.5} (critical {crit:.5}), {el:.2?}"))
}

fn coupling_contraction() -> Outcome {
    let start = Instant::now();
    let nl = NonlinearitySpec::diagonal(vec![0.5, 0.5], Saturator::Tanh);
    let m = ModelSpec::finite(vec![2.0, 3.0], vec![1.0, 1.0], nl, 1.5, 0.5).unwrap();
    let lf = m.nonlinearity().lipschitz();
    let cfg = SimConfig::new(10.0, 0.01, 100, 301).unwrap();
    let r = coupling_contraction_check(&m, &[3.0, -2.0], &[-1.0, 1.0], &cfg).unwrap();
    let (fast, el) = within(start, 60);
    let ok = r.violations == 0 && r.steps == 1000 && r.paths == 100 && lf == 0.5 && fast;
    outcome(ok, format!("{} violations over {} paths x {} steps, rho = {:.6}, max ratio {:.6}, {el:.2?}", r.violations, r.paths, r.steps, r.rho, r.max_ratio))
}

/// Characteristic-function oracle for `E cos(X(t))`, one linear mode.
fn cosine_oracle(alpha: f64, gamma: f64, beta: f64, x: f64, t: f64) -> f64 {
    (x * (-gamma * t).exp()).cos() * (-beta.powf(alpha) * (1.0 - (-alpha * gamma * t).exp()) / (alpha * gamma)).exp()
}

fn closed_form_observable() -> Outcome {
    let start = Instant::now();
    let (alpha, gamma, beta, x0) = (1.5, 1.0, 1.0, 2.0);
    let m = ModelSpec::finite(vec![gamma], vec![beta], NonlinearitySpec::Zero {}, alpha, 0.5).unwrap();
    let f = TestFunction::coordinate(Profile::Cosine, 0);
    let h = 0.05;
    let mu = estimate_invariant(&m, &f, &SimConfig::new(20_000.0, h, 100_000, 401).unwrap(), 10.0).unwrap();
    let exact_mu = (-2.0f64 / 3.0).exp();
    let mu_ok = (mu.value - exact_mu).abs() <= 3.0 * mu.stderr;

    let cfg = SimConfig::new(4.0, h, 100_000, 402).unwrap();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let curve = decay_curve(&m, &f, &[x0], &grid, &cfg, &mu).unwrap();
    let mut ptf_ok = true;
    let mut worst_z = 0.0f64;
    for (i, &t) in grid.iter().enumerate() {
        let z = (curve.ptf[i] - cosine_oracle(alpha, gamma, beta, x0, t)).abs() / curve.ptf_stderr[i];
        worst_z = worst_z.max(z);
        ptf_ok &= z <= 3.0;
    }

    // the five criterion times leave fewer than five points above the noise
    // floor, so the rate is fitted on a denser lattice over the same range
    let dense: Vec<f64> = (0..=80).map(|i| 0.05 * i as f64).collect();
    let dense_curve = decay_curve(&m, &f, &[x0], &dense, &cfg, &mu).unwrap();
    let (rate_ok, rate_detail) = match fit_exponential_rate(&dense_curve) {
        Ok(fit) => (
            (fit.c_emp - gamma).abs() <= 0.15 * gamma,
            format!("c_emp = {:.4} on t in [{}, {}] (target {gamma} +- 15%)", fit.c_emp, dense[fit.window.0], dense[fit.window.1 - 1]),
        ),
        Err(e) => (false, format!("rate fit failed: {e}")),
    };
    let (fast, el) = within(start, 600);
    outcome(
        mu_ok && ptf_ok && rate_ok && fast,
        format!(
            "P_t f max |z| = {worst_z:.2} ({}); {rate_detail} ({}); mu = {:.5} +- {:.5} vs {exact_mu:.5} ({}); {el:.2?}",
            if ptf_ok { "ok" } else { "FAIL" },
            if rate_ok { "ok" } else { "FAIL" },
            mu.value,
            mu.stderr,
            if mu_ok { "ok" } else { "FAIL" }
        ),
    )
}

fn gradient_bounds() -> Outcome {
    let start = Instant::now();
    let nl = NonlinearitySpec::diagonal(vec![0.3, 0.3, 0.3], Saturator::Tanh);
    let m = ModelSpec::finite(vec![1.0, 2.0, 4.0], vec![1.0, 1.0, 1.0], nl, 1.5, 0.5).unwrap();
    let lf = m.nonlinearity().lipschitz();
    let f = TestFunction::new(Profile::Tanh, vec![1.0, 0.5, 0.25], 0.0).unwrap();
    let x = [0.5, -0.5, 0.25];
    let cfg = SimConfig::new(2.0, 0.01, 20_000, 501).unwrap();
    let mut ok = (lf - 0.3).abs() < 1e-15;
    let mut parts = Vec::new();
    for &t in &[0.5, 1.0, 2.0] {
        let g = estimate_gradient_ptf(&m, &f, &x, t, &cfg, 1e-3).unwrap();
        let rhs = (-(1.0 - lf) * t).exp() * f.gradient_sup_norm();
        let allowed = rhs * (1.0 + 3.0 * g.norm_stderr / g.norm + 1e-2);
        ok &= g.norm <= allowed;
        parts.push(format!("t={t}: {:.4} <= {:.4}", g.norm, allowed));
    }
    let lin_cfg = SimConfig { master_seed: 502, ..cfg };
    let recs = ou_gradient_bound_check(&m, &f, &x, &[0.5, 1.0, 2.0], &lin_cfg, 1e-3).unwrap();
    let failed: Vec<String> = recs
        .iter()
        .filter(|r| r.check != "ou_gradient_envelope" && !r.verdict.passed())
        .map(|r| format!("{} at t={}", r.check, r.params["t"]))
        .collect();
    ok &= failed.is_empty();
    let (fast, el) = within(start, 600);
    outcome(
        ok && fast,
        format!("contraction [{}]; linear bounds (i)/(ii): {}; {el:.2?}", parts.join(", "), if failed.is_empty() { "all pass".into() } else { failed.join(", ") }),
    )
}

fn mild_kolmogorov() -> Outcome {
    let start = Instant::now();
    let nl = NonlinearitySpec::diagonal(vec![0.2], Saturator::Tanh);
    let m = ModelSpec::finite(vec![1.0], vec![1.0], nl, 1.5, 0.5).unwrap();
    let sup = m.nonlinearity().sup_norm();
    let f = TestFunction::coordinate(Profile::Cosine, 0);
    let cfg = SimConfig::new(0.5, 0.01, 20_000, 601).unwrap();
    let r = mild_kolmogorov_residual(&m, &f, &[1.0], 0.5, &cfg, 16).unwrap();
    let (fast, el) = within(start, 600);
    outcome(
        r.pass && (sup - 0.2).abs() < 1e-15 && fast,
        format!("residual {:.3e} <= {:.3e} (integral {:.4e}, quadrature budget {:.2e}); {el:.2?}", r.residual, r.tolerance, r.integral, r.quadrature_budget),
    )
}

fn constants_and_conditions() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    let m = ModelSpec::finite(vec![1.3, 2.0], vec![1.0, 1.0], NonlinearitySpec::Zero {}, 1.5, 0.5).unwrap();
    let c = derived_constants(&m).unwrap();
    let omega_ok = c.omega == 1.3 / 2.0;
    ok &= omega_ok;
    parts.push(format!("omega(F=0) = {} ({})", c.omega, if omega_ok { "ok" } else { "FAIL" }));
    let hc = hat_c(1.0, 1.0, 0.5);
    let hc_ok = (hc - 2.0 * (-0.5f64).exp()).abs() <= 1e-12;
    ok &= hc_ok;
    parts.push(format!("hat_c(1,1,0.5) - 2e^-1/2 = {:.1e} ({})", hc - 2.0 * (-0.5f64).exp(), if hc_ok { "ok" } else { "FAIL" }));
    let a = StableIndex::new(1.5).unwrap();
    let heat = heat_example(1, a, 0.0, 16, 0.7);
    let grid: Vec<f64> = (0..=400).map(|i| 0.01 * 1000f64.powf(i as f64 / 400.0)).collect();
    match heat.as_ref().map(|h| kt_envelope_check(&h.model, &grid)) {
        Ok(Ok(r)) => parts.push(format!("k_t envelope max ratio {r:.6} (ok)")),
        Ok(Err(e)) => {
            ok = false;
            parts.push(format!("k_t envelope: {e} (FAIL)"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("d=1 heat example rejected: {e} (FAIL)"));
        }
    }
    let rejected = heat_example(3, a, 0.0, 4, 0.7);
    let gate_ok = heat.is_ok() && matches!(&rejected, Err(e) if e.to_string().contains("2 > d + alpha*eta fails"));
    ok &= gate_ok;
    parts.push(format!("heat gate ({})", if gate_ok { "ok" } else { "FAIL" }));
    let (fast, el) = within(start, 5);
    outcome(ok && fast, format!("{}; {el:.2?}", parts.join("; ")))
}

fn mixing_envelope() -> Outcome {
    let start = Instant::now();
    let a = StableIndex::new(1.5).unwrap();
    let heat = heat_example(1, a, 0.0, 16, 0.7).unwrap().model;
    // F = c tanh(x_1) with ‖F‖₀ = c chosen so that omega = 1/4
    let c0 = derived_constants(&heat).unwrap().c0;
    let g = stablemix::special::gamma_fn(0.3);
    let c = 0.25f64.powf(0.3) / (c0 * g);
    let mut coeffs = vec![0.0; 16];
    coeffs[0] = c;
    let m = heat.with_nonlinearity(NonlinearitySpec::diagonal(coeffs, Saturator::Tanh)).unwrap();
    let consts = derived_constants(&m).unwrap();
    let f = TestFunction::coordinate(Profile::Tanh, 0);
    let h = 0.01;
    let mu = estimate_invariant(&m, &f, &SimConfig::new(5000.0, h, 20_000, 701).unwrap(), 10.0).unwrap();
    let cfg = SimConfig::new(6.0, h, 20_000, 702).unwrap();
    let grid: Vec<f64> = (0..=60).map(|i| 0.1 * i as f64).collect();
    let mut x0 = vec![0.0; 16];
    x0[0] = 1.0;
    let curve = decay_curve(&m, &f, &x0, &grid, &cfg, &mu).unwrap();
    let fit = match fit_exponential_rate(&curve) {
        Ok(fit) => fit,
        Err(e) => return outcome(false, format!("rate fit failed: {e}")),
    };
    let pts = envelope_points(&curve, &fit, consts.omega);
    let bad: Vec<String> = pts.iter().filter(|p| !p.pass).map(|p| format!("t={:.1}: {:.4} > {:.4}", p.t, p.delta, p.envelope)).collect();
    let theory = compare_with_theory(&m, &curve, &fit).unwrap();
    let (fast, el) = within(start, 1200);
    outcome(
        consts.omega > 0.0 && bad.is_empty() && fast,
        format!(
            "omega = {:.4}, gamma_1 - L_F = {:.4}, c_emp = {:.4}, C_emp = {:.4}, window t in [{}, {}], mu = {:.4} +- {:.4}; {}; {el:.2?}",
            consts.omega,
            theory.contraction_rate,
            fit.c_emp,
            fit.big_c_emp,
            grid[fit.window.0],
            grid[fit.window.1 - 1],
            mu.value,
            mu.stderr,
            if bad.is_empty() { format!("all {} window points under the envelope", pts.len()) } else { bad.join(", ") }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Cauchy closed forms", cauchy_density),
        ("Fisher integral and generator normalizer", fisher_and_normalizer),
        ("Henry comparison function", henry_function),
        ("sampler fidelity", sampler_fidelity),
        ("exact linear law", exact_linear_law),
        ("discrete coupling contraction", coupling_contraction),
        ("closed-form linear observable", closed_form_observable),
        ("gradient bounds", gradient_bounds),
        ("mild Kolmogorov residual", mild_kolmogorov),
        ("constants and conditions", constants_and_conditions),
        ("exponential-mixing envelope", mixing_envelope),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let o = run();
        println!("criterion {:>2} {}: {} | {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
