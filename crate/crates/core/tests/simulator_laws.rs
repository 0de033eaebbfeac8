use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stablemix::model::{ModelSpec, NonlinearitySpec, Saturator};
use stablemix::quad::{geometric_breaks, integrate_panels, Tolerance};
use stablemix::simulator::{
    linear_increment_scale, path_rng, run_path, sample_za, simulate_ensemble, simulate_path, stable_abs_moment, summarize,
    terminal_states, za_moment_check, SimConfig,
};
use stablemix::special::gamma_fn;
use stablemix::stable::{sample_standard_stable, stable_density, StableIndex};
use stablemix::stats::{batch_means, ks_critical_two, ks_two_sample, mean_stderr};

fn ou(gamma: f64, beta: f64, alpha: f64) -> ModelSpec {
    ModelSpec::finite(vec![gamma], vec![beta], NonlinearitySpec::Zero {}, alpha, 0.5).unwrap()
}

#[test]
fn one_step_scale_matches_fine_discretization() {
    let (a, g, b, h) = (1.5, 2.0, 0.5, 0.25);
    let alpha = StableIndex::new(a).unwrap();
    let n = 100_000;
    let fine = 1000;
    let ds = h / fine as f64;
    let dz = ds.powf(1.0 / a);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let brute: Vec<f64> = (0..n)
        .map(|_| {
            (0..fine)
                .map(|i| {
                    let s = (i as f64 + 0.5) * ds;
                    (-g * (h - s)).exp() * b * dz * sample_standard_stable(alpha, &mut rng)
                })
                .sum()
        })
        .collect();
    let scale = linear_increment_scale(alpha, g, b, h);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let exact: Vec<f64> = (0..n).map(|_| scale * sample_standard_stable(alpha, &mut rng)).collect();
    let d = ks_two_sample(&brute, &exact);
    assert!(d < ks_critical_two(n, n, 0.001), "D = {d}");
}

#[test]
fn linear_marginal_composes_over_steps() {
    // F = 0 from x = 0: after n steps mode k is stable with the one-shot scale at nh
    let m = ModelSpec::finite(vec![0.7, 2.5], vec![1.0, 0.4], NonlinearitySpec::Zero {}, 1.3, 0.5).unwrap();
    let n = 50_000;
    let stepped = terminal_states(&m, &[0.0, 0.0], 3.0, 0.1, n, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shot: Vec<Vec<f64>> = (0..n).map(|_| sample_za(&m, 3.0, &mut rng)).collect();
    for k in 0..2 {
        let a: Vec<f64> = stepped.iter().map(|x| x[k]).collect();
        let b: Vec<f64> = shot.iter().map(|x| x[k]).collect();
        let d = ks_two_sample(&a, &b);
        assert!(d < ks_critical_two(n, n, 0.001), "mode {k}: D = {d}");
    }
}

#[test]
fn zero_model_stays_at_origin() {
    let m = ModelSpec::finite(vec![1.0, 2.0, 9.0], vec![0.0; 3], NonlinearitySpec::Zero {}, 1.5, 0.5).unwrap();
    let cfg = SimConfig::new(5.0, 0.05, 3, 1).unwrap();
    for traj in simulate_ensemble(&m, &[0.0; 3], &cfg).unwrap() {
        assert!(traj.states.iter().flatten().all(|v| *v == 0.0));
    }
}

#[test]
fn ensemble_is_reproducible_and_summarized_in_order() {
    let f = NonlinearitySpec::diagonal(vec![0.3, -0.2], Saturator::Tanh);
    let m = ModelSpec::finite(vec![1.0, 2.0], vec![1.0, 1.0], f, 1.5, 0.5).unwrap();
    let cfg = SimConfig::new(1.0, 0.1, 16, 2024).unwrap().with_stride(5).unwrap();
    let a = simulate_ensemble(&m, &[1.0, -1.0], &cfg).unwrap();
    let b = simulate_ensemble(&m, &[1.0, -1.0], &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[3], simulate_path(&m, &[1.0, -1.0], &cfg, 3).unwrap());
    let s = summarize(&a);
    assert_eq!(s.t, vec![0.0, 0.5, 1.0]);
    let col: Vec<f64> = a.iter().map(|p| p.states[2][1]).collect();
    let e = mean_stderr(&col);
    assert_eq!(s.mean[2][1], e.mean);
    assert_eq!(s.stderr[2][1], e.stderr);
    assert_eq!(s.quantiles.len(), 5);
    assert!(s.quantiles["0.05"][2][0] <= s.quantiles["0.5"][2][0]);
    let json = serde_json::to_value(&s).unwrap();
    assert!(json.get("t").is_some() && json.get("quantiles").is_some());
}

#[test]
fn time_average_agrees_with_ensemble_average() {
    let m = ou(1.0, 1.0, 1.5);
    let h = 0.1;
    let burn = 100;
    let mut series = Vec::with_capacity(100_000);
    run_path(&m, &[0.0], h, 100_000 + burn, 77, 0, |n, x| {
        if n > burn {
            series.push(x[0].tanh());
        }
    })
    .unwrap();
    let time_avg = batch_means(&series, 50);
    let ensemble: Vec<f64> = terminal_states(&m, &[0.0], 100.0, h, 1000, 78).unwrap().iter().map(|x| x[0].tanh()).collect();
    let ens = mean_stderr(&ensemble);
    let combined = (time_avg.stderr.powi(2) + ens.stderr.powi(2)).sqrt();
    assert!((time_avg.mean - ens.mean).abs() < 3.0 * combined, "{time_avg:?} vs {ens:?}");
}

/// E|ξ| for standard ξ by quadrature of `2 ∫ x p(x) dx`, with the
/// leading tail term integrated analytically beyond the cutoff.
fn abs_mean_by_quadrature(a: f64) -> f64 {
    let alpha = StableIndex::new(a).unwrap();
    let cut = 1000.0;
    let body = integrate_panels(|x: f64| x * stable_density(alpha, x).unwrap(), &geometric_breaks(cut, 0.01), &Tolerance::new(1e-10, 1e-10))
        .unwrap()
        .value;
    let mut tail = 0.0;
    for k in 1..4 {
        let kf = k as f64;
        let c = (-1f64).powi(k + 1) * gamma_fn(kf * a + 1.0) / gamma_fn(kf + 1.0) * (kf * a * std::f64::consts::PI / 2.0).sin()
            / std::f64::consts::PI;
        tail += c * cut.powf(1.0 - kf * a) / (kf * a - 1.0);
    }
    2.0 * (body + tail)
}

#[test]
fn za_first_moment_matches_quadrature() {
    let m = ou(1.0, 1.0, 1.5);
    let t = 1.0;
    let alpha = m.alpha();
    let closed = stable_abs_moment(alpha, 1.0).unwrap();
    let quad = abs_mean_by_quadrature(1.5);
    assert!((closed - quad).abs() < 1e-6 * closed, "{closed} vs {quad}");
    let expected = linear_increment_scale(alpha, 1.0, 1.0, t) * quad;
    let r = za_moment_check(&m, 1.0, t, 200_000, 9).unwrap();
    assert!((r.estimate - expected).abs() < 3.0 * r.stderr, "{} vs {expected} (se {})", r.estimate, r.stderr);
    assert!(r.stabilized && r.monotone_in_t && r.pass);
    assert!(r.half_time_estimate < r.estimate);
}

#[test]
fn za_moment_monotone_for_multimode_model() {
    let m = ModelSpec::finite(vec![1.0, 4.0, 9.0], vec![1.0, 1.0, 1.0], NonlinearitySpec::Zero {}, 1.5, 0.7).unwrap();
    let r = za_moment_check(&m, 0.5, 0.2, 20_000, 3).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn streams_differ_per_path_and_repeat_per_seed() {
    use rand::Rng;
    let a: u64 = path_rng(5, 0).gen();
    let b: u64 = path_rng(5, 1).gen();
    let c: u64 = path_rng(5, 0).gen();
    let d: u64 = path_rng(6, 0).gen();
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
}
