mod args;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use stablemix::mixing::{
    compare_with_theory, decay_curve, default_burn_in, estimate_invariant, fit_exponential_rate, DecayCurve,
    InvariantEstimate, RateFit, TheoryReport,
};
use stablemix::model::{
    check_assumptions, derived_constants, kt_envelope_scan, AssumptionReport, DerivedConstants, KtEnvelopeReport,
    ModelSpec,
};
use stablemix::observable::TestFunction;
use stablemix::semigroup::{
    coupling_contraction_check, gradient_contraction_check, ou_gradient_bound_check, CheckRecord, CouplingReport,
};
use stablemix::simulator::{simulate_ensemble, summarize, SimConfig};
use stablemix::Error;

use args::{parse_observable, StateLiteral, TimeGrid};
use manifest::{Outputs, RunManifest};

#[derive(Parser)]
#[command(name = "stablemix", version, about = "Galerkin models driven by cylindrical alpha-stable noise: constants, simulation, gradient and mixing checks")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Model description (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Output directory for artifacts and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Structural assumptions, derived constants and the k_t envelope.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0.01:10:400,log")]
        tgrid: TimeGrid,
    },
    /// Ensemble simulation: trajectories and summaries.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        /// Initial state: "zero" or a JSON array (padded with zeros).
        #[arg(long, default_value = "zero")]
        x: StateLiteral,
        /// Record every n-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Number of individual trajectory CSV files to write.
        #[arg(long, default_value_t = 10)]
        save_paths: usize,
    },
    /// Gradient contraction, coupling contraction and linear gradient bounds.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Observable as a JSON literal or @file.
        #[arg(long, default_value = r#"{"family":"tanh","w":[1]}"#)]
        f: String,
        #[arg(long, default_value = "zero")]
        x: StateLiteral,
        /// Second start for the coupling check (default: x shifted by 1 in every mode).
        #[arg(long)]
        y: Option<StateLiteral>,
        #[arg(long, default_value = "0.5:2:3,log")]
        tgrid: TimeGrid,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        /// Horizon of the coupling check.
        #[arg(long = "T", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        coupling_paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Invariant average, decay curve, rate fit and comparison with theory.
    Mix {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = r#"{"family":"cosine","w":[1]}"#)]
        f: String,
        #[arg(long, default_value = "[2]")]
        x: StateLiteral,
        #[arg(long, default_value = "0:4:41,lin")]
        tgrid: TimeGrid,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Length of the time-average path after burn-in.
        #[arg(long = "T", default_value_t = 2000.0)]
        t_end: f64,
        /// Burn-in (default 10/gamma_1).
        #[arg(long)]
        burn_in: Option<f64>,
    },
}

/// 0 pass, 1 condition failure, 2 input error, 3 non-convergence.
#[derive(Debug)]
enum Failure {
    Condition(String),
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Condition(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Condition(m) | Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::HeatExampleRejected(_) | Error::EnvelopeViolation { .. } => Failure::Condition(msg),
            Error::NonConvergence(_) | Error::GridInsufficient { .. } | Error::Overflow(_) | Error::NoSignalWindow { .. } => {
                Failure::Numerical(msg)
            }
            _ => Failure::Input(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load_model(path: &Path) -> Result<(ModelSpec, Vec<u8>), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::Input(format!("model file is not UTF-8: {e}")))?;
    Ok((ModelSpec::from_json(&text)?, bytes))
}

fn model_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

#[derive(Serialize)]
struct CheckReport {
    dim: usize,
    alpha: f64,
    sigma: f64,
    gamma1: f64,
    assumptions: AssumptionReport,
    constants: Option<DerivedConstants>,
    kt_envelope: Option<KtEnvelopeReport>,
    failures: Vec<String>,
    pass: bool,
}

fn cmd_check(common: &Common, tgrid: &TimeGrid) -> Result<(), Failure> {
    let config = json!({"tgrid": tgrid.to_string()});
    let mut out = Outputs::new(common.out.clone(), RunManifest::new("check", &common.model, &model_bytes(&common.model), config))?;
    let model = match load_model(&common.model) {
        Err(Failure::Condition(msg)) => {
            out.write_json("check.json", &json!({"pass": false, "failures": [msg.clone()]}))?;
            out.finish()?;
            print_json(&json!({"pass": false, "failures": [msg.clone()]}));
            return Err(Failure::Condition(msg));
        }
        other => other?.0,
    };
    let assumptions = check_assumptions(&model)?;
    let mut failures = Vec::new();
    if !assumptions.pass {
        failures.push(format!(
            "structural assumptions fail (positive noise: {}, summability tail: {:?}, B tail: {:?}, B = {})",
            assumptions.positive_noise, assumptions.summability_tail, assumptions.b_tail, assumptions.b
        ));
    }
    let (constants, kt) = if assumptions.pass {
        let c = derived_constants(&model)?;
        if !c.condition_i && !c.condition_ii {
            failures.push(format!(
                "neither L_F < gamma_1 ({} < {}) nor omega > 0 (omega = {}) holds",
                c.lipschitz, c.gamma1, c.omega
            ));
        }
        let kt = kt_envelope_scan(&model, &tgrid.points())?;
        if let (false, Some(w)) = (kt.pass, &kt.worst) {
            failures.push(format!(
                "k_t envelope violated at mode {}, t = {}: k_t = {:.6e} > {:.6e} (ratio {:.6})",
                w.mode, w.t, w.kt, w.envelope, w.ratio
            ));
        }
        (Some(c), Some(kt))
    } else {
        (None, None)
    };
    let report = CheckReport {
        dim: model.dim(),
        alpha: model.alpha().value(),
        sigma: model.sigma(),
        gamma1: model.gamma1(),
        assumptions,
        constants,
        kt_envelope: kt,
        pass: failures.is_empty(),
        failures,
    };
    out.write_json("check.json", &report)?;
    out.finish()?;
    print_json(&report);
    if let Some(c) = &report.constants {
        eprintln!("B = {}, hat_c = {}, C0 = {}, omega = {}, gamma_1 - L_F = {}", c.b, c.hat_c, c.c0, c.omega, c.contraction_rate);
    }
    match report.failures.first() {
        None => Ok(()),
        Some(_) => Err(Failure::Condition(report.failures.join("; "))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(common: &Common, t_end: f64, h: f64, paths: usize, x: &StateLiteral, stride: usize, save_paths: usize) -> Result<(), Failure> {
    let out_dir = common.out.clone().ok_or_else(|| Failure::Input("simulate needs --out".into()))?;
    let (model, bytes) = load_model(&common.model)?;
    let x0 = x.resolve(model.dim()).map_err(Failure::Input)?;
    let cfg = SimConfig::new(t_end, h, paths, common.seed)?.with_stride(stride)?;
    let config = json!({"sim": cfg, "x": x0, "save_paths": save_paths});
    let mut out = Outputs::new(Some(out_dir), RunManifest::new("simulate", &common.model, &bytes, config))?;
    let trajectories = simulate_ensemble(&model, &x0, &cfg)?;
    for (i, tr) in trajectories.iter().take(save_paths).enumerate() {
        out.write(&format!("paths/path_{i:05}.csv"), &tr.to_csv())?;
    }
    let summary = summarize(&trajectories);
    out.write_json("summary.json", &summary)?;
    let mut csv = String::from("t");
    for k in 1..=model.dim() {
        csv.push_str(&format!(",mean_x{k},stderr_x{k},median_x{k}"));
    }
    csv.push('\n');
    for i in 0..summary.t.len() {
        csv.push_str(&format!("{}", summary.t[i]));
        for k in 0..model.dim() {
            csv.push_str(&format!(",{},{},{}", summary.mean[i][k], summary.stderr[i][k], summary.quantiles["0.5"][i][k]));
        }
        csv.push('\n');
    }
    out.write("summary.csv", &csv)?;
    print_json(&json!({"paths": paths, "steps": cfg.steps(), "artifacts": out.manifest.artifacts}));
    out.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct GradcheckReport {
    gradient_contraction: Option<Vec<CheckRecord>>,
    coupling: CouplingReport,
    linear_bounds: Vec<CheckRecord>,
    skipped: Vec<String>,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_gradcheck(
    common: &Common,
    f: &TestFunction,
    x: &StateLiteral,
    y: Option<&StateLiteral>,
    tgrid: &TimeGrid,
    h: f64,
    paths: usize,
    t_end: f64,
    coupling_paths: usize,
    eps: f64,
) -> Result<(), Failure> {
    let (model, bytes) = load_model(&common.model)?;
    let n = model.dim();
    let x0 = x.resolve(n).map_err(Failure::Input)?;
    let y0 = match y {
        Some(y) => y.resolve(n).map_err(Failure::Input)?,
        None => x0.iter().map(|v| v + 1.0).collect(),
    };
    f.check_dim(n)?;
    let times = tgrid.points();
    let config = json!({
        "f": f, "x": x0, "y": y0, "tgrid": tgrid.to_string(), "h": h, "paths": paths,
        "T": t_end, "coupling_paths": coupling_paths, "eps": eps, "seed": common.seed
    });
    let mut out = Outputs::new(common.out.clone(), RunManifest::new("gradcheck", &common.model, &bytes, config))?;
    let cfg = SimConfig::new(times.iter().cloned().fold(h, f64::max), h, paths, common.seed)?;
    let mut skipped = Vec::new();
    let lf = model.nonlinearity().lipschitz();
    let gradient_contraction = if lf < model.gamma1() {
        Some(gradient_contraction_check(&model, f, &x0, &times, &cfg, eps, 1e-2)?)
    } else {
        skipped.push(format!("gradient contraction: L_F = {lf} >= gamma_1 = {}", model.gamma1()));
        None
    };
    let coupling_cfg = SimConfig::new(t_end, h, coupling_paths, common.seed.wrapping_add(1))?;
    let coupling = coupling_contraction_check(&model, &x0, &y0, &coupling_cfg)?;
    let linear_cfg = SimConfig { master_seed: common.seed.wrapping_add(2), ..cfg };
    let linear_bounds = ou_gradient_bound_check(&model, f, &x0, &times, &linear_cfg, eps)?;
    let pass = gradient_contraction.iter().flatten().chain(&linear_bounds).all(|r| r.verdict.passed()) && coupling.pass;
    let report = GradcheckReport { gradient_contraction, coupling, linear_bounds, skipped, pass };
    out.write_json("gradcheck.json", &report)?;
    out.finish()?;
    print_json(&report);
    let failed: Vec<String> = report
        .gradient_contraction
        .iter()
        .flatten()
        .chain(&report.linear_bounds)
        .filter(|r| !r.verdict.passed())
        .map(|r| format!("{} at t = {} (lhs {:.4e} > rhs {:.4e})", r.check, r.params["t"], r.lhs, r.rhs))
        .chain((!report.coupling.pass).then(|| format!("coupling contraction: {} violations", report.coupling.violations)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Condition(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct MixReport {
    invariant: InvariantEstimate,
    curve: DecayCurve,
    fit: Option<RateFit>,
    theory: Option<TheoryReport>,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_mix(
    common: &Common,
    f: &TestFunction,
    x: &StateLiteral,
    tgrid: &TimeGrid,
    h: f64,
    paths: usize,
    t_end: f64,
    burn_in: Option<f64>,
) -> Result<(), Failure> {
    let (model, bytes) = load_model(&common.model)?;
    let x0 = x.resolve(model.dim()).map_err(Failure::Input)?;
    f.check_dim(model.dim())?;
    let burn = match burn_in {
        Some(b) => (b / h).round().max(1.0) * h,
        None => default_burn_in(&model, h),
    };
    let times = tgrid.snapped(h);
    let config = json!({
        "f": f, "x": x0, "tgrid": tgrid.to_string(), "t": times, "h": h, "paths": paths,
        "T": t_end, "burn_in": burn, "seed": common.seed
    });
    let mut out = Outputs::new(common.out.clone(), RunManifest::new("mix", &common.model, &bytes, config))?;
    let mu_cfg = SimConfig::new(t_end, h, paths, common.seed)?;
    let invariant = estimate_invariant(&model, f, &mu_cfg, burn)?;
    let curve_cfg = SimConfig::new(times.last().copied().unwrap_or(h).max(h), h, paths, common.seed.wrapping_add(2))?;
    let curve = decay_curve(&model, f, &x0, &times, &curve_cfg, &invariant)?;
    out.write("decay.csv", &curve.to_csv())?;
    let (fit, theory, failure) = match fit_exponential_rate(&curve) {
        Ok(fit) => {
            let theory = compare_with_theory(&model, &curve, &fit)?;
            eprintln!(
                "omega = {:.6}, gamma_1 - L_F = {:.6}, c_emp = {:.6} ({})",
                theory.omega, theory.contraction_rate, theory.c_emp, theory.guarantee
            );
            let failure = (!theory.pass).then(|| {
                if theory.c_emp_positive {
                    Failure::Condition("decay curve exceeds the theoretical envelope".into())
                } else {
                    Failure::Condition(format!("fitted rate c_emp = {} is not positive", theory.c_emp))
                }
            });
            (Some(fit), Some(theory), failure)
        }
        Err(e) => (None, None, Some(Failure::from(e))),
    };
    if !invariant.consistent {
        eprintln!("warning: time-average and ensemble estimates of mu(f) disagree; consider a longer burn-in");
    }
    let report = MixReport { pass: failure.is_none(), invariant, curve, fit, theory };
    out.write_json("mix_report.json", &report)?;
    out.finish()?;
    print_json(&report);
    failure.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| Failure::Input(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Check { common, tgrid } => cmd_check(common, tgrid),
        Command::Simulate { common, t_end, h, paths, x, stride, save_paths } => {
            cmd_simulate(common, *t_end, *h, *paths, x, *stride, *save_paths)
        }
        Command::Gradcheck { common, f, x, y, tgrid, h, paths, t_end, coupling_paths, eps } => {
            let f = parse_observable(f).map_err(Failure::Input)?;
            cmd_gradcheck(common, &f, x, y.as_ref(), tgrid, *h, *paths, *t_end, *coupling_paths, *eps)
        }
        Command::Mix { common, f, x, tgrid, h, paths, t_end, burn_in } => {
            let f = parse_observable(f).map_err(Failure::Input)?;
            cmd_mix(common, &f, x, tgrid, *h, *paths, *t_end, *burn_in)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
