//! Command line for the IMUB toolkit: exact sampling, simulation and the
//! verification suites, with CSV/JSON emission for external plotting.
//!
//! Exit codes: 0 all verdicts pass, 1 any check failed or a numerical error
//! was reported, 2 usage or configuration error.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use imub::checks::{run_all_checks, CheckConfig, CheckReport};
use imub::dual_kernels::{kernel_f, BoundaryPoint, Branch, QuadrantPoint};
use imub::harmonic_measure::{q_sample, QMeasureParams};
use imub::infinite_rate::{path_sample, transition_sample, trotter_path, ImubParams, TrotterConfig};
use imub::planar_bm::{cone_exit, strong_construct, BrownianPath, DriftSchedule, WalkConfig};
use imub::rng::stream;
use imub::verify::{
    convergence_sweep, ks_against_q, ks_two_sample_sorted, martingale_residual, mc_estimate,
    IntegralScheme, Verdict,
};

#[derive(Parser)]
#[command(name = "imub", version, about = "infinite rate mutually catalytic branching toolkit")]
struct Cli {
    /// JSON config file; a document with one section per subcommand whose
    /// keys mirror the flag names. Flags override file values.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Worker threads (overrides IMUB_WORKERS; affects wall time only).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw exact harmonic-measure samples and write them as CSV.
    SampleQ(SampleQArgs),
    /// Simulate Brownian cone exits and write the exit points as CSV.
    ExitSim(ExitSimArgs),
    /// Integrate the finite-rate SDE and write one path as CSV.
    Sde(SdeArgs),
    /// Sample an infinite-rate path (exact kernel or strong construction).
    Path(PathArgs),
    /// Sample a Trotter-product path.
    Trotter(TrotterArgs),
    /// Evaluate the generator by quadrature and compare to the closed form.
    Generator(GeneratorArgs),
    /// Run one verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Run the full acceptance suite.
    AllChecks(AllChecksArgs),
}

#[derive(Args)]
struct SampleQArgs {
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ExitSimArgs {
    /// Cone anchor "x1,x2".
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// Disable far-field macro steps (plain fixed-step walk).
    #[arg(long, default_value_t = false)]
    no_far_field: bool,
}

#[derive(Args)]
struct SdeArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Mean field "a,b".
    #[arg(long)]
    theta: Option<String>,
    /// Start "a,b".
    #[arg(long)]
    y0: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    record_dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    theta: Option<String>,
    /// Start "axis1:<m>", "axis2:<m>" or "origin".
    #[arg(long)]
    x0: Option<String>,
    /// Comma list of record times.
    #[arg(long)]
    times: Option<String>,
    /// "exact" (kernel chaining) or "strong" (Brownian construction).
    #[arg(long)]
    scheme: Option<String>,
    /// Walk step for the strong construction.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// With --scheme strong: also write the Brownian trace CSV here.
    #[arg(long)]
    trace_out: Option<String>,
    /// With --trace-out: keep every k-th step.
    #[arg(long)]
    trace_every: Option<u64>,
}

#[derive(Args)]
struct TrotterArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of: duality, ks-q, scaling, composition, semigroup, trotter,
    /// gamma-sweep, martingale.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list, e.g. "1,10,100,1000".
    #[arg(long)]
    gammas: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct AllChecksArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_cfg = match load_config(cli.config.as_deref()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("IMUB_WORKERS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("worker pool error: {e}");
            return ExitCode::from(2);
        }
    };
    let code = pool.install(|| dispatch(cli.command, &file_cfg));
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command, file_cfg: &Value) -> Result<ExitCode, String> {
    match cmd {
        Command::SampleQ(a) => cmd_sample_q(a, section(file_cfg, "sample-q")),
        Command::ExitSim(a) => cmd_exit_sim(a, section(file_cfg, "exit-sim")),
        Command::Sde(a) => cmd_sde(a, section(file_cfg, "sde")),
        Command::Path(a) => cmd_path(a, section(file_cfg, "path")),
        Command::Trotter(a) => cmd_trotter(a, section(file_cfg, "trotter")),
        Command::Generator(a) => cmd_generator(a, section(file_cfg, "generator")),
        Command::Verify(a) => cmd_verify(a, section(file_cfg, "verify")),
        Command::AllChecks(a) => cmd_all_checks(a, section(file_cfg, "all-checks")),
    }
}

// ----------------------------------------------------------------- helpers

fn load_config(path: Option<&str>) -> Result<Value, String> {
    match path {
        None => Ok(Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{p}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("{p}: {e}"))
        }
    }
}

fn section<'v>(cfg: &'v Value, name: &str) -> &'v Value {
    cfg.get(name).unwrap_or(&Value::Null)
}

fn get_f64(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn get_u64(v: &Value, key: &str) -> Option<u64> {
    v.get(key).and_then(Value::as_u64)
}

fn get_str(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_owned)
}

fn parse_pair(s: &str) -> Result<QuadrantPoint, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"a,b\", got {s:?}"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if a < 0.0 || b < 0.0 {
        return Err(format!("coordinates must be nonnegative, got {s:?}"));
    }
    Ok(QuadrantPoint::new(a, b))
}

fn parse_boundary(s: &str) -> Result<BoundaryPoint, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("origin") {
        return Ok(BoundaryPoint::ORIGIN);
    }
    let (axis, mag) = t
        .split_once(':')
        .ok_or_else(|| format!("expected axis1:<m>, axis2:<m> or origin, got {s:?}"))?;
    let m: f64 = mag.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if m < 0.0 {
        return Err(format!("magnitude must be nonnegative, got {s:?}"));
    }
    match axis.trim().to_ascii_lowercase().as_str() {
        "axis1" => Ok(BoundaryPoint::axis1(m)),
        "axis2" => Ok(BoundaryPoint::axis2(m)),
        _ => Err(format!("unknown axis in {s:?}")),
    }
}

fn parse_times(s: &str) -> Result<Vec<f64>, String> {
    let times: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let times = times.map_err(|e| format!("{s:?}: {e}"))?;
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err("times must be strictly increasing".into());
    }
    Ok(times)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Axis1 => "axis1",
        Branch::Axis2 => "axis2",
        Branch::Origin => "origin",
    }
}

fn write_boundary_csv(points: &[BoundaryPoint], out: &str) -> Result<(), String> {
    let mut csv = String::from("branch,magnitude\n");
    for p in points {
        let _ = writeln!(csv, "{},{}", branch_name(p.branch()), p.magnitude());
    }
    std::fs::write(out, csv).map_err(|e| format!("{out}: {e}"))
}

fn emit_report_json(
    out: Option<&str>,
    config: Value,
    reports: Vec<CheckReport>,
) -> Result<ExitCode, String> {
    let pass = reports.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let fail = reports.len() - pass;
    let doc = json!({
        "config": config,
        "reports": reports,
        "summary": {"pass": pass, "fail": fail},
    });
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    match out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{path}: {e}"))?,
        None => println!("{text}"),
    }
    Ok(if fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn check_report_from_estimate(
    check: &str,
    params: Value,
    est: &imub::verify::EstimateReport,
    seed: u64,
) -> CheckReport {
    CheckReport {
        check: check.into(),
        params,
        n: est.n,
        estimate: Some(imub::checks::ComplexJson {
            re: est.estimate_re,
            im: est.estimate_im,
        }),
        std_error: Some(est.std_error),
        reference: est.reference_re.map(|re| imub::checks::ComplexJson {
            re,
            im: est.reference_im.unwrap_or(0.0),
        }),
        statistic: None,
        threshold: None,
        verdict: est.verdict,
        seed,
        wall_time_ms: 0,
    }
}

fn check_report_from_ks(
    check: &str,
    params: Value,
    ks: &imub::verify::KsReport,
    seed: u64,
) -> CheckReport {
    CheckReport {
        check: check.into(),
        params,
        n: ks.n,
        estimate: None,
        std_error: None,
        reference: None,
        statistic: Some(ks.statistic),
        threshold: Some(ks.threshold),
        verdict: ks.verdict,
        seed,
        wall_time_ms: 0,
    }
}

// ------------------------------------------------------------- subcommands

fn cmd_sample_q(a: SampleQArgs, file: &Value) -> Result<ExitCode, String> {
    let u = a.u.or(get_f64(file, "u")).ok_or("--u required")?;
    let v = a.v.or(get_f64(file, "v")).ok_or("--v required")?;
    let n = a.n.or(get_u64(file, "n").map(|x| x as usize)).unwrap_or(100_000);
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let out = a.out.or(get_str(file, "out")).ok_or("--out required")?;
    if u < 0.0 || v < 0.0 {
        return Err("u, v must be nonnegative".into());
    }
    let params = QMeasureParams::new(u, v);
    let points: Vec<BoundaryPoint> = (0..n as u64)
        .map(|i| {
            let mut rng = stream(seed, i);
            q_sample(&params, &mut rng)
        })
        .collect();
    write_boundary_csv(&points, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_exit_sim(a: ExitSimArgs, file: &Value) -> Result<ExitCode, String> {
    let x = parse_pair(&a.x.or(get_str(file, "x")).ok_or("--x required")?)?;
    let step = a.step.or(get_f64(file, "step")).unwrap_or(1e-4);
    let n = a.n.or(get_u64(file, "n").map(|x| x as usize)).unwrap_or(10_000);
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let out = a.out.or(get_str(file, "out")).ok_or("--out required")?;
    let cfg = WalkConfig {
        step,
        far_field: !a.no_far_field,
        ..WalkConfig::default()
    };
    let mut points = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut path = BrownianPath::new(cfg, seed, i);
        let rec = cone_exit(&mut path, &x).map_err(|e| e.to_string())?;
        points.push(rec.exit_point);
    }
    write_boundary_csv(&points, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sde(a: SdeArgs, file: &Value) -> Result<ExitCode, String> {
    let gamma = a.gamma.or(get_f64(file, "gamma")).ok_or("--gamma required")?;
    let c = a.c.or(get_f64(file, "c")).unwrap_or(0.0);
    let theta = parse_pair(&a.theta.or(get_str(file, "theta")).unwrap_or("0,0".into()))?;
    let y0 = parse_pair(&a.y0.or(get_str(file, "y0")).ok_or("--y0 required")?)?;
    let step = a.step.or(get_f64(file, "step")).unwrap_or(1e-4);
    let t_end = a.t_end.or(get_f64(file, "t_end")).unwrap_or(1.0);
    let record_dt = a.record_dt.or(get_f64(file, "record_dt")).unwrap_or(t_end / 100.0);
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let out = a.out.or(get_str(file, "out")).ok_or("--out required")?;
    if gamma < 0.0 || c < 0.0 || step <= 0.0 || t_end <= 0.0 || record_dt <= 0.0 {
        return Err("gamma, c must be nonnegative; step, t-end, record-dt positive".into());
    }
    let cfg = imub::finite_rate::SdeConfig::new(gamma, c, theta, step, seed);
    let times: Vec<f64> = (1..=(t_end / record_dt).round() as usize)
        .map(|k| k as f64 * record_dt)
        .collect();
    let path = imub::finite_rate::simulate_y(&cfg, &y0, &times).map_err(|e| e.to_string())?;
    std::fs::write(&out, path.to_csv()).map_err(|e| format!("{out}: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_path(a: PathArgs, file: &Value) -> Result<ExitCode, String> {
    let c = a.c.or(get_f64(file, "c")).ok_or("--c required")?;
    let theta = parse_pair(&a.theta.or(get_str(file, "theta")).ok_or("--theta required")?)?;
    let x0 = parse_boundary(&a.x0.or(get_str(file, "x0")).ok_or("--x0 required")?)?;
    let times = parse_times(&a.times.or(get_str(file, "times")).ok_or("--times required")?)?;
    let scheme = a.scheme.or(get_str(file, "scheme")).unwrap_or("exact".into());
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let out = a.out.or(get_str(file, "out")).ok_or("--out required")?;
    if c < 0.0 {
        return Err("c must be nonnegative".into());
    }
    let sample = match scheme.as_str() {
        "exact" => {
            let params = ImubParams::new(c, theta);
            let mut rng = stream(seed, 0);
            path_sample(&params, &x0, &times, &mut rng)
        }
        "strong" => {
            let step = a.step.or(get_f64(file, "step")).unwrap_or(1e-4);
            let sched = DriftSchedule::constant(c, theta);
            let mut path = BrownianPath::new(WalkConfig::with_step(step), seed, 0);
            let trace_every = a.trace_every.or(get_u64(file, "trace_every")).unwrap_or(10);
            let trace_out = a.trace_out.or(get_str(file, "trace_out"));
            if trace_out.is_some() {
                path.record_trace(trace_every);
            }
            let sample =
                strong_construct(&mut path, &x0, &sched, &times).map_err(|e| e.to_string())?;
            if let Some(tr_out) = trace_out {
                let mut csv = String::from("t,b1,b2\n");
                for (t, b1, b2) in path.trace().unwrap_or(&[]) {
                    let _ = writeln!(csv, "{t},{b1},{b2}");
                }
                std::fs::write(&tr_out, csv).map_err(|e| format!("{tr_out}: {e}"))?;
            }
            sample
        }
        other => return Err(format!("unknown scheme {other:?} (use exact or strong)")),
    };
    std::fs::write(&out, sample.to_csv()).map_err(|e| format!("{out}: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_trotter(a: TrotterArgs, file: &Value) -> Result<ExitCode, String> {
    let c = a.c.or(get_f64(file, "c")).ok_or("--c required")?;
    let theta = parse_pair(&a.theta.or(get_str(file, "theta")).ok_or("--theta required")?)?;
    let x0 = parse_boundary(&a.x0.or(get_str(file, "x0")).ok_or("--x0 required")?)?;
    let epsilon = a.epsilon.or(get_f64(file, "epsilon")).ok_or("--epsilon required")?;
    let horizon = a.horizon.or(get_f64(file, "horizon")).ok_or("--horizon required")?;
    let times = parse_times(&a.times.or(get_str(file, "times")).ok_or("--times required")?)?;
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let out = a.out.or(get_str(file, "out")).ok_or("--out required")?;
    if c < 0.0 || epsilon <= 0.0 || epsilon > horizon {
        return Err("need c ≥ 0 and 0 < epsilon ≤ horizon".into());
    }
    if times.iter().any(|&t| t < 0.0 || t > horizon) {
        return Err("times must lie within [0, horizon]".into());
    }
    let params = ImubParams::new(c, theta);
    let cfg = TrotterConfig::new(epsilon, horizon, seed);
    let sample = trotter_path(&params, &x0, &cfg, &times);
    std::fs::write(&out, sample.to_csv()).map_err(|e| format!("{out}: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_generator(a: GeneratorArgs, file: &Value) -> Result<ExitCode, String> {
    let c = a.c.or(get_f64(file, "c")).ok_or("--c required")?;
    let theta = parse_pair(&a.theta.or(get_str(file, "theta")).ok_or("--theta required")?)?;
    let z = parse_boundary(&a.z.or(get_str(file, "z")).ok_or("--z required")?)?;
    let x = parse_boundary(&a.x.or(get_str(file, "x")).ok_or("--x required")?)?;
    let tol = a.tol.or(get_f64(file, "tol")).unwrap_or(1e-9);
    if c < 0.0 || tol <= 0.0 {
        return Err("need c ≥ 0 and tol > 0".into());
    }
    let params = ImubParams::new(c, theta);
    let f = imub::generator::TestFunction::from_kernel(&z);
    let quad = imub::generator::apply_g(&params, &f, &x, tol).map_err(|e| e.to_string())?;
    let closed = imub::generator::generator_on_f(&params, &z, &x);
    let diff = (quad.value - closed).norm();
    let rel = if closed.norm() > 1e-12 { diff / closed.norm() } else { diff };
    let report = CheckReport {
        check: "generator-vs-closed-form".into(),
        params: json!({"c": c, "theta": [theta.x1, theta.x2], "z": format!("{:?}", z), "x": format!("{:?}", x), "tol": tol}),
        n: 1,
        estimate: Some(imub::checks::ComplexJson {
            re: quad.value.re,
            im: quad.value.im,
        }),
        std_error: Some([quad.quadrature_error_estimate, quad.quadrature_error_estimate]),
        reference: Some(imub::checks::ComplexJson {
            re: closed.re,
            im: closed.im,
        }),
        statistic: Some(rel),
        threshold: Some(1e-6),
        verdict: if rel <= 1e-6 { Verdict::Pass } else { Verdict::Fail },
        seed: 0,
        wall_time_ms: 0,
    };
    let config = report.params.clone();
    emit_report_json(a.out.or(get_str(file, "out")).as_deref(), config, vec![report])
}

fn cmd_verify(a: VerifyArgs, file: &Value) -> Result<ExitCode, String> {
    let suite = a.suite.or(get_str(file, "suite")).ok_or("--suite required")?;
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(0);
    let n = a.n.or(get_u64(file, "n").map(|x| x as usize)).unwrap_or(100_000);
    let out = a.out.or(get_str(file, "out"));

    let c = a.c.or(get_f64(file, "c")).unwrap_or(1.0);
    let theta = parse_pair(&a.theta.or(get_str(file, "theta")).unwrap_or("1,1".into()))?;
    if c < 0.0 {
        return Err("c must be nonnegative".into());
    }
    let params = ImubParams::new(c, theta);

    let reports: Vec<CheckReport> = match suite.as_str() {
        "duality" => {
            let x0 = parse_boundary(&a.x.or(get_str(file, "x")).unwrap_or("axis2:1".into()))?;
            let z = parse_boundary(&a.z.or(get_str(file, "z")).unwrap_or("axis1:1".into()))?;
            let t = a.t.or(get_f64(file, "t")).unwrap_or(std::f64::consts::LN_2);
            let zq = z.to_quadrant();
            let decay = (-c * t).exp();
            let reference = kernel_f(&x0.to_quadrant(), &zq.scale(decay))
                * kernel_f(&theta, &zq.scale(1.0 - decay));
            let est = mc_estimate(
                |i| {
                    let mut rng = stream(seed, i);
                    let xt = transition_sample(&params, &x0, t, &mut rng);
                    kernel_f(&xt.to_quadrant(), &zq)
                },
                n,
                Some(reference),
                4.0,
            )
            .map_err(|e| e.to_string())?;
            vec![check_report_from_estimate(
                "transition-duality",
                json!({"c": c, "theta": [theta.x1, theta.x2], "x": format!("{x0:?}"), "z": format!("{z:?}"), "t": t, "n": n}),
                &est,
                seed,
            )]
        }
        "ks-q" => {
            let u = a.u.or(get_f64(file, "u")).unwrap_or(1.0);
            let v = a.v.or(get_f64(file, "v")).unwrap_or(1.0);
            let threshold = a
                .threshold
                .or(get_f64(file, "threshold"))
                .unwrap_or(1.63 / (n as f64).sqrt());
            let qp = QMeasureParams::new(u, v);
            let samples: Vec<BoundaryPoint> = (0..n as u64)
                .map(|i| {
                    let mut rng = stream(seed, i);
                    q_sample(&qp, &mut rng)
                })
                .collect();
            let ks = ks_against_q(&samples, &qp, threshold).map_err(|e| e.to_string())?;
            vec![check_report_from_ks(
                "q-sample-ks",
                json!({"u": u, "v": v, "n": n}),
                &ks,
                seed,
            )]
        }
        "semigroup" => {
            let x0 = parse_boundary(&a.x0.or(get_str(file, "x0")).unwrap_or("axis1:1".into()))?;
            let t = a.t.or(get_f64(file, "t")).unwrap_or(1.0);
            let s = t * 0.3;
            let threshold = a.threshold.or(get_f64(file, "threshold")).unwrap_or(0.01);
            let mut two_step: Vec<f64> = (0..n as u64)
                .map(|i| {
                    let mut rng = stream(seed, i);
                    let mid = transition_sample(&params, &x0, s, &mut rng);
                    transition_sample(&params, &mid, t - s, &mut rng).signed()
                })
                .collect();
            let mut one_step: Vec<f64> = (0..n as u64)
                .map(|i| {
                    let mut rng = stream(seed ^ 0xFFFF, i);
                    transition_sample(&params, &x0, t, &mut rng).signed()
                })
                .collect();
            two_step.sort_by(|x, y| x.total_cmp(y));
            one_step.sort_by(|x, y| x.total_cmp(y));
            let statistic = ks_two_sample_sorted(&two_step, &one_step);
            let verdict = if statistic <= threshold { Verdict::Pass } else { Verdict::Fail };
            vec![CheckReport {
                check: "chapman-kolmogorov".into(),
                params: json!({"c": c, "theta": [theta.x1, theta.x2], "x0": format!("{x0:?}"), "s": s, "t": t, "n": n}),
                n,
                estimate: None,
                std_error: None,
                reference: None,
                statistic: Some(statistic),
                threshold: Some(threshold),
                verdict,
                seed,
                wall_time_ms: 0,
            }]
        }
        "martingale" => {
            let x0 = parse_boundary(&a.x0.or(get_str(file, "x0")).unwrap_or("axis1:1".into()))?;
            let z = parse_boundary(&a.z.or(get_str(file, "z")).unwrap_or("axis1:1".into()))?;
            let t = a.t.or(get_f64(file, "t")).unwrap_or(1.0);
            let epsilon = a.epsilon.or(get_f64(file, "epsilon")).unwrap_or(1e-3);
            let est = martingale_residual(
                &params,
                &x0,
                &z,
                t,
                epsilon,
                n,
                seed,
                IntegralScheme::ExactFlow,
            )
            .map_err(|e| e.to_string())?;
            vec![check_report_from_estimate(
                "martingale-residual",
                json!({"c": c, "theta": [theta.x1, theta.x2], "x0": format!("{x0:?}"), "z": format!("{z:?}"), "t": t, "epsilon": epsilon, "n": n}),
                &est,
                seed,
            )]
        }
        "gamma-sweep" => {
            let x0 = parse_boundary(&a.x0.or(get_str(file, "x0")).unwrap_or("axis1:1".into()))?;
            let t = a.t.or(get_f64(file, "t")).unwrap_or(1.0);
            let threshold = a.threshold.or(get_f64(file, "threshold")).unwrap_or(0.02);
            let gammas: Vec<f64> = a
                .gammas
                .or(get_str(file, "gammas"))
                .unwrap_or("1,10,100,1000".into())
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("bad gammas: {e}"))?;
            let ks = convergence_sweep(&params, &x0, t, &gammas, n, seed, threshold)
                .map_err(|e| e.to_string())?;
            gammas
                .iter()
                .zip(ks.iter())
                .map(|(&g, k)| {
                    check_report_from_ks(
                        "gamma-sweep-ks",
                        json!({"gamma": g, "t": t, "n": n}),
                        k,
                        seed,
                    )
                })
                .collect()
        }
        other => return Err(format!("unknown suite {other:?}")),
    };

    let config = json!({"suite": suite, "seed": seed, "n": n, "c": c, "theta": [theta.x1, theta.x2]});
    emit_report_json(out.as_deref(), config, reports)
}

fn cmd_all_checks(a: AllChecksArgs, file: &Value) -> Result<ExitCode, String> {
    let seed = a.seed.or(get_u64(file, "seed")).unwrap_or(1);
    let out_dir = a
        .out_dir
        .or(get_str(file, "out_dir"))
        .unwrap_or_else(|| "imub-out".into());
    let cfg = CheckConfig {
        seed,
        out_dir: Some(out_dir.clone()),
    };
    let output = run_all_checks(&cfg).map_err(|e| e.to_string())?;
    for c in &output.criteria {
        println!("{}", c.line());
    }
    let pass = output.criteria.iter().filter(|c| c.passed && c.within_budget).count();
    println!("summary: {pass}/{} criteria passed", output.criteria.len());
    std::fs::create_dir_all(&out_dir).map_err(|e| format!("{out_dir}: {e}"))?;
    let json_path = format!("{out_dir}/all_checks.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&output).expect("serializable"),
    )
    .map_err(|e| format!("{json_path}: {e}"))?;
    println!("report written to {json_path}");
    Ok(if output.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
