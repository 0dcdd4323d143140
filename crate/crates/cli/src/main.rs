//! Command-line surface for the W/M-information estimator: single-system
//! estimates and decompositions, model simulation, grid sweeps, and the
//! accuracy/timing benchmark. Reports are deterministic JSON except for the
//! wall-clock seconds field.

mod bench;
mod model;
mod report;
mod sweep;

use std::f64::consts::LN_2;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use model::ModelArgs;
use report::{digest, Report, Value};
use wminfo_core::optim::AdamConfig;
use wminfo_core::phiid::{phiid_decompose, ATOM_NAMES};
use wminfo_core::wm::{w_info, BiasSpec};

#[derive(Parser)]
#[command(
    name = "wminfo",
    version,
    about = "Low/high-order information decomposition for jointly Gaussian systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate W (pairwise-explainable) and M (high-order) information.
    Estimate(EstimateArgs),
    /// Full 16-atom decomposition of a 2-source/2-target system.
    Phiid(PhiidArgs),
    /// Simulate a synthetic model and write the series as CSV.
    Simulate(SimulateArgs),
    /// Run a parameter-grid sweep described by a TOML config.
    Sweep(SweepArgs),
    /// Accuracy/timing benchmark over random covariances.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonOptArgs {
    /// Apply finite-sample bias correction (sampled inputs only).
    #[arg(long)]
    bias_correct: bool,

    /// Report information in bits instead of nats.
    #[arg(long)]
    bits: bool,

    /// RNG seed (default: WMINFO_SEED or 0).
    #[arg(long)]
    seed: Option<u64>,

    /// Convergence tolerance on the relative objective change.
    #[arg(long)]
    tol: Option<f64>,

    /// Number of extra optimizer restarts.
    #[arg(long)]
    restarts: Option<usize>,

    /// Also write the JSON report to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    opt: CommonOptArgs,
}

#[derive(Args)]
struct PhiidArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    opt: CommonOptArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// RNG seed (default: WMINFO_SEED or 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep description.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Total system dimensions, split evenly into sources and targets.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Sample counts to draw per replicate.
    #[arg(long, value_delimiter = ',', required = true)]
    samples: Vec<usize>,
    /// Replicates per cell.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Convergence tolerances to compare.
    #[arg(long, value_delimiter = ',', default_value = "1e-10")]
    tol: Vec<f64>,
    #[arg(long)]
    bias_correct: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var("WMINFO_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn input_error(e: &wminfo_core::Error) -> bool {
    use wminfo_core::Error::*;
    matches!(
        e,
        Parse { .. }
            | RaggedRows { .. }
            | NonNumeric { .. }
            | ConstantChannel(_)
            | TooFewSamples { .. }
            | InsufficientSamples { .. }
            | WrongShape(_)
            | InvalidParam(_)
            | IndexOutOfRange { .. }
            | Domain(_)
            | ZeroVariance(_)
    )
}

fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<wminfo_core::Error>() {
        Some(core) if !input_error(core) => 3,
        _ => 2,
    }
}

fn adam_config(opt: &CommonOptArgs, seed: u64) -> AdamConfig {
    let mut cfg = AdamConfig::default().with_seed(seed);
    if let Some(tol) = opt.tol {
        cfg.rel_tol = tol;
    }
    if let Some(restarts) = opt.restarts {
        cfg.restarts = restarts;
    }
    cfg
}

fn emit(report: &Report, json_path: &Option<PathBuf>) -> Result<()> {
    let text = report.to_json();
    print!("{text}");
    if let Some(path) = json_path {
        std::fs::write(path, &text)?;
    }
    Ok(())
}

fn command_echo(sub: &str) -> String {
    let args: Vec<String> = std::env::args().skip(2).collect();
    format!("{sub} {}", args.join(" "))
}

fn error_report(
    sub: &str,
    resolved: &model::ResolvedInput,
    seed: u64,
    t0: Instant,
    e: wminfo_core::Error,
    json: &Option<PathBuf>,
) -> (u8, anyhow::Error) {
    let report = Report {
        command: command_echo(sub),
        inputs_digest: digest(resolved.digest_material.as_bytes()),
        payload: Value::Object(vec![("error".into(), Value::str(e.to_string()))]),
        seconds: t0.elapsed().as_secs_f64(),
        seed,
        warnings: resolved.warnings.clone(),
    };
    let _ = emit(&report, json);
    let e = anyhow::Error::from(e);
    let code = classify(&e);
    (code, e)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), (u8, anyhow::Error)> {
    let seed = resolve_seed(args.opt.seed);
    let resolved = args.model.resolve(seed).map_err(|e| (classify(&e), e))?;
    let bias = if args.opt.bias_correct {
        match resolved.n_samples {
            Some(l) => BiasSpec::corrected(l),
            None => {
                return Err((
                    2,
                    anyhow!("--bias-correct needs a sampled input (CSV or wc model)"),
                ))
            }
        }
    } else {
        BiasSpec::disabled()
    };
    let cfg = adam_config(&args.opt, seed);
    let scale = if args.opt.bits { 1.0 / LN_2 } else { 1.0 };
    let units = if args.opt.bits { "bits" } else { "nats" };

    let t0 = Instant::now();
    let res = match w_info(&resolved.joint, &cfg, &bias) {
        Ok(res) => res,
        Err(e) => return Err(error_report("estimate", &resolved, seed, t0, e, &args.opt.json)),
    };

    let mut payload = vec![
        ("mi_total".into(), Value::Float(res.mi_total * scale)),
        ("w".into(), Value::Float(res.w * scale)),
        ("m".into(), Value::Float(res.m * scale)),
        ("m_normalized".into(), Value::Float(res.m_normalized)),
        ("w_normalized".into(), Value::Float(res.w_normalized())),
        ("bias_applied".into(), Value::Float(res.bias_applied * scale)),
        ("units".into(), Value::str(units)),
        ("d_x".into(), Value::Int(resolved.joint.d_x() as i64)),
        ("d_y".into(), Value::Int(resolved.joint.d_y() as i64)),
        (
            "iterations".into(),
            Value::Int(res.diagnostics.iterations as i64),
        ),
        ("converged".into(), Value::Bool(res.diagnostics.converged)),
        (
            "final_grad_norm".into(),
            Value::Float(res.diagnostics.final_grad_norm),
        ),
        (
            "restart_values".into(),
            Value::List(
                res.diagnostics
                    .restart_values
                    .iter()
                    .map(|&v| Value::Float(v * scale))
                    .collect(),
            ),
        ),
    ];
    if let Some(l) = resolved.n_samples {
        payload.push(("n_samples".into(), Value::Int(l as i64)));
    }
    let mut warnings = resolved.warnings.clone();
    if res.m_clamped {
        warnings.push("tiny negative M clamped to zero".into());
    }
    if let Some(lambda) = res.jitter {
        warnings.push(format!(
            "input correlations sit on the feasible-set border; shrunk toward independence by lambda = {lambda:.0e}"
        ));
    }
    let report = Report {
        command: command_echo("estimate"),
        inputs_digest: digest(resolved.digest_material.as_bytes()),
        payload: Value::Object(payload),
        seconds: t0.elapsed().as_secs_f64(),
        seed,
        warnings,
    };
    emit(&report, &args.opt.json).map_err(|e| (2u8, e))?;
    Ok(())
}

fn cmd_phiid(args: &PhiidArgs) -> Result<(), (u8, anyhow::Error)> {
    let seed = resolve_seed(args.opt.seed);
    let resolved = args.model.resolve(seed).map_err(|e| (classify(&e), e))?;
    if resolved.joint.d_x() != 2 || resolved.joint.d_y() != 2 {
        return Err((
            2,
            anyhow!(
                "phiid needs a 2+2 system; got {}+{} (select channels with --sources/--targets)",
                resolved.joint.d_x(),
                resolved.joint.d_y()
            ),
        ));
    }
    let cfg = adam_config(&args.opt, seed);
    let scale = if args.opt.bits { 1.0 / LN_2 } else { 1.0 };
    let units = if args.opt.bits { "bits" } else { "nats" };

    let t0 = Instant::now();
    let dec = match phiid_decompose(&resolved.joint, &cfg) {
        Ok(dec) => dec,
        Err(e) => return Err(error_report("phiid", &resolved, seed, t0, e, &args.opt.json)),
    };

    let atoms: Vec<(String, Value)> = ATOM_NAMES
        .iter()
        .zip(dec.atoms.values())
        .map(|(&name, &v)| (name.to_string(), Value::Float(v * scale)))
        .collect();
    let payload = vec![
        ("atoms".into(), Value::Object(atoms)),
        ("dominant".into(), Value::str(dec.atoms.dominant().0)),
        ("residual".into(), Value::Float(dec.residual)),
        ("mi_total".into(), Value::Float(dec.wm.mi_total * scale)),
        ("w".into(), Value::Float(dec.wm.w * scale)),
        ("m".into(), Value::Float(dec.wm.m * scale)),
        (
            "low_order_sum".into(),
            Value::Float(dec.atoms.low_order_sum() * scale),
        ),
        (
            "synergy_sum".into(),
            Value::Float(dec.atoms.synergy_sum() * scale),
        ),
        ("units".into(), Value::str(units)),
    ];
    let report = Report {
        command: command_echo("phiid"),
        inputs_digest: digest(resolved.digest_material.as_bytes()),
        payload: Value::Object(payload),
        seconds: t0.elapsed().as_secs_f64(),
        seed,
        warnings: resolved.warnings.clone(),
    };
    emit(&report, &args.opt.json).map_err(|e| (2u8, e))?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), (u8, anyhow::Error)> {
    let seed = resolve_seed(args.seed);
    let (ts, names) = args
        .model
        .simulate_series(seed)
        .map_err(|e| (classify(&e), e))?;
    let mut out = String::with_capacity(ts.t_len() * ts.n_ch() * 26);
    out.push_str(&names.join(","));
    out.push('\n');
    for t in 0..ts.t_len() {
        for ch in 0..ts.n_ch() {
            if ch > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.17e}", ts.get(t, ch)));
        }
        out.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, out).map_err(|e| (2u8, anyhow::Error::from(e)))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), (u8, anyhow::Error)> {
    let cfg = sweep::load_config(&args.config).map_err(|e| (2u8, e))?;
    let path = sweep::run(&cfg, args.jobs).map_err(|e| (classify(&e), e))?;
    eprintln!("sweep results written to {}", path.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), (u8, anyhow::Error)> {
    let spec = bench::BenchSpec {
        dims: args.dims.clone(),
        samples: args.samples.clone(),
        reps: args.reps,
        tols: args.tol.clone(),
        bias_correct: args.bias_correct,
        seed: resolve_seed(args.seed),
        jobs: args.jobs,
    };
    let csv = bench::run(&spec).map_err(|e| (classify(&e), e))?;
    match &args.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| (2u8, anyhow::Error::from(e)))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Estimate(args) => cmd_estimate(args),
        Cmd::Phiid(args) => cmd_phiid(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
