//! Declarative grid sweeps over a model family, fanned out across threads
//! and written in deterministic grid order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use wminfo_core::gauss::GaussianJoint;
use wminfo_core::ingest::{copula_transform, lag_embed, LagPairing};
use wminfo_core::optim::AdamConfig;
use wminfo_core::synth::{
    modular_var, rescale_to_target_mi, uniform_var, var_joint, wilson_cowan_simulate,
    WilsonCowanParams,
};
use wminfo_core::wm::{w_info, BiasSpec, WMResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// uniform-var | modular-var | wc.
    pub model: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_block")]
    pub block: usize,
    /// Equal-MI rescaling target for VAR families (nats).
    pub target_mi: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lag")]
    pub lag: usize,
    #[serde(default)]
    pub copula: bool,
    #[serde(default)]
    pub bias_correct: bool,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    pub grid: Grid,
    pub output: Output,
}

fn default_n() -> usize {
    2
}
fn default_block() -> usize {
    1
}
fn default_lag() -> usize {
    1
}
fn default_steps() -> usize {
    180_000
}
fn default_burn_in() -> usize {
    20_000
}
fn default_dt() -> f64 {
    0.01
}
fn default_noise_std() -> f64 {
    0.05
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub w_ei: Option<Vec<f64>>,
    pub w_ie: Option<Vec<f64>>,
    pub noise_corr: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub csv: PathBuf,
}

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading sweep config {}", path.display()))?;
    let cfg: SweepConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(cfg)
}

/// The fixed axis order per family; grid expansion is row-major over it.
fn axes(cfg: &SweepConfig) -> Result<Vec<(&'static str, Vec<f64>)>> {
    let need = |name: &str, v: &Option<Vec<f64>>| -> Result<Vec<f64>> {
        match v {
            Some(vals) if !vals.is_empty() => Ok(vals.clone()),
            _ => bail!("config error: grid.{name} is required for model {}", cfg.model),
        }
    };
    match cfg.model.as_str() {
        "uniform-var" => Ok(vec![
            ("a", need("a", &cfg.grid.a)?),
            ("c", need("c", &cfg.grid.c)?),
        ]),
        "modular-var" => Ok(vec![
            ("a", need("a", &cfg.grid.a)?),
            ("b", need("b", &cfg.grid.b)?),
            ("c", need("c", &cfg.grid.c)?),
        ]),
        "wc" => Ok(vec![
            ("w_ei", need("w_ei", &cfg.grid.w_ei)?),
            ("w_ie", need("w_ie", &cfg.grid.w_ie)?),
            ("noise_corr", need("noise_corr", &cfg.grid.noise_corr)?),
        ]),
        other => bail!("config error: unknown model {other:?}"),
    }
}

fn grid_points(axes: &[(&'static str, Vec<f64>)]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for (_, vals) in axes {
        let mut next = Vec::with_capacity(points.len() * vals.len());
        for p in &points {
            for &v in vals {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn estimate_point(cfg: &SweepConfig, point: &[f64], opt: &AdamConfig) -> Result<WMResult> {
    match cfg.model.as_str() {
        "uniform-var" | "modular-var" => {
            let model = if cfg.model == "uniform-var" {
                uniform_var(point[0], point[1], cfg.n)?
            } else {
                modular_var(point[0], point[1], point[2], cfg.block)?
            };
            let model = match cfg.target_mi {
                Some(t) => rescale_to_target_mi(&model, t)?,
                None => model,
            };
            if cfg.bias_correct {
                bail!("config error: bias_correct needs a sampled model (wc)");
            }
            let joint = var_joint(&model)?;
            Ok(w_info(&joint, opt, &BiasSpec::disabled())?)
        }
        "wc" => {
            let params = WilsonCowanParams {
                w_ei: point[0],
                w_ie: point[1],
                noise_corr: point[2],
                noise_std: cfg.noise_std,
                dt: cfg.dt,
                t_total: cfg.steps + cfg.burn_in,
                burn_in: cfg.burn_in,
                seed: cfg.seed,
                ..Default::default()
            };
            let ts = wilson_cowan_simulate(&params)?;
            let ts = if cfg.copula { copula_transform(&ts)? } else { ts };
            let (joint, l): (GaussianJoint, usize) =
                lag_embed(&ts, &LagPairing::full(&ts, cfg.lag))?;
            let bias = if cfg.bias_correct {
                BiasSpec::corrected(l)
            } else {
                BiasSpec::disabled()
            };
            Ok(w_info(&joint, opt, &bias)?)
        }
        other => bail!("config error: unknown model {other:?}"),
    }
}

/// Runs the sweep and writes one CSV row per grid point, in grid order
/// regardless of the parallel execution schedule.
pub fn run(cfg: &SweepConfig, jobs: Option<usize>) -> Result<PathBuf> {
    let axes = axes(cfg)?;
    let points = grid_points(&axes);
    let opt = AdamConfig::default().with_seed(cfg.seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    let results: Vec<Result<(WMResult, f64)>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let t0 = Instant::now();
                let res = estimate_point(cfg, p, &opt)?;
                Ok((res, t0.elapsed().as_secs_f64()))
            })
            .collect()
    });

    let mut out = String::new();
    for (name, _) in &axes {
        let _ = write!(out, "{name},");
    }
    out.push_str("mi,w,m,m_normalized,iterations,seconds\n");
    for (point, result) in points.iter().zip(results) {
        let (res, secs) = result?;
        for v in point {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{},{:.3}",
            res.mi_total, res.w, res.m, res.m_normalized, res.diagnostics.iterations, secs
        );
    }
    std::fs::write(&cfg.output.csv, out)
        .with_context(|| format!("writing {}", cfg.output.csv.display()))?;
    Ok(cfg.output.csv.clone())
}
