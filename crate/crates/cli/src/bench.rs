//! Accuracy/timing harness over random covariances: draw, compute the
//! ground-truth W on the population correlation, re-estimate from sampled
//! data at each sample size and tolerance, and report per-replicate rows
//! plus mean/SEM aggregates per cell.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Result};
use rayon::prelude::*;
use wminfo_core::gauss::GaussianJoint;
use wminfo_core::ingest::{lag_embed, LagPairing};
use wminfo_core::optim::AdamConfig;
use wminfo_core::synth::{sample_joint, wishart_correlation};
use wminfo_core::wm::{w_info, BiasSpec};

pub struct BenchSpec {
    /// Total system dimensions (split evenly into sources and targets).
    pub dims: Vec<usize>,
    pub samples: Vec<usize>,
    pub reps: usize,
    /// Convergence tolerances (mapped onto rel_tol).
    pub tols: Vec<f64>,
    pub bias_correct: bool,
    pub seed: u64,
    pub jobs: Option<usize>,
}

struct Row {
    dim: usize,
    samples: usize,
    tol: f64,
    rep: usize,
    w_true: f64,
    w_est: f64,
    rel_err: f64,
    seconds: f64,
}

pub fn run(spec: &BenchSpec) -> Result<String> {
    for &d in &spec.dims {
        if d < 2 || d % 2 != 0 {
            bail!("--dims entries must be even and at least 2, got {d}");
        }
    }
    if spec.reps == 0 {
        bail!("--reps must be positive");
    }

    let mut cells = Vec::new();
    for &dim in &spec.dims {
        for &l in &spec.samples {
            for &tol in &spec.tols {
                for rep in 0..spec.reps {
                    cells.push((dim, l, tol, rep));
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()?;
    let rows: Vec<Result<Row>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(dim, l, tol, rep)| {
                let seed = spec
                    .seed
                    .wrapping_add((dim as u64) << 40)
                    .wrapping_add((l as u64) << 16)
                    .wrapping_add(rep as u64);
                let corr = wishart_correlation(dim, 2 * dim, seed)?;
                let truth = GaussianJoint::new(dim / 2, dim / 2, corr.clone())?;
                let cfg = AdamConfig::default().with_seed(seed);
                let w_true = w_info(&truth, &cfg, &BiasSpec::disabled())?.w;

                let data = sample_joint(&corr, l, seed ^ 0x9e37_79b9_7f4a_7c15)?;
                let (est, ll) = lag_embed(
                    &data,
                    &LagPairing {
                        lag: 0,
                        source_cols: (0..dim / 2).collect(),
                        target_cols: (dim / 2..dim).collect(),
                    },
                )?;
                let mut run_cfg = AdamConfig::default().with_seed(seed);
                run_cfg.rel_tol = tol;
                let bias = if spec.bias_correct {
                    BiasSpec::corrected(ll)
                } else {
                    BiasSpec::disabled()
                };
                let t0 = Instant::now();
                let w_est = w_info(&est, &run_cfg, &bias)?.w;
                let seconds = t0.elapsed().as_secs_f64();
                Ok(Row {
                    dim,
                    samples: l,
                    tol,
                    rep,
                    w_true,
                    w_est,
                    rel_err: (w_est - w_true) / w_true,
                    seconds,
                })
            })
            .collect()
    });

    let mut csv =
        String::from("kind,dim,samples,tol,rep,w_true,w_est,rel_err,seconds,sem_rel_err\n");
    let mut ok_rows = Vec::with_capacity(rows.len());
    for r in rows {
        ok_rows.push(r?);
    }
    for r in &ok_rows {
        let _ = writeln!(
            csv,
            "rep,{},{},{:e},{},{:.12e},{:.12e},{:.12e},{:.3},",
            r.dim, r.samples, r.tol, r.rep, r.w_true, r.w_est, r.rel_err, r.seconds
        );
    }
    // Aggregate each (dim, samples, tol) cell.
    for &dim in &spec.dims {
        for &l in &spec.samples {
            for &tol in &spec.tols {
                let cell: Vec<&Row> = ok_rows
                    .iter()
                    .filter(|r| r.dim == dim && r.samples == l && r.tol == tol)
                    .collect();
                let n = cell.len() as f64;
                let mean_err = cell.iter().map(|r| r.rel_err).sum::<f64>() / n;
                let var = cell
                    .iter()
                    .map(|r| (r.rel_err - mean_err).powi(2))
                    .sum::<f64>()
                    / (n - 1.0).max(1.0);
                let sem = (var / n).sqrt();
                let mean_secs = cell.iter().map(|r| r.seconds).sum::<f64>() / n;
                let _ = writeln!(
                    csv,
                    "aggregate,{dim},{l},{tol:e},,,,{mean_err:.12e},{mean_secs:.3},{sem:.12e}"
                );
            }
        }
    }
    Ok(csv)
}
