//! Resolves --model / --input flags into a joint system ready for
//! estimation, tracking the sample count for bias correction and any
//! warnings worth surfacing in the report.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use wminfo_core::gauss::GaussianJoint;
use wminfo_core::ingest::{copula_transform, lag_embed_regularized, load_csv, LagPairing};
use wminfo_core::phiid::ToyPhiidSystem;
use wminfo_core::phiid::toy_phiid_series;
use wminfo_core::synth::{
    experiment1_joint, modular_var, rescale_to_target_mi, uniform_var, var_joint, var_simulate,
    wilson_cowan_simulate, TimeSeries, ToyGate, VarModel, WilsonCowanParams,
};

/// Everything the estimate/phiid commands need to know about their input.
pub struct ResolvedInput {
    pub joint: GaussianJoint,
    /// Sample count behind the estimate (None for exact population joints).
    pub n_samples: Option<usize>,
    pub digest_material: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ModelArgs {
    /// CSV input (rows = time points, columns = channels).
    #[arg(long, conflicts_with = "model")]
    pub input: Option<PathBuf>,

    /// Synthetic model: uniform-var | modular-var | wc | toy:NAME |
    /// toy-atom:NAME.
    #[arg(long)]
    pub model: Option<String>,

    /// Self coupling (uniform-var, modular-var).
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,

    /// Cross coupling (modular-var).
    #[arg(long, default_value_t = 0.1)]
    pub b: f64,

    /// Noise correlation (VAR noise block and Wilson-Cowan).
    #[arg(long, default_value_t = 0.1)]
    pub c: f64,

    /// System size for uniform-var.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Community size for modular-var (system size is twice this).
    #[arg(long, default_value_t = 1)]
    pub block: usize,

    /// Rescale the VAR coefficients so the joint MI hits this target (nats).
    #[arg(long)]
    pub rescale_mi: Option<f64>,

    /// Inhibitory-to-excitatory coupling (wc).
    #[arg(long, default_value_t = 40.0)]
    pub w_ei: f64,

    /// Excitatory-to-inhibitory coupling (wc).
    #[arg(long, default_value_t = 5.0)]
    pub w_ie: f64,

    /// Simulation steps kept after burn-in (wc and simulate).
    #[arg(long, default_value_t = 180_000)]
    pub steps: usize,

    /// Burn-in steps discarded at the start (wc and simulate).
    #[arg(long, default_value_t = 20_000)]
    pub burn_in: usize,

    /// Integrator step (wc).
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,

    /// Noise amplitude (wc).
    #[arg(long, default_value_t = 0.05)]
    pub noise_std: f64,

    /// Lag between sources and targets for series inputs.
    #[arg(long, default_value_t = 1)]
    pub lag: usize,

    /// Source channels for series inputs (comma-separated, default all).
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<usize>,

    /// Target channels for series inputs (comma-separated, default all).
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<usize>,

    /// Apply the Gaussian-copula rank transform to series inputs.
    #[arg(long)]
    pub copula: bool,
}

impl ModelArgs {
    pub fn wc_params(&self, seed: u64) -> WilsonCowanParams {
        WilsonCowanParams {
            w_ei: self.w_ei,
            w_ie: self.w_ie,
            noise_corr: self.c,
            noise_std: self.noise_std,
            dt: self.dt,
            t_total: self.steps + self.burn_in,
            burn_in: self.burn_in,
            seed,
            ..Default::default()
        }
    }

    pub fn var_model(&self, kind: &str) -> Result<VarModel> {
        let model = match kind {
            "uniform-var" => uniform_var(self.a, self.c, self.n)?,
            "modular-var" => modular_var(self.a, self.b, self.c, self.block)?,
            other => bail!("unknown VAR model {other:?}"),
        };
        Ok(match self.rescale_mi {
            Some(target) => rescale_to_target_mi(&model, target)?,
            None => model,
        })
    }

    fn pairing(&self, ts: &TimeSeries) -> LagPairing {
        let mut pairing = LagPairing::full(ts, self.lag);
        if !self.sources.is_empty() {
            pairing.source_cols = self.sources.clone();
        }
        if !self.targets.is_empty() {
            pairing.target_cols = self.targets.clone();
        }
        pairing
    }

    /// Lag-embeds a series (after the optional copula) into a joint.
    pub fn embed_series(
        &self,
        ts: &TimeSeries,
        digest_material: String,
        mut warnings: Vec<String>,
    ) -> Result<ResolvedInput> {
        let ts = if self.copula {
            copula_transform(ts)?
        } else {
            ts.clone()
        };
        let (joint, l, jitter) = lag_embed_regularized(&ts, &self.pairing(&ts))?;
        if let Some(lambda) = jitter {
            warnings.push(format!(
                "sample correlation was numerically singular; shrunk toward identity by lambda = {lambda:.0e}"
            ));
        }
        Ok(ResolvedInput {
            joint,
            n_samples: Some(l),
            digest_material,
            warnings,
        })
    }

    pub fn resolve(&self, seed: u64) -> Result<ResolvedInput> {
        if let Some(path) = &self.input {
            let ts = load_csv(path)?;
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let digest_material = String::from_utf8_lossy(&bytes).into_owned();
            return self.embed_series(&ts, digest_material, Vec::new());
        }
        let Some(model) = &self.model else {
            bail!("either --input or --model is required");
        };
        let digest_material = format!("{model}|{self:?}|seed={seed}");
        match model.as_str() {
            "uniform-var" | "modular-var" => {
                let joint = var_joint(&self.var_model(model)?)?;
                Ok(ResolvedInput {
                    joint,
                    n_samples: None,
                    digest_material,
                    warnings: Vec::new(),
                })
            }
            "wc" => {
                let ts = wilson_cowan_simulate(&self.wc_params(seed))?;
                self.embed_series(&ts, digest_material, Vec::new())
            }
            name => {
                if let Some(gate) = name.strip_prefix("toy:") {
                    let kind = match gate {
                        "copy" => ToyGate::Copy,
                        "transfer" => ToyGate::Transfer,
                        "xor" => ToyGate::Xor,
                        other => bail!("unknown toy gate {other:?} (copy|transfer|xor)"),
                    };
                    return Ok(ResolvedInput {
                        joint: experiment1_joint(kind),
                        n_samples: None,
                        digest_material,
                        warnings: Vec::new(),
                    });
                }
                if let Some(atom) = name.strip_prefix("toy-atom:") {
                    let sys = ToyPhiidSystem::by_atom(atom)?;
                    return Ok(ResolvedInput {
                        joint: wminfo_core::phiid::toy_phiid_covariance(sys)?,
                        n_samples: None,
                        digest_material,
                        warnings: Vec::new(),
                    });
                }
                bail!("unknown model {name:?}");
            }
        }
    }

    /// Produces a raw series for the simulate command.
    pub fn simulate_series(&self, seed: u64) -> Result<(TimeSeries, Vec<String>)> {
        let Some(model) = &self.model else {
            bail!("simulate requires --model");
        };
        let (ts, names) = match model.as_str() {
            "uniform-var" | "modular-var" => {
                let m = self.var_model(model)?;
                let names = (0..m.dim()).map(|i| format!("z{}", i + 1)).collect();
                (var_simulate(&m, self.steps, self.burn_in, seed)?, names)
            }
            "wc" => {
                let ts = wilson_cowan_simulate(&self.wc_params(seed))?;
                (ts, vec!["e".into(), "i".into()])
            }
            name => {
                if let Some(atom) = name.strip_prefix("toy-atom:") {
                    let sys = ToyPhiidSystem::by_atom(atom)?;
                    let ts = toy_phiid_series(sys, self.steps, seed)?;
                    let names = ["xt", "yt", "xt1", "yt1"].map(String::from).to_vec();
                    (ts, names)
                } else {
                    bail!("simulate supports uniform-var, modular-var, wc, toy-atom:NAME");
                }
            }
        };
        Ok((ts, names))
    }
}
