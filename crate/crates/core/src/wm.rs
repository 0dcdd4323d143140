//! The public estimator: splits I(X;Y) into a low-order part W (the smallest
//! mutual information compatible with the pairwise source-target marginals)
//! and the high-order remainder M = I - W, with optional finite-sample bias
//! correction.

use nalgebra::DMatrix;

use crate::deltap::{GroupedSpec, ProblemSpec};
use crate::error::{Error, Result};
use crate::gauss::{
    correlation_from_dmatrix_unchecked, max_pairwise_mi, mutual_information, GaussianJoint,
};
use crate::linalg::digamma;
use crate::optim::{multi_restart, AdamConfig, OptResult};

/// Finite-sample bias handling for estimates derived from an L-sample
/// covariance.
#[derive(Debug, Clone, Copy)]
pub struct BiasSpec {
    /// Number of time points the covariance was estimated from.
    pub n_samples: usize,
    pub enabled: bool,
}

impl BiasSpec {
    pub fn disabled() -> Self {
        Self {
            n_samples: 0,
            enabled: false,
        }
    }

    pub fn corrected(n_samples: usize) -> Self {
        Self {
            n_samples,
            enabled: true,
        }
    }
}

/// Result of a W/M decomposition.
#[derive(Debug, Clone)]
pub struct WMResult {
    /// I(X;Y) in nats (bias-corrected when requested).
    pub mi_total: f64,
    /// Low-order information in nats.
    pub w: f64,
    /// High-order information in nats, mi_total - w.
    pub m: f64,
    /// m / mi_total with 0/0 -> 0.
    pub m_normalized: f64,
    /// Correction subtracted from both mi_total and w (0 when disabled).
    pub bias_applied: f64,
    /// Optimizer summary for the W minimization.
    pub diagnostics: OptResult,
    /// True when a tiny negative m (rounding) was clamped to zero.
    pub m_clamped: bool,
    /// Shrinkage applied because the input sat on the feasible-set border
    /// (None for healthy inputs).
    pub jitter: Option<f64>,
}

impl WMResult {
    /// w / mi_total with the same 0/0 -> 0 convention as `m_normalized`.
    pub fn w_normalized(&self) -> f64 {
        if self.mi_total.abs() < 1e-12 {
            0.0
        } else {
            self.w / self.mi_total
        }
    }

    /// Checks the structural bounds against the reference system; returns
    /// human-readable violations (empty when clean). Only meaningful for
    /// uncorrected runs: the bias subtraction can push estimates of
    /// near-independent systems slightly negative.
    pub fn validate(&self, reference: &GaussianJoint) -> Vec<String> {
        let mut out = Vec::new();
        if (self.mi_total - self.w - self.m).abs() >= 1e-9 {
            out.push(format!(
                "decomposition identity violated: {} != {} + {}",
                self.mi_total, self.w, self.m
            ));
        }
        if self.w < -1e-6 {
            out.push(format!("negative w: {}", self.w));
        }
        if self.m < -1e-6 {
            out.push(format!("negative m: {}", self.m));
        }
        let lower = max_pairwise_mi(reference);
        if self.w < lower - 1e-6 {
            out.push(format!(
                "w {} below the max pairwise MI {lower}",
                self.w
            ));
        }
        if self.w > self.mi_total + 1e-6 {
            out.push(format!(
                "w {} above the total MI {}",
                self.w, self.mi_total
            ));
        }
        out
    }
}

/// Expected positive bias of plug-in Gaussian mutual information computed
/// from an L-sample covariance (mean subtracted, L-1 denominator):
/// (1/2)[b(d_x) + b(d_y) - b(d_x + d_y)] with
/// b(d) = sum_{i=1..d} [psi((n - i + 1)/2) + ln(2/n)], n = L - 1.
/// Exact for any underlying covariance, by the Wishart log-determinant
/// expectation applied to each of the three determinants.
pub fn mi_bias(d_x: usize, d_y: usize, l: usize) -> Result<f64> {
    if l <= d_x + d_y + 2 {
        return Err(Error::InsufficientSamples {
            l,
            need: d_x + d_y + 2,
        });
    }
    let n = (l - 1) as f64;
    let b = |d: usize| -> Result<f64> {
        let mut acc = 0.0;
        for i in 1..=d {
            acc += digamma((n - i as f64 + 1.0) / 2.0)? + (2.0 / n).ln();
        }
        Ok(acc)
    };
    Ok(0.5 * (b(d_x)? + b(d_y)? - b(d_x + d_y)?))
}

/// Shrinks a joint's correlation toward the identity: (C + l I)/(1 + l)
/// with the unit diagonal restored exactly.
fn shrink_joint(p: &GaussianJoint, lambda: f64) -> GaussianJoint {
    let n = p.dim();
    let mut m: DMatrix<f64> = p.corr().as_dmatrix() / (1.0 + lambda);
    for i in 0..n {
        m[(i, i)] = 1.0;
    }
    GaussianJoint::new(p.d_x(), p.d_y(), correlation_from_dmatrix_unchecked(m))
        .expect("shrinkage preserves the partition")
}

fn boundary_failure(e: &Error) -> bool {
    matches!(e, Error::BoundaryViolation(_) | Error::BoundaryStuck(_))
}

/// Runs `op` on the joint, walking the jitter ladder 1e-9..1e-6 (shrinking
/// the correlations toward independence) when the input is so close to
/// singular that its own coordinates sit on the feasible-set border.
/// Degenerate inputs that survive the whole ladder are reported as such.
fn with_boundary_ladder<T>(
    p: &GaussianJoint,
    mut op: impl FnMut(&GaussianJoint) -> Result<T>,
) -> Result<(T, Option<f64>)> {
    match op(p) {
        Ok(v) => return Ok((v, None)),
        Err(e) if boundary_failure(&e) => {}
        Err(e) => return Err(e),
    }
    let mut lambda = 1e-9;
    while lambda <= 1e-6 {
        match op(&shrink_joint(p, lambda)) {
            Ok(v) => return Ok((v, Some(lambda))),
            Err(e) if boundary_failure(&e) => lambda *= 10.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateInput(1e-6))
}

/// Estimates W and M for a standardized joint system.
///
/// W is the multi-restart minimum of the convex objective; when bias
/// correction is enabled, the same plug-in MI bias is subtracted from both
/// the total MI and the minimum (both are mutual informations of a
/// d_x + d_y dimensional system estimated from the same samples), leaving
/// M itself unchanged.
pub fn w_info(p: &GaussianJoint, cfg: &AdamConfig, bias: &BiasSpec) -> Result<WMResult> {
    let ((mi_raw, diagnostics), jitter) = with_boundary_ladder(p, |joint| {
        let mi = mutual_information(joint)?;
        let spec = ProblemSpec::new(joint.clone());
        Ok((mi, multi_restart(&spec, cfg)?))
    })?;
    let w_raw = diagnostics.value;

    let correction = if bias.enabled {
        mi_bias(p.d_x(), p.d_y(), bias.n_samples)?
    } else {
        0.0
    };

    let mi_total = mi_raw - correction;
    let w = w_raw - correction;
    let mut m = mi_total - w;
    let mut m_clamped = false;
    if m < 0.0 {
        if m >= -1e-6 {
            m = 0.0;
            m_clamped = true;
        } else {
            return Err(Error::OptimizationFailed(format!(
                "M = {m} is negative beyond tolerance; the W minimization did not descend"
            )));
        }
    }
    let m_normalized = if mi_total.abs() < 1e-12 {
        0.0
    } else {
        m / mi_total
    };

    Ok(WMResult {
        mi_total,
        w,
        m,
        m_normalized,
        bias_applied: correction,
        diagnostics,
        m_clamped,
        jitter,
    })
}

/// Union information with the target treated as a single group: the minimum
/// mutual information over joints that keep every (X_i, Y-group) marginal
/// fixed. For a univariate target this coincides with W.
pub fn union_information_grouped(p: &GaussianJoint, cfg: &AdamConfig) -> Result<f64> {
    let (value, _) = with_boundary_ladder(p, |joint| {
        let spec = GroupedSpec::new(joint.clone())?;
        Ok(multi_restart(&spec, cfg)?.value)
    })?;
    Ok(value)
}

/// Single-target union information; requires d_y == 1.
pub fn union_information(p: &GaussianJoint, cfg: &AdamConfig, bias: &BiasSpec) -> Result<f64> {
    if p.d_y() != 1 {
        return Err(Error::WrongShape(format!(
            "union information takes a single target, got d_y = {}",
            p.d_y()
        )));
    }
    let raw = union_information_grouped(p, cfg)?;
    let correction = if bias.enabled {
        mi_bias(p.d_x(), 1, bias.n_samples)?
    } else {
        0.0
    };
    Ok(raw - correction)
}
