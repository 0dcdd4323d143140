//! Jointly Gaussian source/target systems in standardized (correlation) form,
//! and Gaussian mutual information.
//!
//! All information quantities in this crate are in nats; conversion to bits
//! happens only at the reporting boundary. Means are discarded at ingestion:
//! mutual information is invariant under coordinate-wise affine maps, so the
//! correlation matrix carries everything we need.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_raw, SymMatrix};

/// Symmetric positive-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    m: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal (within 1e-12) and positive
    /// definiteness. The diagonal is pinned to exactly 1.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let sym = SymMatrix::new(m)?;
        let mut m = sym.into_dmatrix();
        for i in 0..m.nrows() {
            if (m[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::WrongShape(format!(
                    "diagonal entry {i} is {} instead of 1",
                    m[(i, i)]
                )));
            }
            m[(i, i)] = 1.0;
        }
        cholesky_raw(&m)?;
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// A correlation matrix plus a source/target partition, ordered sources
/// first: block (0..d_x) holds the sources, block (d_x..d_x+d_y) the targets.
#[derive(Debug, Clone)]
pub struct GaussianJoint {
    d_x: usize,
    d_y: usize,
    corr: CorrelationMatrix,
}

impl GaussianJoint {
    pub fn new(d_x: usize, d_y: usize, corr: CorrelationMatrix) -> Result<Self> {
        if d_x < 1 || d_y < 1 {
            return Err(Error::WrongShape(format!(
                "need d_x >= 1 and d_y >= 1, got {d_x}+{d_y}"
            )));
        }
        if corr.dim() != d_x + d_y {
            return Err(Error::WrongShape(format!(
                "correlation dim {} does not match partition {d_x}+{d_y}",
                corr.dim()
            )));
        }
        Ok(Self { d_x, d_y, corr })
    }

    /// Standardizes a raw covariance and attaches the partition.
    pub fn from_covariance(d_x: usize, d_y: usize, cov: &SymMatrix) -> Result<Self> {
        Self::new(d_x, d_y, standardize(cov)?)
    }

    /// Standardizes with the jitter ladder for near-singular covariances;
    /// the second element reports the shrinkage that was applied, if any.
    pub fn from_covariance_regularized(
        d_x: usize,
        d_y: usize,
        cov: &SymMatrix,
    ) -> Result<(Self, Option<f64>)> {
        let (corr, jitter) = standardize_regularized(cov)?;
        Ok((Self::new(d_x, d_y, corr)?, jitter))
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_y(&self) -> usize {
        self.d_y
    }

    pub fn dim(&self) -> usize {
        self.d_x + self.d_y
    }

    pub fn corr(&self) -> &CorrelationMatrix {
        &self.corr
    }

    /// Source-source correlation block.
    pub fn sigma_xx(&self) -> DMatrix<f64> {
        self.corr.as_dmatrix().view((0, 0), (self.d_x, self.d_x)).into()
    }

    /// Target-target correlation block.
    pub fn sigma_yy(&self) -> DMatrix<f64> {
        self.corr
            .as_dmatrix()
            .view((self.d_x, self.d_x), (self.d_y, self.d_y))
            .into()
    }

    /// Target-source cross block (d_y x d_x).
    pub fn sigma_yx(&self) -> DMatrix<f64> {
        self.corr
            .as_dmatrix()
            .view((self.d_x, 0), (self.d_y, self.d_x))
            .into()
    }

    /// Swaps the roles of sources and targets.
    pub fn swapped(&self) -> GaussianJoint {
        let n = self.dim();
        let d_x = self.d_x;
        let perm: Vec<usize> = (d_x..n).chain(0..d_x).collect();
        let m = DMatrix::from_fn(n, n, |i, j| self.corr.get(perm[i], perm[j]));
        GaussianJoint {
            d_x: self.d_y,
            d_y: self.d_x,
            corr: CorrelationMatrix { m },
        }
    }

    /// Restricts the joint to a subset of source and target indices.
    pub fn select(&self, sources: &[usize], targets: &[usize]) -> Result<GaussianJoint> {
        for &i in sources {
            if i >= self.d_x {
                return Err(Error::IndexOutOfRange {
                    what: "source index",
                    got: i,
                    limit: self.d_x,
                });
            }
        }
        for &j in targets {
            if j >= self.d_y {
                return Err(Error::IndexOutOfRange {
                    what: "target index",
                    got: j,
                    limit: self.d_y,
                });
            }
        }
        if sources.is_empty() || targets.is_empty() {
            return Err(Error::WrongShape("empty source or target selection".into()));
        }
        let idx: Vec<usize> = sources
            .iter()
            .copied()
            .chain(targets.iter().map(|&j| self.d_x + j))
            .collect();
        let n = idx.len();
        let m = DMatrix::from_fn(n, n, |i, j| self.corr.get(idx[i], idx[j]));
        GaussianJoint::new(sources.len(), targets.len(), CorrelationMatrix::new(m)?)
    }
}

fn rescale_to_unit_diagonal(s: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = s.dim();
    let mut scale = vec![0.0; n];
    for (i, sc) in scale.iter_mut().enumerate() {
        let v = s.get(i, i);
        if v <= 1e-300 {
            return Err(Error::ZeroVariance(i));
        }
        *sc = 1.0 / v.sqrt();
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = if i == j {
                1.0
            } else {
                s.get(i, j) * scale[i] * scale[j]
            };
        }
    }
    Ok(m)
}

/// Rescales a positive-definite matrix to unit diagonal:
/// D^(-1/2) S D^(-1/2) with D = diag(S). The diagonal is set exactly.
pub fn standardize(s: &SymMatrix) -> Result<CorrelationMatrix> {
    let m = rescale_to_unit_diagonal(s)?;
    cholesky_raw(&m)?;
    Ok(CorrelationMatrix { m })
}

/// Like `standardize`, but a numerically singular correlation is shrunk
/// toward the identity by (C + lambda I)/(1 + lambda) with lambda walking
/// the jitter ladder 1e-9, 1e-8, ..., 1e-6. Returns the jitter that was
/// needed (if any) so callers can surface a warning instead of failing
/// silently on near-singular inputs.
pub fn standardize_regularized(s: &SymMatrix) -> Result<(CorrelationMatrix, Option<f64>)> {
    let m = rescale_to_unit_diagonal(s)?;
    if cholesky_raw(&m).is_ok() {
        return Ok((CorrelationMatrix { m }, None));
    }
    let n = m.nrows();
    let mut lambda = 1e-9;
    while lambda <= 1e-6 {
        let mut shrunk = &m / (1.0 + lambda);
        for i in 0..n {
            shrunk[(i, i)] = 1.0;
        }
        if cholesky_raw(&shrunk).is_ok() {
            return Ok((CorrelationMatrix { m: shrunk }, Some(lambda)));
        }
        lambda *= 10.0;
    }
    Err(Error::DegenerateInput(1e-6))
}

pub(crate) fn correlation_from_dmatrix_unchecked(m: DMatrix<f64>) -> CorrelationMatrix {
    CorrelationMatrix { m }
}

/// Mutual information I(X;Y) in nats between the source and target blocks:
/// (1/2) [log det Sigma_XX + log det Sigma_YY - log det Sigma].
pub fn mutual_information(g: &GaussianJoint) -> Result<f64> {
    let full = cholesky_raw(g.corr.as_dmatrix())?;
    let lxx = cholesky_raw(&g.sigma_xx())?;
    let lyy = cholesky_raw(&g.sigma_yy())?;
    Ok(0.5 * (lxx.log_det() + lyy.log_det() - full.log_det()))
}

/// The 2x2 pairwise correlation between source i and target j.
pub fn pair_marginal(g: &GaussianJoint, i: usize, j: usize) -> Result<CorrelationMatrix> {
    if i >= g.d_x {
        return Err(Error::IndexOutOfRange {
            what: "source index",
            got: i,
            limit: g.d_x,
        });
    }
    if j >= g.d_y {
        return Err(Error::IndexOutOfRange {
            what: "target index",
            got: j,
            limit: g.d_y,
        });
    }
    let rho = g.corr.get(i, g.d_x + j);
    let m = DMatrix::from_fn(2, 2, |a, b| if a == b { 1.0 } else { rho });
    Ok(CorrelationMatrix { m })
}

/// Largest mutual information over all (source, target) pairs.
pub fn max_pairwise_mi(g: &GaussianJoint) -> f64 {
    let mut best = 0.0f64;
    for i in 0..g.d_x {
        for j in 0..g.d_y {
            let rho = g.corr.get(i, g.d_x + j);
            let mi = -0.5 * (1.0 - rho * rho).ln();
            best = best.max(mi);
        }
    }
    best
}
