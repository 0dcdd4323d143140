//! Unconstrained parametrization of the feasible set: all Gaussian joints
//! that keep every source-target pairwise marginal of a reference system
//! fixed, coordinatized by a real vector.
//!
//! The joint's Cholesky factor is built in blocks: L_XX is a correlation
//! Cholesky factor (unit-norm rows, positive diagonal), the cross block is
//! forced to L_YX = Sigma_YX (L_XX^T)^-1 so the cross-covariances never
//! move, and each row i of L_YY lives on the half-sphere of radius
//! sqrt(1 - d_i), d = diag(L_YX L_YX^T), which pins the target variances to
//! one. Rows are mapped to angles in (0, pi) hyperspherically and angles to
//! unconstrained reals through pi * logistic(x), so every real vector
//! decodes to a feasible point.
//!
//! The mutual information of a decoded point reduces to
//! (1/2) log det Sigma_YY^Q - sum_i ln (L_YY)_ii: the L_XX log-determinants
//! cancel between the marginal and joint terms. The analytic gradient is a
//! reverse pass through this simplified objective.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss::{correlation_from_dmatrix_unchecked, GaussianJoint};
use crate::linalg::{cholesky_raw, spd_inverse_from_chol, CholFactor};
use crate::optim::Problem;

/// Floor for the squared half-sphere radius 1 - d_i. Below it the point is
/// treated as on the border, where the mutual information diverges.
const RADIUS_SQ_FLOOR: f64 = 1e-12;

/// Unconstrained coordinates of a feasible point,
/// length d_x(d_x-1)/2 + d_y(d_y-1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "non-finite parameter entry {bad}"
            )));
        }
        Ok(Self(theta))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Number of free parameters for a d_x + d_y system.
pub fn param_count(d_x: usize, d_y: usize) -> usize {
    d_x * (d_x - 1) / 2 + d_y * (d_y - 1) / 2
}

/// A decoded point of the feasible set.
#[derive(Debug, Clone)]
pub struct FeasiblePoint {
    /// Correlation Cholesky factor of the source block (d_x x d_x).
    pub l_xx: CholFactor,
    /// Constrained cross factor Sigma_YX (L_XX^T)^-1 (d_y x d_x).
    pub l_yx: DMatrix<f64>,
    /// Half-sphere rows completing the target block (d_y x d_y).
    pub l_yy: CholFactor,
    /// Assembled joint correlation matrix.
    pub sigma_q: crate::gauss::CorrelationMatrix,
    /// d = diag(L_YX L_YX^T); every entry is < 1 at an interior point.
    pub radii_sq: Vec<f64>,
}

/// The reference system whose pairwise marginals carve out the feasible set.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    reference: GaussianJoint,
    sigma_yx: DMatrix<f64>,
}

impl ProblemSpec {
    pub fn new(reference: GaussianJoint) -> Self {
        let sigma_yx = reference.sigma_yx();
        Self {
            reference,
            sigma_yx,
        }
    }

    pub fn reference(&self) -> &GaussianJoint {
        &self.reference
    }

    pub fn sigma_yx(&self) -> &DMatrix<f64> {
        &self.sigma_yx
    }

    pub fn d_x(&self) -> usize {
        self.reference.d_x()
    }

    pub fn d_y(&self) -> usize {
        self.reference.d_y()
    }

    pub fn param_count(&self) -> usize {
        param_count(self.d_x(), self.d_y())
    }
}

/// Feasible set for union information with the whole target treated as one
/// group: each (X_i, Y-group) marginal is fixed, so both the cross block and
/// the full target block are pinned and only the source correlations move.
/// L_YY is then determined as chol(Sigma_YY - L_YX L_YX^T).
#[derive(Debug, Clone)]
pub struct GroupedSpec {
    reference: GaussianJoint,
    sigma_yx: DMatrix<f64>,
    sigma_yy: DMatrix<f64>,
    half_logdet_yy: f64,
}

impl GroupedSpec {
    pub fn new(reference: GaussianJoint) -> Result<Self> {
        let sigma_yx = reference.sigma_yx();
        let sigma_yy = reference.sigma_yy();
        let half_logdet_yy = 0.5 * cholesky_raw(&sigma_yy)?.log_det();
        Ok(Self {
            reference,
            sigma_yx,
            sigma_yy,
            half_logdet_yy,
        })
    }

    pub fn reference(&self) -> &GaussianJoint {
        &self.reference
    }

    pub fn d_x(&self) -> usize {
        self.reference.d_x()
    }

    pub fn param_count(&self) -> usize {
        let d_x = self.d_x();
        d_x * (d_x - 1) / 2
    }
}

// ---------------------------------------------------------------------------
// Angle machinery

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(q: f64) -> f64 {
    let q = q.clamp(1e-300, 1.0 - 1e-16);
    q.ln() - (1.0 - q).ln()
}

/// Unit vector on the half-sphere from k angles in (0, pi): entries
/// (cos a_1, sin a_1 cos a_2, ..., prod sin a_t). Also returns the prefix
/// sine products used by the reverse pass.
fn spherical_unit(angles: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = angles.len();
    let mut out = vec![0.0; k + 1];
    let mut pre = vec![0.0; k + 1];
    let mut prod = 1.0;
    for (t, &a) in angles.iter().enumerate() {
        pre[t] = prod;
        let (s, c) = a.sin_cos();
        out[t] = prod * c;
        prod *= s;
    }
    pre[k] = prod;
    out[k] = prod;
    (out, pre)
}

/// Reverse pass of `spherical_unit`: accumulates d<out, g_out>/d angle_m by
/// walking the sine product with the m-th factor replaced by its derivative.
fn spherical_backward(angles: &[f64], pre: &[f64], g_out: &[f64]) -> Vec<f64> {
    let k = angles.len();
    let mut g = vec![0.0; k];
    for m in 0..k {
        let (sm, cm) = angles[m].sin_cos();
        let mut acc = -g_out[m] * pre[m] * sm;
        let mut hole = pre[m] * cm;
        for j in (m + 1)..k {
            let (sj, cj) = angles[j].sin_cos();
            acc += g_out[j] * hole * cj;
            hole *= sj;
        }
        acc += g_out[k] * hole;
        g[m] = acc;
    }
    g
}

/// Recovers the angles of a half-sphere unit vector; inverse of
/// `spherical_unit` for vectors whose last entry is positive.
fn spherical_angles(unit: &[f64]) -> Vec<f64> {
    let k = unit.len() - 1;
    let mut angles = vec![0.0; k];
    let mut prod = 1.0f64;
    for (t, a) in angles.iter_mut().enumerate() {
        if prod <= 1e-300 {
            *a = PI / 2.0;
            continue;
        }
        let c = (unit[t] / prod).clamp(-1.0, 1.0);
        *a = c.acos();
        prod *= a.sin();
    }
    angles
}

fn angle_offset(row: usize) -> usize {
    row * row.saturating_sub(1) / 2
}

// ---------------------------------------------------------------------------
// Forward pass shared by both feasible-set flavors

struct XBlock {
    /// Flattened angles: row i of L_XX (i >= 1) owns i entries at offset
    /// i(i-1)/2.
    angles: Vec<f64>,
    /// logistic(theta) per parameter, kept for the chain rule.
    sig: Vec<f64>,
    /// Prefix sine products per row.
    pres: Vec<Vec<f64>>,
    l_xx: DMatrix<f64>,
    l_yx: DMatrix<f64>,
}

fn forward_x(sigma_yx: &DMatrix<f64>, d_x: usize, theta_x: &[f64]) -> XBlock {
    let d_y = sigma_yx.nrows();
    let mut l_xx = DMatrix::zeros(d_x, d_x);
    l_xx[(0, 0)] = 1.0;
    let mut angles = vec![0.0; theta_x.len()];
    let mut sig = vec![0.0; theta_x.len()];
    let mut pres = Vec::with_capacity(d_x);
    pres.push(vec![1.0]);
    for i in 1..d_x {
        let off = angle_offset(i);
        for t in 0..i {
            let s = logistic(theta_x[off + t]);
            sig[off + t] = s;
            angles[off + t] = PI * s;
        }
        let (row, pre) = spherical_unit(&angles[off..off + i]);
        for (j, &e) in row.iter().enumerate() {
            l_xx[(i, j)] = e;
        }
        pres.push(pre);
    }

    // L_YX row r solves L_XX w = Sigma_YX[r, :]^T by forward substitution.
    let mut l_yx = DMatrix::zeros(d_y, d_x);
    for r in 0..d_y {
        for k in 0..d_x {
            let mut acc = sigma_yx[(r, k)];
            for l in 0..k {
                acc -= l_xx[(k, l)] * l_yx[(r, l)];
            }
            l_yx[(r, k)] = acc / l_xx[(k, k)];
        }
    }

    XBlock {
        angles,
        sig,
        pres,
        l_xx,
        l_yx,
    }
}

/// Pulls a gradient on L_YX back to the x-parameters:
/// G_LXX = -L_XX^-T G_LYX^T L_YX, then spherical rows, then the logistic.
fn backward_x(xb: &XBlock, g_lyx: &DMatrix<f64>) -> Vec<f64> {
    let d_x = xb.l_xx.nrows();
    let mut g_theta = vec![0.0; xb.angles.len()];
    if d_x < 2 {
        return g_theta;
    }
    let m = g_lyx.transpose() * &xb.l_yx;
    // Solve L_XX^T Z = M column by column (back substitution).
    let mut z = DMatrix::zeros(d_x, d_x);
    for c in 0..d_x {
        for k in (0..d_x).rev() {
            let mut acc = m[(k, c)];
            for l in (k + 1)..d_x {
                acc -= xb.l_xx[(l, k)] * z[(l, c)];
            }
            z[(k, c)] = acc / xb.l_xx[(k, k)];
        }
    }
    for i in 1..d_x {
        let off = angle_offset(i);
        let g_row: Vec<f64> = (0..=i).map(|j| -z[(i, j)]).collect();
        let g_angles = spherical_backward(&xb.angles[off..off + i], &xb.pres[i], &g_row);
        for t in 0..i {
            let s = xb.sig[off + t];
            g_theta[off + t] = g_angles[t] * PI * s * (1.0 - s);
        }
    }
    g_theta
}

/// Cholesky factor of L_YX L_YX^T + L_YY L_YY^T without forming the Gram
/// matrix: Householder QR of the stacked [L_YX | L_YY]^T, transposed and
/// sign-fixed. Near the border of the feasible set the smallest pivot of
/// Sigma_YY underflows the rounding error of the formed product, and an
/// optimizer will happily dive into that noise; the QR route keeps the
/// pivot accurate relative to the factor entries instead.
fn gram_chol(l_yx: &DMatrix<f64>, l_yy: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d_y = l_yx.nrows();
    let d_x = l_yx.ncols();
    let rows = d_x + d_y;
    let mut m = DMatrix::zeros(rows, d_y);
    for i in 0..d_y {
        for j in 0..d_x {
            m[(j, i)] = l_yx[(i, j)];
        }
        for j in 0..d_y {
            m[(d_x + j, i)] = l_yy[(i, j)];
        }
    }
    for k in 0..d_y {
        let mut nrm = 0.0;
        for r in k..rows {
            nrm += m[(r, k)] * m[(r, k)];
        }
        let nrm = nrm.sqrt();
        if nrm < 1e-150 {
            return Err(Error::BoundaryViolation(1.0));
        }
        let alpha = if m[(k, k)] >= 0.0 { -nrm } else { nrm };
        let mut v = vec![0.0; rows - k];
        for r in k..rows {
            v[r - k] = m[(r, k)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in (k + 1)..d_y {
                let mut dot = 0.0;
                for r in k..rows {
                    dot += v[r - k] * m[(r, c)];
                }
                let f = 2.0 * dot / vnorm2;
                for r in k..rows {
                    m[(r, c)] -= f * v[r - k];
                }
            }
        }
        m[(k, k)] = alpha;
        for r in (k + 1)..rows {
            m[(r, k)] = 0.0;
        }
    }
    let mut l = DMatrix::zeros(d_y, d_y);
    for i in 0..d_y {
        let s = if m[(i, i)] < 0.0 { -1.0 } else { 1.0 };
        for j in i..d_y {
            l[(j, i)] = s * m[(i, j)];
        }
    }
    Ok(l)
}

fn radii_from_lyx(l_yx: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let d_y = l_yx.nrows();
    let mut d = vec![0.0; d_y];
    let mut r = vec![0.0; d_y];
    for i in 0..d_y {
        let mut acc = 0.0;
        for j in 0..l_yx.ncols() {
            acc += l_yx[(i, j)] * l_yx[(i, j)];
        }
        if 1.0 - acc < RADIUS_SQ_FLOOR {
            return Err(Error::BoundaryViolation(acc));
        }
        d[i] = acc;
        r[i] = (1.0 - acc).sqrt();
    }
    Ok((d, r))
}

struct WForward {
    xb: XBlock,
    d: Vec<f64>,
    r: Vec<f64>,
    angles_y: Vec<f64>,
    sig_y: Vec<f64>,
    pres_y: Vec<Vec<f64>>,
    units_y: Vec<Vec<f64>>,
    l_yy: DMatrix<f64>,
    sigma_yy: DMatrix<f64>,
    chol_yy: DMatrix<f64>,
    value: f64,
}

fn forward_w(spec: &ProblemSpec, theta: &[f64]) -> Result<WForward> {
    let d_x = spec.d_x();
    let d_y = spec.d_y();
    let t_x = d_x * (d_x - 1) / 2;
    let xb = forward_x(&spec.sigma_yx, d_x, &theta[..t_x]);
    let (d, r) = radii_from_lyx(&xb.l_yx)?;

    let theta_y = &theta[t_x..];
    let mut angles_y = vec![0.0; theta_y.len()];
    let mut sig_y = vec![0.0; theta_y.len()];
    let mut pres_y = Vec::with_capacity(d_y);
    let mut units_y = Vec::with_capacity(d_y);
    let mut l_yy = DMatrix::zeros(d_y, d_y);
    for i in 0..d_y {
        let off = angle_offset(i);
        for t in 0..i {
            let s = logistic(theta_y[off + t]);
            sig_y[off + t] = s;
            angles_y[off + t] = PI * s;
        }
        let (unit, pre) = spherical_unit(&angles_y[off..off + i]);
        for (j, &u) in unit.iter().enumerate() {
            l_yy[(i, j)] = r[i] * u;
        }
        pres_y.push(pre);
        units_y.push(unit);
    }

    let mut sigma_yy = &xb.l_yx * xb.l_yx.transpose() + &l_yy * l_yy.transpose();
    for i in 0..d_y {
        for j in 0..i {
            let avg = 0.5 * (sigma_yy[(i, j)] + sigma_yy[(j, i)]);
            sigma_yy[(i, j)] = avg;
            sigma_yy[(j, i)] = avg;
        }
    }
    let chol_yy = gram_chol(&xb.l_yx, &l_yy)?;

    let mut half_logdet = 0.0;
    let mut sum_ln_diag = 0.0;
    for i in 0..d_y {
        half_logdet += chol_yy[(i, i)].ln();
        sum_ln_diag += l_yy[(i, i)].ln();
    }
    let value = half_logdet - sum_ln_diag;

    Ok(WForward {
        xb,
        d,
        r,
        angles_y,
        sig_y,
        pres_y,
        units_y,
        l_yy,
        sigma_yy,
        chol_yy,
        value,
    })
}

fn backward_w(spec: &ProblemSpec, fwd: &WForward) -> Vec<f64> {
    let d_x = spec.d_x();
    let d_y = spec.d_y();
    let t_x = d_x * (d_x - 1) / 2;

    let ginv = spd_inverse_from_chol(&fwd.chol_yy);

    // d obj / d L_YY = Sigma_YY^-1 L_YY - diag(1 / l_ii);
    // d obj / d L_YX = Sigma_YY^-1 L_YX (plus the radius path below).
    let mut g_lyy = &ginv * &fwd.l_yy;
    for i in 0..d_y {
        g_lyy[(i, i)] -= 1.0 / fwd.l_yy[(i, i)];
    }
    let mut g_lyx = &ginv * &fwd.xb.l_yx;

    let mut g_theta_y = vec![0.0; fwd.angles_y.len()];
    for i in 0..d_y {
        let off = angle_offset(i);
        let unit = &fwd.units_y[i];
        let mut g_r = 0.0;
        let mut g_unit = vec![0.0; i + 1];
        for j in 0..=i {
            g_r += g_lyy[(i, j)] * unit[j];
            g_unit[j] = g_lyy[(i, j)] * fwd.r[i];
        }
        if i > 0 {
            let g_angles =
                spherical_backward(&fwd.angles_y[off..off + i], &fwd.pres_y[i], &g_unit);
            for t in 0..i {
                let s = fwd.sig_y[off + t];
                g_theta_y[off + t] = g_angles[t] * PI * s * (1.0 - s);
            }
        }
        // r_i = sqrt(1 - d_i), d_i = sum_j L_YX[i,j]^2.
        let g_d = g_r * (-0.5 / fwd.r[i]);
        for j in 0..d_x {
            g_lyx[(i, j)] += 2.0 * fwd.xb.l_yx[(i, j)] * g_d;
        }
    }

    let g_theta_x = backward_x(&fwd.xb, &g_lyx);

    let mut g = vec![0.0; t_x + fwd.angles_y.len()];
    g[..t_x].copy_from_slice(&g_theta_x);
    g[t_x..].copy_from_slice(&g_theta_y);
    g
}

// ---------------------------------------------------------------------------
// Public operations

fn check_len(expect: usize, got: usize) -> Result<()> {
    if expect != got {
        return Err(Error::InvalidParam(format!(
            "parameter vector has length {got}, expected {expect}"
        )));
    }
    Ok(())
}

/// Decodes an unconstrained vector into a feasible point.
pub fn decode(spec: &ProblemSpec, theta: &ParamVector) -> Result<FeasiblePoint> {
    check_len(spec.param_count(), theta.len())?;
    let fwd = forward_w(spec, theta.as_slice())?;
    let d_x = spec.d_x();
    let d_y = spec.d_y();
    let n = d_x + d_y;

    let mut sigma_q = DMatrix::zeros(n, n);
    let sigma_xx = &fwd.xb.l_xx * fwd.xb.l_xx.transpose();
    for i in 0..d_x {
        for j in 0..d_x {
            sigma_q[(i, j)] = sigma_xx[(i, j)];
        }
    }
    // The cross block is copied from the reference, not recomputed: the
    // constraint holds bit-for-bit.
    for i in 0..d_y {
        for j in 0..d_x {
            sigma_q[(d_x + i, j)] = spec.sigma_yx[(i, j)];
            sigma_q[(j, d_x + i)] = spec.sigma_yx[(i, j)];
        }
    }
    for i in 0..d_y {
        for j in 0..d_y {
            sigma_q[(d_x + i, d_x + j)] = fwd.sigma_yy[(i, j)];
        }
    }
    for i in 0..n {
        sigma_q[(i, i)] = 1.0;
    }

    Ok(FeasiblePoint {
        l_xx: CholFactor::from_lower_unchecked(fwd.xb.l_xx.clone()),
        l_yx: fwd.xb.l_yx.clone(),
        l_yy: CholFactor::from_lower_unchecked(fwd.l_yy.clone()),
        sigma_q: correlation_from_dmatrix_unchecked(sigma_q),
        radii_sq: fwd.d.clone(),
    })
}

/// Finds the vector that decodes to the reference system itself; the
/// reference is always a member of its own feasible set.
pub fn encode(spec: &ProblemSpec) -> Result<ParamVector> {
    let d_x = spec.d_x();
    let d_y = spec.d_y();
    let l = cholesky_raw(spec.reference.corr().as_dmatrix())?;
    let l = l.as_dmatrix();

    let mut theta = Vec::with_capacity(param_count(d_x, d_y));
    for i in 1..d_x {
        let row: Vec<f64> = (0..=i).map(|j| l[(i, j)]).collect();
        push_row_angles(&row, &mut theta);
    }
    for i in 1..d_y {
        let row: Vec<f64> = (0..=i).map(|j| l[(d_x + i, d_x + j)]).collect();
        push_row_angles(&row, &mut theta);
    }
    ParamVector::new(theta)
}

fn push_row_angles(row: &[f64], theta: &mut Vec<f64>) {
    let norm = row.iter().map(|e| e * e).sum::<f64>().sqrt();
    let unit: Vec<f64> = row.iter().map(|e| e / norm).collect();
    for a in spherical_angles(&unit) {
        theta.push(logit(a / PI));
    }
}

/// Mutual information of a feasible point, in nats, via the simplified
/// objective (1/2) log det Sigma_YY^Q - sum_i ln (L_YY)_ii.
pub fn objective(fp: &FeasiblePoint) -> f64 {
    let d_y = fp.l_yy.dim();
    let chol = gram_chol(&fp.l_yx, fp.l_yy.as_dmatrix())
        .expect("feasible point has PD target block");
    let mut value = 0.0;
    for i in 0..d_y {
        value += chol[(i, i)].ln() - fp.l_yy.get(i, i).ln();
    }
    value
}

/// Analytic gradient of `objective`(decode(theta)) by reverse accumulation.
pub fn gradient(spec: &ProblemSpec, theta: &ParamVector) -> Result<Vec<f64>> {
    check_len(spec.param_count(), theta.len())?;
    let fwd = forward_w(spec, theta.as_slice())?;
    Ok(backward_w(spec, &fwd))
}

impl Problem for ProblemSpec {
    fn param_count(&self) -> usize {
        ProblemSpec::param_count(self)
    }

    fn initial_point(&self) -> Result<Vec<f64>> {
        Ok(encode(self)?.into_vec())
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        check_len(self.param_count(), theta.len())?;
        Ok(forward_w(self, theta)?.value)
    }

    fn value_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len(self.param_count(), theta.len())?;
        let fwd = forward_w(self, theta)?;
        Ok((fwd.value, backward_w(self, &fwd)))
    }
}

// ---------------------------------------------------------------------------
// Grouped-target flavor

struct GroupedForward {
    xb: XBlock,
    resid_chol: DMatrix<f64>,
    value: f64,
}

fn forward_grouped(spec: &GroupedSpec, theta: &[f64]) -> Result<GroupedForward> {
    let d_x = spec.d_x();
    let xb = forward_x(&spec.sigma_yx, d_x, theta);
    let d_y = spec.sigma_yy.nrows();
    let mut resid = &spec.sigma_yy - &xb.l_yx * xb.l_yx.transpose();
    for i in 0..d_y {
        for j in 0..i {
            let avg = 0.5 * (resid[(i, j)] + resid[(j, i)]);
            resid[(i, j)] = avg;
            resid[(j, i)] = avg;
        }
    }
    let resid_chol = match cholesky_raw(&resid) {
        Ok(c) => c.as_dmatrix().clone(),
        Err(Error::NotPositiveDefinite { pivot, .. }) => {
            return Err(Error::BoundaryViolation(1.0 - pivot))
        }
        Err(e) => return Err(e),
    };
    let mut half_logdet_resid = 0.0;
    for i in 0..d_y {
        half_logdet_resid += resid_chol[(i, i)].ln();
    }
    Ok(GroupedForward {
        xb,
        resid_chol,
        value: spec.half_logdet_yy - half_logdet_resid,
    })
}

impl Problem for GroupedSpec {
    fn param_count(&self) -> usize {
        GroupedSpec::param_count(self)
    }

    fn initial_point(&self) -> Result<Vec<f64>> {
        // Same inversion as `encode`, restricted to the source block.
        let d_x = self.d_x();
        let l = cholesky_raw(self.reference.corr().as_dmatrix())?;
        let l = l.as_dmatrix();
        let mut theta = Vec::with_capacity(self.param_count());
        for i in 1..d_x {
            let row: Vec<f64> = (0..=i).map(|j| l[(i, j)]).collect();
            push_row_angles(&row, &mut theta);
        }
        Ok(theta)
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        check_len(self.param_count(), theta.len())?;
        Ok(forward_grouped(self, theta)?.value)
    }

    fn value_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len(self.param_count(), theta.len())?;
        let fwd = forward_grouped(self, theta)?;
        // obj = const - (1/2) log det(Sigma_YY - L_YX L_YX^T), so the
        // gradient on L_YX is resid^-1 L_YX.
        let rinv = spd_inverse_from_chol(&fwd.resid_chol);
        let g_lyx = &rinv * &fwd.xb.l_yx;
        Ok((fwd.value, backward_x(&fwd.xb, &g_lyx)))
    }
}
