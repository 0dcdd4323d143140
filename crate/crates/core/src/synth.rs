//! Synthetic systems: toy gates with exact covariances, VAR(1) models with
//! their exact stationary joints, Wilson-Cowan neural-mass simulation, and
//! Wishart correlation sampling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gauss::{mutual_information, standardize, CorrelationMatrix, GaussianJoint};
use crate::linalg::{cholesky, solve_lyapunov, spectral_radius, SymMatrix};

/// First-order vector autoregression Z_{t+1} = A Z_t + eps, eps ~ N(0, V).
#[derive(Debug, Clone)]
pub struct VarModel {
    pub a: DMatrix<f64>,
    pub v: SymMatrix,
}

impl VarModel {
    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }
}

/// Multichannel time series, row-major over time.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    t_len: usize,
    n_ch: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t_len: usize, n_ch: usize, values: Vec<f64>) -> Result<Self> {
        if t_len < 2 || n_ch < 1 {
            return Err(Error::WrongShape(format!(
                "time series needs t_len >= 2 and n_ch >= 1, got {t_len}x{n_ch}"
            )));
        }
        if values.len() != t_len * n_ch {
            return Err(Error::WrongShape(format!(
                "expected {t_len}x{n_ch} = {} values, got {}",
                t_len * n_ch,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite sample {bad}")));
        }
        Ok(Self {
            t_len,
            n_ch,
            values,
        })
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n_ch(&self) -> usize {
        self.n_ch
    }

    pub fn get(&self, t: usize, ch: usize) -> f64 {
        self.values[t * self.n_ch + ch]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_ch..(t + 1) * self.n_ch]
    }

    pub fn column(&self, ch: usize) -> Vec<f64> {
        (0..self.t_len).map(|t| self.get(t, ch)).collect()
    }
}

fn compound_noise(c: f64, n: usize) -> Result<SymMatrix> {
    if !(-1.0..1.0).contains(&c) {
        return Err(Error::InvalidParam(format!(
            "noise correlation must lie in (-1, 1), got {c}"
        )));
    }
    let v = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { c });
    let v = SymMatrix::new(v)?;
    // Compound symmetry is only PD for c > -1/(n-1).
    cholesky(&v).map_err(|_| {
        Error::InvalidParam(format!(
            "noise correlation {c} makes the {n}-dim noise covariance singular"
        ))
    })?;
    Ok(v)
}

/// Uniformly coupled VAR: A = (a/n) * ones(n, n), V with unit diagonal and
/// off-diagonal c. The a/n scaling keeps the spectral radius at a.
pub fn uniform_var(a: f64, c: f64, n: usize) -> Result<VarModel> {
    if n < 1 {
        return Err(Error::InvalidParam("need n >= 1".into()));
    }
    if !(-1.0..1.0).contains(&a) {
        return Err(Error::InvalidParam(format!(
            "coupling must lie in (-1, 1), got {a}"
        )));
    }
    Ok(VarModel {
        a: DMatrix::from_element(n, n, a / n as f64),
        v: compound_noise(c, n)?,
    })
}

/// Two-community VAR: A = [[A, B], [B, A]] with all-a and all-b blocks of
/// size `block`, noise as in `uniform_var`. Stationarity is not enforced
/// here; rescale or let `var_joint` reject unstable systems.
pub fn modular_var(a: f64, b: f64, c: f64, block: usize) -> Result<VarModel> {
    if block < 1 {
        return Err(Error::InvalidParam("need block >= 1".into()));
    }
    for (name, p) in [("a", a), ("b", b)] {
        if !(-1.0..1.0).contains(&p) {
            return Err(Error::InvalidParam(format!(
                "coupling {name} must lie in (-1, 1), got {p}"
            )));
        }
    }
    let n = 2 * block;
    let m = DMatrix::from_fn(n, n, |i, j| {
        if (i < block) == (j < block) {
            a
        } else {
            b
        }
    });
    Ok(VarModel {
        a: m,
        v: compound_noise(c, n)?,
    })
}

/// Exact stationary joint of (Z_t, Z_{t+1}): the lag-0 covariance from the
/// Lyapunov equation and the lag-1 block A Sigma_0, standardized.
pub fn var_joint(m: &VarModel) -> Result<GaussianJoint> {
    let n = m.dim();
    let s0 = solve_lyapunov(&m.a, &m.v)?;
    let s1 = &m.a * s0.as_dmatrix();
    let mut joint = DMatrix::zeros(2 * n, 2 * n);
    joint.view_mut((0, 0), (n, n)).copy_from(s0.as_dmatrix());
    joint.view_mut((n, n), (n, n)).copy_from(s0.as_dmatrix());
    joint.view_mut((n, 0), (n, n)).copy_from(&s1);
    joint.view_mut((0, n), (n, n)).copy_from(&s1.transpose());
    GaussianJoint::from_covariance(n, n, &SymMatrix::new(joint)?)
}

/// Rescales the coefficient matrix so the stationary joint hits a target
/// mutual information, by bisection on the scale.
pub fn rescale_to_target_mi(m: &VarModel, target_mi: f64) -> Result<VarModel> {
    if target_mi.is_nan() || target_mi <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "target MI must be positive, got {target_mi}"
        )));
    }
    let rho = m.spectral_radius();
    if rho <= 0.0 {
        return Err(Error::InvalidParam(
            "cannot rescale a zero coefficient matrix".into(),
        ));
    }
    let mi_at = |s: f64| -> Result<f64> {
        let scaled = VarModel {
            a: &m.a * s,
            v: m.v.clone(),
        };
        mutual_information(&var_joint(&scaled)?)
    };

    let mut lo = 1e-9;
    let mut hi = 0.999 / rho;
    let mi_lo = mi_at(lo)?;
    let mi_hi = mi_at(hi)?;
    if !(mi_lo < target_mi && target_mi < mi_hi) {
        return Err(Error::TargetUnreachable {
            target: target_mi,
            max: mi_hi,
        });
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let mi = mi_at(mid)?;
        if (mi - target_mi).abs() < 1e-10 {
            break;
        }
        if mi < target_mi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scaled = VarModel {
        a: &m.a * mid,
        v: m.v.clone(),
    };
    let achieved = mi_at(mid)?;
    if (achieved - target_mi).abs() >= 1e-10 {
        return Err(Error::TargetUnreachable {
            target: target_mi,
            max: achieved,
        });
    }
    Ok(scaled)
}

/// Simulates the VAR to a finite series (after an initial burn-in from the
/// zero state).
pub fn var_simulate(m: &VarModel, steps: usize, burn_in: usize, seed: u64) -> Result<TimeSeries> {
    let rho = m.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let n = m.dim();
    let chol_v = cholesky(&m.v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut eps = vec![0.0f64; n];
    let mut out = Vec::with_capacity(steps * n);
    for t in 0..burn_in + steps {
        for e in eps.iter_mut() {
            *e = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        }
        chol_v_mul(&chol_v, &mut eps);
        for i in 0..n {
            let mut acc = eps[i];
            for (j, &zj) in z.iter().enumerate() {
                acc += m.a[(i, j)] * zj;
            }
            next[i] = acc;
        }
        std::mem::swap(&mut z, &mut next);
        if t >= burn_in {
            out.extend_from_slice(&z);
        }
    }
    TimeSeries::new(steps, n, out)
}

fn chol_v_mul(l: &crate::linalg::CholFactor, v: &mut [f64]) {
    let n = l.dim();
    for i in (0..n).rev() {
        let mut acc = 0.0;
        for (j, &vj) in v.iter().enumerate().take(i + 1) {
            acc += l.get(i, j) * vj;
        }
        v[i] = acc;
    }
}

/// Draws n i.i.d. samples from the zero-mean Gaussian with the given
/// correlation, as a time series (rows are samples).
pub fn sample_joint(corr: &CorrelationMatrix, n: usize, seed: u64) -> Result<TimeSeries> {
    let d = corr.dim();
    let l = crate::linalg::cholesky_raw(corr.as_dmatrix())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * d);
    let mut z = vec![0.0f64; d];
    for _ in 0..n {
        for e in z.iter_mut() {
            *e = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        }
        chol_v_mul(&l, &mut z);
        out.extend_from_slice(&z);
    }
    TimeSeries::new(n, d, out)
}

/// Wilson-Cowan excitatory/inhibitory rate model.
#[derive(Debug, Clone)]
pub struct WilsonCowanParams {
    pub tau_e: f64,
    pub tau_i: f64,
    pub w_ee: f64,
    pub w_ei: f64,
    pub w_ie: f64,
    pub w_ii: f64,
    pub p_e: f64,
    pub p_i: f64,
    pub alpha: f64,
    pub theta_e: f64,
    pub theta_i: f64,
    /// Correlation of the noise injected into the two populations.
    pub noise_corr: f64,
    pub noise_std: f64,
    pub dt: f64,
    pub t_total: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for WilsonCowanParams {
    fn default() -> Self {
        Self {
            tau_e: 1.0,
            tau_i: 1.0,
            w_ee: 10.0,
            w_ei: 10.0,
            w_ie: 10.0,
            w_ii: 3.0,
            p_e: 0.125,
            p_i: 0.125,
            alpha: 1.0,
            theta_e: 0.2,
            theta_i: 4.0,
            noise_corr: 0.1,
            noise_std: 0.05,
            dt: 0.01,
            t_total: 200_000,
            burn_in: 20_000,
            seed: 0,
        }
    }
}

fn sigmoid(alpha: f64, theta: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-alpha * (x - theta)).exp())
}

/// Couples two unit normals so the pair has correlation c.
fn correlate_noise(z1: f64, z2: f64, c: f64) -> (f64, f64) {
    (z1, c * z1 + (1.0 - c * c).sqrt() * z2)
}

/// Euler-Maruyama integration of the two coupled rate equations; the
/// correlated noise enters the sigmoid argument, scaled by
/// noise_std * sqrt(dt). The first `burn_in` steps are discarded.
pub fn wilson_cowan_simulate(p: &WilsonCowanParams) -> Result<TimeSeries> {
    if p.dt <= 0.0 {
        return Err(Error::InvalidParam(format!("dt must be positive: {}", p.dt)));
    }
    if p.burn_in >= p.t_total {
        return Err(Error::InvalidParam(format!(
            "burn_in {} must be below t_total {}",
            p.burn_in, p.t_total
        )));
    }
    if !(-1.0..1.0).contains(&p.noise_corr) {
        return Err(Error::InvalidParam(format!(
            "noise correlation must lie in (-1, 1): {}",
            p.noise_corr
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let amp = p.noise_std * p.dt.sqrt();
    let mut e = 0.1f64;
    let mut i = 0.1f64;
    let kept = p.t_total - p.burn_in;
    let mut out = Vec::with_capacity(kept * 2);
    for step in 0..p.t_total {
        let z1: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let z2: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let (n1, n2) = correlate_noise(z1, z2, p.noise_corr);
        let eta_e = amp * n1;
        let eta_i = amp * n2;
        let drive_e = sigmoid(
            p.alpha,
            p.theta_e,
            p.w_ee * e - p.w_ei * i + p.p_e + eta_e,
        );
        let drive_i = sigmoid(
            p.alpha,
            p.theta_i,
            p.w_ie * e - p.w_ii * i + p.p_i + eta_i,
        );
        e += p.dt / p.tau_e * (-e + drive_e);
        i += p.dt / p.tau_i * (-i + drive_i);
        if !(-10.0..=10.0).contains(&e) || !(-10.0..=10.0).contains(&i) {
            return Err(Error::NumericalBlowup(step));
        }
        if step >= p.burn_in {
            out.push(e);
            out.push(i);
        }
    }
    TimeSeries::new(kept, 2, out)
}

/// Random correlation matrix: standardized G G^T with G a d x df matrix of
/// standard normals.
pub fn wishart_correlation(d: usize, df: usize, seed: u64) -> Result<CorrelationMatrix> {
    if d < 1 || df < d {
        return Err(Error::InvalidParam(format!(
            "wishart needs df >= d >= 1, got d = {d}, df = {df}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, df, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    standardize(&SymMatrix::new(&g * g.transpose())?)
}

/// The three gate systems of the first validation experiment, as exact
/// 2-source/2-target correlation matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyGate {
    /// Each source drives its same-index target.
    Copy,
    /// Each source drives the opposite-index target.
    Transfer,
    /// Both targets are (noisy) sums of both sources along orthogonal
    /// sign patterns is NOT used here; both read the same sum, so neither
    /// pairwise link explains the joint map.
    Xor,
}

/// Driven-channel correlation for the copy/transfer gates: unit-variance
/// source, target = source + noise of variance 1e-4.
const GATE_RHO: f64 = 1.0 / (1.0 + 1e-4);
/// Target noise variance for the XOR-like gate. Small enough that the
/// pairwise-explainable floor (about 0.35 nats) is a tiny fraction of the
/// total information.
const XOR_NOISE_VAR: f64 = 1e-8;

pub fn experiment1_joint(kind: ToyGate) -> GaussianJoint {
    let m = match kind {
        ToyGate::Copy => {
            let mut m = DMatrix::identity(4, 4);
            m[(0, 2)] = GATE_RHO;
            m[(2, 0)] = GATE_RHO;
            m[(1, 3)] = GATE_RHO;
            m[(3, 1)] = GATE_RHO;
            m
        }
        ToyGate::Transfer => {
            let mut m = DMatrix::identity(4, 4);
            m[(0, 3)] = GATE_RHO;
            m[(3, 0)] = GATE_RHO;
            m[(1, 2)] = GATE_RHO;
            m[(2, 1)] = GATE_RHO;
            m
        }
        ToyGate::Xor => {
            // X_{t+1} = X_t + Y_t + eps, Y_{t+1} = X_t + Y_t + eps'.
            let r = 1.0 / (2.0 + XOR_NOISE_VAR).sqrt();
            let u = 2.0 / (2.0 + XOR_NOISE_VAR);
            let mut m = DMatrix::identity(4, 4);
            for s in 0..2 {
                for t in 2..4 {
                    m[(s, t)] = r;
                    m[(t, s)] = r;
                }
            }
            m[(2, 3)] = u;
            m[(3, 2)] = u;
            m
        }
    };
    GaussianJoint::new(2, 2, CorrelationMatrix::new(m).expect("gate correlation is PD"))
        .expect("gate partition is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::Rng;

    #[test]
    fn uniform_var_matrix_shape() {
        let m = uniform_var(0.5, 0.2, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.a[(i, j)] - 0.25).abs() < 1e-15);
            }
        }
        assert!((m.v.get(0, 1) - 0.2).abs() < 1e-15);
        assert!((m.spectral_radius() - 0.5).abs() < 1e-9);

        let zero = uniform_var(0.0, 0.0, 2).unwrap();
        assert_eq!(zero.a, DMatrix::zeros(2, 2));

        assert!(uniform_var(1.0, 0.0, 2).is_err());
    }

    #[test]
    fn uniform_var_near_critical_is_stable() {
        let m = uniform_var(1.0 - 1e-6, 0.0, 2).unwrap();
        assert!(m.spectral_radius() < 1.0);
        assert!(var_joint(&m).is_ok());
    }

    #[test]
    fn modular_var_blocks() {
        let m = modular_var(0.3, 0.1, 0.0, 5).unwrap();
        assert_eq!(m.dim(), 10);
        assert!((m.a[(0, 0)] - 0.3).abs() < 1e-15);
        assert!((m.a[(0, 7)] - 0.1).abs() < 1e-15);
        assert!((m.a[(7, 0)] - 0.1).abs() < 1e-15);
        assert!((m.a[(7, 8)] - 0.3).abs() < 1e-15);
        // Block eigenstructure: radius = block * max(|a+b|, |a-b|).
        assert!((m.spectral_radius() - 2.0).abs() < 1e-9);

        // block = 1 gives the plain 2x2 modular form.
        let m2 = modular_var(0.4, 0.2, 0.1, 1).unwrap();
        assert_eq!(m2.dim(), 2);
        assert!((m2.a[(0, 1)] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn var_joint_no_dynamics_is_independent() {
        let m = uniform_var(0.0, 0.3, 2).unwrap();
        let j = var_joint(&m).unwrap();
        assert!(mutual_information(&j).unwrap().abs() < 1e-12);
    }

    #[test]
    fn var_joint_scalar_closed_form() {
        let m = VarModel {
            a: DMatrix::from_element(1, 1, 0.5),
            v: SymMatrix::identity(1),
        };
        let j = var_joint(&m).unwrap();
        assert!((j.corr().get(0, 1) - 0.5).abs() < 1e-12);
        let mi = mutual_information(&j).unwrap();
        assert!((mi - (-0.5 * 0.75f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn var_joint_rejects_unstable() {
        let m = VarModel {
            a: DMatrix::from_element(1, 1, 1.1),
            v: SymMatrix::identity(1),
        };
        assert!(matches!(var_joint(&m), Err(Error::Unstable(_))));
    }

    #[test]
    fn var_joint_mi_invariant_under_orthogonal_basis_change() {
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let a = &raw * (rng.gen_range(0.1..0.9) / spectral_radius(&raw).max(1e-9));
            let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let v = SymMatrix::new(&g * g.transpose() + DMatrix::<f64>::identity(n, n))
                .unwrap();

            let qr = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64)).qr();
            let q = qr.q();

            let m1 = VarModel { a: a.clone(), v: v.clone() };
            let m2 = VarModel {
                a: &q * &a * q.transpose(),
                v: SymMatrix::new(&q * v.as_dmatrix() * q.transpose()).unwrap(),
            };
            let mi1 = mutual_information(&var_joint(&m1).unwrap()).unwrap();
            let mi2 = mutual_information(&var_joint(&m2).unwrap()).unwrap();
            assert!((mi1 - mi2).abs() < 1e-9, "{mi1} vs {mi2} at n={n}");
        }
    }

    #[test]
    fn rescale_fixed_point() {
        let m = uniform_var(0.5, 0.1, 2).unwrap();
        let target = mutual_information(&var_joint(&m).unwrap()).unwrap();
        let r = rescale_to_target_mi(&m, target).unwrap();
        let ratio = r.a[(0, 0)] / m.a[(0, 0)];
        assert!((ratio - 1.0).abs() < 1e-8, "scale {ratio}");
    }

    #[test]
    fn rescale_scalar_closed_form() {
        let m = VarModel {
            a: DMatrix::from_element(1, 1, 0.5),
            v: SymMatrix::identity(1),
        };
        let target = -0.5 * (1.0 - 0.64f64).ln();
        let r = rescale_to_target_mi(&m, target).unwrap();
        assert!((r.a[(0, 0)] - 0.8).abs() < 1e-8);
    }

    #[test]
    fn rescale_unreachable_target() {
        let m = uniform_var(0.5, 0.0, 2).unwrap();
        assert!(matches!(
            rescale_to_target_mi(&m, 100.0),
            Err(Error::TargetUnreachable { .. })
        ));
    }

    #[test]
    fn rescale_reproduces_target_over_random_models() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut done = 0;
        while done < 100 {
            let n = rng.gen_range(1..=4);
            let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let rho = spectral_radius(&raw);
            if rho < 1e-6 {
                continue;
            }
            let a = &raw * (rng.gen_range(0.2..0.9) / rho);
            let m = VarModel {
                a,
                v: SymMatrix::identity(n),
            };
            let target = rng.gen_range(0.05..0.5);
            let r = match rescale_to_target_mi(&m, target) {
                Ok(r) => r,
                Err(Error::TargetUnreachable { .. }) => continue,
                Err(e) => panic!("unexpected {e:?}"),
            };
            let mi = mutual_information(&var_joint(&r).unwrap()).unwrap();
            assert!((mi - target).abs() < 1e-8, "mi {mi} target {target}");
            done += 1;
        }
    }

    #[test]
    fn var_simulate_deterministic_and_finite() {
        let m = uniform_var(0.5, 0.2, 2).unwrap();
        let a = var_simulate(&m, 500, 100, 42).unwrap();
        let b = var_simulate(&m, 500, 100, 42).unwrap();
        assert_eq!(a.t_len(), 500);
        for t in 0..500 {
            assert_eq!(a.get(t, 0).to_bits(), b.get(t, 0).to_bits());
        }
    }

    #[test]
    fn wilson_cowan_deterministic_with_seed() {
        let p = WilsonCowanParams {
            t_total: 5_000,
            burn_in: 500,
            ..Default::default()
        };
        let a = wilson_cowan_simulate(&p).unwrap();
        let b = wilson_cowan_simulate(&p).unwrap();
        assert_eq!(a.t_len(), 4_500);
        assert_eq!(a.n_ch(), 2);
        for t in 0..a.t_len() {
            assert_eq!(a.get(t, 0).to_bits(), b.get(t, 0).to_bits());
            assert_eq!(a.get(t, 1).to_bits(), b.get(t, 1).to_bits());
        }
    }

    #[test]
    fn wilson_cowan_damped_regime_settles_without_noise() {
        let p = WilsonCowanParams {
            w_ei: 2.0,
            w_ie: 2.0,
            noise_std: 0.0,
            t_total: 60_000,
            burn_in: 50_000,
            ..Default::default()
        };
        let ts = wilson_cowan_simulate(&p).unwrap();
        let n = ts.t_len();
        let mut max_delta = 0.0f64;
        for t in 1..n {
            max_delta = max_delta.max((ts.get(t, 0) - ts.get(t - 1, 0)).abs());
        }
        assert!(max_delta < 1e-8, "still moving by {max_delta}");
    }

    #[test]
    fn injected_noise_correlation_matches_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = 0.37;
        let t = 1_000_000;
        let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
        for _ in 0..t {
            let z1: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            let z2: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            let (n1, n2) = correlate_noise(z1, z2, c);
            s11 += n1 * n1;
            s22 += n2 * n2;
            s12 += n1 * n2;
        }
        let rho = s12 / (s11 * s22).sqrt();
        assert!(
            (rho - c).abs() < 3.0 / (t as f64).sqrt(),
            "sample noise correlation {rho}"
        );
    }

    #[test]
    fn wishart_scalar_and_determinism() {
        let c = wishart_correlation(1, 1, 3).unwrap();
        assert_eq!(c.get(0, 0), 1.0);

        let a = wishart_correlation(3, 6, 9).unwrap();
        let b = wishart_correlation(3, 6, 9).unwrap();
        assert_eq!(a.as_dmatrix(), b.as_dmatrix());
        for i in 0..3 {
            assert_eq!(a.get(i, i), 1.0);
        }
        assert!(wishart_correlation(3, 2, 0).is_err());
    }

    #[test]
    fn wishart_off_diagonal_is_centered() {
        // The distribution of each off-diagonal correlation is symmetric
        // around zero; check the empirical mean over many draws.
        let n = 10_000;
        let mut sum = 0.0;
        for seed in 0..n {
            let c = wishart_correlation(3, 6, seed).unwrap();
            sum += c.get(0, 1) + c.get(0, 2) + c.get(1, 2);
        }
        let mean = sum / (3 * n) as f64;
        // SD of a single draw is below 0.45; 3 standard errors of the mean.
        let tol = 3.0 * 0.45 / ((3 * n) as f64).sqrt();
        assert!(mean.abs() < tol, "mean off-diagonal {mean}");
    }

    #[test]
    fn experiment1_gate_structure() {
        let copy = experiment1_joint(ToyGate::Copy);
        assert!((copy.corr().get(0, 2) - GATE_RHO).abs() < 1e-15);
        assert_eq!(copy.corr().get(0, 3), 0.0);

        let transfer = experiment1_joint(ToyGate::Transfer);
        assert!((transfer.corr().get(0, 3) - GATE_RHO).abs() < 1e-15);
        assert_eq!(transfer.corr().get(0, 2), 0.0);

        let xor = experiment1_joint(ToyGate::Xor);
        let r = 1.0 / (2.0f64 + XOR_NOISE_VAR).sqrt();
        for s in 0..2 {
            for t in 2..4 {
                assert!((xor.corr().get(s, t) - r).abs() < 1e-15);
            }
        }
        assert!(xor.corr().get(2, 3) > 1.0 - 1e-8);
    }
}
