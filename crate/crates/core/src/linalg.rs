//! Dense symmetric-matrix kernels the rest of the crate builds on:
//! Cholesky factorization, log-determinants, discrete Lyapunov solves,
//! spectral radius, and the digamma function.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric real matrix, validated and exactly symmetrized at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a square matrix, requiring symmetry within 1e-12 absolute.
    /// The stored matrix is symmetrized exactly so downstream algebra never
    /// sees an asymmetric residual.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::WrongShape(format!(
                "expected square matrix with dim >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::WrongShape(format!(
                        "asymmetric entries at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let mut m = m;
        for i in 0..m.nrows() {
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(Self { m })
    }

    /// Builds from dense rows; rows must form a square symmetric matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::WrongShape("rows do not form a square matrix".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(m)
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

/// Lower-triangular Cholesky factor with strictly positive diagonal.
#[derive(Debug, Clone)]
pub struct CholFactor {
    l: DMatrix<f64>,
}

impl CholFactor {
    pub(crate) fn from_lower_unchecked(l: DMatrix<f64>) -> Self {
        Self { l }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// log det(L L^T) = 2 sum_i ln L_ii.
    pub fn log_det(&self) -> f64 {
        log_det(self)
    }

    /// Multiplies the factor back into the symmetric matrix it came from.
    pub fn reconstruct(&self) -> SymMatrix {
        let s = &self.l * self.l.transpose();
        SymMatrix::new(s).expect("L L^T is symmetric")
    }

    /// Forward substitution: solves L x = b in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for (k, &bk) in b.iter().enumerate().take(i) {
                acc -= self.l[(i, k)] * bk;
            }
            b[i] = acc / self.l[(i, i)];
        }
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Fails with `NotPositiveDefinite` as soon as a pivot drops to zero or
/// below, reporting the offending row and pivot value.
pub fn cholesky(s: &SymMatrix) -> Result<CholFactor> {
    cholesky_raw(s.as_dmatrix())
}

pub(crate) fn cholesky_raw(s: &DMatrix<f64>) -> Result<CholFactor> {
    let n = s.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut acc = s[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / djj;
        }
    }
    Ok(CholFactor { l })
}

/// Cholesky with a jitter ladder for near-singular input: on failure,
/// retries with lambda*I for lambda = 1e-9, 1e-8, ..., 1e-6 and reports the
/// jitter that succeeded so callers can surface a warning.
pub fn cholesky_jittered(s: &SymMatrix) -> Result<(CholFactor, Option<f64>)> {
    match cholesky(s) {
        Ok(l) => Ok((l, None)),
        Err(_) => {
            let mut lambda = 1e-9;
            while lambda <= 1e-6 {
                let mut m = s.as_dmatrix().clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += lambda;
                }
                if let Ok(l) = cholesky_raw(&m) {
                    return Ok((l, Some(lambda)));
                }
                lambda *= 10.0;
            }
            Err(Error::DegenerateInput(1e-6))
        }
    }
}

/// Inverse of the SPD matrix whose Cholesky factor is `l`, by two
/// triangular solves per column.
pub(crate) fn spd_inverse_from_chol(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for c in 0..n {
        col.fill(0.0);
        col[c] = 1.0;
        // L y = e_c
        for i in 0..n {
            let mut acc = col[i];
            for k in 0..i {
                acc -= l[(i, k)] * col[k];
            }
            col[i] = acc / l[(i, i)];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut acc = col[i];
            for k in (i + 1)..n {
                acc -= l[(k, i)] * col[k];
            }
            col[i] = acc / l[(i, i)];
        }
        for r in 0..n {
            inv[(r, c)] = col[r];
        }
    }
    // Symmetrize rounding residue.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = avg;
            inv[(j, i)] = avg;
        }
    }
    inv
}

/// log det(L L^T) in nats scale: 2 sum_i ln L_ii.
pub fn log_det(l: &CholFactor) -> f64 {
    let mut acc = 0.0;
    for i in 0..l.dim() {
        acc += l.get(i, i).ln();
    }
    2.0 * acc
}

/// Solves the discrete Lyapunov equation S = A S A^T + V for stable A.
///
/// Uses the Kronecker vectorization (I - A (x) A) vec(S) = vec(V) for
/// dim <= 32 and a squaring (doubling) iteration above, where the direct
/// solve would cost O(dim^6).
pub fn solve_lyapunov(a: &DMatrix<f64>, v: &SymMatrix) -> Result<SymMatrix> {
    let n = v.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::WrongShape(format!(
            "A is {}x{} but V has dim {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }

    let s = if n <= 32 {
        let kron = a.kronecker(a);
        let mut lhs = DMatrix::identity(n * n, n * n) - kron;
        let rhs = DMatrix::from_fn(n * n, 1, |k, _| v.get(k % n, k / n));
        let lu = lhs.clone().lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("I - A (x) A".into()))?;
        lhs.fill(0.0);
        DMatrix::from_fn(n, n, |i, j| sol[(j * n + i, 0)])
    } else {
        // S = sum_k A^k V A^{k,T}; squaring doubles the partial sum each pass.
        let mut s = v.as_dmatrix().clone();
        let mut m = a.clone();
        for _ in 0..200 {
            let inc = &m * &s * m.transpose();
            let inc_norm = inc.norm();
            s += inc;
            m = &m * &m;
            if inc_norm <= 1e-16 * s.norm() {
                break;
            }
        }
        s
    };

    // Symmetrize away the solve's rounding residual.
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    SymMatrix::new(sym)
}

/// Maximum eigenvalue magnitude of a square real matrix.
///
/// Goes through the full complex spectrum (Schur iteration) rather than
/// power iteration on A^T A, which is wrong for complex eigenpairs.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    assert!(
        a.nrows() == a.ncols() && a.nrows() >= 1,
        "spectral_radius needs a nonempty square matrix"
    );
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Digamma function for x > 0, via recurrence shift into the asymptotic
/// regime and a Bernoulli-number tail. Absolute accuracy ~1e-14.
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv2
        * (-1.0 / 12.0
            + inv2
                * (1.0 / 120.0
                    + inv2
                        * (-1.0 / 252.0
                            + inv2
                                * (1.0 / 240.0
                                    + inv2
                                        * (-1.0 / 132.0
                                            + inv2 * (691.0 / 32760.0 + inv2 * (-1.0 / 12.0)))))));
    Ok(acc + x.ln() - 0.5 * inv + tail)
}
