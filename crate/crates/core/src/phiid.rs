//! Sixteen-atom integrated information decomposition for 2-source/2-target
//! Gaussian systems, built from union-information redundancies: nine
//! sub-block mutual informations, six redundancies, and the low-order total
//! W pin down the atoms as one linear system.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss::{mutual_information, standardize, CorrelationMatrix, GaussianJoint};
use crate::linalg::SymMatrix;
use crate::optim::AdamConfig;
use crate::synth::TimeSeries;
use crate::wm::{union_information_grouped, w_info, BiasSpec, WMResult};

/// Atom order used everywhere: sources run through redundant, unique-1,
/// unique-2, synergistic modes (r, x, y, s) crossed with the same four
/// target modes, source-major.
pub const ATOM_NAMES: [&str; 16] = [
    "rtr", "rtx", "rty", "rts", "xtr", "xtx", "xty", "xts", "ytr", "ytx", "yty", "yts", "str",
    "stx", "sty", "sts",
];

/// Indices of the nine low-order atoms (redundancy/unique in both source
/// and target mode), whose sum is W.
const LOW_ORDER: [usize; 9] = [0, 1, 2, 4, 5, 6, 8, 9, 10];
/// The seven atoms carrying a synergistic mode on either side; their sum
/// is M.
const SYNERGY: [usize; 7] = [3, 7, 11, 12, 13, 14, 15];

/// The 16 atom values in `ATOM_NAMES` order, in nats.
#[derive(Debug, Clone)]
pub struct PhiidAtoms {
    values: [f64; 16],
}

impl PhiidAtoms {
    pub fn values(&self) -> &[f64; 16] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        ATOM_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum of the nine redundancy/unique atoms (equals W).
    pub fn low_order_sum(&self) -> f64 {
        LOW_ORDER.iter().map(|&i| self.values[i]).sum()
    }

    /// Sum of the seven synergy-bearing atoms (equals M).
    pub fn synergy_sum(&self) -> f64 {
        SYNERGY.iter().map(|&i| self.values[i]).sum()
    }

    /// Name and value of the largest atom.
    pub fn dominant(&self) -> (&'static str, f64) {
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        (ATOM_NAMES[i], *v)
    }
}

/// The raw quantities the linear system is assembled from.
#[derive(Debug, Clone)]
pub struct PhiidInputs {
    /// I(X1;Y1), I(X2;Y2), I(X1;Y2), I(X2;Y1), I(X1X2;Y1), I(X1X2;Y2),
    /// I(X1;Y1Y2), I(X2;Y1Y2), I(X1X2;Y1Y2).
    pub mis: [f64; 9],
    /// R(X1,X2;Y1), R(X1,X2;Y2), R(X1,X2;Y1Y2),
    /// R(Y1,Y2;X1), R(Y1,Y2;X2), R(Y1,Y2;X1X2).
    pub redundancies: [f64; 6],
    pub w: f64,
}

/// Full decomposition output: atoms plus everything needed to audit them.
#[derive(Debug, Clone)]
pub struct PhiidDecomposition {
    pub atoms: PhiidAtoms,
    pub inputs: PhiidInputs,
    /// Infinity-norm residual of the linear solve.
    pub residual: f64,
    /// The W/M estimate on the same joint (atom sums must reproduce it).
    pub wm: WMResult,
}

/// Which atoms each equation sums over, rows in `PhiidInputs` order
/// (9 mutual informations, 6 redundancies, then W).
const EQUATIONS: [&[usize]; 16] = [
    &[0, 1, 4, 5],                  // I(X1;Y1) = rtr+rtx+xtr+xtx
    &[0, 2, 8, 10],                 // I(X2;Y2) = rtr+rty+ytr+yty
    &[0, 2, 4, 6],                  // I(X1;Y2) = rtr+rty+xtr+xty
    &[0, 1, 8, 9],                  // I(X2;Y1) = rtr+rtx+ytr+ytx
    &[0, 1, 4, 5, 8, 9, 12, 13],    // I(X1X2;Y1)
    &[0, 2, 4, 6, 8, 10, 12, 14],   // I(X1X2;Y2)
    &[0, 1, 2, 3, 4, 5, 6, 7],      // I(X1;Y1Y2)
    &[0, 1, 2, 3, 8, 9, 10, 11],    // I(X2;Y1Y2)
    &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15], // I(X1X2;Y1Y2)
    &[0, 1],                        // R(X1,X2;Y1) = rtr+rtx
    &[0, 2],                        // R(X1,X2;Y2) = rtr+rty
    &[0, 1, 2, 3],                  // R(X1,X2;Y1Y2)
    &[0, 4],                        // R(Y1,Y2;X1) = rtr+xtr
    &[0, 8],                        // R(Y1,Y2;X2) = rtr+ytr
    &[0, 4, 8, 12],                 // R(Y1,Y2;X1X2)
    &[0, 1, 2, 4, 5, 6, 8, 9, 10],  // W = all low-order atoms
];

fn system_matrix() -> DMatrix<f64> {
    let mut a = DMatrix::zeros(16, 16);
    for (r, members) in EQUATIONS.iter().enumerate() {
        for &c in members.iter() {
            a[(r, c)] = 1.0;
        }
    }
    a
}

/// Union-information redundancy of two sources about a (possibly grouped)
/// target block: R = I(X1;Y) + I(X2;Y) - I_union(X1,X2;Y).
pub fn broja_redundancy(p: &GaussianJoint, cfg: &AdamConfig) -> Result<f64> {
    if p.d_x() != 2 {
        return Err(Error::WrongShape(format!(
            "redundancy takes exactly two sources, got d_x = {}",
            p.d_x()
        )));
    }
    let targets: Vec<usize> = (0..p.d_y()).collect();
    let i1 = mutual_information(&p.select(&[0], &targets)?)?;
    let i2 = mutual_information(&p.select(&[1], &targets)?)?;
    let union = union_information_grouped(p, cfg)?;
    Ok(i1 + i2 - union)
}

/// Decomposes I(X1,X2; Y1,Y2) into the 16 atoms. Costs seven optimizations:
/// the 2+2 W plus six grouped union-information runs (three with the
/// sources as predictors, three with the roles swapped).
pub fn phiid_decompose(p: &GaussianJoint, cfg: &AdamConfig) -> Result<PhiidDecomposition> {
    if p.d_x() != 2 || p.d_y() != 2 {
        return Err(Error::WrongShape(format!(
            "full decomposition needs a 2+2 system, got {}+{}",
            p.d_x(),
            p.d_y()
        )));
    }

    let mis = [
        mutual_information(&p.select(&[0], &[0])?)?,
        mutual_information(&p.select(&[1], &[1])?)?,
        mutual_information(&p.select(&[0], &[1])?)?,
        mutual_information(&p.select(&[1], &[0])?)?,
        mutual_information(&p.select(&[0, 1], &[0])?)?,
        mutual_information(&p.select(&[0, 1], &[1])?)?,
        mutual_information(&p.select(&[0], &[0, 1])?)?,
        mutual_information(&p.select(&[1], &[0, 1])?)?,
        mutual_information(p)?,
    ];

    let swapped = p.swapped();
    let redundancies = [
        broja_redundancy(&p.select(&[0, 1], &[0])?, cfg)?,
        broja_redundancy(&p.select(&[0, 1], &[1])?, cfg)?,
        broja_redundancy(p, cfg)?,
        broja_redundancy(&swapped.select(&[0, 1], &[0])?, cfg)?,
        broja_redundancy(&swapped.select(&[0, 1], &[1])?, cfg)?,
        broja_redundancy(&swapped, cfg)?,
    ];

    let wm = w_info(p, cfg, &BiasSpec::disabled())?;

    let inputs = PhiidInputs {
        mis,
        redundancies,
        w: wm.w,
    };
    let atoms = solve_atoms(&inputs)?;

    let mut rhs = [0.0; 16];
    rhs[..9].copy_from_slice(&inputs.mis);
    rhs[9..15].copy_from_slice(&inputs.redundancies);
    rhs[15] = inputs.w;
    let mut residual = 0.0f64;
    for (r, members) in EQUATIONS.iter().enumerate() {
        let sum: f64 = members.iter().map(|&c| atoms.values[c]).sum();
        residual = residual.max((sum - rhs[r]).abs());
    }
    if residual >= 1e-9 {
        return Err(Error::SingularSystem(format!(
            "atom solve residual {residual:.3e}"
        )));
    }

    Ok(PhiidDecomposition {
        atoms,
        inputs,
        residual,
        wm,
    })
}

fn solve_atoms(inputs: &PhiidInputs) -> Result<PhiidAtoms> {
    let a = system_matrix();
    let mut rhs = DMatrix::zeros(16, 1);
    for (i, &v) in inputs.mis.iter().enumerate() {
        rhs[(i, 0)] = v;
    }
    for (i, &v) in inputs.redundancies.iter().enumerate() {
        rhs[(9 + i, 0)] = v;
    }
    rhs[(15, 0)] = inputs.w;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("16x16 atom system".into()))?;
    let mut values = [0.0; 16];
    for i in 0..16 {
        values[i] = sol[(i, 0)];
    }
    Ok(PhiidAtoms { values })
}

// ---------------------------------------------------------------------------
// Toy generators

/// One of the 16 single-atom generator systems (identifiers 1..=16 in
/// `ATOM_NAMES` order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyPhiidSystem {
    id: usize,
}

impl ToyPhiidSystem {
    pub fn new(id: usize) -> Result<Self> {
        if !(1..=16).contains(&id) {
            return Err(Error::InvalidParam(format!(
                "generator identifier must be 1..=16, got {id}"
            )));
        }
        Ok(Self { id })
    }

    pub fn by_atom(name: &str) -> Result<Self> {
        match ATOM_NAMES.iter().position(|&n| n == name) {
            Some(i) => Ok(Self { id: i + 1 }),
            None => Err(Error::InvalidParam(format!("unknown atom name {name:?}"))),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn atom_name(&self) -> &'static str {
        ATOM_NAMES[self.id - 1]
    }
}

const EPS_VAR: f64 = 1e-4;
/// Near-deterministic correlations are clipped here before factorization.
const CORR_CAP: f64 = 1.0 - 1e-7;

/// Linear expression over independent unit factors: the shared latent Z
/// (variance 1) plus fresh noise draws (variance 1e-4 each). Each of the
/// four observables is one such expression; covariances follow exactly.
#[derive(Clone, Default)]
struct Expr {
    /// (factor index, coefficient); factor 0 is Z, the rest are noise.
    terms: Vec<(usize, f64)>,
}

impl Expr {
    fn plus(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().copied());
        Expr { terms }
    }

    fn minus(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|&(f, c)| (f, -c)));
        Expr { terms }
    }

    fn cov(&self, other: &Expr, var_of: &dyn Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for &(fa, ca) in &self.terms {
            for &(fb, cb) in &other.terms {
                if fa == fb {
                    acc += ca * cb * var_of(fa);
                }
            }
        }
        acc
    }
}

/// Builds the four expressions (X_t, Y_t, X_{t+1}, Y_{t+1}) for a
/// generator, plus the number of factors used.
fn generator_exprs(id: usize) -> ([Expr; 4], usize) {
    let mut next_eps = 1usize;
    let mut eps = |scale: f64| {
        let e = Expr {
            terms: vec![(next_eps, scale)],
        };
        next_eps += 1;
        e
    };
    let z = Expr {
        terms: vec![(0, 1.0)],
    };

    // Order inside the tuple: (x, y, xn, yn) for X_t, Y_t, X_{t+1}, Y_{t+1}.
    let (x, y, xn, yn) = match id {
        // rtr: everything reads the shared latent.
        1 => (
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
        ),
        // rtx: both sources with the first target.
        2 => (
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            eps(1.0),
        ),
        // rty: both sources with the second target.
        3 => (
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            eps(1.0),
            z.plus(&eps(1.0)),
        ),
        // rts: both sources read the sum of the (independent) targets.
        4 => {
            let xn = eps(100.0);
            let yn = eps(100.0);
            let x = xn.plus(&yn).plus(&eps(1.0));
            let y = xn.plus(&yn).plus(&eps(1.0));
            (x, y, xn, yn)
        }
        // xtr: first source with both targets.
        5 => (
            z.plus(&eps(1.0)),
            eps(1.0),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
        ),
        // xtx.
        6 => (z.plus(&eps(1.0)), eps(1.0), z.plus(&eps(1.0)), eps(1.0)),
        // xty.
        7 => (z.plus(&eps(1.0)), eps(1.0), eps(1.0), z.plus(&eps(1.0))),
        // xts: first source reads the sum of the (independent) targets,
        // mirroring yts.
        8 => {
            let xn = eps(100.0);
            let yn = eps(100.0);
            let x = xn.plus(&yn).plus(&eps(1.0));
            (x, eps(1.0), xn, yn)
        }
        // ytr.
        9 => (
            eps(1.0),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
            z.plus(&eps(1.0)),
        ),
        // ytx.
        10 => (eps(1.0), z.plus(&eps(1.0)), z.plus(&eps(1.0)), eps(1.0)),
        // yty.
        11 => (eps(1.0), z.plus(&eps(1.0)), eps(1.0), z.plus(&eps(1.0))),
        // yts: second source reads the sum of the (independent) targets.
        12 => {
            let xn = eps(100.0);
            let yn = eps(100.0);
            let y = xn.plus(&yn).plus(&eps(1.0));
            (eps(1.0), y, xn, yn)
        }
        // str: both targets read the sum of the independent sources.
        13 => {
            let x = eps(100.0);
            let y = eps(100.0);
            let xn = x.plus(&y).plus(&eps(1.0));
            let yn = x.plus(&y).plus(&eps(1.0));
            (x, y, xn, yn)
        }
        // stx.
        14 => {
            let x = eps(100.0);
            let y = eps(100.0);
            let xn = x.plus(&y).plus(&eps(1.0));
            (x, y, xn, eps(1.0))
        }
        // sty.
        15 => {
            let x = eps(100.0);
            let y = eps(100.0);
            let yn = x.plus(&y).plus(&eps(1.0));
            (x, y, eps(1.0), yn)
        }
        // sts: the second target reads sources and first target jointly.
        16 => {
            let x = eps(100.0);
            let y = eps(100.0);
            let xn = eps(100.0);
            let yn = x.plus(&y).minus(&xn).plus(&eps(1.0));
            (x, y, xn, yn)
        }
        _ => unreachable!("validated id"),
    };
    ([x, y, xn, yn], next_eps)
}

/// Exact population correlation of a generator, from the variance
/// bookkeeping of its defining expressions; sources are (X_t, Y_t), targets
/// (X_{t+1}, Y_{t+1}).
pub fn toy_phiid_covariance(sys: ToyPhiidSystem) -> Result<GaussianJoint> {
    let (exprs, _) = generator_exprs(sys.id);
    let var_of = |f: usize| if f == 0 { 1.0 } else { EPS_VAR };
    let mut cov = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            cov[(i, j)] = exprs[i].cov(&exprs[j], &var_of);
        }
    }
    let corr = standardize(&SymMatrix::new(cov)?)?;
    let mut m = corr.into_dmatrix();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                m[(i, j)] = m[(i, j)].clamp(-CORR_CAP, CORR_CAP);
            }
        }
    }
    GaussianJoint::new(2, 2, CorrelationMatrix::new(m)?)
}

/// Samples n independent draws of (X_t, Y_t, X_{t+1}, Y_{t+1}) from a
/// generator's equations.
pub fn toy_phiid_series(sys: ToyPhiidSystem, n: usize, seed: u64) -> Result<TimeSeries> {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let (exprs, n_factors) = generator_exprs(sys.id);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * 4);
    let mut factors = vec![0.0f64; n_factors];
    for _ in 0..n {
        for (f, v) in factors.iter_mut().enumerate() {
            let std = if f == 0 { 1.0 } else { EPS_VAR.sqrt() };
            *v = std
                * <rand_distr::StandardNormal as Distribution<f64>>::sample(
                    &rand_distr::StandardNormal,
                    &mut rng,
                );
        }
        for e in &exprs {
            out.push(e.terms.iter().map(|&(f, c)| c * factors[f]).sum());
        }
    }
    TimeSeries::new(n, 4, out)
}
