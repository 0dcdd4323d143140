//! Time-series ingestion: CSV loading, Gaussian-copula (rank inverse-normal)
//! transformation, and lag embedding into a standardized joint system.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss::GaussianJoint;
use crate::linalg::SymMatrix;
use crate::synth::TimeSeries;

/// How to pair a series with its own future: sources are `source_cols` at
/// time t, targets are `target_cols` at time t + lag. The column sets may
/// overlap when lag > 0.
#[derive(Debug, Clone)]
pub struct LagPairing {
    pub lag: usize,
    pub source_cols: Vec<usize>,
    pub target_cols: Vec<usize>,
}

impl LagPairing {
    /// All channels onto all channels at the given lag.
    pub fn full(ts: &TimeSeries, lag: usize) -> Self {
        let all: Vec<usize> = (0..ts.n_ch()).collect();
        Self {
            lag,
            source_cols: all.clone(),
            target_cols: all,
        }
    }

    fn check(&self, ts: &TimeSeries) -> Result<()> {
        if self.lag >= ts.t_len() {
            return Err(Error::TooFewSamples {
                l: 0,
                dims: self.source_cols.len() + self.target_cols.len(),
            });
        }
        for &c in self.source_cols.iter().chain(&self.target_cols) {
            if c >= ts.n_ch() {
                return Err(Error::IndexOutOfRange {
                    what: "channel",
                    got: c,
                    limit: ts.n_ch(),
                });
            }
        }
        if self.source_cols.is_empty() || self.target_cols.is_empty() {
            return Err(Error::WrongShape("empty source or target selection".into()));
        }
        Ok(())
    }
}

/// Parses a numeric CSV (rows = time points, columns = channels) with an
/// optional single header row. No quoting; '.' decimal; 64-bit floats.
pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        row: 0,
        col: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut n_cols = None;
    let mut header_skipped = false;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let cols = n_cols.get_or_insert(fields.len());
        if fields.len() != *cols {
            return Err(Error::RaggedRows {
                row: idx + 1,
                got: fields.len(),
                expected: *cols,
            });
        }
        let mut parsed = Vec::with_capacity(fields.len());
        let mut bad: Option<(usize, String)> = None;
        for (c, f) in fields.iter().enumerate() {
            match f.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                _ => {
                    bad = Some((c, f.trim().to_string()));
                    break;
                }
            }
        }
        match bad {
            None => rows.push(parsed),
            Some((c, value)) => {
                // A fully non-numeric first line is a header.
                if rows.is_empty() && !header_skipped && c == 0 {
                    header_skipped = true;
                    continue;
                }
                return Err(Error::NonNumeric {
                    row: idx + 1,
                    col: c + 1,
                    value,
                });
            }
        }
    }
    let t_len = rows.len();
    let n_ch = n_cols.unwrap_or(0);
    if t_len < 2 || n_ch == 0 {
        return Err(Error::WrongShape(format!(
            "need at least 2 data rows and 1 column, got {t_len}x{n_ch}"
        )));
    }
    TimeSeries::new(t_len, n_ch, rows.into_iter().flatten().collect())
}

/// Standard-normal quantile function (Wichura's AS241 rational
/// approximations); relative accuracy well below the 1e-9 contract.
/// Coefficients are kept verbatim from the published tables.
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "quantile function needs p in (0,1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_9e4) * r
                + 6.726_577_092_700_87e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5);
        let den = ((((((5.226_495_278_852_545_4e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return Ok(num / den);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_209_433_548_312_3e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    Ok(if q < 0.0 { -val } else { val })
}

/// Replaces each channel by the inverse-normal transform of its average
/// ranks, rank/(t_len + 1), making marginals Gaussian while preserving the
/// dependence ordering.
pub fn copula_transform(ts: &TimeSeries) -> Result<TimeSeries> {
    let n = ts.t_len();
    if n < 10 {
        return Err(Error::InvalidParam(format!(
            "copula transform needs at least 10 samples, got {n}"
        )));
    }
    let mut out = vec![0.0; n * ts.n_ch()];
    for ch in 0..ts.n_ch() {
        let col = ts.column(ch);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap());
        if col[idx[0]] == col[idx[n - 1]] {
            return Err(Error::ConstantChannel(ch));
        }
        // Average ranks over tie runs (1-based ranks).
        let mut ranks = vec![0.0; n];
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && col[idx[end]] == col[idx[start]] {
                end += 1;
            }
            let avg = (start + 1 + end) as f64 / 2.0;
            for k in start..end {
                ranks[idx[k]] = avg;
            }
            start = end;
        }
        for t in 0..n {
            out[t * ts.n_ch() + ch] = inverse_normal_cdf(ranks[t] / (n as f64 + 1.0))?;
        }
    }
    TimeSeries::new(n, ts.n_ch(), out)
}

/// Forms the (t_len - lag) paired samples, estimates their correlation
/// (mean-subtracted, L-1 denominator), and returns the standardized joint
/// plus the sample count L for bias correction.
pub fn lag_embed(ts: &TimeSeries, pairing: &LagPairing) -> Result<(GaussianJoint, usize)> {
    let (cov, d_x, d_y, l) = lag_covariance(ts, pairing)?;
    let joint = GaussianJoint::from_covariance(d_x, d_y, &cov)?;
    Ok((joint, l))
}

/// `lag_embed` with the jitter ladder for near-singular sample covariances
/// (for example, duplicated channels); also returns the shrinkage applied.
pub fn lag_embed_regularized(
    ts: &TimeSeries,
    pairing: &LagPairing,
) -> Result<(GaussianJoint, usize, Option<f64>)> {
    let (cov, d_x, d_y, l) = lag_covariance(ts, pairing)?;
    let (joint, jitter) = GaussianJoint::from_covariance_regularized(d_x, d_y, &cov)?;
    Ok((joint, l, jitter))
}

fn lag_covariance(
    ts: &TimeSeries,
    pairing: &LagPairing,
) -> Result<(SymMatrix, usize, usize, usize)> {
    pairing.check(ts)?;
    let l = ts.t_len() - pairing.lag;
    let d_x = pairing.source_cols.len();
    let d_y = pairing.target_cols.len();
    let d = d_x + d_y;
    if l <= d + 2 {
        return Err(Error::TooFewSamples { l, dims: d });
    }

    let mut mean = vec![0.0; d];
    for t in 0..l {
        for (k, &c) in pairing.source_cols.iter().enumerate() {
            mean[k] += ts.get(t, c);
        }
        for (k, &c) in pairing.target_cols.iter().enumerate() {
            mean[d_x + k] += ts.get(t + pairing.lag, c);
        }
    }
    for m in mean.iter_mut() {
        *m /= l as f64;
    }

    let mut cov = DMatrix::zeros(d, d);
    let mut row = vec![0.0; d];
    for t in 0..l {
        for (k, &c) in pairing.source_cols.iter().enumerate() {
            row[k] = ts.get(t, c) - mean[k];
        }
        for (k, &c) in pairing.target_cols.iter().enumerate() {
            row[d_x + k] = ts.get(t + pairing.lag, c) - mean[d_x + k];
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / (l - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    Ok((SymMatrix::new(cov)?, d_x, d_y, l))
}
