//! Achievable sum-rates of d-dimensional reconciliation and the
//! majorization tools behind their ordering.

use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Reconciliation dimension of a rate curve; `Max` uses one block of length N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RateDim {
    Dim(usize),
    Max,
}

impl RateDim {
    fn block_len(self, n: usize) -> usize {
        match self {
            RateDim::Dim(d) => d,
            RateDim::Max => n,
        }
    }
}

impl fmt::Display for RateDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateDim::Dim(d) => write!(f, "{d}"),
            RateDim::Max => f.write_str("Max"),
        }
    }
}

impl std::str::FromStr for RateDim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(RateDim::Max);
        }
        match s.parse::<usize>() {
            Ok(d) if d > 0 => Ok(RateDim::Dim(d)),
            _ => Err(Error::InvalidParameter(format!("bad rate dimension {s:?}"))),
        }
    }
}

/// Dimensions plotted in the sum-rate comparison.
pub const FIGURE_DIMS: [RateDim; 6] = [
    RateDim::Dim(1),
    RateDim::Dim(2),
    RateDim::Dim(8),
    RateDim::Dim(64),
    RateDim::Dim(512),
    RateDim::Max,
];

/// `(d/2) log2(1 + e/(d sigma^2))` for one block of energy `e`.
pub fn block_rate(energy: f64, sigma2: f64, d: usize) -> f64 {
    0.5 * d as f64 * (energy / (d as f64 * sigma2)).ln_1p() / std::f64::consts::LN_2
}

/// Sum of [`block_rate`] over consecutive `d`-blocks of `y`.
pub fn sum_rate(y: &[f64], sigma2: f64, d: usize) -> Result<f64> {
    if d == 0 || y.len() % d != 0 {
        return Err(Error::NotDivisible { len: y.len(), block: d });
    }
    sum_rate_with_tail(y, sigma2, d)
}

/// Like [`sum_rate`], but a trailing partial block is rated as a block of
/// its own length.
pub fn sum_rate_with_tail(y: &[f64], sigma2: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("block length 0".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(y
        .chunks(d)
        .map(|b| block_rate(b.iter().map(|v| v * v).sum(), sigma2, b.len()))
        .sum())
}

/// `f(g) = sum log2(1 + g_i)`.
pub fn schur_f(g: &[f64]) -> f64 {
    g.iter().map(|x| x.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// Equal-energy vector and per-column vector of one `k*k` block, each
/// entry scaled by `1/(k sigma^2)` and `1/(k^2 sigma^2)` respectively
/// so that `(k/2) f(.)` gives the one- and two-stage rates.
pub fn gamma_vectors(block: &[f64], sigma2: f64, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if block.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            found: block.len(),
        });
    }
    let cols: Vec<f64> = block.chunks(k).map(|c| c.iter().map(|v| v * v).sum::<f64>()).collect();
    let total: f64 = cols.iter().sum();
    let cross = vec![total / ((k * k) as f64 * sigma2); k];
    let single = cols.iter().map(|e| e / (k as f64 * sigma2)).collect();
    Ok((cross, single))
}

/// `a ≺ b`: decreasing-sorted prefix sums of `a` never exceed those of `b`
/// and the totals agree to 1e-9 relative.
pub fn majorizes(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let (ta, tb): (f64, f64) = (sa.iter().sum(), sb.iter().sum());
    let scale = ta.abs().max(tb.abs()).max(f64::MIN_POSITIVE);
    if (ta - tb).abs() > 1e-9 * scale {
        return Ok(false);
    }
    let tol = 1e-12 * scale;
    let (mut pa, mut pb) = (0.0, 0.0);
    for (x, y) in sa.iter().zip(&sb) {
        pa += x;
        pb += y;
        if pa > pb + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `lambda x + (1 - lambda) P x` with `P` swapping entries `i` and `j`.
pub fn t_transform(x: &mut [f64], i: usize, j: usize, lambda: f64) {
    let (a, b) = (x[i], x[j]);
    x[i] = lambda * a + (1.0 - lambda) * b;
    x[j] = lambda * b + (1.0 - lambda) * a;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurReport {
    pub samples: usize,
    pub dim: usize,
    /// Generated pairs that failed the `a ≺ b` check itself.
    pub majorization_failures: usize,
    /// Pairs with `f(a) < f(b)` beyond rounding.
    pub violations: usize,
    pub min_gap: f64,
}

/// Draws `b`, builds `a` from 1 to 8 random T-transforms of `b`, and checks
/// `f(a) >= f(b)`.
pub fn schur_concavity_check(samples: usize, dim: usize, seed: u64) -> Result<SchurReport> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dim must be at least 2, got {dim}")));
    }
    let mut rng = SplitKey::new(seed).child(0x5c).rng();
    let mut report = SchurReport {
        samples,
        dim,
        majorization_failures: 0,
        violations: 0,
        min_gap: f64::INFINITY,
    };
    for _ in 0..samples {
        let scale: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
        let b: Vec<f64> = (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal).powi(2)).collect();
        let mut a = b.clone();
        for _ in 0..rng.random_range(1..=8) {
            let i = rng.random_range(0..dim);
            let j = (i + rng.random_range(1..dim)) % dim;
            t_transform(&mut a, i, j, rng.random_range(0.0..=1.0));
        }
        if !majorizes(&a, &b)? {
            report.majorization_failures += 1;
        }
        let (fa, fb) = (schur_f(&a), schur_f(&b));
        let gap = fa - fb;
        report.min_gap = report.min_gap.min(gap);
        if gap < -1e-12 * fb.abs().max(1.0) {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub dim: RateDim,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean sum-rate per block of `n` symbols at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub snr_db: f64,
    pub n: usize,
    pub trials: usize,
    pub rates: Vec<RateEntry>,
}

impl RateReport {
    pub fn get(&self, dim: RateDim) -> Option<&RateEntry> {
        self.rates.iter().find(|e| e.dim == dim)
    }
}

/// Per-block sums of `wx^2`, `wx wz`, `wz^2` at one block length.
struct Moments {
    xx: Vec<f64>,
    xz: Vec<f64>,
    zz: Vec<f64>,
    lens: Vec<usize>,
}

fn block_moments(wx: &[f64], wz: &[f64], d: usize) -> Moments {
    let mut m = Moments {
        xx: Vec::new(),
        xz: Vec::new(),
        zz: Vec::new(),
        lens: Vec::new(),
    };
    for (bx, bz) in wx.chunks(d).zip(wz.chunks(d)) {
        let (mut xx, mut xz, mut zz) = (0.0, 0.0, 0.0);
        for (a, b) in bx.iter().zip(bz) {
            xx += a * a;
            xz += a * b;
            zz += b * b;
        }
        m.xx.push(xx);
        m.xz.push(xz);
        m.zz.push(zz);
        m.lens.push(bx.len());
    }
    m
}

/// Monte Carlo sum-rates over an SNR grid with unit signal variance.
///
/// Trial `t` draws standard normal `wx`, `wz` from `key.path(&[t, 0|1])`
/// and uses `y = wx + sigma wz` at every SNR (common random numbers).
/// A block length that does not divide `n` leaves a shorter final block
/// that is rated at its own length. Results do not depend on the thread
/// count.
pub fn rate_sweep(n: usize, trials: usize, snr_db: &[f64], dims: &[RateDim], key: &SplitKey) -> Result<Vec<RateReport>> {
    if n == 0 || trials == 0 || snr_db.is_empty() || dims.is_empty() {
        return Err(Error::InvalidParameter("rate sweep needs n, trials, SNRs and dims".into()));
    }
    if dims.contains(&RateDim::Dim(0)) {
        return Err(Error::InvalidParameter("dimension 0".into()));
    }
    let sigmas: Vec<f64> = snr_db.iter().map(|db| 10f64.powf(-db / 10.0)).collect();
    // per trial: rates[snr][dim]
    let per_trial: Vec<Vec<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rx = key.path(&[t as u64, 0]).rng();
            let mut rz = key.path(&[t as u64, 1]).rng();
            let wx: Vec<f64> = (0..n).map(|_| rx.sample(StandardNormal)).collect();
            let wz: Vec<f64> = (0..n).map(|_| rz.sample(StandardNormal)).collect();
            let moments: Vec<Moments> = dims.iter().map(|d| block_moments(&wx, &wz, d.block_len(n))).collect();
            sigmas
                .iter()
                .map(|&s2| {
                    let s = s2.sqrt();
                    moments
                        .iter()
                        .map(|m| {
                            let d = m.lens[0];
                            let energy = |g: usize| m.xx[g] + 2.0 * s * m.xz[g] + s2 * m.zz[g];
                            let full = m.lens.iter().take_while(|&&l| l == d).count();
                            let inv = 1.0 / (d as f64 * s2);
                            let body = 0.5 * d as f64 * log2_sum_1p((0..full).map(|g| energy(g) * inv));
                            body + (full..m.lens.len()).map(|g| block_rate(energy(g), s2, m.lens[g])).sum::<f64>()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(snr_db
        .iter()
        .enumerate()
        .map(|(si, &db)| RateReport {
            snr_db: db,
            n,
            trials,
            rates: dims
                .iter()
                .enumerate()
                .map(|(di, &dim)| {
                    let xs: Vec<f64> = per_trial.iter().map(|r| r[si][di]).collect();
                    let (mean, stderr) = mean_stderr(&xs);
                    RateEntry { dim, mean, stderr }
                })
                .collect(),
        })
        .collect())
}

/// `sum log2(1 + x_i)` for `x_i >= 0` with one logarithm per run of
/// factors whose product stays below 1e250.
fn log2_sum_1p(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut prod = 1.0;
    for x in xs {
        let f = 1.0 + x;
        if prod * f > 1e250 {
            acc += prod.ln();
            prod = 1.0;
        }
        prod *= f;
    }
    (acc + prod.ln()) / std::f64::consts::LN_2
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
