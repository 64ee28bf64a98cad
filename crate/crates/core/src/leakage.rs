//! Reconstruction identities and mutual-information estimates between the
//! published coefficients and the secret bits.

use crate::channel::{sample_pair, ChannelParams};
use crate::cross::{encode_bob_traced, CrossDims};
use crate::hurwitz::{mapping_coefficients, BasisCache, OrthoBasis, SphericalVector, SUPPORTED_DIMS};
use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Max entrywise error of the two reconstructions
/// `y = sum_j alpha_j A_j^T u` and `u~ = sum_j beta_j A_j u`, where `alpha`
/// maps `y` onto `u` and `beta` maps `u` onto `u~`. `y` is normalised first.
pub fn verify_reconstruction(basis: &OrthoBasis, u: &[f64], u_tilde: &[f64], y: &[f64]) -> Result<f64> {
    let d = basis.dim();
    for v in [u, u_tilde, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
    }
    let alpha = mapping_coefficients(basis, y, u)?;
    let beta = mapping_coefficients(basis, u, u_tilde)?;
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut err: f64 = 0.0;
    for r in 0..d {
        let (mut yr, mut ur) = (0.0, 0.0);
        for j in 0..d {
            for c in 0..d {
                yr += alpha.as_slice()[j] * basis.entry(j, c, r) * u[c];
                ur += beta.as_slice()[j] * basis.entry(j, r, c) * u[c];
            }
        }
        err = err.max((yr - y[r] / norm).abs()).max((ur - u_tilde[r]).abs());
    }
    Ok(err)
}

/// Worst [`verify_reconstruction`] error over `trials` random Gaussian `y`
/// and random spherical `u`, `u~` for every supported dimension.
pub fn reconstruction_sweep(trials: usize, key: &SplitKey) -> Result<f64> {
    let cache = BasisCache::new();
    let mut worst: f64 = 0.0;
    for d in SUPPORTED_DIMS {
        let basis = cache.get(d)?;
        let mut rng = key.child(d as u64).rng();
        for _ in 0..trials {
            let y: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let ub: Vec<u8> = (0..d).map(|_| rng.random_range(0..2)).collect();
            let tb: Vec<u8> = (0..d).map(|_| rng.random_range(0..2)).collect();
            let u = SphericalVector::from_bits(&ub);
            let t = SphericalVector::from_bits(&tb);
            worst = worst.max(verify_reconstruction(basis, u.values(), t.values(), &y)?);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiConfig {
    /// Equal-frequency bins for the revealed scalar.
    pub bins: usize,
    pub bootstrap: usize,
    /// Two-sided confidence level of the percentile interval.
    pub confidence: f64,
    /// Leakage bound in bits.
    pub threshold: f64,
    pub min_samples: usize,
    pub seed: u64,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig {
            bins: 16,
            bootstrap: 100,
            confidence: 0.95,
            threshold: 1e-2,
            min_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    /// Miller-Madow corrected plug-in estimate, bits.
    pub mi: f64,
    pub lower: f64,
    pub upper: f64,
}

impl MiEstimate {
    pub fn acceptable(&self, threshold: f64) -> bool {
        self.lower <= 0.0 || self.upper <= threshold
    }
}

/// Equal-frequency bin index of every value. Ties share a bin, so a
/// two-valued input occupies two bins.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<u16> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let edges: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
    values
        .iter()
        .map(|v| edges.partition_point(|e| e.total_cmp(v).is_le()) as u16)
        .collect()
}

/// Miller-Madow corrected MI in bits of a `rows x 2` contingency table.
fn table_mi(table: &[u64], total: u64) -> f64 {
    let n = total as f64;
    let rows = table.len() / 2;
    let mut col = [0u64; 2];
    let mut row = vec![0u64; rows];
    for r in 0..rows {
        for c in 0..2 {
            row[r] += table[2 * r + c];
            col[c] += table[2 * r + c];
        }
    }
    let h = |counts: &mut dyn Iterator<Item = u64>| {
        let (mut h, mut nz) = (0.0, 0usize);
        for k in counts.filter(|&k| k > 0) {
            let p = k as f64 / n;
            h -= p * p.ln();
            nz += 1;
        }
        h + (nz as f64 - 1.0) / (2.0 * n)
    };
    let hx = h(&mut row.iter().copied());
    let hy = h(&mut col.iter().copied());
    let hxy = h(&mut table.iter().copied());
    (hx + hy - hxy) / std::f64::consts::LN_2
}

/// MI between pre-binned values (`0..bins`) and bits, with a multinomial
/// bootstrap percentile interval.
pub fn estimate_mi_binned(bins: &[u16], nbins: usize, secret: &[u8], config: &MiConfig, key: &SplitKey) -> Result<MiEstimate> {
    if bins.len() != secret.len() {
        return Err(Error::DimensionMismatch {
            expected: bins.len(),
            found: secret.len(),
        });
    }
    if bins.len() < config.min_samples {
        return Err(Error::InsufficientSamples {
            needed: config.min_samples,
            got: bins.len(),
        });
    }
    let mut table = vec![0u64; 2 * nbins];
    for (&b, &s) in bins.iter().zip(secret) {
        table[2 * b as usize + (s & 1) as usize] += 1;
    }
    let total = bins.len() as u64;
    let mi = table_mi(&table, total);
    if config.bootstrap == 0 {
        return Ok(MiEstimate { mi, lower: mi, upper: mi });
    }
    let mut rng = key.rng();
    let mut boot = Vec::with_capacity(config.bootstrap);
    let mut resampled = vec![0u64; table.len()];
    for _ in 0..config.bootstrap {
        let (mut left, mut mass) = (total, total);
        for (slot, &k) in resampled.iter_mut().zip(&table) {
            *slot = if k == 0 || left == 0 {
                0
            } else if k >= mass {
                left
            } else {
                Binomial::new(left, k as f64 / mass as f64)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sample(&mut rng)
            };
            left -= *slot;
            mass -= k;
        }
        boot.push(table_mi(&resampled, total));
    }
    boot.sort_by(f64::total_cmp);
    let tail = (1.0 - config.confidence) / 2.0;
    let at = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
    Ok(MiEstimate {
        mi,
        lower: at(tail),
        upper: at(1.0 - tail),
    })
}

/// [`estimate_mi_binned`] after equal-frequency binning of `revealed`.
pub fn estimate_mi(revealed: &[f64], secret: &[u8], config: &MiConfig, key: &SplitKey) -> Result<MiEstimate> {
    if config.bins < 2 {
        return Err(Error::InvalidParameter("need at least two bins".into()));
    }
    if revealed.len() < config.min_samples {
        return Err(Error::InsufficientSamples {
            needed: config.min_samples,
            got: revealed.len(),
        });
    }
    let bins = equal_frequency_bins(revealed, config.bins);
    estimate_mi_binned(&bins, config.bins, secret, config, key)
}

/// Published scalars and secret bits, one row per block.
#[derive(Debug, Clone)]
pub struct ProtocolSamples {
    pub revealed_names: Vec<String>,
    /// Column-major: `revealed[k][sample]`.
    pub revealed: Vec<Vec<f64>>,
    pub secret_names: Vec<String>,
    pub secrets: Vec<Vec<u8>>,
}

/// Runs Bob's encoder on `samples` independent blocks and records every
/// coefficient, the block norm, the key bits and the auxiliary bits of all
/// intermediate stages.
pub fn collect_protocol_samples(dims: &CrossDims, snr_db: f64, samples: usize, key: &SplitKey) -> Result<ProtocolSamples> {
    let d = dims.total_dim();
    let t_count = dims.stage_count();
    let params = ChannelParams::from_snr_db(snr_db)?;
    let (_, y) = sample_pair(samples * d, &params, &key.child(0));
    let mut rng = key.child(1).rng();
    let bits: Vec<u8> = (0..samples * d).map(|_| rng.random_range(0..2)).collect();
    let cache = BasisCache::new();
    let (tr, trace) = encode_bob_traced(&cache, &y, &bits, dims, &key.child(2))?;

    let mut revealed_names = Vec::new();
    let mut revealed = Vec::new();
    for t in 0..t_count {
        for k in 0..d {
            revealed_names.push(format!("stage{t}[{k}]"));
            revealed.push((0..samples).map(|g| tr.stage_coefficients(g, t)[k]).collect());
        }
    }
    revealed_names.push("norm".into());
    revealed.push(tr.block_norms.clone());

    let mut secret_names = Vec::new();
    let mut secrets = Vec::new();
    for k in 0..d {
        secret_names.push(format!("key[{k}]"));
        secrets.push((0..samples).map(|g| bits[g * d + k]).collect());
    }
    // intermediate targets are recovered from the sign of each stage output
    for t in 0..t_count - 1 {
        for k in 0..d {
            secret_names.push(format!("aux{t}[{k}]"));
            secrets.push(trace.iter().map(|b| u8::from(b.stage_outputs[t][k] < 0.0)).collect());
        }
    }
    Ok(ProtocolSamples {
        revealed_names,
        revealed,
        secret_names,
        secrets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiEntry {
    pub revealed: String,
    pub secret: String,
    #[serde(flatten)]
    pub estimate: MiEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// A bit against itself; should be close to 1.
    pub self_mi: MiEstimate,
    /// A bit against an independent Gaussian; should be close to 0.
    pub independent_mi: MiEstimate,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub samples: usize,
    pub identity_max_error: f64,
    pub config: MiConfig,
    pub calibration: Calibration,
    pub max_mi: f64,
    pub max_upper: f64,
    pub mi_estimates: Vec<MiEntry>,
    pub passed: bool,
}

impl LeakageReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Self and independence controls on `n` fresh samples.
pub fn calibrate(n: usize, config: &MiConfig) -> Result<Calibration> {
    let key = SplitKey::new(config.seed).child(0xca1);
    let mut rng = key.child(0).rng();
    let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let as_real: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
    let self_mi = estimate_mi(&as_real, &bits, config, &key.child(1))?;
    let independent_mi = estimate_mi(&noise, &bits, config, &key.child(2))?;
    let passed = (self_mi.mi - 1.0).abs() < 0.01 && independent_mi.acceptable(config.threshold) && independent_mi.mi.abs() < config.threshold;
    Ok(Calibration {
        self_mi,
        independent_mi,
        passed,
    })
}

/// Calibration, reconstruction identities and every revealed/secret pair.
/// Pairs run in parallel with per-pair bootstrap keys, so the report does
/// not depend on the thread count.
pub fn audit(samples: &ProtocolSamples, identity_trials: usize, config: &MiConfig) -> Result<LeakageReport> {
    let n = samples.revealed.first().map_or(0, Vec::len);
    let calibration = calibrate(n, config)?;
    let identity_max_error = reconstruction_sweep(identity_trials, &SplitKey::new(config.seed).child(0x1de))?;
    if config.bins < 2 || config.bins > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!("bad bin count {}", config.bins)));
    }
    let binned: Vec<Vec<u16>> = samples
        .revealed
        .par_iter()
        .map(|col| equal_frequency_bins(col, config.bins))
        .collect();
    let boot = SplitKey::new(config.seed).child(0xb007);
    let ns = samples.secrets.len();
    let mi_estimates = (0..binned.len() * ns)
        .into_par_iter()
        .map(|p| {
            let (r, s) = (p / ns, p % ns);
            let estimate = estimate_mi_binned(&binned[r], config.bins, &samples.secrets[s], config, &boot.child(p as u64))?;
            Ok(MiEntry {
                revealed: samples.revealed_names[r].clone(),
                secret: samples.secret_names[s].clone(),
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_mi = mi_estimates.iter().map(|e| e.estimate.mi).fold(f64::NEG_INFINITY, f64::max);
    let max_upper = mi_estimates.iter().map(|e| e.estimate.upper).fold(f64::NEG_INFINITY, f64::max);
    let passed = calibration.passed
        && identity_max_error <= 1e-10
        && mi_estimates
            .iter()
            .all(|e| e.estimate.mi < config.threshold && e.estimate.acceptable(config.threshold));
    Ok(LeakageReport {
        samples: n,
        identity_max_error,
        config: config.clone(),
        calibration,
        max_mi,
        max_upper,
        mi_estimates,
        passed,
    })
}
