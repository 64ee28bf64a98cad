//! Correlated Gaussian source, SNR/efficiency conversions and error counting.

use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `C(kappa) = 0.5 log2(1 + kappa)`.
pub fn capacity(kappa: f64) -> f64 {
    0.5 * kappa.ln_1p() / std::f64::consts::LN_2
}

/// Signal and noise variances, shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub sigma2: f64,
    pub signal_var: f64,
}

impl ChannelParams {
    pub fn new(signal_var: f64, sigma2: f64) -> Result<Self> {
        if !(signal_var > 0.0 && signal_var.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "variances must be positive and finite, got signal {signal_var}, noise {sigma2}"
            )));
        }
        Ok(ChannelParams { sigma2, signal_var })
    }

    /// Unit signal variance, noise set from the linear SNR.
    pub fn from_snr(snr: f64) -> Result<Self> {
        Self::new(1.0, 1.0 / snr)
    }

    pub fn from_snr_db(db: f64) -> Result<Self> {
        Self::from_snr(db_to_linear(db))
    }

    pub fn snr(&self) -> f64 {
        self.signal_var / self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr())
    }
}

fn check_rate(r_code: f64) -> Result<()> {
    if !(r_code > 0.0 && r_code.is_finite()) {
        return Err(Error::InvalidParameter(format!("code rate must be positive, got {r_code}")));
    }
    Ok(())
}

/// SNR (linear) at which a rate-`r_code` code runs with efficiency `beta`:
/// `kappa = 2^(2R/beta) - 1`.
pub fn beta_to_snr(r_code: f64, beta: f64) -> Result<f64> {
    check_rate(r_code)?;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok((2.0 * r_code / beta * std::f64::consts::LN_2).exp_m1())
}

/// `beta = R / C(kappa)`. Values above 1 are returned as-is; they mean the
/// code rate exceeds capacity.
pub fn snr_to_beta(r_code: f64, kappa: f64) -> Result<f64> {
    check_rate(r_code)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("SNR must be positive, got {kappa}")));
    }
    Ok(r_code / capacity(kappa))
}

/// A consistent `(R, beta, kappa)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrEfficiency {
    pub r_code: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl SnrEfficiency {
    pub fn from_beta(r_code: f64, beta: f64) -> Result<Self> {
        Ok(SnrEfficiency {
            r_code,
            beta,
            kappa: beta_to_snr(r_code, beta)?,
        })
    }

    pub fn from_snr(r_code: f64, kappa: f64) -> Result<Self> {
        Ok(SnrEfficiency {
            r_code,
            beta: snr_to_beta(r_code, kappa)?,
            kappa,
        })
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.kappa)
    }
}

pub fn standard_normals(key: &SplitKey, n: usize) -> Vec<f64> {
    let mut rng = key.rng();
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Alice's `x` and Bob's `y = x + z`.
///
/// `x` and `z` come from the independent streams `key.child(0)` and
/// `key.child(1)` and are scaled standard normals, so two calls with the same
/// key and different variances share their underlying randomness.
pub fn sample_pair(n: usize, params: &ChannelParams, key: &SplitKey) -> (Vec<f64>, Vec<f64>) {
    let sx = params.signal_var.sqrt();
    let sz = params.sigma2.sqrt();
    let x: Vec<f64> = standard_normals(&key.child(0), n).into_iter().map(|w| sx * w).collect();
    let mut zr = key.child(1).rng();
    let y = x
        .iter()
        .map(|&xi| xi + sz * zr.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

/// Running bit and frame error counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorStats {
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub bits: u64,
}

impl ErrorStats {
    /// Records a frame of `frame_bits` bits with `bit_errors` wrong.
    pub fn record(&mut self, bit_errors: usize, frame_bits: usize) {
        self.frames += 1;
        self.bits += frame_bits as u64;
        self.bit_errors += bit_errors as u64;
        self.frame_errors += u64::from(bit_errors > 0);
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.frames += other.frames;
        self.frame_errors += other.frame_errors;
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
    }

    /// Bit errors over all transmitted bits; 0 with no frames.
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }
}

/// Accumulates `(bit_errors, frame_bits)` outcomes.
pub fn ber_fer_accumulate<I: IntoIterator<Item = (usize, usize)>>(frames: I) -> ErrorStats {
    let mut s = ErrorStats::default();
    for (e, b) in frames {
        s.record(e, b);
    }
    s
}
