//! Initial log-likelihood ratios for the virtual BIAWGN channel.
//!
//! Sign convention: positive favours bit 0, i.e. the `+1/sqrt(d)` symbol.

use crate::cross::CrossDims;
use crate::{Error, Result};

/// Magnitude at which all LLRs and decoder messages are clipped.
pub const LLR_CLIP: f64 = 38.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    values: Vec<f64>,
}

impl LlrVector {
    /// Clips to `±LLR_CLIP`; rejects NaN.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if v.is_nan() {
                return Err(Error::InvalidParameter("NaN LLR".into()));
            }
            *v = v.clamp(-LLR_CLIP, LLR_CLIP);
        }
        Ok(LlrVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hard_decision(&self) -> Vec<u8> {
        self.values.iter().map(|&l| u8::from(l < 0.0)).collect()
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(())
}

fn per_block(v: &[f64], norms: &[f64], block: usize, scale: impl Fn(f64) -> f64) -> Result<LlrVector> {
    if block == 0 || v.len() % block != 0 {
        return Err(Error::NotDivisible { len: v.len(), block });
    }
    if norms.len() != v.len() / block {
        return Err(Error::DimensionMismatch {
            expected: v.len() / block,
            found: norms.len(),
        });
    }
    let values = v
        .chunks_exact(block)
        .zip(norms)
        .flat_map(|(vb, &n)| {
            let k = scale(n);
            vb.iter().map(move |x| k * x)
        })
        .collect();
    LlrVector::new(values)
}

/// Cross-rotation LLRs.
///
/// The virtual channel has means `±1/sqrt(d_T)` and variance
/// `S_T sigma^2 / ||Y||_F^2`, so `LLR = 2 v ||Y||_F^2 / (sqrt(d_T) S_T sigma^2)`.
/// For 8x8 this is `||Y||_F^2 v / (8 sqrt(2) sigma^2)`.
pub fn init_llr_cross(v: &[f64], frob_norms: &[f64], sigma2: f64, dims: &CrossDims) -> Result<LlrVector> {
    check_sigma2(sigma2)?;
    let mean = 1.0 / (dims.key_dim() as f64).sqrt();
    let stride = dims.key_scale().powi(2);
    per_block(v, frob_norms, dims.total_dim(), |n| 2.0 * mean * n * n / (stride * sigma2))
}

/// Classic d-dimensional LLRs: `v = u + z'/||y||`, so
/// `LLR = 2 v ||y||^2 / (sqrt(d) sigma^2)`. Also serves the dense Householder
/// scheme for any `d`.
pub fn init_llr_classic(v: &[f64], norms: &[f64], sigma2: f64, d: usize) -> Result<LlrVector> {
    check_sigma2(sigma2)?;
    let mean = 1.0 / (d as f64).sqrt();
    per_block(v, norms, d, |n| 2.0 * mean * n * n / sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// ln N(v | +mu, var) - ln N(v | -mu, var), evaluated from the densities.
    fn density_log_ratio(v: f64, mu: f64, var: f64) -> f64 {
        let pdf = |m: f64| (-(v - m).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let (p, q) = (pdf(mu), pdf(-mu));
        if p > 1e-300 && q > 1e-300 {
            (p / q).ln()
        } else {
            // log-domain when the densities underflow
            (-(v - mu).powi(2) + (v + mu).powi(2)) / (2.0 * var)
        }
    }

    #[test]
    fn zero_observation_zero_llr() {
        let d64 = CrossDims::for_total(64).unwrap();
        let l = init_llr_cross(&[0.0; 64], &[3.0], 0.5, &d64).unwrap();
        assert!(l.values().iter().all(|&x| x == 0.0));
        let l = init_llr_classic(&[0.0; 8], &[3.0], 0.5, 8).unwrap();
        assert!(l.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constants_cancel() {
        let d64 = CrossDims::for_total(64).unwrap();
        let sigma2 = 0.37;
        let norm = (8.0 * 2f64.sqrt() * sigma2).sqrt();
        let l = init_llr_cross(&[1.0; 64], &[norm], sigma2, &d64).unwrap();
        for x in l.values() {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn classic_d1_is_plain_biawgn() {
        let l = init_llr_classic(&[0.3, -0.2], &[2.0, 0.5], 0.8, 1).unwrap();
        assert!((l.values()[0] - 2.0 * 0.3 * 4.0 / 0.8).abs() < 1e-14);
        assert!((l.values()[1] - 2.0 * -0.2 * 0.25 / 0.8).abs() < 1e-14);
    }

    #[test]
    fn matches_density_ratio() {
        let mut rng = crate::rng::SplitKey::new(4).rng();
        let d64 = CrossDims::for_total(64).unwrap();
        for _ in 0..200 {
            let sigma2: f64 = rng.random_range(0.05..5.0);
            let norm: f64 = rng.random_range(0.5..4.0);
            let v: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l = init_llr_cross(&v, &[norm], sigma2, &d64).unwrap();
            let var = 8.0 * sigma2 / (norm * norm);
            for (x, vi) in l.values().iter().zip(&v) {
                let want = density_log_ratio(*vi, 1.0 / 8f64.sqrt(), var);
                assert!((x - want.clamp(-LLR_CLIP, LLR_CLIP)).abs() <= 1e-12 * want.abs().max(1.0));
            }
            let l = init_llr_classic(&v[..8], &[norm], sigma2, 8).unwrap();
            let var = sigma2 / (norm * norm);
            for (x, vi) in l.values().iter().zip(&v) {
                let want = density_log_ratio(*vi, 1.0 / 8f64.sqrt(), var);
                assert!((x - want.clamp(-LLR_CLIP, LLR_CLIP)).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn clipping_and_errors() {
        let l = init_llr_classic(&[1.0, -1.0], &[100.0, 100.0], 0.01, 1).unwrap();
        assert_eq!(l.values(), &[LLR_CLIP, -LLR_CLIP]);
        assert_eq!(l.hard_decision(), vec![0, 1]);
        assert!(init_llr_classic(&[1.0], &[1.0], 0.0, 1).is_err());
        assert!(init_llr_classic(&[1.0], &[1.0], -1.0, 1).is_err());
        assert!(init_llr_classic(&[1.0; 3], &[1.0], 1.0, 2).is_err());
        assert!(init_llr_classic(&[1.0; 4], &[1.0], 1.0, 2).is_err());
        assert!(LlrVector::new(vec![f64::NAN]).is_err());
    }
}
