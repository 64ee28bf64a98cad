//! One reconciliation frame per scheme: sample, rotate, decode, count.

use crate::channel::{sample_pair, ChannelParams};
use crate::cross::{decode_alice, encode_bob, CrossDims};
use crate::hurwitz::{householder_mapping, BasisCache, SphericalVector};
use crate::ldpc::{init_llr_classic, init_llr_cross, LdpcCode, SumProductDecoder};
use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    /// Single closed-form rotation of dimension 1, 2, 4 or 8.
    Classic(usize),
    /// Multi-stage cross rotation.
    Cross(CrossDims),
    /// One dense Householder reflection per block of this length.
    Householder(usize),
}

impl Scheme {
    pub fn block_len(&self) -> usize {
        match self {
            Scheme::Classic(d) | Scheme::Householder(d) => *d,
            Scheme::Cross(dims) => dims.total_dim(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Classic(d) => write!(f, "classic:{d}"),
            Scheme::Cross(dims) => write!(f, "cross:{dims}"),
            Scheme::Householder(d) => write!(f, "householder:{d}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    /// `classic:8`, `cross:8x8` (or `cross:64`), `householder:64`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown scheme {s:?}"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "classic" => {
                let d: usize = arg.parse().map_err(|_| bad())?;
                CrossDims::classic(d)?;
                Ok(Scheme::Classic(d))
            }
            "cross" => Ok(Scheme::Cross(arg.parse()?)),
            "householder" => match arg.parse::<usize>() {
                Ok(d) if d > 0 => Ok(Scheme::Householder(d)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutcome {
    pub bit_errors: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Rotation plus decoding time, when measured.
    pub seconds: Option<f64>,
}

/// Shared read-only state for simulating frames of one code.
pub struct FrameContext<'a> {
    pub code: &'a LdpcCode,
    pub decoder: &'a SumProductDecoder,
    pub bases: &'a BasisCache,
    pub max_iter: usize,
    pub timing: bool,
}

/// Simulates one frame.
///
/// The frame's randomness comes from `key` alone: `child(0)` for `(x, y)`,
/// `child(1)` for the key bits and `child(2)` for auxiliary targets, so every
/// scheme sees the same channel realisation for the same key.
pub fn simulate_frame(ctx: &FrameContext<'_>, scheme: &Scheme, params: &ChannelParams, key: &SplitKey) -> Result<FrameOutcome> {
    let n = ctx.code.n();
    let block = scheme.block_len();
    if n % block != 0 {
        return Err(Error::NotDivisible { len: n, block });
    }
    let (x, y) = sample_pair(n, params, &key.child(0));
    let mut rng = key.child(1).rng();
    let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let syndrome = ctx.code.syndrome(&bits)?;

    let start = ctx.timing.then(Instant::now);
    let llr = match scheme {
        Scheme::Classic(d) => {
            let dims = CrossDims::classic(*d)?;
            let tr = encode_bob(ctx.bases, &y, &bits, &dims, &key.child(2))?;
            let v = decode_alice(ctx.bases, &tr, &x, &dims)?;
            init_llr_classic(&v, &tr.block_norms, params.sigma2, *d)?
        }
        Scheme::Cross(dims) => {
            let tr = encode_bob(ctx.bases, &y, &bits, dims, &key.child(2))?;
            let v = decode_alice(ctx.bases, &tr, &x, dims)?;
            init_llr_cross(&v, &tr.block_norms, params.sigma2, dims)?
        }
        Scheme::Householder(d) => {
            let mut v = Vec::with_capacity(n);
            let mut norms = Vec::with_capacity(n / d);
            for ((yb, xb), cb) in y.chunks_exact(*d).zip(x.chunks_exact(*d)).zip(bits.chunks_exact(*d)) {
                let u = SphericalVector::from_bits(cb);
                let q = householder_mapping(yb, u.values())?;
                let norm = yb.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.extend(q.mul_vec(xb).into_iter().map(|a| a / norm));
                norms.push(norm);
            }
            init_llr_classic(&v, &norms, params.sigma2, *d)?
        }
    };
    let out = ctx.decoder.decode(&llr, &syndrome, ctx.max_iter)?;
    let seconds = start.map(|s| s.elapsed().as_secs_f64());
    let bit_errors = out.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
    Ok(FrameOutcome {
        bit_errors,
        iterations: out.iterations,
        converged: out.converged,
        seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::generate_regular;

    #[test]
    fn scheme_names_round_trip() {
        for s in ["classic:1", "classic:8", "cross:8x8", "cross:8x4x2", "householder:64"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        assert_eq!("cross:64".parse::<Scheme>().unwrap().to_string(), "cross:8x8");
        for s in ["classic:3", "cross:7", "householder:0", "nope:1", "classic"] {
            assert!(s.parse::<Scheme>().is_err(), "{s}");
        }
    }

    #[test]
    fn noiseless_frames_decode() {
        let code = generate_regular(512, 3, 6, 1).unwrap();
        let dec = SumProductDecoder::new(&code);
        let bases = BasisCache::new();
        let ctx = FrameContext {
            code: &code,
            decoder: &dec,
            bases: &bases,
            max_iter: 50,
            timing: true,
        };
        let p = ChannelParams::from_snr_db(30.0).unwrap();
        for s in ["classic:1", "classic:8", "cross:8x8", "cross:8x8x8", "householder:64"] {
            let o = simulate_frame(&ctx, &s.parse().unwrap(), &p, &SplitKey::new(3)).unwrap();
            assert_eq!(o.bit_errors, 0, "{s}");
            assert!(o.converged);
            assert!(o.seconds.is_some());
        }
        let bad = simulate_frame(&ctx, &"householder:48".parse().unwrap(), &p, &SplitKey::new(3));
        assert!(bad.is_err());
    }
}
