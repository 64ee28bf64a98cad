//! Flooding sum-product decoding toward a target syndrome.
//!
//! Check node `c` enforces `sum_{v in c} bit_v = s_c (mod 2)`. With the tanh
//! rule this only flips the sign of every outgoing message of checks whose
//! target bit is 1; the rest is the textbook decoder.

use super::code::LdpcCode;
use super::llr::{LlrVector, LLR_CLIP};
use crate::{Error, Result};

/// Largest `|prod tanh|` fed to atanh; keeps messages finite before clipping.
const MAX_TANH: f64 = 1.0 - 1e-15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    /// Iterations run (a flooding check pass plus a variable pass each).
    pub iterations: usize,
    /// `H bits == s` on exit.
    pub converged: bool,
}

/// Edge-indexed Tanner graph of a code. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    n: usize,
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    var_start: Vec<usize>,
    var_edges: Vec<u32>,
    max_row: usize,
}

impl SumProductDecoder {
    pub fn new(code: &LdpcCode) -> Self {
        let mut check_start = Vec::with_capacity(code.m() + 1);
        let mut edge_var = Vec::with_capacity(code.edge_count());
        check_start.push(0);
        for row in code.rows() {
            edge_var.extend_from_slice(row);
            check_start.push(edge_var.len());
        }
        let mut per_var: Vec<Vec<u32>> = vec![Vec::new(); code.n()];
        for (e, &v) in edge_var.iter().enumerate() {
            per_var[v as usize].push(e as u32);
        }
        let mut var_start = Vec::with_capacity(code.n() + 1);
        var_start.push(0);
        let mut var_edges = Vec::with_capacity(edge_var.len());
        for list in per_var {
            var_edges.extend(list);
            var_start.push(var_edges.len());
        }
        SumProductDecoder {
            n: code.n(),
            check_start,
            edge_var,
            var_start,
            var_edges,
            max_row: code.rows().iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    fn checks(&self) -> usize {
        self.check_start.len() - 1
    }

    fn satisfies(&self, bits: &[u8], syndrome: &[u8]) -> bool {
        (0..self.checks()).all(|c| {
            let p = self.edge_var[self.check_start[c]..self.check_start[c + 1]]
                .iter()
                .fold(0u8, |a, &v| a ^ bits[v as usize]);
            p == syndrome[c] & 1
        })
    }

    pub fn decode(&self, llr: &LlrVector, syndrome: &[u8], max_iter: usize) -> Result<DecodeOutcome> {
        if llr.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: llr.len(),
            });
        }
        if syndrome.len() != self.checks() {
            return Err(Error::DimensionMismatch {
                expected: self.checks(),
                found: syndrome.len(),
            });
        }
        let prior = llr.values();
        let mut bits = llr.hard_decision();
        if max_iter == 0 {
            let converged = self.satisfies(&bits, syndrome);
            return Ok(DecodeOutcome { bits, iterations: 0, converged });
        }
        let edges = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| prior[v as usize]).collect();
        let mut c2v = vec![0.0; edges];
        let mut t = vec![0.0; self.max_row];
        let mut prefix = vec![0.0; self.max_row];

        for iter in 1..=max_iter {
            for c in 0..self.checks() {
                let (lo, hi) = (self.check_start[c], self.check_start[c + 1]);
                let k = hi - lo;
                for (ti, &m) in t[..k].iter_mut().zip(&v2c[lo..hi]) {
                    // tanh(m/2) via one exp
                    let e = (-m.abs()).exp();
                    *ti = ((1.0 - e) / (1.0 + e)).copysign(m);
                }
                let mut acc = if syndrome[c] & 1 == 1 { -1.0 } else { 1.0 };
                for i in 0..k {
                    prefix[i] = acc;
                    acc *= t[i];
                }
                let mut suffix = 1.0;
                for i in (0..k).rev() {
                    let p = (prefix[i] * suffix).clamp(-MAX_TANH, MAX_TANH);
                    c2v[lo + i] = ((1.0 + p) / (1.0 - p)).ln().clamp(-LLR_CLIP, LLR_CLIP);
                    suffix *= t[i];
                }
            }
            for v in 0..self.n {
                let es = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let total = prior[v] + es.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                bits[v] = u8::from(total < 0.0);
                for &e in es {
                    v2c[e as usize] = (total - c2v[e as usize]).clamp(-LLR_CLIP, LLR_CLIP);
                }
            }
            if self.satisfies(&bits, syndrome) {
                return Ok(DecodeOutcome { bits, iterations: iter, converged: true });
            }
        }
        Ok(DecodeOutcome {
            bits,
            iterations: max_iter,
            converged: false,
        })
    }
}

/// One-shot convenience wrapper around [`SumProductDecoder`].
pub fn decode_syndrome(
    code: &LdpcCode,
    llr: &LlrVector,
    target_syndrome: &[u8],
    max_iter: usize,
) -> Result<DecodeOutcome> {
    SumProductDecoder::new(code).decode(llr, target_syndrome, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::code::generate_regular;
    use crate::rng::SplitKey;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn bpsk_llr(bits: &[u8], sigma: f64, rng: &mut impl Rng) -> LlrVector {
        let vals = bits
            .iter()
            .map(|&b| {
                let x = if b == 0 { 1.0 } else { -1.0 };
                let y = x + sigma * rng.sample::<f64, _>(StandardNormal);
                2.0 * y / (sigma * sigma)
            })
            .collect();
        LlrVector::new(vals).unwrap()
    }

    #[test]
    fn noiseless_converges_immediately() {
        let code = generate_regular(96, 3, 6, 3).unwrap();
        let mut rng = SplitKey::new(1).rng();
        let bits: Vec<u8> = (0..96).map(|_| rng.random_range(0..2)).collect();
        let s = code.syndrome(&bits).unwrap();
        let llr = LlrVector::new(bits.iter().map(|&b| if b == 0 { 30.0 } else { -30.0 }).collect()).unwrap();
        let out = decode_syndrome(&code, &llr, &s, 200).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert_eq!(out.bits, bits);
    }

    #[test]
    fn iteration_cap_is_exact() {
        let code = generate_regular(96, 3, 6, 3).unwrap();
        let llr = LlrVector::new(vec![0.0; 96]).unwrap();
        // all-zero LLRs never settle on a nonzero target syndrome
        let mut s = vec![0u8; 48];
        s[0] = 1;
        let out = decode_syndrome(&code, &llr, &s, 200).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 200);
        let out = decode_syndrome(&code, &llr, &s, 7).unwrap();
        assert_eq!(out.iterations, 7);
    }

    #[test]
    fn zero_iterations_checks_hard_decision() {
        let code = generate_regular(24, 3, 6, 3).unwrap();
        let llr = LlrVector::new(vec![1.0; 24]).unwrap();
        let out = decode_syndrome(&code, &llr, &[0; 12], 0).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn length_errors() {
        let code = generate_regular(24, 3, 6, 3).unwrap();
        let llr = LlrVector::new(vec![1.0; 23]).unwrap();
        assert!(decode_syndrome(&code, &llr, &[0; 12], 5).is_err());
        let llr = LlrVector::new(vec![1.0; 24]).unwrap();
        assert!(decode_syndrome(&code, &llr, &[0; 11], 5).is_err());
    }

    // Decoding toward s with LLRs x equals decoding toward 0 with the LLR
    // signs flipped on a coset representative r (H r = s), up to XOR by r.
    #[test]
    fn syndrome_flip_equivalence() {
        let code = generate_regular(48, 3, 6, 8).unwrap();
        let dec = SumProductDecoder::new(&code);
        let mut rng = SplitKey::new(2).rng();
        for _ in 0..50 {
            let r: Vec<u8> = (0..48).map(|_| rng.random_range(0..2)).collect();
            let s = code.syndrome(&r).unwrap();
            let llr: Vec<f64> = (0..48).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let flipped: Vec<f64> = llr.iter().zip(&r).map(|(l, &b)| if b == 1 { -l } else { *l }).collect();
            let a = dec.decode(&LlrVector::new(llr).unwrap(), &s, 30).unwrap();
            let b = dec.decode(&LlrVector::new(flipped).unwrap(), &vec![0; 24], 30).unwrap();
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.converged, b.converged);
            let bx: Vec<u8> = b.bits.iter().zip(&r).map(|(x, y)| x ^ y).collect();
            assert_eq!(a.bits, bx);
        }
    }

    #[test]
    fn toy_code_high_snr_fer() {
        let code = generate_regular(24, 3, 6, 5).unwrap();
        let dec = SumProductDecoder::new(&code);
        let mut rng = SplitKey::new(3).rng();
        let mut fails = 0;
        for _ in 0..1000 {
            let bits: Vec<u8> = (0..24).map(|_| rng.random_range(0..2)).collect();
            let s = code.syndrome(&bits).unwrap();
            let llr = bpsk_llr(&bits, 0.35, &mut rng);
            let out = dec.decode(&llr, &s, 50).unwrap();
            if out.bits != bits {
                fails += 1;
            }
        }
        assert!(fails < 10, "FER {}", fails as f64 / 1000.0);
    }

    #[test]
    fn fer_monotone_in_snr() {
        let code = generate_regular(240, 3, 6, 6).unwrap();
        let dec = SumProductDecoder::new(&code);
        let fer = |sigma: f64| {
            let mut rng = SplitKey::new(4).child((sigma * 1000.0) as u64).rng();
            let mut fails = 0;
            for _ in 0..500 {
                let bits: Vec<u8> = (0..240).map(|_| rng.random_range(0..2)).collect();
                let s = code.syndrome(&bits).unwrap();
                let out = dec.decode(&bpsk_llr(&bits, sigma, &mut rng), &s, 50).unwrap();
                fails += usize::from(out.bits != bits);
            }
            fails as f64 / 500.0
        };
        let (a, b, c) = (fer(0.95), fer(0.8), fer(0.65));
        assert!(a >= b && b >= c, "{a} {b} {c}");
        assert!(a > c);
    }
}
