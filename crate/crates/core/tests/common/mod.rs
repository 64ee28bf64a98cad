//! Reference computations for the acceptance suite. Each one recomputes a
//! quantity from its definition without going through the library path
//! that produces it.

#![allow(dead_code)]

use xrecon::ldpc::LdpcCode;

/// Dense `a * b` for row-major `d x d` matrices.
pub fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            t[j * d + i] = a[i * d + j];
        }
    }
    t
}

pub fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    (0..d).map(|i| (0..d).map(|j| a[i * d + j] * x[j]).sum()).collect()
}

/// Largest entrywise deviation of `m` from the identity.
pub fn identity_error(m: &[f64], d: usize) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            e = e.max((m[i * d + j] - target).abs());
        }
    }
    e
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `±1/sqrt(d)` with bit 1 mapped to the negative sign.
pub fn spherical(bits: &[u8]) -> Vec<f64> {
    let a = 1.0 / (bits.len() as f64).sqrt();
    bits.iter().map(|&b| if b == 0 { a } else { -a }).collect()
}

/// `ln p(v | +mu) - ln p(v | -mu)` for a Gaussian of variance `var`,
/// from the two log-densities.
pub fn gaussian_log_ratio(v: f64, mu: f64, var: f64) -> f64 {
    let log_pdf = |m: f64| -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - m) * (v - m) / (2.0 * var);
    log_pdf(mu) - log_pdf(-mu)
}

/// `(d/2) log2(1 + e/(d sigma^2))` summed over consecutive `d`-blocks.
pub fn block_sum_rate(y: &[f64], sigma2: f64, d: usize) -> f64 {
    y.chunks(d)
        .map(|b| {
            let e: f64 = b.iter().map(|v| v * v).sum();
            let len = b.len() as f64;
            len / 2.0 * (1.0 + e / (len * sigma2)).log2()
        })
        .sum()
}

/// `a ≺ b` by sorted prefix sums with relative slack `tol`.
pub fn majorized_by(a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| y.total_cmp(x));
    sb.sort_by(|x, y| y.total_cmp(x));
    let total: f64 = sb.iter().sum();
    let (mut pa, mut pb) = (0.0, 0.0);
    for (x, y) in sa.iter().zip(&sb) {
        pa += x;
        pb += y;
        if pa > pb + tol * total {
            return false;
        }
    }
    (pa - pb).abs() <= tol * total
}

pub fn log2_sum(g: &[f64]) -> f64 {
    g.iter().map(|x| (1.0 + x).log2()).sum()
}

/// Minimum-weight coset leaders for every syndrome of `code`, found by
/// walking all `2^n` error patterns in Gray-code order. Entry `s` holds the
/// leader weight and pattern (as a bit mask), or `u32::MAX` weight if the
/// syndrome is unreachable. Needs `n <= 26`.
pub struct CosetTable {
    pub n: usize,
    pub m: usize,
    col_syndrome: Vec<u64>,
    weight: Vec<u32>,
    leader: Vec<u32>,
}

impl CosetTable {
    pub fn new(code: &LdpcCode) -> Self {
        let (n, m) = (code.n(), code.m());
        assert!(n <= 26 && m <= 26, "exhaustive table limited to small codes");
        let mut col_syndrome = vec![0u64; n];
        for (r, row) in code.rows().iter().enumerate() {
            for &v in row {
                col_syndrome[v as usize] ^= 1 << r;
            }
        }
        let mut weight = vec![u32::MAX; 1 << m];
        let mut leader = vec![0u32; 1 << m];
        let (mut pattern, mut syn) = (0u32, 0u64);
        weight[0] = 0;
        for i in 1u64..(1 << n) {
            let bit = i.trailing_zeros() as usize;
            pattern ^= 1 << bit;
            syn ^= col_syndrome[bit];
            let w = pattern.count_ones();
            if w < weight[syn as usize] {
                weight[syn as usize] = w;
                leader[syn as usize] = pattern;
            }
        }
        CosetTable {
            n,
            m,
            col_syndrome,
            weight,
            leader,
        }
    }

    pub fn syndrome_of(&self, bits: &[u8]) -> u64 {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| b & 1 == 1)
            .fold(0, |s, (i, _)| s ^ self.col_syndrome[i])
    }

    /// Weight of the lightest `e` with `H e = syndrome`.
    pub fn leader_weight(&self, syndrome: u64) -> u32 {
        self.weight[syndrome as usize]
    }

    /// A zero column or two equal columns, i.e. minimum distance below 3.
    pub fn has_weak_columns(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.col_syndrome.iter().any(|&c| c == 0 || !seen.insert(c))
    }
}
