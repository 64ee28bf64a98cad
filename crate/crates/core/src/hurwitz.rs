//! Closed-form orthogonal mapping matrices.
//!
//! For d in {1, 2, 4, 8} there is a family of orthogonal matrices
//! `A_1 = I, A_2, ..., A_d` such that `{A_1 y, ..., A_d y}` is an orthonormal
//! basis for every unit vector `y`. Any unit target `u` is then reached from
//! `y` by `M = sum_i alpha_i A_i` with `alpha_i = u^T A_i y / ||y||`, and `M`
//! is completely described by the `d` coefficients `alpha`.
//!
//! The families used here are the left-multiplication tables of the reals,
//! complex numbers, quaternions and octonions, generated by the Cayley-Dickson
//! doubling so that `A_i` is left multiplication by the i-th unit.

use crate::{Error, Result};

/// Dimensions for which a closed-form basis exists.
pub const SUPPORTED_DIMS: [usize; 4] = [1, 2, 4, 8];

/// Cayley-Dickson product of two elements of dimension 1, 2, 4 or 8.
///
/// `(a, b)(c, d) = (ac - d* b, d a + b c*)`.
fn cd_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let dsb = cd_mul(&cd_conj(d), b);
    let da = cd_mul(d, a);
    let bcs = cd_mul(b, &cd_conj(c));
    let mut out = Vec::with_capacity(n);
    out.extend(ac.iter().zip(&dsb).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bcs).map(|(p, q)| p + q));
    out
}

fn cd_conj(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
    out[0] = x[0];
    out
}

/// The fixed matrix family `{A_i}` for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    dim: usize,
    /// Row-major `dim x dim` matrices.
    matrices: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A_i` (0-based) as a row-major slice.
    pub fn matrix(&self, i: usize) -> &[f64] {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[Vec<f64>] {
        &self.matrices
    }

    /// Entry `(row, col)` of `A_i`.
    #[inline]
    pub fn entry(&self, i: usize, row: usize, col: usize) -> f64 {
        self.matrices[i][row * self.dim + col]
    }
}

/// Build the basis for `dim`. Deterministic.
pub fn build_basis(dim: usize) -> Result<OrthoBasis> {
    if !SUPPORTED_DIMS.contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let unit = |k: usize| {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        e
    };
    let matrices = (0..dim)
        .map(|i| {
            let ei = unit(i);
            let mut m = vec![0.0; dim * dim];
            for col in 0..dim {
                let prod = cd_mul(&ei, &unit(col));
                for (row, v) in prod.into_iter().enumerate() {
                    m[row * dim + col] = v;
                }
            }
            m
        })
        .collect();
    Ok(OrthoBasis { dim, matrices })
}

/// All four closed-form bases, built once and shared.
#[derive(Debug, Clone)]
pub struct BasisCache {
    bases: [OrthoBasis; 4],
}

impl Default for BasisCache {
    fn default() -> Self {
        Self::new()
    }
}

impl BasisCache {
    pub fn new() -> Self {
        let b = |d| build_basis(d).expect("supported dimension");
        BasisCache {
            bases: [b(1), b(2), b(4), b(8)],
        }
    }

    pub fn get(&self, dim: usize) -> Result<&OrthoBasis> {
        match dim {
            1 => Ok(&self.bases[0]),
            2 => Ok(&self.bases[1]),
            4 => Ok(&self.bases[2]),
            8 => Ok(&self.bases[3]),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }
}

/// Vector of `±1/sqrt(d)` entries carrying `d` bits; bit 0 maps to `+`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalVector {
    values: Vec<f64>,
}

impl SphericalVector {
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut values = vec![0.0; bits.len()];
        spherical_into(bits, &mut values);
        SphericalVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.values.iter().map(|&v| u8::from(v < 0.0)).collect()
    }
}

/// Write the spherical image of `bits` into `out`.
pub fn spherical_into(bits: &[u8], out: &mut [f64]) {
    let a = 1.0 / (bits.len() as f64).sqrt();
    for (o, &b) in out.iter_mut().zip(bits) {
        *o = if b & 1 == 0 { a } else { -a };
    }
}

/// Coefficients `alpha` that fully determine a mapping matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingCoefficients {
    coeffs: Vec<f64>,
}

impl MappingCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if !SUPPORTED_DIMS.contains(&coeffs.len()) {
            return Err(Error::UnsupportedDimension(coeffs.len()));
        }
        Ok(MappingCoefficients { coeffs })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut c = vec![0.0; dim];
        if dim > 0 {
            c[0] = 1.0;
        }
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    /// Dense `M = sum_i alpha_i A_i`, row-major.
    pub fn matrix(&self, basis: &OrthoBasis) -> Result<Vec<f64>> {
        check_dim(basis.dim(), self.dim())?;
        Ok(mapping_matrix(basis, &self.coeffs))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn checked_norm(v: &[f64]) -> Result<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n.is_finite() && n >= f64::MIN_POSITIVE) {
        return Err(Error::ZeroNorm);
    }
    Ok(n)
}

/// `alpha_i = u^T A_i y / ||y||`.
pub fn mapping_coefficients(
    basis: &OrthoBasis,
    y: &[f64],
    u: &[f64],
) -> Result<MappingCoefficients> {
    let d = basis.dim();
    check_dim(d, y.len())?;
    check_dim(d, u.len())?;
    let norm = checked_norm(y)?;
    let mut coeffs = vec![0.0; d];
    coefficients_into(basis, y, u, norm, &mut coeffs);
    Ok(MappingCoefficients { coeffs })
}

/// Unchecked kernel behind [`mapping_coefficients`].
pub(crate) fn coefficients_into(basis: &OrthoBasis, y: &[f64], u: &[f64], norm: f64, out: &mut [f64]) {
    let d = basis.dim();
    for (i, o) in out.iter_mut().enumerate() {
        let a = basis.matrix(i);
        let mut s = 0.0;
        for r in 0..d {
            let row = &a[r * d..(r + 1) * d];
            let ay: f64 = row.iter().zip(y).map(|(p, q)| p * q).sum();
            s += u[r] * ay;
        }
        *o = s / norm;
    }
}

pub(crate) fn mapping_matrix(basis: &OrthoBasis, coeffs: &[f64]) -> Vec<f64> {
    let d = basis.dim();
    let mut m = vec![0.0; d * d];
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (mv, av) in m.iter_mut().zip(basis.matrix(i)) {
            *mv += c * av;
        }
    }
    m
}

/// `out = M x` (or `M^T x` when `transpose`), with `M` given row-major.
pub(crate) fn mat_vec(m: &[f64], x: &[f64], transpose: bool, out: &mut [f64]) {
    let d = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = if transpose {
            (0..d).map(|c| m[c * d + r] * x[c]).sum()
        } else {
            m[r * d..(r + 1) * d].iter().zip(x).map(|(p, q)| p * q).sum()
        };
    }
}

/// `M x` for the mapping matrix given by `coeffs`.
pub fn apply_mapping(basis: &OrthoBasis, coeffs: &MappingCoefficients, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(basis.dim(), coeffs.dim())?;
    check_dim(basis.dim(), x.len())?;
    let m = mapping_matrix(basis, coeffs.as_slice());
    let mut out = vec![0.0; x.len()];
    mat_vec(&m, x, false, &mut out);
    Ok(out)
}

/// `M^T v`; `M` is orthogonal, so this undoes [`apply_mapping`].
pub fn apply_inverse_mapping(
    basis: &OrthoBasis,
    coeffs: &MappingCoefficients,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_dim(basis.dim(), coeffs.dim())?;
    check_dim(basis.dim(), v.len())?;
    let m = mapping_matrix(basis, coeffs.as_slice());
    let mut out = vec![0.0; v.len()];
    mat_vec(&m, v, true, &mut out);
    Ok(out)
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(n * n, data.len())?;
        Ok(DenseMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        mat_vec(&self.data, x, false, &mut out);
        out
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        mat_vec(&self.data, x, true, &mut out);
        out
    }
}

/// Householder reflection `Q` with `Q y / ||y|| = u`, for any dimension.
///
/// `Q = I - 2 w w^T` with `w = (y/||y|| - u) / ||y/||y|| - u||`; the identity
/// when the two directions already agree to within 1e-12. `u` must be unit norm.
pub fn householder_mapping(y: &[f64], u: &[f64]) -> Result<DenseMatrix> {
    let n = y.len();
    check_dim(n, u.len())?;
    let norm = checked_norm(y)?;
    let mut w: Vec<f64> = y.iter().zip(u).map(|(a, b)| a / norm - b).collect();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if wn < 1e-12 {
        return Ok(DenseMatrix::identity(n));
    }
    w.iter_mut().for_each(|x| *x /= wn);
    let mut data = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let delta = if r == c { 1.0 } else { 0.0 };
            data[r * n + c] = delta - 2.0 * w[r] * w[c];
        }
    }
    Ok(DenseMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gram_dev(basis: &OrthoBasis, y: &[f64]) -> f64 {
        let d = basis.dim();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut o = vec![0.0; d];
                mat_vec(basis.matrix(i), y, false, &mut o);
                o
            })
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let g: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - e).abs());
            }
        }
        worst
    }

    fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn dim1_is_identity() {
        let b = build_basis(1).unwrap();
        assert_eq!(b.matrices(), &[vec![1.0]]);
    }

    #[test]
    fn dim2_is_complex_multiplication() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.matrix(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.matrix(1), &[0.0, -1.0, 1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let y = unit(&mut rng, 2);
            assert!(gram_dev(&b, &y) <= 1e-10);
        }
    }

    #[test]
    fn unsupported_dims_rejected() {
        for d in [0, 3, 5, 16, 64] {
            assert!(matches!(build_basis(d), Err(Error::UnsupportedDimension(x)) if x == d));
        }
    }

    #[test]
    fn first_matrix_identity_and_all_orthogonal() {
        for d in SUPPORTED_DIMS {
            let b = build_basis(d).unwrap();
            assert_eq!(b.matrix(0), DenseMatrix::identity(d).as_slice());
            for i in 0..d {
                for r in 0..d {
                    for c in 0..d {
                        let g: f64 = (0..d).map(|k| b.entry(i, k, r) * b.entry(i, k, c)).sum();
                        let e = if r == c { 1.0 } else { 0.0 };
                        assert!((g - e).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    // Exhaustive over all 64 (i, j) pairs for d = 8.
    #[test]
    fn octonion_anticommutation() {
        let b = build_basis(8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                for r in 0..8 {
                    for c in 0..8 {
                        let s: f64 = (0..8)
                            .map(|k| b.entry(i, k, r) * b.entry(j, k, c) + b.entry(j, k, r) * b.entry(i, k, c))
                            .sum();
                        let e = if i == j && r == c { 2.0 } else { 0.0 };
                        assert!((s - e).abs() <= 1e-12, "pair ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn hurwitz_gram_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in SUPPORTED_DIMS {
            let b = build_basis(d).unwrap();
            for _ in 0..1000 {
                let y = unit(&mut rng, d);
                assert!(gram_dev(&b, &y) <= 1e-10);
            }
        }
    }

    #[test]
    fn coefficients_hand_example() {
        let b = build_basis(2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let c = mapping_coefficients(&b, &[1.0, 0.0], &[h, h]).unwrap();
        assert!((c.as_slice()[0] - h).abs() < 1e-15);
        assert!((c.as_slice()[1] - h).abs() < 1e-15);
        let m = apply_mapping(&b, &c, &[1.0, 0.0]).unwrap();
        assert!((m[0] - h).abs() < 1e-15 && (m[1] - h).abs() < 1e-15);
    }

    #[test]
    fn parallel_input_gives_identity() {
        let b = build_basis(8).unwrap();
        let u = SphericalVector::from_bits(&[0, 1, 1, 0, 1, 0, 0, 1]);
        let y: Vec<f64> = u.values().iter().map(|v| 7.3 * v).collect();
        let c = mapping_coefficients(&b, &y, u.values()).unwrap();
        assert!((c.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!(c.as_slice()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dim1_sign_agreement() {
        let b = build_basis(1).unwrap();
        let c = mapping_coefficients(&b, &[-2.5], &[-1.0]).unwrap();
        assert_eq!(c.as_slice(), &[1.0]);
    }

    #[test]
    fn zero_and_mismatch_errors() {
        let b = build_basis(4).unwrap();
        let u = [0.5; 4];
        assert!(matches!(mapping_coefficients(&b, &[0.0; 4], &u), Err(Error::ZeroNorm)));
        assert!(matches!(
            mapping_coefficients(&b, &[1e-320, 0.0, 0.0, 0.0], &u),
            Err(Error::ZeroNorm)
        ));
        assert!(matches!(
            mapping_coefficients(&b, &[1.0; 3], &u),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
        let id = MappingCoefficients::identity(4).unwrap();
        assert!(apply_mapping(&b, &id, &[1.0; 8]).is_err());
        assert!(apply_inverse_mapping(&b, &id, &[1.0; 2]).is_err());
        assert!(householder_mapping(&[0.0; 5], &[1.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_coefficients_fix_vectors() {
        let b = build_basis(8).unwrap();
        let id = MappingCoefficients::identity(8).unwrap();
        let x = [1.0, -2.0, 3.5, 0.25, 9.0, -1.0, 0.0, 4.0];
        assert_eq!(apply_mapping(&b, &id, &x).unwrap(), x);
        assert_eq!(apply_inverse_mapping(&b, &id, &x).unwrap(), x);
    }

    #[test]
    fn spherical_bits_roundtrip() {
        let bits = [0u8, 1, 1, 0];
        let s = SphericalVector::from_bits(&bits);
        assert_eq!(s.values(), &[0.5, -0.5, -0.5, 0.5]);
        let n: f64 = s.values().iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() <= 1e-15);
        assert_eq!(s.to_bits(), bits);
    }

    #[test]
    fn householder_degenerate_is_identity() {
        let u = SphericalVector::from_bits(&[0, 1, 0]);
        let q = householder_mapping(u.values(), u.values()).unwrap();
        assert_eq!(q, DenseMatrix::identity(3));
    }

    #[test]
    fn householder_d64() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y: Vec<f64> = (0..64).map(|_| rng.sample(StandardNormal)).collect();
            let bits: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
            let u = SphericalVector::from_bits(&bits);
            let q = householder_mapping(&y, u.values()).unwrap();
            let n = checked_norm(&y).unwrap();
            let qy = q.mul_vec(&y);
            for (a, b) in qy.iter().zip(u.values()) {
                assert!((a / n - b).abs() <= 1e-10);
            }
            for r in 0..64 {
                for c in 0..64 {
                    let g: f64 = (0..64).map(|k| q.get(k, r) * q.get(k, c)).sum();
                    let e = if r == c { 1.0 } else { 0.0 };
                    assert!((g - e).abs() <= 1e-12);
                }
            }
        }
    }

    fn bits_strategy(d: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..2, d)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]

        #[test]
        fn mapping_contract(dim_idx in 0usize..4, seed in any::<u64>(), bits in bits_strategy(8)) {
            let d = SUPPORTED_DIMS[dim_idx];
            let b = build_basis(d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
            let u = SphericalVector::from_bits(&bits[..d]);
            let c = mapping_coefficients(&b, &y, u.values()).unwrap();
            let cn: f64 = c.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((cn - 1.0).abs() <= 1e-10);
            let n = checked_norm(&y).unwrap();
            let my = apply_mapping(&b, &c, &y).unwrap();
            for (a, e) in my.iter().zip(u.values()) {
                prop_assert!((a - n * e).abs() <= 1e-10 * n.max(1.0));
            }
            // <Mx, Mx'> = <x, x'>
            let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let x2: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let mx = apply_mapping(&b, &c, &x).unwrap();
            let mx2 = apply_mapping(&b, &c, &x2).unwrap();
            let lhs: f64 = mx.iter().zip(&mx2).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&x2).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
            let back = apply_inverse_mapping(&b, &c, &mx).unwrap();
            for (a, e) in back.iter().zip(&x) {
                prop_assert!((a - e).abs() <= 1e-10);
            }
            // y recovered from the target through the transpose.
            let scaled: Vec<f64> = u.values().iter().map(|v| v * n).collect();
            let y_back = apply_inverse_mapping(&b, &c, &scaled).unwrap();
            for (a, e) in y_back.iter().zip(&y) {
                prop_assert!((a - e).abs() <= 1e-10 * n.max(1.0));
            }
        }
    }
}
