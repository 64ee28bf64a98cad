//! Cross-rotation encoding (Bob) and decoding (Alice).
//!
//! A block of `D = d_1 * d_2 * ... * d_T` symbols is rotated in `T` stages.
//! Stage `t` partitions the block into groups of `d_t` entries taken at stride
//! `S_t = d_1 * ... * d_{t-1}` inside super-blocks of `S_t * d_t` entries, and
//! rotates every group with a closed-form mapping matrix. For `D = 64 = 8 x 8`
//! stage 1 rotates the eight columns of the column-major 8x8 reshape and stage 2
//! rotates its eight rows.
//!
//! Every stage but the last rotates onto a fresh random spherical target that
//! Bob discards. The spherical targets force the groups of the next stage to
//! share a common norm, so the last stage maps the whole block onto
//! `||Y||_F / sqrt(S_T) * u~`, where `u~` carries the key bits. Alice replays the
//! same rotations on her data and rescales, which yields a virtual BIAWGN
//! channel whose per-entry SNR is governed by the norm of the whole block.
//!
//! A single stage is exactly the classic d-dimensional reconciliation.

use crate::hurwitz::{checked_norm, coefficients_into, mapping_matrix, mat_vec, spherical_into, BasisCache};
use crate::rng::SplitKey;
use crate::{Error, Result};
use rand::Rng;

/// Stage dimensions of a (possibly multi-stage) rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrossDims {
    stages: Vec<usize>,
}

impl CrossDims {
    /// A single stage of dimension 1, 2, 4 or 8, or two or more stages drawn
    /// from {2, 4, 8} whose product is a multiple of 16.
    pub fn new(stages: Vec<usize>) -> Result<Self> {
        match stages.len() {
            0 => return Err(Error::InvalidStages("at least one stage is required".into())),
            1 => {
                if ![1, 2, 4, 8].contains(&stages[0]) {
                    return Err(Error::InvalidStages(format!(
                        "single-stage dimension must be 1, 2, 4 or 8, got {}",
                        stages[0]
                    )));
                }
            }
            _ => {
                if let Some(bad) = stages.iter().find(|d| ![2, 4, 8].contains(*d)) {
                    return Err(Error::InvalidStages(format!(
                        "cross stages must be 2, 4 or 8, got {bad}"
                    )));
                }
                let total: usize = stages.iter().product();
                if total % 16 != 0 {
                    return Err(Error::InvalidStages(format!(
                        "total dimension {total} is not an even multiple of 8"
                    )));
                }
            }
        }
        Ok(CrossDims { stages })
    }

    /// Classic single-stage reconciliation of dimension `d`.
    pub fn classic(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    /// Stage plan for a total dimension: 8 first, then the remaining factor
    /// split greedily into 8s, 4s and 2s.
    pub fn for_total(total: usize) -> Result<Self> {
        if [1, 2, 4, 8].contains(&total) {
            return Self::new(vec![total]);
        }
        if total % 16 != 0 {
            return Err(Error::InvalidStages(format!(
                "total dimension {total} is not an even multiple of 8"
            )));
        }
        let mut stages = vec![8];
        let mut rest = total / 8;
        for f in [8, 4, 2] {
            while rest % f == 0 {
                stages.push(f);
                rest /= f;
            }
        }
        if rest != 1 {
            return Err(Error::InvalidStages(format!(
                "total dimension {total} is not 8 times a power of two"
            )));
        }
        Self::new(stages)
    }

    pub fn stages(&self) -> &[usize] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn total_dim(&self) -> usize {
        self.stages.iter().product()
    }

    /// Stride between the entries of one stage-`t` group.
    pub fn stride(&self, t: usize) -> usize {
        self.stages[..t].iter().product()
    }

    /// Dimension of the key-carrying spherical vectors (last stage).
    pub fn key_dim(&self) -> usize {
        *self.stages.last().expect("non-empty")
    }

    /// `sqrt(S_T)`: the final output of a block is `||Y||_F / key_scale * u~`.
    pub fn key_scale(&self) -> f64 {
        (self.stride(self.stage_count() - 1) as f64).sqrt()
    }

    /// Indices of every stage's groups within one block, flattened so that
    /// group `j` of stage `t` is `plan[t][j * d_t..(j + 1) * d_t]`.
    pub fn layout(&self) -> Vec<Vec<usize>> {
        let total = self.total_dim();
        (0..self.stage_count())
            .map(|t| {
                let d = self.stages[t];
                let s = self.stride(t);
                let mut idx = Vec::with_capacity(total);
                for sb in 0..total / (s * d) {
                    for r in 0..s {
                        idx.extend((0..d).map(|k| sb * s * d + r + k * s));
                    }
                }
                idx
            })
            .collect()
    }
}

impl std::fmt::Display for CrossDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.stages.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", s.join("x"))
    }
}

impl std::str::FromStr for CrossDims {
    type Err = Error;

    /// `"8x8"` (explicit stages) or `"64"` (total dimension, greedy plan).
    fn from_str(s: &str) -> Result<Self> {
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidStages(format!("bad stage dimension {p:?}")))
        };
        if s.contains('x') {
            CrossDims::new(s.split('x').map(parse).collect::<Result<_>>()?)
        } else {
            CrossDims::for_total(parse(s)?)
        }
    }
}

/// Rearrange the outputs of a completed stage for the next one.
///
/// `previous` holds consecutive vectorised sub-block outputs of equal length
/// `P`. Every run of `next_dim` of them becomes the `P x next_dim` matrix whose
/// columns are the sub-blocks; its `P` rows are returned in order.
pub fn extend_stage(previous: &[Vec<f64>], next_dim: usize) -> Result<Vec<Vec<f64>>> {
    if next_dim == 0 || previous.len() % next_dim != 0 {
        return Err(Error::NotDivisible {
            len: previous.len(),
            block: next_dim,
        });
    }
    let p = previous.first().map_or(0, Vec::len);
    if let Some(bad) = previous.iter().find(|v| v.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bad.len(),
        });
    }
    let mut rows = Vec::with_capacity(previous.len() / next_dim * p);
    for chunk in previous.chunks(next_dim) {
        for r in 0..p {
            rows.push(chunk.iter().map(|col| col[r]).collect());
        }
    }
    Ok(rows)
}

/// Everything Bob publishes for one frame.
///
/// Coefficients are stored block-major, then stage-major, then group-major:
/// block `g` owns `T * D` consecutive values.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTranscript {
    pub stages: Vec<usize>,
    /// One Frobenius norm per block.
    pub block_norms: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// `s = H c`, one bit per byte.
    pub syndrome: Vec<u8>,
}

const MAGIC: &[u8; 4] = b"XRT1";

impl CrossTranscript {
    pub fn block_count(&self) -> usize {
        self.block_norms.len()
    }

    pub fn total_dim(&self) -> usize {
        self.stages.iter().product()
    }

    pub fn coefficients_per_block(&self) -> usize {
        self.stages.len() * self.total_dim()
    }

    /// Real coefficients on the wire (norms and syndrome excluded).
    pub fn coefficient_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn block_coefficients(&self, g: usize) -> &[f64] {
        let per = self.coefficients_per_block();
        &self.coeffs[g * per..(g + 1) * per]
    }

    pub fn stage_coefficients(&self, g: usize, t: usize) -> &[f64] {
        let d = self.total_dim();
        &self.block_coefficients(g)[t * d..(t + 1) * d]
    }

    /// Length-prefixed little-endian layout:
    ///
    /// ```text
    /// "XRT1" | u32 T | T x u32 stage dims | u64 G | G x f64 norms
    ///        | G*T*D x f64 coefficients | u64 m | ceil(m/8) syndrome bytes (LSB first)
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.syndrome.len();
        let mut out = Vec::with_capacity(
            4 + 4 + 4 * self.stages.len() + 8 + 8 * (self.block_norms.len() + self.coeffs.len()) + 8 + m.div_ceil(8),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.stages.len() as u32).to_le_bytes());
        for &d in &self.stages {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.block_norms.len() as u64).to_le_bytes());
        for v in self.block_norms.iter().chain(&self.coeffs) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(m as u64).to_le_bytes());
        let mut packed = vec![0u8; m.div_ceil(8)];
        for (i, &b) in self.syndrome.iter().enumerate() {
            packed[i / 8] |= (b & 1) << (i % 8);
        }
        out.extend_from_slice(&packed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad transcript magic".into()));
        }
        let t = r.u32()? as usize;
        let stages = (0..t).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        CrossDims::new(stages.clone())?;
        let g = r.u64()? as usize;
        let total: usize = stages.iter().product();
        let ncoef = g
            .checked_mul(t * total)
            .ok_or_else(|| Error::Format("coefficient count overflows".into()))?;
        if r.remaining() < (g + ncoef).saturating_mul(8) {
            return Err(Error::Format("truncated transcript".into()));
        }
        let block_norms = (0..g).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let coeffs = (0..ncoef).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let m = r.u64()? as usize;
        let packed = r.take(m.div_ceil(8))?;
        let syndrome = (0..m).map(|i| (packed[i / 8] >> (i % 8)) & 1).collect();
        if r.remaining() != 0 {
            return Err(Error::Format("trailing bytes after transcript".into()));
        }
        Ok(CrossTranscript {
            stages,
            block_norms,
            coeffs,
            syndrome,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format("truncated transcript".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Bob's state after each stage, for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    /// Vectorised block after stage `t` (index `t`).
    pub stage_outputs: Vec<Vec<f64>>,
}

fn check_block_input(n: usize, bits: usize, dims: &CrossDims) -> Result<usize> {
    let d = dims.total_dim();
    if n % d != 0 {
        return Err(Error::NotDivisible { len: n, block: d });
    }
    if bits != n {
        return Err(Error::DimensionMismatch { expected: n, found: bits });
    }
    Ok(n / d)
}

fn encode_impl(
    basis: &BasisCache,
    y: &[f64],
    bits: &[u8],
    dims: &CrossDims,
    aux: &SplitKey,
    mut trace: Option<&mut Vec<BlockTrace>>,
) -> Result<CrossTranscript> {
    let blocks = check_block_input(y.len(), bits.len(), dims)?;
    let total = dims.total_dim();
    let layout = dims.layout();
    let last = dims.stage_count() - 1;
    let bases = dims
        .stages()
        .iter()
        .map(|&d| basis.get(d))
        .collect::<Result<Vec<_>>>()?;

    let mut block_norms = Vec::with_capacity(blocks);
    let mut coeffs = vec![0.0; blocks * dims.stage_count() * total];
    let mut w = vec![0.0; total];
    let mut g = [0.0; 8];
    let mut target = [0.0; 8];
    let mut tbits = [0u8; 8];
    let mut rotated = [0.0; 8];

    for (b, (yb, cb)) in y.chunks_exact(total).zip(bits.chunks_exact(total)).enumerate() {
        block_norms.push(checked_norm(yb)?);
        w.copy_from_slice(yb);
        let mut rng = aux.child(b as u64).rng();
        let block_coeffs = &mut coeffs[b * dims.stage_count() * total..(b + 1) * dims.stage_count() * total];
        let mut outputs = Vec::new();
        for (t, plan) in layout.iter().enumerate() {
            let d = dims.stages()[t];
            let ob = bases[t];
            for (j, idx) in plan.chunks_exact(d).enumerate() {
                for k in 0..d {
                    g[k] = w[idx[k]];
                    tbits[k] = if t == last { cb[idx[k]] } else { rng.random::<bool>() as u8 };
                }
                spherical_into(&tbits[..d], &mut target[..d]);
                let norm = checked_norm(&g[..d])?;
                let out = &mut block_coeffs[t * total + j * d..t * total + (j + 1) * d];
                coefficients_into(ob, &g[..d], &target[..d], norm, out);
                let m = mapping_matrix(ob, out);
                mat_vec(&m, &g[..d], false, &mut rotated[..d]);
                for k in 0..d {
                    w[idx[k]] = rotated[k];
                }
            }
            if trace.is_some() {
                outputs.push(w.clone());
            }
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(BlockTrace { stage_outputs: outputs });
        }
    }
    Ok(CrossTranscript {
        stages: dims.stages().to_vec(),
        block_norms,
        coeffs,
        syndrome: Vec::new(),
    })
}

/// Bob's side: rotate every block of `y` so that it lands on the spherical
/// image of `bits`.
///
/// Auxiliary targets of intermediate stages come from `aux.child(block)` and
/// are dropped once used. The returned transcript has an empty syndrome; the
/// caller attaches `H c` for the code in use.
pub fn encode_bob(
    basis: &BasisCache,
    y: &[f64],
    bits: &[u8],
    dims: &CrossDims,
    aux: &SplitKey,
) -> Result<CrossTranscript> {
    encode_impl(basis, y, bits, dims, aux, None)
}

/// [`encode_bob`] that also returns the per-stage intermediate blocks.
pub fn encode_bob_traced(
    basis: &BasisCache,
    y: &[f64],
    bits: &[u8],
    dims: &CrossDims,
    aux: &SplitKey,
) -> Result<(CrossTranscript, Vec<BlockTrace>)> {
    let mut trace = Vec::new();
    let t = encode_impl(basis, y, bits, dims, aux, Some(&mut trace))?;
    Ok((t, trace))
}

/// Alice's side: replay Bob's rotations on `x` and rescale, giving the
/// virtual-channel observation `v~ = u~ + sqrt(S_T) / ||Y||_F * z~`.
///
/// Uses only the transcript and `x`.
pub fn decode_alice(
    basis: &BasisCache,
    transcript: &CrossTranscript,
    x: &[f64],
    dims: &CrossDims,
) -> Result<Vec<f64>> {
    if transcript.stages != dims.stages() {
        return Err(Error::TranscriptMismatch(format!(
            "transcript stages {:?} differ from {:?}",
            transcript.stages,
            dims.stages()
        )));
    }
    let total = dims.total_dim();
    if x.len() % total != 0 {
        return Err(Error::NotDivisible { len: x.len(), block: total });
    }
    let blocks = x.len() / total;
    if transcript.block_count() != blocks {
        return Err(Error::TranscriptMismatch(format!(
            "{} block norms for {} blocks",
            transcript.block_count(),
            blocks
        )));
    }
    if transcript.coeffs.len() != blocks * dims.stage_count() * total {
        return Err(Error::TranscriptMismatch(format!(
            "{} coefficients, expected {}",
            transcript.coeffs.len(),
            blocks * dims.stage_count() * total
        )));
    }
    let layout = dims.layout();
    let bases = dims
        .stages()
        .iter()
        .map(|&d| basis.get(d))
        .collect::<Result<Vec<_>>>()?;
    let scale = dims.key_scale();
    let mut v = x.to_vec();
    let mut g = [0.0; 8];
    let mut rotated = [0.0; 8];
    for (b, w) in v.chunks_exact_mut(total).enumerate() {
        let norm = transcript.block_norms[b];
        if !(norm.is_finite() && norm >= f64::MIN_POSITIVE) {
            return Err(Error::TranscriptMismatch(format!("block {b} has norm {norm}")));
        }
        for (t, plan) in layout.iter().enumerate() {
            let d = dims.stages()[t];
            let coeffs = transcript.stage_coefficients(b, t);
            for (j, idx) in plan.chunks_exact(d).enumerate() {
                for k in 0..d {
                    g[k] = w[idx[k]];
                }
                let m = mapping_matrix(bases[t], &coeffs[j * d..(j + 1) * d]);
                mat_vec(&m, &g[..d], false, &mut rotated[..d]);
                for k in 0..d {
                    w[idx[k]] = rotated[k];
                }
            }
        }
        let s = scale / norm;
        w.iter_mut().for_each(|e| *e *= s);
    }
    Ok(v)
}

/// Which scheme's classical-channel cost to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverheadScheme {
    Cross,
    Householder,
    Classic,
}

/// Real coefficients sent for `n` symbols: `T * n` for cross rotation,
/// `D * n` for dense Householder matrices (`D^2` per block of `D`), `n` for
/// classic single-stage rotation.
pub fn overhead_report(dims: &CrossDims, n: u64, scheme: OverheadScheme) -> u64 {
    match scheme {
        OverheadScheme::Cross => dims.stage_count() as u64 * n,
        OverheadScheme::Householder => dims.total_dim() as u64 * n,
        OverheadScheme::Classic => n,
    }
}
