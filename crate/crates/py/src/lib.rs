//! Python bindings: rotations, cross-rotation transcripts, LDPC decoding,
//! channel conversions, sum-rates, key rates and the sweep drivers.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use xrecon_core as core;
use xrecon_core::cross::{CrossDims, CrossTranscript, OverheadScheme};
use xrecon_core::harness::ExperimentConfig;
use xrecon_core::hurwitz::{BasisCache, MappingCoefficients};
use xrecon_core::ldpc::{LdpcCode, LlrVector, SumProductDecoder};
use xrecon_core::rate::RateDim;
use xrecon_core::rng::SplitKey;
use xrecon_core::skr::SkrModel;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn dims(s: &str) -> PyResult<CrossDims> {
    s.parse().map_err(err)
}

/// Bits as a Python list of ints rather than `bytes`.
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(<[f64]>::to_vec).collect()
}

/// The `d` orthogonal matrices `A_1..A_d` as nested row lists.
#[pyfunction]
fn basis(d: usize) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let b = core::hurwitz::build_basis(d).map_err(err)?;
    Ok(b.matrices().iter().map(|m| rows(m, d)).collect())
}

/// Coefficients `alpha` with `M(alpha) y = ||y|| u`.
#[pyfunction]
fn mapping_coefficients(y: Vec<f64>, u: Vec<f64>) -> PyResult<Vec<f64>> {
    let b = core::hurwitz::build_basis(y.len()).map_err(err)?;
    Ok(core::hurwitz::mapping_coefficients(&b, &y, &u).map_err(err)?.into_vec())
}

/// `M x` (or `M^T x` with `inverse=True`) for coefficients `alpha`.
#[pyfunction]
#[pyo3(signature = (alpha, x, inverse = false))]
fn apply_mapping(alpha: Vec<f64>, x: Vec<f64>, inverse: bool) -> PyResult<Vec<f64>> {
    let b = core::hurwitz::build_basis(alpha.len()).map_err(err)?;
    let c = MappingCoefficients::new(alpha).map_err(err)?;
    if inverse {
        core::hurwitz::apply_inverse_mapping(&b, &c, &x).map_err(err)
    } else {
        core::hurwitz::apply_mapping(&b, &c, &x).map_err(err)
    }
}

/// Dense reflection sending `y / ||y||` to `u`, as row lists.
#[pyfunction]
fn householder(y: Vec<f64>, u: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let q = core::hurwitz::householder_mapping(&y, &u).map_err(err)?;
    Ok(rows(q.as_slice(), q.size()))
}

/// Everything Bob publishes for one frame.
#[pyclass(name = "Transcript", module = "xrecon", skip_from_py_object)]
#[derive(Clone)]
struct PyTranscript {
    inner: CrossTranscript,
}

#[pymethods]
impl PyTranscript {
    #[getter]
    fn stages(&self) -> Vec<usize> {
        self.inner.stages.clone()
    }

    #[getter]
    fn block_norms(&self) -> Vec<f64> {
        self.inner.block_norms.clone()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    #[getter]
    fn syndrome(&self) -> Vec<u32> {
        bit_list(self.inner.syndrome.clone())
    }

    #[setter]
    fn set_syndrome(&mut self, s: Vec<u8>) {
        self.inner.syndrome = s;
    }

    fn stage_coefficients(&self, block: usize, stage: usize) -> PyResult<Vec<f64>> {
        if block >= self.inner.block_count() || stage >= self.inner.stages.len() {
            return Err(PyValueError::new_err("block or stage out of range"));
        }
        Ok(self.inner.stage_coefficients(block, stage).to_vec())
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyTranscript {
            inner: CrossTranscript::from_bytes(data).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.block_count()
    }

    fn __repr__(&self) -> String {
        format!("Transcript(stages={:?}, blocks={})", self.inner.stages, self.inner.block_count())
    }
}

/// Bob's rotations for stage spec `dims` (e.g. `"8x8"`); auxiliary targets
/// are drawn from `aux_seed`.
#[pyfunction]
fn encode_bob(y: Vec<f64>, bits: Vec<u8>, dims: &str, aux_seed: u64) -> PyResult<PyTranscript> {
    let cache = BasisCache::new();
    let inner = core::cross::encode_bob(&cache, &y, &bits, &self::dims(dims)?, &SplitKey::new(aux_seed)).map_err(err)?;
    Ok(PyTranscript { inner })
}

/// Alice's virtual-channel observation from `x` and Bob's transcript.
#[pyfunction]
fn decode_alice(transcript: &PyTranscript, x: Vec<f64>, dims: &str) -> PyResult<Vec<f64>> {
    core::cross::decode_alice(&BasisCache::new(), &transcript.inner, &x, &self::dims(dims)?).map_err(err)
}

/// Real coefficients published for `n` symbols under `scheme`
/// (`"cross"`, `"householder"` or `"classic"`).
#[pyfunction]
fn overhead(dims: &str, n: u64, scheme: &str) -> PyResult<u64> {
    let s = match scheme {
        "cross" => OverheadScheme::Cross,
        "householder" => OverheadScheme::Householder,
        "classic" => OverheadScheme::Classic,
        _ => return Err(PyValueError::new_err(format!("unknown scheme {scheme:?}"))),
    };
    Ok(core::cross::overhead_report(&self::dims(dims)?, n, s))
}

#[pyfunction]
fn llr_cross(v: Vec<f64>, norms: Vec<f64>, sigma2: f64, dims: &str) -> PyResult<Vec<f64>> {
    Ok(core::ldpc::init_llr_cross(&v, &norms, sigma2, &self::dims(dims)?).map_err(err)?.values().to_vec())
}

#[pyfunction]
fn llr_classic(v: Vec<f64>, norms: Vec<f64>, sigma2: f64, d: usize) -> PyResult<Vec<f64>> {
    Ok(core::ldpc::init_llr_classic(&v, &norms, sigma2, d).map_err(err)?.values().to_vec())
}

/// Sparse parity-check matrix with a sum-product decoder.
#[pyclass(name = "LdpcCode", module = "xrecon", skip_from_py_object)]
struct PyLdpcCode {
    code: LdpcCode,
    decoder: SumProductDecoder,
}

impl PyLdpcCode {
    fn wrap(code: LdpcCode) -> Self {
        let decoder = SumProductDecoder::new(&code);
        PyLdpcCode { code, decoder }
    }
}

#[pymethods]
impl PyLdpcCode {
    #[staticmethod]
    fn regular(n: usize, col_weight: usize, row_weight: usize, seed: u64) -> PyResult<Self> {
        Ok(Self::wrap(core::ldpc::generate_regular(n, col_weight, row_weight, seed).map_err(err)?))
    }

    #[staticmethod]
    fn from_alist(text: &str) -> PyResult<Self> {
        Ok(Self::wrap(LdpcCode::from_alist(text).map_err(err)?))
    }

    fn to_alist(&self) -> String {
        self.code.to_alist()
    }

    #[getter]
    fn n(&self) -> usize {
        self.code.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.code.m()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.code.rate()
    }

    fn syndrome(&self, bits: Vec<u8>) -> PyResult<Vec<u32>> {
        self.code.syndrome(&bits).map(bit_list).map_err(err)
    }

    /// Returns `(bits, iterations, converged)`.
    #[pyo3(signature = (llr, syndrome, max_iter = 200))]
    fn decode(&self, py: Python<'_>, llr: Vec<f64>, syndrome: Vec<u8>, max_iter: usize) -> PyResult<(Vec<u32>, usize, bool)> {
        let llr = LlrVector::new(llr).map_err(err)?;
        let out = py.detach(|| self.decoder.decode(&llr, &syndrome, max_iter)).map_err(err)?;
        Ok((bit_list(out.bits), out.iterations, out.converged))
    }
}

#[pyfunction]
fn beta_to_snr(r_code: f64, beta: f64) -> PyResult<f64> {
    core::channel::beta_to_snr(r_code, beta).map_err(err)
}

#[pyfunction]
fn snr_to_beta(r_code: f64, snr: f64) -> PyResult<f64> {
    core::channel::snr_to_beta(r_code, snr).map_err(err)
}

#[pyfunction]
fn capacity(snr: f64) -> f64 {
    core::channel::capacity(snr)
}

#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    core::channel::db_to_linear(db)
}

#[pyfunction]
fn linear_to_db(x: f64) -> f64 {
    core::channel::linear_to_db(x)
}

/// Correlated Gaussian pair `(x, y)` of length `n` at `snr_db`.
#[pyfunction]
fn sample_pair(n: usize, snr_db: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = core::channel::ChannelParams::from_snr_db(snr_db).map_err(err)?;
    Ok(core::channel::sample_pair(n, &p, &SplitKey::new(seed)))
}

#[pyfunction]
fn block_rate(energy: f64, sigma2: f64, d: usize) -> f64 {
    core::rate::block_rate(energy, sigma2, d)
}

/// Mean sum-rate per dimension; returns `[(snr_db, dim, mean, stderr)]`.
#[pyfunction]
#[pyo3(signature = (n, trials, snr_db, dims, seed))]
fn rate_sweep(py: Python<'_>, n: usize, trials: usize, snr_db: Vec<f64>, dims: Vec<String>, seed: u64) -> PyResult<Vec<(f64, String, f64, f64)>> {
    let dims = dims.iter().map(|d| d.parse::<RateDim>()).collect::<core::Result<Vec<_>>>().map_err(err)?;
    let reports = py
        .detach(|| core::rate::rate_sweep(n, trials, &snr_db, &dims, &SplitKey::new(seed)))
        .map_err(err)?;
    Ok(reports
        .into_iter()
        .flat_map(|r| {
            let s = r.snr_db;
            r.rates.into_iter().map(move |e| (s, e.dim.to_string(), e.mean, e.stderr))
        })
        .collect())
}

fn skr_model(beta: f64, finite_size: bool) -> PyResult<SkrModel> {
    let m = if finite_size { SkrModel::default() } else { SkrModel::default().asymptotic() };
    let m = m.with_beta(beta);
    m.validate().map_err(err)?;
    Ok(m)
}

/// Secret key rate in bits/s with the default physical parameters.
#[pyfunction]
#[pyo3(signature = (distance_km, fer, beta = 1.0, finite_size = true))]
fn skr(distance_km: f64, fer: f64, beta: f64, finite_size: bool) -> PyResult<f64> {
    core::skr::skr(&skr_model(beta, finite_size)?, distance_km, fer).map_err(err)
}

/// Largest distance with positive key, or `None`.
#[pyfunction]
#[pyo3(signature = (fer, beta = 1.0, finite_size = true, limit_km = 300.0))]
fn max_distance(fer: f64, beta: f64, finite_size: bool, limit_km: f64) -> PyResult<Option<f64>> {
    core::skr::max_distance(&skr_model(beta, finite_size)?, fer, limit_km, 1.0).map_err(err)
}

/// Runs a command-line subcommand on `key = value` config text and returns
/// its CSV, JSON or alist output.
#[pyfunction]
fn run(py: Python<'_>, command: &str, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config).map_err(err)?;
    let command = command.to_string();
    py.detach(move || match command.as_str() {
        "fer-sweep" => core::harness::run_fer_sweep(&cfg).map(|t| t.to_csv()),
        "rate-sweep" => core::harness::run_rate_sweep(&cfg).map(|t| t.to_csv()),
        "skr-sweep" => core::harness::run_skr_sweep(&cfg).map(|t| t.to_csv()),
        "leakage-audit" => core::harness::run_leakage_audit(&cfg).and_then(|r| r.to_json()),
        "gen-code" => core::harness::run_gen_code(&cfg),
        "convert-snr" => core::harness::run_convert_snr(&cfg).map(|t| t.to_csv()),
        other => Err(core::Error::Config(format!("unknown command {other:?}"))),
    })
    .map_err(err)
}

#[pymodule]
fn xrecon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTranscript>()?;
    m.add_class::<PyLdpcCode>()?;
    m.add_function(wrap_pyfunction!(basis, m)?)?;
    m.add_function(wrap_pyfunction!(mapping_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(apply_mapping, m)?)?;
    m.add_function(wrap_pyfunction!(householder, m)?)?;
    m.add_function(wrap_pyfunction!(encode_bob, m)?)?;
    m.add_function(wrap_pyfunction!(decode_alice, m)?)?;
    m.add_function(wrap_pyfunction!(overhead, m)?)?;
    m.add_function(wrap_pyfunction!(llr_cross, m)?)?;
    m.add_function(wrap_pyfunction!(llr_classic, m)?)?;
    m.add_function(wrap_pyfunction!(beta_to_snr, m)?)?;
    m.add_function(wrap_pyfunction!(snr_to_beta, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(linear_to_db, m)?)?;
    m.add_function(wrap_pyfunction!(sample_pair, m)?)?;
    m.add_function(wrap_pyfunction!(block_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rate_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(skr, m)?)?;
    m.add_function(wrap_pyfunction!(max_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
