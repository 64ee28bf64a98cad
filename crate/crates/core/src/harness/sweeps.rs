//! Sweep drivers behind the command-line subcommands.
//!
//! Every driver takes an [`ExperimentConfig`], draws all randomness from
//! keys derived from the mandatory `seed`, and returns rows in a fixed order,
//! so output is byte-identical for any `threads` value.

use super::config::ExperimentConfig;
use super::schemes::{simulate_frame, FrameContext, FrameOutcome, Scheme};
use crate::channel::{beta_to_snr, linear_to_db, snr_to_beta, ChannelParams, ErrorStats};
use crate::cross::CrossDims;
use crate::hurwitz::BasisCache;
use crate::ldpc::{generate_regular, LdpcCode, SumProductDecoder};
use crate::leakage::{audit, collect_protocol_samples, LeakageReport, MiConfig};
use crate::rate::{rate_sweep, RateDim, FIGURE_DIMS};
use crate::rng::SplitKey;
use crate::skr::{skr_with, EntanglingCloner, SkrModel, StandardOffset};
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// Header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn threads(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.get_or("threads", 0usize)
}

/// The code named by `code` (an alist path) or generated from
/// `code_n`, `code_col_weight`, `code_row_weight`, `code_seed`.
pub fn load_or_generate_code(cfg: &ExperimentConfig) -> Result<LdpcCode> {
    if let Some(path) = cfg.raw("code") {
        return LdpcCode::load(Path::new(path));
    }
    let n: usize = cfg.require("code_n")?;
    let wc: usize = cfg.get_or("code_col_weight", 4)?;
    let wr: usize = cfg.get_or("code_row_weight", 5)?;
    let seed: u64 = match cfg.get("code_seed")? {
        Some(s) => s,
        None => cfg.seed()?,
    };
    generate_regular(n, wc, wr, seed)
}

/// One FER sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct FerPoint {
    pub scheme: String,
    pub beta: f64,
    pub snr_db: f64,
    pub stats: ErrorStats,
    pub mean_iterations: f64,
    pub wall_seconds: Option<f64>,
}

/// `(beta, kappa)` pairs from `beta` or, failing that, `snr_db`.
fn operating_points(cfg: &ExperimentConfig, r_code: f64) -> Result<Vec<(f64, f64)>> {
    if cfg.raw("beta").is_some() {
        cfg.grid("beta")?
            .into_iter()
            .map(|b| Ok((b, beta_to_snr(r_code, b)?)))
            .collect()
    } else if cfg.raw("snr_db").is_some() {
        cfg.grid("snr_db")?
            .into_iter()
            .map(|db| {
                let k = 10f64.powf(db / 10.0);
                Ok((snr_to_beta(r_code, k)?, k))
            })
            .collect()
    } else {
        Err(Error::Config("need a beta or snr_db grid".into()))
    }
}

/// FER/BER/iteration sweep. Frame `f` at point `p` uses key
/// `seed -> (p, f)` for every scheme.
pub fn fer_points(cfg: &ExperimentConfig) -> Result<Vec<FerPoint>> {
    let seed = cfg.seed()?;
    let frames: usize = cfg.require("frames")?;
    if frames == 0 {
        return Err(Error::Config("frames must be at least 1".into()));
    }
    let max_iter: usize = cfg.get_or("max_iter", 200)?;
    let timing = cfg.get_bool("timing", false)?;
    let schemes = match cfg.raw("schemes") {
        Some(_) => cfg.list("schemes")?,
        None => vec!["classic:8".into(), "cross:8x8".into()],
    }
    .iter()
    .map(|s| s.parse::<Scheme>())
    .collect::<Result<Vec<_>>>()?;
    let code = load_or_generate_code(cfg)?;
    for s in &schemes {
        if code.n() % s.block_len() != 0 {
            return Err(Error::Config(format!("code length {} is not a multiple of {s} blocks", code.n())));
        }
    }
    let points = operating_points(cfg, code.rate())?;
    let decoder = SumProductDecoder::new(&code);
    let bases = BasisCache::new();
    let ctx = FrameContext {
        code: &code,
        decoder: &decoder,
        bases: &bases,
        max_iter,
        timing,
    };
    let root = SplitKey::new(seed).child(0xfe);
    with_threads(threads(cfg)?, || {
        let mut out = Vec::new();
        for (p, &(beta, kappa)) in points.iter().enumerate() {
            let params = ChannelParams::from_snr(kappa)?;
            for scheme in &schemes {
                let outcomes: Vec<FrameOutcome> = (0..frames)
                    .into_par_iter()
                    .map(|f| simulate_frame(&ctx, scheme, &params, &root.path(&[p as u64, f as u64])))
                    .collect::<Result<_>>()?;
                let mut stats = ErrorStats::default();
                let mut iters = 0usize;
                let mut wall = 0.0;
                for o in &outcomes {
                    stats.record(o.bit_errors, code.n());
                    iters += o.iterations;
                    wall += o.seconds.unwrap_or(0.0);
                }
                out.push(FerPoint {
                    scheme: scheme.to_string(),
                    beta,
                    snr_db: linear_to_db(kappa),
                    stats,
                    mean_iterations: iters as f64 / frames as f64,
                    wall_seconds: timing.then_some(wall),
                });
            }
        }
        Ok(out)
    })?
}

/// CSV rows `(scheme, beta, snr_db, frames, ber, fer, mean_iter,
/// wall_seconds, config_hash)`. `wall_seconds` is `NA` unless `timing` is set.
pub fn run_fer_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let hash = cfg.hash();
    let mut t = Table::new(&[
        "scheme",
        "beta",
        "snr_db",
        "frames",
        "ber",
        "fer",
        "mean_iter",
        "wall_seconds",
        "config_hash",
    ]);
    for p in fer_points(cfg)? {
        t.rows.push(vec![
            p.scheme,
            p.beta.to_string(),
            format!("{:.6}", p.snr_db),
            p.stats.frames.to_string(),
            p.stats.ber().to_string(),
            p.stats.fer().to_string(),
            p.mean_iterations.to_string(),
            p.wall_seconds.map_or("NA".into(), |w| format!("{w:.6}")),
            hash.clone(),
        ]);
    }
    Ok(t)
}

/// Sum-rate sweep, CSV rows `(snr_db, dim, mean_rate, stderr, trials, config_hash)`.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let seed = cfg.seed()?;
    let n: usize = cfg.get_or("n", 1_000_000)?;
    let trials: usize = cfg.get_or("trials", 500)?;
    let snrs = match cfg.raw("snr_db") {
        Some(_) => cfg.grid("snr_db")?,
        None => (0..9).map(|i| -16.0 + 2.0 * i as f64).collect(),
    };
    let dims = match cfg.raw("dims") {
        Some(_) => cfg.list("dims")?.iter().map(|d| d.parse()).collect::<Result<Vec<RateDim>>>()?,
        None => FIGURE_DIMS.to_vec(),
    };
    let key = SplitKey::new(seed).child(0x2a7e);
    let reports = with_threads(threads(cfg)?, || rate_sweep(n, trials, &snrs, &dims, &key))??;
    let hash = cfg.hash();
    let mut t = Table::new(&["snr_db", "dim", "mean_rate", "stderr", "trials", "config_hash"]);
    for r in reports {
        for e in r.rates {
            t.rows.push(vec![
                r.snr_db.to_string(),
                e.dim.to_string(),
                format!("{:.6}", e.mean),
                format!("{:.6}", e.stderr),
                r.trials.to_string(),
                hash.clone(),
            ]);
        }
    }
    Ok(t)
}

/// Physical parameters from the config, defaults elsewhere.
pub fn skr_model(cfg: &ExperimentConfig) -> Result<SkrModel> {
    let d = SkrModel::default();
    let m = SkrModel {
        alpha_db_per_km: cfg.get_or("alpha_db_per_km", d.alpha_db_per_km)?,
        eta: cfg.get_or("eta", d.eta)?,
        v_el: cfg.get_or("v_el", d.v_el)?,
        repetition_hz: cfg.get_or("repetition_hz", d.repetition_hz)?,
        n_total: cfg.get_or("n_total", d.n_total)?,
        n_key: cfg.get_or("n_key", d.n_key)?,
        eps_smooth: cfg.get_or("eps_smooth", d.eps_smooth)?,
        eps_pa: cfg.get_or("eps_pa", d.eps_pa)?,
        pe_z: cfg.get_or("pe_z", d.pe_z)?,
        worst_case_pe: cfg.get_bool("worst_case_pe", d.worst_case_pe)?,
        finite_size: cfg.get_bool("finite_size", d.finite_size)?,
        xi_base: cfg.get_or("xi_base", d.xi_base)?,
        xi_slope_per_km: cfg.get_or("xi_slope_per_km", d.xi_slope_per_km)?,
        xi_knee_km: cfg.get_or("xi_knee_km", d.xi_knee_km)?,
        r_code: cfg.get_or("r_code", d.r_code)?,
        beta: d.beta,
    };
    m.validate()?;
    Ok(m)
}

/// `fer_table = beta:fer,beta:fer,...` or a constant `fer`.
fn fer_lookup(cfg: &ExperimentConfig) -> Result<Box<dyn Fn(f64) -> Result<f64>>> {
    if let Some(table) = cfg.raw("fer_table") {
        let mut pairs = Vec::new();
        for item in table.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (b, f) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("fer_table entry {item:?} is not beta:fer")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number in fer_table: {s:?}")));
            pairs.push((parse(b)?, parse(f)?));
        }
        return Ok(Box::new(move |beta| {
            pairs
                .iter()
                .find(|(b, _)| (b - beta).abs() < 1e-9)
                .map(|&(_, f)| f)
                .ok_or_else(|| Error::Config(format!("fer_table has no entry for beta {beta}")))
        }));
    }
    let fer: f64 = cfg.get_or("fer", 0.0)?;
    Ok(Box::new(move |_| Ok(fer)))
}

/// SKR sweep, CSV rows `(distance_km, beta, fer, skr_bits_per_s,
/// raw_fraction, config_hash)`. The model is deterministic; `seed` is still
/// required so every sweep carries one.
pub fn run_skr_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.seed()?;
    let base = skr_model(cfg)?;
    let distances = match cfg.raw("distance_km") {
        Some(_) => cfg.grid("distance_km")?,
        None => (0..=150).map(f64::from).collect(),
    };
    let betas = match cfg.raw("beta") {
        Some(_) => cfg.grid("beta")?,
        None => vec![1.0],
    };
    let fer_of = fer_lookup(cfg)?;
    let mut jobs = Vec::new();
    for &b in &betas {
        let fer = fer_of(b)?;
        for &d in &distances {
            jobs.push((b, fer, d));
        }
    }
    let points = with_threads(threads(cfg)?, || {
        jobs.par_iter()
            .map(|&(b, fer, d)| skr_with(&base.clone().with_beta(b), &EntanglingCloner, &StandardOffset, d, fer))
            .collect::<Result<Vec<_>>>()
    })??;
    let hash = cfg.hash();
    let mut t = Table::new(&["distance_km", "beta", "fer", "skr_bits_per_s", "raw_fraction", "config_hash"]);
    for p in points {
        t.rows.push(vec![
            p.distance_km.to_string(),
            p.beta.to_string(),
            p.fer.to_string(),
            format!("{:.6}", p.skr_bits_per_s),
            format!("{:.9e}", p.raw_fraction),
            hash.clone(),
        ]);
    }
    Ok(t)
}

pub fn mi_config(cfg: &ExperimentConfig) -> Result<MiConfig> {
    let d = MiConfig::default();
    Ok(MiConfig {
        bins: cfg.get_or("bins", d.bins)?,
        bootstrap: cfg.get_or("bootstrap", d.bootstrap)?,
        confidence: cfg.get_or("confidence", d.confidence)?,
        threshold: cfg.get_or("threshold", d.threshold)?,
        min_samples: cfg.get_or("min_samples", d.min_samples)?,
        seed: cfg.seed()?,
    })
}

/// Leakage audit over `samples` blocks of scheme `dims` at `snr_db`.
pub fn run_leakage_audit(cfg: &ExperimentConfig) -> Result<LeakageReport> {
    let mi = mi_config(cfg)?;
    let dims: CrossDims = cfg.get_or("dims", "8x8".to_string())?.parse()?;
    let snr_db: f64 = cfg.get_or("snr_db", -15.0)?;
    let samples: usize = cfg.get_or("samples", 100_000)?;
    let identity_trials: usize = cfg.get_or("identity_trials", 10_000)?;
    let key = SplitKey::new(mi.seed).child(0x1eac);
    with_threads(threads(cfg)?, || {
        let s = collect_protocol_samples(&dims, snr_db, samples, &key)?;
        audit(&s, identity_trials, &mi)
    })?
}

/// Generates a regular code and renders it as alist text.
pub fn run_gen_code(cfg: &ExperimentConfig) -> Result<String> {
    let n: usize = cfg.require("n")?;
    let wc: usize = cfg.require("col_weight")?;
    let wr: usize = cfg.require("row_weight")?;
    Ok(generate_regular(n, wc, wr, cfg.seed()?)?.to_alist())
}

/// `(r_code, beta, snr_db, kappa)` for a `beta` or `snr_db` grid.
pub fn run_convert_snr(cfg: &ExperimentConfig) -> Result<Table> {
    let r: f64 = cfg.require("r_code")?;
    let mut t = Table::new(&["r_code", "beta", "snr_db", "kappa"]);
    for (b, k) in operating_points(cfg, r)? {
        let mut row = Vec::new();
        for v in [r, b] {
            row.push(v.to_string());
        }
        row.push(format!("{:.4}", linear_to_db(k)));
        let mut s = String::new();
        write!(s, "{k:.9e}").expect("write to String");
        row.push(s);
        t.rows.push(row);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> ExperimentConfig {
        ExperimentConfig::parse(s).unwrap()
    }

    #[test]
    fn fer_sweep_is_thread_invariant() {
        let base = "seed = 4\ncode_n = 640\ncode_col_weight = 3\ncode_row_weight = 6\nframes = 12\nbeta = 0.5,0.8\nschemes = classic:8,cross:8x8\nmax_iter = 30\n";
        let a = run_fer_sweep(&cfg(&format!("{base}threads = 1"))).unwrap().to_csv();
        let b = run_fer_sweep(&cfg(&format!("{base}threads = 3"))).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("scheme,beta,snr_db,frames,ber,fer,mean_iter,wall_seconds,config_hash\n"));
        assert_eq!(a.lines().count(), 5);
        assert!(a.lines().skip(1).all(|l| l.contains(",NA,")));
    }

    #[test]
    fn high_snr_has_no_frame_errors() {
        let t = run_fer_sweep(&cfg(
            "seed = 1\ncode_n = 512\ncode_col_weight = 3\ncode_row_weight = 6\nframes = 100\nsnr_db = 25\nschemes = classic:1,classic:2,classic:8,cross:8x8,householder:64",
        ))
        .unwrap();
        assert!(t.column("fer").unwrap().iter().all(|f| *f == "0"));
    }

    #[test]
    fn missing_seed_and_bad_grid() {
        assert!(run_fer_sweep(&cfg("code_n = 64\nframes = 1\nbeta = 0.9")).is_err());
        assert!(run_fer_sweep(&cfg("seed = 1\ncode_n = 64\nframes = 0\nbeta = 0.9")).is_err());
        assert!(run_fer_sweep(&cfg("seed = 1\ncode_n = 60\ncode_col_weight = 3\ncode_row_weight = 6\nframes = 1\nbeta = 0.9")).is_err());
        assert!(run_rate_sweep(&cfg("n = 10")).is_err());
        assert!(run_skr_sweep(&cfg("beta = 1")).is_err());
    }

    #[test]
    fn rate_sweep_rows() {
        let t = run_rate_sweep(&cfg("seed = 2\nn = 1024\ntrials = 4\nsnr_db = -4,0\ndims = 1,64,max\nthreads = 2")).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.column("dim").unwrap(), vec!["1", "64", "Max", "1", "64", "Max"]);
    }

    #[test]
    fn skr_sweep_rows_and_table() {
        let t = run_skr_sweep(&cfg("seed = 0\ndistance_km = 0:20:10\nbeta = 0.99,1\nfer_table = 0.99:0.95, 1:0.984\nfinite_size = false\nworst_case_pe = false")).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.column("fer").unwrap()[5], "0.984");
        assert!(run_skr_sweep(&cfg("seed = 0\nbeta = 0.95\nfer_table = 1:0.5")).is_err());
    }

    #[test]
    fn convert_and_gen() {
        let t = run_convert_snr(&cfg("r_code = 0.01995\nbeta = 0.9")).unwrap();
        assert_eq!(t.rows[0][2], "-15.0575");
        let a = run_gen_code(&cfg("seed = 1\nn = 24\ncol_weight = 3\nrow_weight = 6")).unwrap();
        assert!(a.starts_with("24 12\n"));
    }
}
