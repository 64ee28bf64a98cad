//! `xrecon` experiment driver.
//!
//! Every subcommand reads an optional `--config` file of `key = value`
//! lines; flags override file entries one-to-one (`--max-iter` sets
//! `max_iter`). Output goes to `--output` or stdout.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use xrecon::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "xrecon", version, about = "Multidimensional reconciliation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (required, from flag or file).
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads, 0 for one per core. Does not change results.
    #[arg(long)]
    threads: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FerArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list, e.g. `classic:8,cross:8x8,householder:64`.
    #[arg(long)]
    schemes: Option<String>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    code_n: Option<String>,
    #[arg(long)]
    code_col_weight: Option<String>,
    #[arg(long)]
    code_row_weight: Option<String>,
    #[arg(long)]
    code_seed: Option<String>,
    /// Efficiency grid: `0.9,0.95` or `0.9:1:0.01`.
    #[arg(long)]
    beta: Option<String>,
    /// SNR grid in dB, used when no beta grid is given.
    #[arg(long)]
    snr_db: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Record wall-clock seconds per point.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    snr_db: Option<String>,
    /// Comma list of 1,2,8,64,512,max.
    #[arg(long)]
    dims: Option<String>,
}

#[derive(Args)]
struct SkrArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    distance_km: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Constant frame error rate.
    #[arg(long)]
    fer: Option<String>,
    /// Per-beta frame error rates, `beta:fer,beta:fer`.
    #[arg(long)]
    fer_table: Option<String>,
    #[arg(long)]
    alpha_db_per_km: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    v_el: Option<String>,
    #[arg(long)]
    repetition_hz: Option<String>,
    #[arg(long)]
    n_total: Option<String>,
    #[arg(long)]
    n_key: Option<String>,
    #[arg(long)]
    eps_smooth: Option<String>,
    #[arg(long)]
    eps_pa: Option<String>,
    #[arg(long)]
    pe_z: Option<String>,
    #[arg(long)]
    worst_case_pe: Option<String>,
    #[arg(long)]
    finite_size: Option<String>,
    #[arg(long)]
    xi_base: Option<String>,
    #[arg(long)]
    xi_slope_per_km: Option<String>,
    #[arg(long)]
    xi_knee_km: Option<String>,
    #[arg(long)]
    r_code: Option<String>,
}

#[derive(Args)]
struct LeakageArgs {
    #[command(flatten)]
    common: Common,
    /// Cross-rotation stages, e.g. `8x8`.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    snr_db: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    identity_trials: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    bootstrap: Option<String>,
    #[arg(long)]
    confidence: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    min_samples: Option<String>,
}

#[derive(Args)]
struct GenCodeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    col_weight: Option<String>,
    #[arg(long)]
    row_weight: Option<String>,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    r_code: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    snr_db: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// BER, FER and iteration counts per scheme over a beta or SNR grid.
    FerSweep(FerArgs),
    /// Mean sum-rate per reconciliation dimension over an SNR grid.
    RateSweep(RateArgs),
    /// Secret key rate against distance.
    SkrSweep(SkrArgs),
    /// Mutual information between revealed coefficients and key bits (JSON).
    LeakageAudit(LeakageArgs),
    /// Random regular parity-check matrix in alist format.
    GenCode(GenCodeArgs),
    /// Efficiency to SNR conversion table.
    ConvertSnr(ConvertArgs),
}

fn build(common: &Common, flags: &[(&str, &Option<String>)]) -> xrecon::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(),
    };
    let mut over = ExperimentConfig::new();
    for (k, v) in [("seed", &common.seed), ("threads", &common.threads)].iter().chain(flags) {
        if let Some(v) = v {
            over.set(k, v.as_str());
        }
    }
    if let Some(p) = &common.output {
        over.set("output", p.to_string_lossy());
    }
    cfg.merge(&over);
    Ok(cfg)
}

fn run(cli: Cli) -> xrecon::Result<()> {
    let (cfg, text) = match cli.command {
        Command::FerSweep(a) => {
            let mut cfg = build(
                &a.common,
                &[
                    ("schemes", &a.schemes),
                    ("code", &a.code),
                    ("code_n", &a.code_n),
                    ("code_col_weight", &a.code_col_weight),
                    ("code_row_weight", &a.code_row_weight),
                    ("code_seed", &a.code_seed),
                    ("beta", &a.beta),
                    ("snr_db", &a.snr_db),
                    ("frames", &a.frames),
                    ("max_iter", &a.max_iter),
                ],
            )?;
            if a.timing {
                cfg.set("timing", "true");
            }
            let t = harness::run_fer_sweep(&cfg)?.to_csv();
            (cfg, t)
        }
        Command::RateSweep(a) => {
            let cfg = build(
                &a.common,
                &[("n", &a.n), ("trials", &a.trials), ("snr_db", &a.snr_db), ("dims", &a.dims)],
            )?;
            let t = harness::run_rate_sweep(&cfg)?.to_csv();
            (cfg, t)
        }
        Command::SkrSweep(a) => {
            let cfg = build(
                &a.common,
                &[
                    ("distance_km", &a.distance_km),
                    ("beta", &a.beta),
                    ("fer", &a.fer),
                    ("fer_table", &a.fer_table),
                    ("alpha_db_per_km", &a.alpha_db_per_km),
                    ("eta", &a.eta),
                    ("v_el", &a.v_el),
                    ("repetition_hz", &a.repetition_hz),
                    ("n_total", &a.n_total),
                    ("n_key", &a.n_key),
                    ("eps_smooth", &a.eps_smooth),
                    ("eps_pa", &a.eps_pa),
                    ("pe_z", &a.pe_z),
                    ("worst_case_pe", &a.worst_case_pe),
                    ("finite_size", &a.finite_size),
                    ("xi_base", &a.xi_base),
                    ("xi_slope_per_km", &a.xi_slope_per_km),
                    ("xi_knee_km", &a.xi_knee_km),
                    ("r_code", &a.r_code),
                ],
            )?;
            let t = harness::run_skr_sweep(&cfg)?.to_csv();
            (cfg, t)
        }
        Command::LeakageAudit(a) => {
            let cfg = build(
                &a.common,
                &[
                    ("dims", &a.dims),
                    ("snr_db", &a.snr_db),
                    ("samples", &a.samples),
                    ("identity_trials", &a.identity_trials),
                    ("bins", &a.bins),
                    ("bootstrap", &a.bootstrap),
                    ("confidence", &a.confidence),
                    ("threshold", &a.threshold),
                    ("min_samples", &a.min_samples),
                ],
            )?;
            let report = harness::run_leakage_audit(&cfg)?;
            let mut t = report.to_json()?;
            t.push('\n');
            (cfg, t)
        }
        Command::GenCode(a) => {
            let cfg = build(
                &a.common,
                &[("n", &a.n), ("col_weight", &a.col_weight), ("row_weight", &a.row_weight)],
            )?;
            let t = harness::run_gen_code(&cfg)?;
            (cfg, t)
        }
        Command::ConvertSnr(a) => {
            let cfg = build(&a.common, &[("r_code", &a.r_code), ("beta", &a.beta), ("snr_db", &a.snr_db)])?;
            let t = harness::run_convert_snr(&cfg)?.to_csv();
            (cfg, t)
        }
    };
    match cfg.raw("output") {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
