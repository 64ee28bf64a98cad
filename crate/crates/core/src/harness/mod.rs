//! Experiment harness: configuration, per-frame simulation and sweeps.

pub mod config;
pub mod schemes;
pub mod sweeps;

pub use config::{parse_grid, ExperimentConfig};
pub use schemes::{simulate_frame, FrameContext, FrameOutcome, Scheme};
pub use sweeps::{
    fer_points, run_convert_snr, run_fer_sweep, run_gen_code, run_leakage_audit, run_rate_sweep, run_skr_sweep, with_threads, FerPoint, Table,
};
