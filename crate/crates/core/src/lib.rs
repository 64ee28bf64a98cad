//! Multidimensional reverse reconciliation for continuous-variable QKD.
//!
//! The crate covers the whole reconciliation pipeline on Bob's and Alice's
//! side:
//!
//! * [`hurwitz`]: closed-form orthogonal mapping matrices for d = 1, 2, 4, 8
//!   built from the real, complex, quaternion and octonion multiplication
//!   tables, plus a Householder reflector baseline for arbitrary d.
//! * [`cross`]: cross-rotation encoding/decoding, which chains column and row
//!   rotations of a reshaped block to reach dimensions 16, 32, 64, ..., and the
//!   binary transcript Bob sends over the classical channel.
//! * [`ldpc`]: parity-check codes, syndromes, initial LLRs and a flooding
//!   sum-product decoder that decodes toward a nonzero target syndrome.
//! * [`channel`], [`rate`], [`leakage`], [`skr`]: channel sampling and SNR/efficiency
//!   conversion, achievable sum-rates and majorization, leakage audits, and the
//!   finite-size secret key rate.
//! * [`harness`]: seeded, thread-count-independent experiment sweeps that emit CSV/JSON.

pub mod channel;
pub mod cross;
pub mod error;
pub mod harness;
pub mod hurwitz;
pub mod ldpc;
pub mod leakage;
pub mod rate;
pub mod rng;
pub mod skr;

pub use error::{Error, Result};
