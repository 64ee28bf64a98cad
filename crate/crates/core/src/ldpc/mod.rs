//! Parity-check codes, initial LLRs and syndrome decoding.

pub mod code;
pub mod decoder;
pub mod llr;

pub use code::{generate_regular, LdpcCode};
pub use decoder::{decode_syndrome, DecodeOutcome, SumProductDecoder};
pub use llr::{init_llr_classic, init_llr_cross, LlrVector, LLR_CLIP};
