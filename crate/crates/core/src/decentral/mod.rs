//! Decentralized agents that coordinate only through collisions: rank
//! assignment, bit-level communication of quantized estimates, and the two
//! explore-then-commit protocols.

pub mod comm;
mod engine;
mod params;
mod rank;

pub use comm::{bit_width, comm_rounds, decode_diff, encode_diff, quant_level, quantize, DiffPayload};
pub use engine::{run_decentralized, DecentralKind, DecentralReport, EpochLog};
pub use params::{elimination_epoch_bound, hd_etc_threshold, EliminationParams};
pub use rank::{run_rank_assignment, RankOutcome, RANK_ROUND_CAP};
