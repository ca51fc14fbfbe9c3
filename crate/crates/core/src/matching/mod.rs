//! Maximum-weight matching, exhaustive enumeration, covering matchings and
//! the multi-level agent structure (MLAS) check.

mod covering;
mod enumerate;
mod hungarian;
mod mlas;

pub use covering::{covering_matchings, CoveringSet};
pub use enumerate::{
    count_matchings, count_profiles, enumerate_matchings, enumerate_matchings_with_cap,
    enumerate_profiles, enumerate_profiles_with_cap, ProfileIter,
};
pub use hungarian::{
    best_other_matching, hungarian, hungarian_excluding, hungarian_with_edge, matching_value,
    WeightMatrix,
};
pub use mlas::{mlas_check, mlas_check_exhaustive, preference_rank};
