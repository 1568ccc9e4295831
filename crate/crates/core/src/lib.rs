//! Privacy-preserving item-based top-N recommendation.
//!
//! The crate covers the whole pipeline:
//!
//! - [`dataset`]: raw interaction loaders, binarization, train/test splits.
//! - [`similarity`]: exact Jaccard, MinHash signatures, Chernoff sizing and the
//!   round-count estimators.
//! - [`walksim`]: a deterministic simulation of the anonymous random-walk
//!   collection protocol, with per-party observation views.
//! - [`recommender`]: client-side scoring and top-N ranking.
//! - [`eval`]: precision, absolute-error statistics, timing and k-sweeps.
//! - [`strategy`]: the similarity builders behind a common trait, looked up
//!   by name at runtime.
//! - [`synth`]: seeded synthetic interaction data for experiments without the
//!   public datasets.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod recommender;
pub mod rng;
pub mod similarity;
pub mod strategy;
pub mod synth;
pub mod walksim;

pub use error::{Error, Result};

/// Dense user identifier.
pub type UserId = u32;
/// Dense item identifier.
pub type ItemId = u32;
