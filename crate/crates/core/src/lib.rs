//! Exact sampler and verification suite for a stationary ±1 sequence that is
//! 5-tuplewise independent but not 6-tuplewise independent.
//!
//! The sequence is read off a hierarchy of six-state cyclic chains: level 1
//! runs over integer positions, and each higher level runs over the positions
//! where the level below shows symbol 1. Everything is driven by counter-based
//! keyed randomness ([`rng::Key`]), so a window can be extended without
//! changing values already revealed.

pub mod campaign;
pub mod chain;
pub mod coding;
pub mod error;
pub mod hierarchy;
pub mod measures;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hierarchy::{build, literal_build, HierarchyWindow, LevelState, PositionRecord, SamplerConfig};
pub use measures::{KeyVector, MeasureKind, Rational, SignVector};
pub use process::{sample_path, BlockDecomposition, Covering, PathSample};
pub use rng::Key;
pub use stats::{CampaignReport, ChiSquareReport, MomentEstimate};
