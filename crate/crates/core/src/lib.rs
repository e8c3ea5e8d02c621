//! Approximate channel simulation toolkit.
//!
//! A selection sampler picks an index `N` into a shared stream of i.i.d.
//! proposal draws `X_1, X_2, ...` from `P` so that `X_N` is (approximately)
//! distributed as a target `Q`; the index is then entropy coded. This crate
//! provides
//!
//! * [`measures`]: target/proposal pairs, divergences and the level-set
//!   functions `w_P`, `w_Q`, `W_P`, `S_P` of the density ratio `r = dQ/dP`,
//! * [`truncation`]: the truncated targets `Q_M` with ratio `(r ∧ M) / W_P(M)`
//!   and their exact total-variation error,
//! * [`samplers`]: exact and budgeted rejection sampling, global-bound A*
//!   coding and depth-limited A* coding over a coupled random stream,
//! * [`coding`]: ζ-distribution codelengths and the Elias-delta transport code,
//! * [`bounds`]: closed-form sample-complexity, tail and entropy bounds,
//! * [`verify`]: analytic oracles, empirical laws and the verification suite.

pub mod bounds;
pub mod cli;
pub mod coding;
pub mod error;
pub mod measures;
pub mod parallel;
pub mod rng;
pub mod samplers;
pub mod spec_file;
pub mod truncation;
pub mod verify;

pub use error::{Error, Result};
pub use measures::{FGenerator, FinitePair, GaussianPair, LevelStats, PairedDistribution};
pub use samplers::{FailPolicy, SampleRecord};
pub use truncation::TruncatedTarget;

/// `e⁻¹·log₂e + 1`, the additive constant in the expected log-index of A* coding.
pub const INDEX_CONSTANT: f64 = std::f64::consts::LOG2_E / std::f64::consts::E + 1.0;
