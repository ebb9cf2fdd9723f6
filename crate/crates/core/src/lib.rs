//! Lossy population recovery.
//!
//! An unknown distribution over binary strings of length `n` is observed
//! through an erasure channel that keeps each coordinate independently with
//! probability `mu` and otherwise replaces it by `?`. This crate recovers the
//! heavy strings and their masses:
//!
//! * [`channel`] simulates the channel with a seedable, splittable oracle.
//! * [`matrices`] builds the count matrix `A`, Vandermonde bases and their
//!   images, all over exact rationals.
//! * [`lp`] is an exact rational simplex solver that returns primal and dual
//!   certificates.
//! * [`inverse`] computes minimum-sensitivity local inverses of `A`.
//! * [`estimate`] turns samples into ones-count histograms and mass estimates.
//! * [`recover`] runs prefix extension with pruning.
//! * [`analysis`] numerically checks the polynomial and complex-analytic
//!   bounds behind the sensitivity estimate.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimate;
pub mod inverse;
pub mod io;
pub mod lp;
pub mod matrices;
pub mod rational;
pub mod recover;
pub mod types;

pub use error::{Error, Result};
pub use rational::Q;
pub use types::{BitString, CountHistogram, LossySample, Params, SparseDistribution, Symbol};
