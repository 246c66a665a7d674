//! Testing whether couples and singles share stable preferences.
//!
//! Household choices are discretized into revealed-preference types
//! ([`rp`]), the preference-stable configurations of a couple type with a
//! single man's and a single woman's type span a cone ([`cone`]), and
//! observed type frequencies are projected onto that cone ([`solver`]) with
//! a tightened, centred bootstrap supplying the p-value ([`inference`]).
//! [`simulate`] runs the Monte Carlo power and size studies.

pub mod cli;
pub mod cone;
pub mod data;
pub mod error;
pub mod inference;
pub mod rp;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
