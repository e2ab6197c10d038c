//! Flash codes for multilevel cells.
//!
//! Three constructions store `k` bits in `n` cells of `q` levels and keep
//! rewriting them without an erase for as long as possible:
//!
//! * [`twobit::TwoBitCode`], an optimal two-bit code on a line of cells;
//! * [`basic::BasicBoxCode`], `2^D` bits in an `n_1 x ... x n_D` box with
//!   separation cells, columns and hyperplanes;
//! * [`enhanced::EnhancedCode`], `2^D` bits in a `2 x ... x 2 x n_D` box
//!   built from recursive blocks ([`block`]).
//!
//! [`bounds`] holds the closed-form guarantees and limits, and [`oracle`]
//! computes the exact number of guaranteed writes of any [`FlashCode`] by
//! exhaustive adversarial search.

pub mod basic;
pub mod block;
pub mod bounds;
pub mod enhanced;
pub mod error;
pub mod model;
pub mod oracle;
pub mod twobit;
pub mod virtualize;

pub use error::{FlashError, Result};
pub use model::{
    ascent_check, delinearize, initial_state, linearize, weight, CellState, FlashCode, Params,
    VariableVector, WriteOutcome,
};
