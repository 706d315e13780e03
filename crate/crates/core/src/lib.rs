//! Heterogeneous double-well energies and their homogenized sharp-interface limit.
//!
//! The crate is `no_std` (it only needs `alloc`). It covers:
//!
//! - [`potential`]: periodic multiplicative double wells `W(y, p) = c·m(y)·W₀(p)`,
//!   hypothesis sampling and the capped potential `min{W, M}`.
//! - [`homogenize`]: the cell average `W_H(p) = ∫_Q W(y, p) dy`, exact or by
//!   midpoint quadrature, with optional multilinear tables.
//! - [`geodesic`]: the transition constant `K_H`, the weighted geodesic distance
//!   between the wells in the metric `2√W_H |dp|`.
//! - [`field`]: grid fields, diffuse energies, the heterogeneous/homogenized
//!   discrepancy and discrete perimeters.
//! - [`minimize`]: gradient-flow minimizers with transition boundary data and
//!   recovery sequences.
//! - [`schedule`]: geometric `(ε_n, δ_n)` schedules and log-log fits.
#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod error;
pub mod field;
pub mod geodesic;
pub mod homogenize;
pub mod math;
pub mod minimize;
pub mod potential;
pub mod schedule;

pub use bounds::Bounds;
pub use error::{Error, Result};
pub use homogenize::{HomogenizedPotential, Landscape, Uniform};
pub use potential::{BaseWell, Modulation, Potential, PotentialSpec, TruncatedPotential};
