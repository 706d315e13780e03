//! Experiment runner for heterogeneous phase-transition energies: JSON
//! configuration, scaling studies, CSV/JSON tables and field files.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod fieldio;

pub use config::Config;
pub use error::{LabError, Result};
pub use experiment::{ExperimentRow, IsotropyRow, ProbeRow, RowStatus, Setup};
