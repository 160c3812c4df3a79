//! Experiment runner for `resetsim`: resumable parameter sweeps, collapse
//! fits, derivative and spin-model reports, and the dense-oracle check.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod oracle_check;
pub mod spec;
pub mod svg;
pub mod sweep;
pub mod table;

pub use error::{CliError, Result};
pub use spec::{PGrid, SweepSpec};
pub use sweep::{run_sweep, RunOptions};
