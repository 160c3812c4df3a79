//! Stabilizer simulation of random Clifford circuits with reset channels.
//!
//! Mixed stabilizer states are stored as lists of commuting, independent
//! Pauli generators. The crate provides the reset channel on that
//! representation, the logarithmic purity and negativity observables, a
//! brickwork trajectory driver, ensemble statistics, finite-size-scaling
//! collapse fits, and an exact dense simulator for cross-checks.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod clifford;
pub mod error;
pub mod fss;
pub mod gf2;
pub mod observables;
pub mod oracle;
pub mod pauli;
pub mod reset;
pub mod rng;
pub mod spinmodel;
pub mod stabilizer;
pub mod stats;

pub use circuit::{run_ensemble, run_trajectory, CircuitConfig, RecordSchedule, StepRecord, TrajectoryRecord};
pub use clifford::{sample_clifford2, CliffordGate2};
pub use error::{Error, Result};
pub use fss::{Ansatz, FssDataset, FssFit};
pub use gf2::BitMatrix;
pub use observables::{log_purity, negativity, Cut, CutPolicy};
pub use pauli::{Letter, PauliString};
pub use rng::RandomSource;
pub use stabilizer::StabilizerState;
pub use stats::{aggregate, EnsembleStats};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
