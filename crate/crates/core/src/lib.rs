//! Coherent-feedback Kerr circuit: SLH network composition, mean-field
//! bistability, Lindblad steady states and weak-drive photon statistics.
//!
//! Units: every rate and detuning is in units of the controller decay κ
//! unless a caller chooses otherwise; nothing in the crate assumes κ = 1.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod fock;
pub mod quantum;
pub mod semiclassical;
pub mod slh;
pub mod validation;
pub mod weak_drive;

pub use circuit::{build_circuit, CircuitParams, QubitParams};
pub use error::{Error, Result};
pub use fock::{FockOperator, ModeSpace, MODE_A, MODE_C};
pub use slh::{direct_feedback, series, SlhTriple};

pub use faer::c64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
