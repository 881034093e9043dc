//! Non-Markovian master equations for a two-level system in a bosonic bath.
//!
//! The crate builds thermal bath correlation kernels, sums the iterated
//! contraction series into the resummed kernel, turns it into time-dependent
//! master-equation coefficients and propagates Bloch vectors or 2×2 density
//! matrices with them. An exact-diagonalization oracle on a few discrete modes
//! provides an independent reference.
//!
//! Units: `ħ = k_B = 1`.

// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod oracle;
pub mod propagator;
pub mod quad;

pub use bath::{CorrelationKernel, KernelRank, SpectralFamily, SpectralModel};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernels::{CoefficientTable, SeriesOrder, SystemModel};
pub use propagator::{FreeEvolution, PropagatorTable, TlsParams};
