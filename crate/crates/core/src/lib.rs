//! Simulation and verification toolkit for initialization-free perfect state
//! transfer on nearest-neighbour XX spin chains.
//!
//! * [`chain`]: coupling profiles, the Hamiltonian action and the coefficient
//!   generator.
//! * [`heisenberg`]: O(N²)-per-time propagation of end-site operator strings.
//! * [`oracle`]: exact 2^N state-vector and density-matrix engine.
//! * [`protocol`]: the measurement-based transfer protocol and the general
//!   transfer-condition checker.
//! * [`optimize`]: boundary-coupling search for imperfect chains.

pub mod chain;
pub mod error;
pub mod heisenberg;
pub mod optimize;
pub mod oracle;
pub mod protocol;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
