//! Simulation and analysis of heating in periodically driven spin chains.
//!
//! A two-step drive alternates `D + E` and `D - E` for half a period each.
//! The crate propagates states under the exact drive and under truncations
//! of the high-frequency expansion of its stroboscopic generator, records
//! energies and entanglement along the way, builds thermal reference curves
//! by exact diagonalization, and extracts heating times and fit parameters.
//!
//! All operators act matrix-free on `2^L` amplitude vectors; dense matrices
//! appear only in small-system oracles and in [`thermal`].

pub mod analysis;
pub mod dense;
pub mod error;
pub mod hamiltonian;
pub mod krylov;
pub mod linalg;
pub mod magnus;
pub mod observables;
pub mod pauli;
pub mod series;
pub mod state;
pub mod stats;
pub mod thermal;

pub use error::{Error, Result};
pub use hamiltonian::{ModelParams, RangeMode};
pub use krylov::{KrylovConfig, SampleSchedule};
pub use magnus::LinearMapExpr;
pub use observables::Observable;
pub use pauli::{Pauli, PauliString, PauliTermSum};
pub use series::{RunMetadata, TimeSeries};
pub use state::StateVector;
