//! Concurrent selfish load balancing on networks of processors with speeds.
//!
//! - [`graph`]: network topologies and combinatorial quantities.
//! - [`spectral`]: speeds, Laplacian spectra and the bounds built on them.
//! - [`protocol`]: load states, one round of the migration protocols, and
//!   equilibrium predicates.
//! - [`potentials`]: potential functions and exact one-round oracles.
//! - [`analysis`]: convergence experiments and the lemma verification suite.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod potentials;
pub mod protocol;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Family, Graph};
pub use potentials::{PotentialSnapshot, CriticalConstant};
pub use protocol::{LoadState, Protocol, ProtocolParams, Variant};
pub use spectral::{SpectralSummary, SpeedProfile};
