//! Collective-spin simulator for fast GHZ encoding.
//!
//! An `(alpha|0> + beta|1>)` data qubit is encoded into the GHZ subspace of
//! an N-qubit ensemble by composing two-axis-twisting squeezes, a controlled
//! rotation, one-axis twisting and collective rotations on the Dicke
//! manifold. The crate provides:
//!
//! * exact Dicke-basis simulation with cached spectral propagators
//!   ([`propagator`]),
//! * the protocol compositions and all fidelity metrics ([`protocol`]),
//! * squeezing diagnostics and scan observables ([`analysis`]),
//! * nested parameter optimization and resumable sweeps ([`optimizer`]),
//! * a 2^N state-vector backend for disordered couplings ([`fullspace`]),
//! * Husimi-Q phase-space maps with CSV/binary export ([`husimi`]).

pub mod analysis;
pub mod dicke;
pub mod error;
pub mod fullspace;
pub mod husimi;
pub mod linalg;
pub mod optimizer;
pub mod propagator;
pub mod protocol;
pub mod rng;
pub mod util;

pub use dicke::{CollectiveOperators, DickeSpace, DickeVector, SpinCoherentParams};
pub use error::{Error, Result};
pub use propagator::{Generator, SpectralCache, SpectralStore};
pub use protocol::{ProtocolEngine, ProtocolMode, ProtocolParams};
