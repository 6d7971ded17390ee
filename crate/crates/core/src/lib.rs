//! Qudit-chain simulator for resource relaxation under random free circuits.
//!
//! Dense statevector and density-matrix kernels, free-gate ensembles, resource
//! monotones (coherence, imaginarity, non-Gaussianity, mana), a stabilizer
//! tableau engine for large qubit chains, experiment orchestration with
//! crossing detection, and a spectral analyzer for reset channels.

pub mod dense;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod monotones;
pub mod pauli;
pub mod protocols;
pub mod rng;
pub mod stabilizer;

pub use dense::{DensityMatrix, Gate, PureState, TiltKind};
pub use ensembles::{EnsembleSpec, Family};
pub use error::{Error, Result};
pub use markov::{ChannelSpectrum, ChannelSuperoperator};
pub use protocols::{
    brickwork_layer, detect_crossing, run_qme, run_qpme, Boundary, CrossingReport, Engine, ExperimentConfig,
    Mode, PreheatConfig, PreheatScope, Resource, TimeSeries,
};
pub use rng::{Lane, RngStream};
pub use stabilizer::StabilizerTableau;
