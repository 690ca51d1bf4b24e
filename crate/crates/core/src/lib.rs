//! Pseudo-spectral laboratory for the stochastic convective
//! Brinkman-Forchheimer equations on the periodic torus.

pub mod error;
pub mod ergodics;
pub mod integrator;
pub mod noise;
pub mod operators;
pub mod rng;
pub mod spectral;
pub mod stability;
pub mod stationary;
pub mod stats;
pub mod verify;

pub use error::{Result, ScbfError};
pub use integrator::{RunStatus, Scheme, SolverConfig, TrajectoryRecord};
pub use noise::{NoiseModel, QSpectrum, WienerIncrement};
pub use operators::PhysicsParams;
pub use rng::PathStream;
pub use stability::{EnsembleStats, RateReport, Verdict};
pub use stationary::StationaryResult;
pub use spectral::{PhysicalField, SpectralField, SpectralSpace};
pub use verify::random::RandomFieldLaw;
pub use verify::OracleReport;
