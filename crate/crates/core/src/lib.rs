//! Simulation of classical and entanglement-assisted random access codes.
//!
//! The crate covers the classical `n -> 1` codes and their exhaustive
//! strategy space, the Bell-type expressions whose values fix the average
//! success probability, the quantum 2- and 3-bit protocols built on a
//! path-spin entangled single particle, a Mach-Zehnder interferometer model
//! that produces detector counts shot by shot, and concatenated codes built
//! from 2- and 3-bit subunits.

pub mod bell;
pub mod classical;
pub mod concat;
pub mod error;
pub mod mzi;
pub mod qrac;
pub mod qubit;
pub mod rng;

pub use bell::{BellValue, CorrelationTable, SignMatrix};
pub use classical::{Decoder, DeterministicStrategy, StrategyMixture};
pub use concat::{ConcatTree, DepthProfile, Engine};
pub use error::{Error, Result};
pub use mzi::{AliceReadout, DetectionCounts, EventRecord, InterferometerConfig, Setting};
pub use qrac::MeasurementBases;
pub use qubit::{BlochVector, DensityOperator, Projector, PureState};
