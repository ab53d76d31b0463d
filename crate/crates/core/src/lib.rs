//! Design of cryptographic Boolean functions through Ising ground states.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! * [`boolfun`]: truth tables, Walsh spectra, nonlinearity, resiliency, ANF.
//! * [`ising`]: Hamiltonians whose ground states are bent, balanced or
//!   m-resilient functions.
//! * [`chimera`]: the Chimera hardware graph, structured chain embeddings and
//!   lowering of logical models onto physical qubits.
//! * [`sampler`]: exact enumeration, simulated annealing and path-integral
//!   simulated quantum annealing.
//! * [`postprocess`]: chain repair and hill-climbing refinement.
//!
//! [`oracle`] holds exhaustive ground truth for n ≤ 4 and [`harness`] wires
//! everything into reproducible experiments.
//!
//! Read-level and enumeration-level loops run on rayon when the `parallel`
//! feature is enabled (the default). Results never depend on the execution
//! mode; see [`par::Execution`].

pub mod boolfun;
pub mod chimera;
mod error;
pub mod harness;
pub mod ising;
pub mod oracle;
pub mod par;
pub mod postprocess;
pub mod sampler;

pub use boolfun::{AnfForm, Analysis, ResiliencyProfile, SignVector, TruthTable, WalshSpectrum};
pub use chimera::{ChimeraGraph, Embedding, PhysicalModel};
pub use error::{Error, Result, Stage};
pub use ising::{CriteriaSpec, IsingModel};
pub use par::Execution;
pub use sampler::{SampleSet, Schedule};
