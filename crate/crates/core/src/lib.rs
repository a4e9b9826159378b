//! Approximate sampling from IQP circuits under amplitude-damping noise.
//!
//! The output state of a noisy IQP circuit is expanded in the Hamming-weight
//! basis `|a⟩⟨b|`. Amplitude damping suppresses high-weight coefficients
//! exponentially in depth, so keeping only weight `≤ k` gives a certified
//! approximation `σ` whose Hadamard-basis diagonal can be sampled
//! bit-by-bit from a sparse Fourier representation.
//!
//! - [`circuit`]: circuits, text format, random ensemble.
//! - [`frame`]: exact propagation of operator-frame strings.
//! - [`hw`]: the Hamming-weight basis and coefficient tables.
//! - [`bounds`]: truncation bounds and cutoff selection.
//! - [`sampler`]: quasiprobabilities, marginals and sampling.
//! - [`dense`]: exact density-matrix oracle for small `n`.
//! - [`pipeline`], [`experiments`]: end-to-end drivers.

pub mod bits;
pub mod bounds;
pub mod circuit;
pub mod dense;
pub mod experiments;
pub mod frame;
pub mod hw;
pub mod logcoeff;
pub mod numfmt;
pub mod pipeline;
pub mod sampler;

pub use bits::Bits;
pub use bounds::{select_k, BoundsError, ErrorBudget};
pub use circuit::{random_circuit, Circuit, CircuitError, Gate, GateKind};
pub use dense::{evolve_dense, DenseError, DenseMatrix};
pub use frame::{FrameError, FrameString, Propagator, Slot, SlotKind};
pub use hw::{HwError, HwIndex, HwTable};
pub use pipeline::{run, simulate, Cutoff, Simulation};
pub use sampler::{fourier_table, sample, QuasiDistribution, SamplerError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Hw(#[from] HwError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}
