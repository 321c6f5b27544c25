//! Pauli backpropagation surrogates for noisy parametrized Clifford+Rz circuits.
//!
//! A circuit is an initial Clifford `C₀` followed by `m` layers, each applying a
//! single-qubit normal-form channel and an `Rz(θᵢ)` rotation on one qubit and then
//! a Clifford layer `Cᵢ`. The expectation of a Pauli observable in `|0…0⟩` is a
//! trigonometric polynomial in `θ`; [`engine`] builds truncated approximations of
//! it together with error certificates, and [`oracle`] computes exact reference
//! values with dense simulation.

pub mod circuit;
pub mod engine;
pub mod experiments;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod surrogate;

pub use circuit::{Circuit, CircuitBuilder, CircuitError, Graph, Layer};
pub use engine::{BuildMode, BuildReport, EngineConfig, EngineError};
pub use noise::{ChannelError, ChannelSpec, NormalFormChannel};
pub use oracle::OracleError;
pub use pauli::{CliffordGate, CliffordLayer, PauliAxis, PauliError, PauliString};
pub use surrogate::{MonomialKey, Surrogate, SurrogateError, Trig};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}
