//! Five-qubit code simulation of syndrome steganography: a covertext qubit is
//! encoded, a 4-qubit message picks the error syndrome in superposition, and
//! the receiver recovers both.

pub mod code;
pub mod demo;
pub mod state;
pub mod stego;

pub use code::FiveQubitCode;
pub use state::{Pauli, StateVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QeccError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("code construction failed: {0}")]
    Construction(String),
    #[error("decode integrity failure: {0}")]
    Integrity(String),
    #[error(transparent)]
    Core(#[from] synstego::Error),
}
