//! Hiding messages in the error syndromes of a nondegenerate quantum code.
//!
//! The sender emulates a noisy Pauli channel over a noiseless link: each
//! message selects a typical error string, and a shared key chooses which of
//! several disjoint string subsets is live for the block. The crate compiles
//! such codebooks, measures their rate and key use, computes exact secrecy
//! metrics and entropy upper bounds, and simulates the full exchange.

pub mod channels;
pub mod codec;
pub mod error;
pub mod keystream;
pub mod prob;
pub mod protocol;
pub mod secrecy;

pub use channels::{ChannelKind, ChannelModel, TypicalWindow, WeightClassTable, WindowSpec};
pub use codec::{ErrorString, Message, StegoCodebook};
pub use error::{Error, Result};
pub use keystream::{KeySeed, KeyStream};
pub use prob::{BigCount, LogProb, WeightVector};
