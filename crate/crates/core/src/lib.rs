//! Simulation of QKD devices with and without cross-round memory.
//!
//! - [`quantum`]: dense states over labelled qubits, rank-1 instruments, channels.
//! - [`devices`]: joint-state (memoryless) and sequential (memory) device models.
//! - [`protocol`]: BB84 and the odd/even announcement protocol, with transcripts.
//! - [`analysis`]: signalling, entropies, key-claim contradiction, Eve's guessing.

pub mod analysis;
pub mod devices;
pub mod error;
pub mod protocol;
pub mod quantum;
pub mod rng;

pub use devices::{Device, Party, RoundInput};
pub use error::{Error, Result};
pub use quantum::Basis;
