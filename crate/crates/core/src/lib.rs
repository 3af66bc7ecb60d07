//! Probabilistic quantum error correction.
//!
//! A scheme is an encoder `S` and a recovery `R` with `R ∘ E ∘ S = p · id` for a noise
//! channel `E`. This crate checks schemes, converts between the equivalent
//! characterizations of correctability, builds explicit codes for several channel
//! families and simulates the resulting circuits.

pub mod channel;
pub mod codes;
pub mod error;
pub mod matcore;
pub mod pqec;
pub mod randgen;
pub mod sim;

pub use channel::{compose, ChoiOperator, Subchannel};
pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, DEFAULT_TOL, RANK_TOL};
pub use pqec::{ConditionDWitness, Scheme};
pub use randgen::RngSeed;
