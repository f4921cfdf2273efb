//! Edit-distance divide-and-conquer attack on clock-controlled LFSR
//! generators: the shrinking generator and the alternating step generator.

pub mod attack;
pub mod corebits;
pub mod editmatrix;
mod error;
pub mod generators;
pub mod harness;
#[doc(hidden)]
pub mod oracle;
pub mod patterns;
pub mod searchgraph;

pub use error::{Error, Result};
