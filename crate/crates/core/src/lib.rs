//! Simulation of a CDMA receiver that samples below the chip rate and
//! recovers the active Gold codes by sparse reconstruction.
//!
//! `gold` builds the code dictionary, `sampling` the measurement operators,
//! `pursuit` the reconstruction, `baseband` and `rf` the signal paths, and
//! `experiments` the Monte-Carlo harnesses, result files and checks.

pub mod baseband;
pub mod experiments;
pub mod gold;
pub mod pursuit;
pub mod rf;
pub mod sampling;
