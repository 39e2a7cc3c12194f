//! Simulation of uplink dual-function radar-communication (DFRC) receivers.
//!
//! The base station transmits a radar waveform while receiving an uplink
//! QPSK block; its receive array sees the target echo and the uplink signal
//! superposed. The crate builds the stacked block model, implements a
//! successive-interference-cancellation receiver, a projection receiver
//! that removes the echo before joint multi-snapshot detection, and a
//! brute-force joint ML oracle, and provides the analytics and Monte Carlo
//! harness used to compare them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod receivers;
pub mod scene;

pub use error::{Error, Result};
