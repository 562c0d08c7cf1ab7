//! Link-level simulator and transceiver power model for doubly-massive
//! MIMO mmWave downlinks, comparing analog, hybrid and fully digital
//! beamforming in throughput, consumed power and energy efficiency.

// `!(x > 0.0)` is used deliberately so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod beamform;
pub mod channel;
pub mod cli;
pub mod experiment;
pub mod link;
pub mod linalg;
pub mod power;
