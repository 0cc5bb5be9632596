//! Batched two-agent assistive-robotics simulation and learning engine.
//!
//! Three human-robot interaction tasks (scratching, bed bathing, arm
//! assistance) are modeled as two-agent cooperative games over a small
//! capsule-based articulated-body simulator. On top of the environments the
//! crate provides a vectorized stepping layer, hand-written neural networks
//! with exact gradients, the IPPO / MAPPO / ISAC / MASAC baselines, a
//! zero-shot-coordination pipeline over partner populations, evaluation
//! statistics (IQM, stratified bootstrap) and a throughput harness.
//!
//! The `examples/` directory contains one runnable program per capability.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algos;
pub mod bench;
pub mod cli;
pub mod envs;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod simcore;
pub mod vecenv;
pub mod zsc;

pub use error::{Error, Result};
