//! File formats, synthetic corpora and the command-line pipeline around
//! [`smirl_core`].
//!
//! * [`tracks`] reads and writes recordings in the INTERACTION-style track
//!   CSV layout and turns them into demonstrations.
//! * [`geometry`] loads scenario geometry (reference paths, obstacles,
//!   conflict point) from TOML.
//! * [`synth`] generates Boltzmann-rational demonstrations from a known
//!   reward.
//! * [`pipeline`] connects sampling, feature extraction, re-distribution,
//!   training and evaluation.
//! * [`formats`] holds the on-disk artifacts: sample sets, weight
//!   artifacts, reports and manifests.
//! * [`cli`] is the `smirl` command.

pub mod cli;
mod error;
pub mod formats;
pub mod geometry;
pub mod pipeline;
pub mod synth;
pub mod tracks;

pub use error::{Error, Result};
