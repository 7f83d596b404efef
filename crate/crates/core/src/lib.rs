//! Sampling-based maximum-entropy inverse reinforcement learning for driving.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only computation:
//! vehicle dynamics, the feasible-trajectory sampler, reward features,
//! feature-space re-distribution, the trainer, two model-based baselines and
//! the evaluation metrics. File formats, the CLI and synthetic corpus
//! generation live in the companion `smirl` crate.
//!
//! The typical flow is:
//!
//! 1. [`sampler::generate_sample_set`] builds a set of feasible, collision-free
//!    trajectories sharing a demonstration's initial and goal conditions.
//! 2. [`features::extract`] maps every trajectory to a [`FeatureVector`], and a
//!    [`FeatureNormalizer`] scales them into `[0, 1]`.
//! 3. [`redistribution::redistribute`] flattens each set in feature space.
//! 4. [`irl::train`] fits the linear reward weights by maximum likelihood.
//! 5. [`eval`] scores the learned weights on held-out demonstrations.

#![no_std]

extern crate alloc;

pub mod ad;
pub mod baselines;
pub mod dynamics;
mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod irl;
pub mod math;
pub mod redistribution;
pub mod rng;
pub mod sampler;
pub mod types;

pub use error::{Error, Result};
pub use features::FeatureNormalizer;
pub use types::{
    Control, Decision, Demonstration, FeatureKind, FeatureVector, Member, Origin, RewardParams,
    SampleSet, SamplerConfig, Scenario, State, TrainConfig, Trajectory, VehicleParams,
};
