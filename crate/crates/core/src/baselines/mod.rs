//! Model-based baselines that estimate the partition function without
//! samples: the Laplace approximation ([`cioc`]) and the single optimal
//! trajectory ([`optirl`]).

pub mod cioc;
pub mod optirl;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::features::FeatureNormalizer;
use crate::irl::{train_objective, TrainOutcome};
use crate::types::{Demonstration, TrainConfig, VehicleParams};

pub use cioc::{cioc_log_likelihood, laplace_log_likelihood, CiocObjective, DemoDerivatives, LaplaceTerms};
pub use optirl::{forward_optimize, optirl_step, ForwardConfig, OptDemo, OptIrlObjective, Optimum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cioc,
    OptIrl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cioc => "cioc",
            Method::OptIrl => "optirl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub train: TrainConfig,
    pub beta: f64,
    pub tau_predict: f64,
    pub vehicle: VehicleParams,
    pub forward: ForwardConfig,
    /// Initial value of every weight.
    pub theta_init: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            train: TrainConfig::default(),
            beta: 1.0,
            tau_predict: 1.0,
            vehicle: VehicleParams::default(),
            forward: ForwardConfig::default(),
            theta_init: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub outcome: TrainOutcome,
    /// Demonstrations left out because their Hessian was degenerate.
    pub dropped: Vec<String>,
}

/// Trains the reward weights with a baseline estimate of the partition
/// function. Features are scaled by `normalizer`, weights start at
/// `cfg.theta_init`.
pub fn train_baseline(
    method: Method,
    demos: &[Demonstration],
    normalizer: &FeatureNormalizer,
    cfg: &BaselineConfig,
) -> Result<BaselineOutcome> {
    if demos.is_empty() {
        return Err(param("no demonstrations"));
    }
    if !(cfg.beta > 0.0) {
        return Err(param("beta must be positive"));
    }
    cfg.vehicle.validate()?;
    let theta0 = alloc::vec![cfg.theta_init; normalizer.dim()];
    match method {
        Method::Cioc => {
            let mut kept = Vec::new();
            let mut dropped = Vec::new();
            for d in demos {
                let dd = cioc::demo_derivatives(d, &cfg.vehicle, cfg.tau_predict)?.normalized(normalizer)?;
                match dd.log_likelihood_and_gradient(&theta0, cfg.beta) {
                    Ok(_) => kept.push(dd),
                    Err(Error::DegenerateHessian(_)) => dropped.push(d.id.clone()),
                    Err(e) => return Err(e),
                }
            }
            if kept.is_empty() {
                return Err(Error::DegenerateHessian(
                    "every demonstration has a degenerate Hessian".into(),
                ));
            }
            let mut obj = CiocObjective {
                demos: kept,
                beta: cfg.beta,
            };
            let outcome = train_objective(&mut obj, &cfg.train, &theta0)?;
            Ok(BaselineOutcome { outcome, dropped })
        }
        Method::OptIrl => {
            let prepared = demos
                .iter()
                .map(|d| OptDemo::new(d, &cfg.vehicle, normalizer, cfg.tau_predict))
                .collect::<Result<Vec<_>>>()?;
            let mut obj = OptIrlObjective {
                demos: prepared,
                beta: cfg.beta,
                normalizer: normalizer.clone(),
                vehicle: cfg.vehicle,
                forward: cfg.forward,
                last: Vec::new(),
            };
            let outcome = train_objective(&mut obj, &cfg.train, &theta0)?;
            Ok(BaselineOutcome {
                outcome,
                dropped: Vec::new(),
            })
        }
    }
}
