//! Partition function approximated by the single optimal trajectory.
//!
//! For the current weights a forward optimizer maximizes the reward over the
//! control sequence from the demonstration's controls. The resulting
//! trajectory stands in for the whole sample set, so the gradient is the
//! gap between the demonstrated and the optimal feature counts.

use alloc::vec::Vec;

use crate::dynamics::rollout_generic;
use crate::error::{Error, Result};
use crate::features::{FeatureContext, FeatureNormalizer};
use crate::irl::{Evaluation, Objective};
use crate::math::norm2;
use crate::types::{Demonstration, State, VehicleParams};

use super::cioc::{demo_controls, feature_jacobian};

/// Projected gradient ascent on the control sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardConfig {
    pub iterations: usize,
    pub step: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            iterations: 500,
            step: 1e-2,
        }
    }
}

/// A demonstration prepared for the forward optimizer.
#[derive(Debug, Clone)]
pub struct OptDemo<'a> {
    pub id: alloc::string::String,
    pub ctx: FeatureContext<'a>,
    pub s0: State,
    pub t0: f64,
    pub dt: f64,
    pub controls: Vec<f64>,
    /// Normalized features of the demonstration's rollout.
    pub features: Vec<f64>,
}

impl<'a> OptDemo<'a> {
    pub fn new(d: &'a Demonstration, vp: &VehicleParams, norm: &FeatureNormalizer, tau_predict: f64) -> Result<Self> {
        let ctx = FeatureContext::new(&d.scenario, tau_predict)?;
        if ctx.dim() != norm.dim() {
            return Err(Error::Dimension {
                expected: ctx.dim(),
                got: norm.dim(),
            });
        }
        let controls = demo_controls(d, vp);
        let s0 = d.ego.states[0];
        let states = rollout_generic::<f64>(&s0, &controls, d.ego.dt, vp);
        let raw = ctx.values(&states, d.ego.t0, d.ego.dt);
        Ok(OptDemo {
            id: d.id.clone(),
            features: norm.apply_values(&raw),
            ctx,
            s0,
            t0: d.ego.t0,
            dt: d.ego.dt,
            controls,
        })
    }
}

/// Outcome of one forward optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub controls: Vec<f64>,
    /// Normalized features of the optimal rollout.
    pub features: Vec<f64>,
    pub reward: f64,
    pub iterations: usize,
    /// No optimizer iteration was run.
    pub low_quality: bool,
}

fn project(u: &mut [f64], vp: &VehicleParams) {
    for c in u.chunks_exact_mut(2) {
        c[0] = c[0].clamp(-vp.a_max_abs, vp.a_max_abs);
        c[1] = c[1].clamp(-vp.delta_max, vp.delta_max);
    }
}

/// Maximizes `theta . f(rollout(u)) / norm` over bounded controls starting
/// from the demonstration's controls. The step halves until the reward
/// does not decrease and grows by half after every accepted step.
pub fn forward_optimize(
    demo: &OptDemo<'_>,
    theta: &[f64],
    norm: &FeatureNormalizer,
    vp: &VehicleParams,
    cfg: &ForwardConfig,
) -> Result<Optimum> {
    let eval = |u: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        let (raw, grads) = feature_jacobian(&demo.ctx, &demo.s0, u, demo.t0, demo.dt, vp);
        let f = norm.apply_values(&raw);
        let reward = crate::irl::linear_reward(theta, &f);
        let mut g = alloc::vec![0.0; u.len()];
        for (j, gj) in grads.iter().enumerate() {
            let w = theta[j] / norm.max_per_feature[j];
            for (a, b) in g.iter_mut().zip(gj) {
                *a += w * b;
            }
        }
        (reward, g, f)
    };
    let mut u = demo.controls.clone();
    project(&mut u, vp);
    let (mut reward, mut grad, mut feats) = eval(&u);
    let mut step = cfg.step;
    let mut done = 0;
    for _ in 0..cfg.iterations {
        if !reward.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(alloc::format!(
                "forward optimizer diverged on {} after {done} iterations",
                demo.id
            )));
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            project(&mut cand, vp);
            let (r, g, f) = eval(&cand);
            if r >= reward {
                let moved = cand.iter().zip(&u).any(|(a, b)| a != b);
                u = cand;
                reward = r;
                grad = g;
                feats = f;
                step *= 1.5;
                accepted = moved;
                break;
            }
            step *= 0.5;
        }
        done += 1;
        if !accepted {
            break;
        }
    }
    Ok(Optimum {
        controls: u,
        features: feats,
        reward,
        iterations: done,
        low_quality: cfg.iterations == 0,
    })
}

/// `beta * mean_i (f(demo_i) - f(opt_i))` plus the optima found.
pub fn optirl_step(
    demos: &[OptDemo<'_>],
    theta: &[f64],
    beta: f64,
    norm: &FeatureNormalizer,
    vp: &VehicleParams,
    cfg: &ForwardConfig,
) -> Result<(Vec<f64>, Vec<Optimum>)> {
    let m = demos.len() as f64;
    let mut grad = alloc::vec![0.0; theta.len()];
    let mut optima = Vec::with_capacity(demos.len());
    for d in demos {
        let opt = forward_optimize(d, theta, norm, vp, cfg)?;
        for ((g, fd), fo) in grad.iter_mut().zip(&d.features).zip(&opt.features) {
            *g += beta * (fd - fo) / m;
        }
        optima.push(opt);
    }
    Ok((grad, optima))
}

/// Opt-IRL as a training objective. It has no tractable value, so the
/// trainer takes plain gradient steps.
pub struct OptIrlObjective<'a> {
    pub demos: Vec<OptDemo<'a>>,
    pub beta: f64,
    pub normalizer: FeatureNormalizer,
    pub vehicle: VehicleParams,
    pub forward: ForwardConfig,
    /// Optima of the last evaluation.
    pub last: Vec<Optimum>,
}

impl Objective for OptIrlObjective<'_> {
    fn dim(&self) -> usize {
        self.normalizer.dim()
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        let (grad, optima) = optirl_step(&self.demos, theta, self.beta, &self.normalizer, &self.vehicle, &self.forward)?;
        self.last = optima;
        Ok(Evaluation {
            value: None,
            gap: norm2(&grad) / self.beta,
            gradient: grad,
        })
    }
}
