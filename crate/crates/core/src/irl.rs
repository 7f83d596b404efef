//! Sample-based maximum-entropy IRL: reward, partition estimate, expected
//! feature counts, log-likelihood, gradient and the training loop.
//!
//! The trainer works on pre-extracted, normalized feature vectors
//! ([`FeatureSet`]), so training never touches trajectories and never
//! resamples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::math::{log_sum_exp, norm2, NeumaierSum};
use crate::types::{FeatureVector, RewardParams, TrainConfig};

/// `theta . normalize(fv)`.
pub fn reward(fv: &FeatureVector, rp: &RewardParams) -> Result<f64> {
    let f = rp.normalizer.apply(fv)?;
    if f.dim() != rp.dim() {
        return Err(Error::Dimension {
            expected: rp.dim(),
            got: f.dim(),
        });
    }
    Ok(linear_reward(&rp.theta, &f.values))
}

/// `theta . f` on already normalized features.
pub fn linear_reward(theta: &[f64], f: &[f64]) -> f64 {
    let mut acc = NeumaierSum::default();
    for (t, x) in theta.iter().zip(f) {
        acc.add(t * x);
    }
    acc.total()
}

/// Normalized features of one demonstration and of every member of its
/// sample set (the demonstration included).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub demo: Vec<f64>,
    pub members: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn new(demo: Vec<f64>, members: Vec<Vec<f64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(param("sample set is empty"));
        }
        let d = demo.len();
        if let Some(bad) = members.iter().find(|m| m.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: bad.len(),
            });
        }
        Ok(FeatureSet { demo, members })
    }

    pub fn dim(&self) -> usize {
        self.demo.len()
    }

    pub fn contains_demo(&self) -> bool {
        self.members.iter().any(|m| m == &self.demo)
    }
}

fn scaled_rewards(members: &[Vec<f64>], theta: &[f64], beta: f64) -> Vec<f64> {
    members.iter().map(|f| beta * linear_reward(theta, f)).collect()
}

/// `log sum_m exp(beta * R(tau_m))` over normalized member features.
pub fn log_partition(members: &[Vec<f64>], theta: &[f64], beta: f64) -> f64 {
    log_sum_exp(&scaled_rewards(members, theta, beta))
}

/// [`log_partition`] taking raw features and the normalizer from `rp`.
pub fn partition(members: &[FeatureVector], rp: &RewardParams) -> Result<f64> {
    if members.is_empty() {
        return Err(param("sample set is empty"));
    }
    let norm: Vec<Vec<f64>> = members
        .iter()
        .map(|f| rp.normalizer.apply(f).map(|v| v.values))
        .collect::<Result<_>>()?;
    Ok(log_partition(&norm, &rp.theta, rp.beta))
}

/// Boltzmann weights `softmax(beta * R(tau_m))`.
pub fn softmax_weights(members: &[Vec<f64>], theta: &[f64], beta: f64) -> Vec<f64> {
    let r = scaled_rewards(members, theta, beta);
    let lz = log_sum_exp(&r);
    r.iter().map(|x| libm::exp(x - lz)).collect()
}

/// Boltzmann-weighted mean of the member features.
pub fn expected_feature_counts(members: &[Vec<f64>], theta: &[f64], beta: f64) -> Vec<f64> {
    let w = softmax_weights(members, theta, beta);
    let dim = members.first().map_or(0, Vec::len);
    (0..dim)
        .map(|j| {
            let mut acc = NeumaierSum::default();
            for (wi, f) in w.iter().zip(members) {
                acc.add(wi * f[j]);
            }
            acc.total()
        })
        .collect()
}

/// `beta * R(demo) - log Z`; the demonstration must be one of the members.
pub fn log_likelihood(set: &FeatureSet, theta: &[f64], beta: f64) -> Result<f64> {
    if !set.contains_demo() {
        return Err(Error::Contract(
            "demonstration is not a member of its own sample set".into(),
        ));
    }
    Ok(beta * linear_reward(theta, &set.demo) - log_partition(&set.members, theta, beta))
}

/// Mean log-likelihood over demonstrations.
pub fn mean_log_likelihood(sets: &[FeatureSet], theta: &[f64], beta: f64) -> Result<f64> {
    if sets.is_empty() {
        return Err(param("no demonstrations"));
    }
    let mut acc = NeumaierSum::default();
    for s in sets {
        acc.add(log_likelihood(s, theta, beta)?);
    }
    Ok(acc.total() / sets.len() as f64)
}

/// `(1/M) sum_i (f(xi_i) - E[f])`, the feature-count gap without `beta`.
pub fn feature_gap(sets: &[FeatureSet], theta: &[f64], beta: f64) -> Vec<f64> {
    let dim = theta.len();
    let mut acc = vec![NeumaierSum::default(); dim];
    for s in sets {
        let e = expected_feature_counts(&s.members, theta, beta);
        for j in 0..dim {
            acc[j].add(s.demo[j] - e[j]);
        }
    }
    let m = sets.len().max(1) as f64;
    acc.iter().map(|a| a.total() / m).collect()
}

/// Gradient of the mean log-likelihood minus the l1 subgradient
/// `lambda * sign(theta)` (zero where `theta_j = 0`).
pub fn gradient(sets: &[FeatureSet], theta: &[f64], beta: f64, l1_lambda: f64) -> Vec<f64> {
    feature_gap(sets, theta, beta)
        .into_iter()
        .zip(theta)
        .map(|(g, &t)| beta * g - l1_lambda * sign(t))
        .collect()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Value and ascent direction of a training objective at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Smooth objective (mean log-likelihood), when the method defines one.
    pub value: Option<f64>,
    /// Gradient of the smooth objective.
    pub gradient: Vec<f64>,
    /// Feature-count gap norm reported in the history.
    pub gap: f64,
}

/// A smooth objective maximized by [`train_objective`].
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation>;
}

/// The sample-based maximum-entropy objective.
pub struct SampleObjective<'a> {
    pub sets: &'a [FeatureSet],
    pub beta: f64,
}

impl Objective for SampleObjective<'_> {
    fn dim(&self) -> usize {
        self.sets.first().map_or(0, FeatureSet::dim)
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        let value = mean_log_likelihood(self.sets, theta, self.beta)?;
        let gap = feature_gap(self.sets, theta, self.beta);
        Ok(Evaluation {
            value: Some(value),
            gap: norm2(&gap),
            gradient: gap.iter().map(|g| self.beta * g).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub k: usize,
    pub gap: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub theta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn l1(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.abs()).sum()
}

fn proximal_step(theta: &[f64], grad: &[f64], alpha: f64, lambda: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(grad)
        .map(|(t, g)| soft_threshold(t + alpha * g, alpha * lambda))
        .collect()
}

const MAX_HALVINGS: usize = 60;
const MAX_GROWTH: f64 = 1e3;

/// Proximal gradient ascent on `objective - lambda * |theta|_1`.
///
/// Each iteration starts from the previous accepted step doubled (at most
/// `MAX_GROWTH * alpha`; `alpha` on the first iteration) and halves it
/// until the proximal sufficient-ascent condition holds. Training stops
/// when the gradient mapping
/// `|theta - prox(theta + alpha * grad)| / alpha` drops below `epsilon`
/// (this is the feature-count gap scaled by `beta` when `lambda = 0`), or
/// after `max_iters` iterations, in which case the best iterate is returned
/// with `converged = false`.
pub fn train_objective(objective: &mut dyn Objective, cfg: &TrainConfig, theta0: &[f64]) -> Result<TrainOutcome> {
    cfg.validate()?;
    if theta0.len() != objective.dim() {
        return Err(Error::Dimension {
            expected: objective.dim(),
            got: theta0.len(),
        });
    }
    let lambda = cfg.l1_lambda;
    let mut theta = theta0.to_vec();
    let mut eval = objective.evaluate(&theta)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut step = cfg.alpha;
    let mut k = 0;
    loop {
        check_finite(&eval)?;
        let ll = eval.value.unwrap_or(f64::NAN);
        history.push(HistoryEntry {
            k,
            gap: eval.gap,
            log_likelihood: ll,
        });
        let score = match eval.value {
            Some(v) => v - lambda * l1(&theta),
            None => -eval.gap,
        };
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, theta.clone()));
        }
        let probe = proximal_step(&theta, &eval.gradient, cfg.alpha, lambda);
        let mapping: Vec<f64> = probe
            .iter()
            .zip(&theta)
            .map(|(p, t)| (p - t) / cfg.alpha)
            .collect();
        if norm2(&mapping) < cfg.epsilon {
            converged = true;
            break;
        }
        if k >= cfg.max_iters {
            break;
        }
        let (next, next_eval) = match eval.value {
            None => {
                let e = objective.evaluate(&probe)?;
                (probe, e)
            }
            Some(v) => {
                let current = v - lambda * l1(&theta);
                let mut alpha = step;
                let mut accepted = None;
                for _ in 0..MAX_HALVINGS {
                    let candidate = proximal_step(&theta, &eval.gradient, alpha, lambda);
                    let d: Vec<f64> = candidate.iter().zip(&theta).map(|(c, t)| c - t).collect();
                    let lin: f64 = d.iter().zip(&eval.gradient).map(|(d, g)| d * g).sum();
                    let quad = d.iter().map(|d| d * d).sum::<f64>() / (2.0 * alpha);
                    let e = objective.evaluate(&candidate)?;
                    let val = e.value.unwrap_or(f64::NEG_INFINITY);
                    let sufficient = val >= v + lin - quad;
                    // Steps at the initial size only need to not decrease the
                    // regularized objective.
                    let no_worse = alpha <= cfg.alpha && val - lambda * l1(&candidate) >= current;
                    if sufficient || no_worse {
                        accepted = Some((candidate, e));
                        break;
                    }
                    alpha *= 0.5;
                }
                match accepted {
                    Some(a) => {
                        step = (2.0 * alpha).min(MAX_GROWTH * cfg.alpha);
                        a
                    }
                    // No step size improves the objective: numerically stationary.
                    None => break,
                }
            }
        };
        theta = next;
        eval = next_eval;
        k += 1;
    }
    let theta = if converged {
        theta
    } else {
        best.map(|(_, t)| t).unwrap_or(theta)
    };
    Ok(TrainOutcome {
        theta,
        converged,
        iterations: k,
        history,
    })
}

fn check_finite(e: &Evaluation) -> Result<()> {
    if e.gradient.iter().any(|g| !g.is_finite()) || e.value.is_some_and(|v| !v.is_finite()) {
        return Err(Error::Divergence(format!(
            "objective became non-finite (value {:?})",
            e.value
        )));
    }
    Ok(())
}

/// Trains the sample-based objective from `theta = 0`.
pub fn train(sets: &[FeatureSet], beta: f64, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if sets.is_empty() {
        return Err(param("no demonstrations"));
    }
    for s in sets {
        if !s.contains_demo() {
            return Err(Error::Contract(
                "demonstration is not a member of its own sample set".into(),
            ));
        }
    }
    let dim = sets[0].dim();
    if let Some(bad) = sets.iter().find(|s| s.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: bad.dim(),
        });
    }
    let mut obj = SampleObjective { sets, beta };
    train_objective(&mut obj, cfg, &vec![0.0; dim])
}
