//! Synthetic Boltzmann-rational demonstrations with known reward weights.
//!
//! Each case builds a scenario from a template, drives a constant-speed
//! anchor trajectory through it, samples a pool of feasible trajectories
//! that share the anchor's initial and goal conditions, flattens the pool in
//! feature space and draws the demonstration from
//! `P(tau) ∝ exp(beta * theta* . f(tau))` over the flattened pool.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smirl_core::features::{extract, FeatureNormalizer};
use smirl_core::geometry::{ConvexPolygon, Point2, Polyline};
use smirl_core::math::wrap_angle;
use smirl_core::redistribution::{redistribute, DEFAULT_BINS};
use smirl_core::rng::stream;
use smirl_core::sampler::generate_sample_set;
use smirl_core::types::ReferencePath;
use smirl_core::{
    Demonstration, Error as CoreError, FeatureKind, Member, RewardParams, SampleSet, SamplerConfig, Scenario,
    State, Trajectory, VehicleParams,
};

use crate::error::{Error, Result};

pub const DT: f64 = 0.1;
const LANE_WIDTH: f64 = 3.5;
const ROUNDABOUT_RADIUS: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    Straight,
    Curve,
    RoundaboutMerge,
}

impl Template {
    pub fn name(self) -> &'static str {
        match self {
            Template::Straight => "straight",
            Template::Curve => "curve",
            Template::RoundaboutMerge => "roundabout-merge",
        }
    }

    /// Feature dimension of the template's demonstrations.
    pub fn dim(self) -> usize {
        match self {
            Template::RoundaboutMerge => FeatureKind::INTERACTIVE,
            _ => FeatureKind::NON_INTERACTIVE,
        }
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "straight" => Ok(Template::Straight),
            "curve" => Ok(Template::Curve),
            "roundabout-merge" => Ok(Template::RoundaboutMerge),
            _ => Err(format!("unknown scenario '{s}' (straight, curve, roundabout-merge)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub template: Template,
    pub n_demos: usize,
    /// Ground-truth weights over features scaled by the generation
    /// normalizer.
    pub theta_star: Vec<f64>,
    pub beta: f64,
    /// Standard deviation of Gaussian noise added to demonstrated
    /// positions, meters.
    pub noise: f64,
    /// Fraction of cases (the last ones) put in the test split.
    pub test_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Core(CoreError::Parameter(m)));
        if self.n_demos < 1 {
            return bad("n_demos must be at least 1".into());
        }
        if self.theta_star.len() != self.template.dim() {
            return bad(format!(
                "scenario {} has {} features, theta has {}",
                self.template.name(),
                self.template.dim(),
                self.theta_star.len()
            ));
        }
        if self.theta_star.iter().any(|t| !t.is_finite()) {
            return bad("theta must be finite".into());
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad("beta must be positive".into());
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad("noise must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad("test fraction must lie in [0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: Vec<Demonstration>,
    pub test: Vec<Demonstration>,
    /// `theta*`, `beta` and the generation normalizer.
    pub truth: RewardParams,
    /// Cases whose pool could not be sampled, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Index drawn with probability proportional to `exp(beta * r_i)`.
pub fn boltzmann_draw<R: Rng + ?Sized>(rewards: &[f64], beta: f64, rng: &mut R) -> usize {
    let scaled: Vec<f64> = rewards.iter().map(|r| beta * r).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    rewards.len() - 1
}

fn arc(center: Point2, radius: f64, from: f64, to: f64) -> Vec<Point2> {
    let steps = ((to - from).abs() * radius).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|i| {
            let a = from + (to - from) * i as f64 / steps as f64;
            center + Point2::new(a.cos(), a.sin()) * radius
        })
        .collect()
}

fn polyline(points: Vec<Point2>) -> Polyline {
    Polyline::new(points).expect("template polylines are valid")
}

/// States at constant speed `v` along `line` from station `s0`.
fn along(line: &Polyline, s0: f64, v: f64, n: usize) -> Vec<State> {
    (0..n)
        .map(|k| {
            let s = s0 + v * DT * k as f64;
            let p = line.point_at(s);
            State::new(p.x, p.y, wrap_angle(line.heading_at(s)), v)
        })
        .collect()
}

/// Scenario and anchor trajectory of one case.
pub fn template_case<R: Rng + ?Sized>(template: Template, id: &str, rng: &mut R) -> Demonstration {
    let (scenario, ego) = match template {
        Template::Straight => {
            let line = polyline(vec![Point2::new(-10.0, 0.0), Point2::new(200.0, 0.0)]);
            let v0 = rng.random_range(7.0..12.0);
            let mut obstacles = Vec::new();
            if rng.random_bool(0.5) {
                let x = rng.random_range(15.0..35.0);
                obstacles.push(ConvexPolygon::oriented_box(Point2::new(x, -2.4), 0.0, 4.5, 1.8));
            }
            let ego = along(&line, 10.0, v0, 51);
            let sc = Scenario {
                reference_paths: vec![ReferencePath { line, lane_width: LANE_WIDTH }],
                obstacles,
                grid: None,
                other_agent: None,
                conflict_point: None,
                v_desired: 10.0,
            };
            (sc, ego)
        }
        Template::Curve => {
            let mut pts: Vec<Point2> = (0..40).map(|i| Point2::new(i as f64 - 10.0, 0.0)).collect();
            pts.extend(arc(Point2::new(30.0, 40.0), 40.0, -FRAC_PI_2, 0.0));
            let end = *pts.last().unwrap();
            pts.extend((1..=60).map(|i| end + Point2::new(0.0, i as f64)));
            let line = polyline(pts);
            let v0 = rng.random_range(5.0..9.0);
            let ego = along(&line, 10.0, v0, 51);
            let sc = Scenario {
                reference_paths: vec![ReferencePath { line, lane_width: LANE_WIDTH }],
                obstacles: Vec::new(),
                grid: None,
                other_agent: None,
                conflict_point: None,
                v_desired: 8.0,
            };
            (sc, ego)
        }
        Template::RoundaboutMerge => {
            let r = ROUNDABOUT_RADIUS;
            let c = Point2::new(0.0, -r);
            let entry = 25f64.to_radians();
            let dir = Point2::new(entry.cos(), entry.sin());
            let mut pts: Vec<Point2> = (0..40).map(|i| c - dir * (40 - i) as f64).collect();
            pts.extend(arc(Point2::new(0.0, 0.0), r, -FRAC_PI_2, FRAC_PI_2));
            let ego_line = polyline(pts);
            let v0 = rng.random_range(5.0..8.0);
            let ego = along(&ego_line, 10.0, v0, 61);
            let d_o = rng.random_range(20.0..50.0);
            let v_o = rng.random_range(6.0..9.0);
            let phi0 = -FRAC_PI_2 - d_o / r;
            let other_line = polyline(arc(Point2::new(0.0, 0.0), r, phi0 - 0.1, phi0 + 1.6 * PI));
            let other = Trajectory::new(0.0, DT, along(&other_line, 0.1 * r, v_o, 121));
            let sc = Scenario {
                reference_paths: vec![
                    ReferencePath { line: ego_line, lane_width: LANE_WIDTH },
                    ReferencePath { line: other_line, lane_width: LANE_WIDTH },
                ],
                obstacles: Vec::new(),
                grid: None,
                other_agent: Some(other),
                conflict_point: Some(c),
                v_desired: 8.0,
            };
            (sc, ego)
        }
    };
    Demonstration {
        id: id.to_string(),
        ego: Trajectory::new(0.0, DT, ego),
        scenario,
    }
}

pub fn case_id(template: Template, i: usize) -> String {
    format!("{}-{i:04}", template.name())
}

struct Pool {
    anchor: Demonstration,
    set: SampleSet,
    features: Vec<Vec<f64>>,
}

fn sample_pool(spec: &SyntheticSpec, i: usize, cfg: &SamplerConfig, vp: &VehicleParams) -> std::result::Result<Pool, (String, String)> {
    let id = case_id(spec.template, i);
    let anchor = template_case(spec.template, &id, &mut stream(spec.seed, "synth-case", &id));
    let pool_seed: u64 = stream(spec.seed, "synth-pool", &id).random();
    let generated = generate_sample_set(&anchor, cfg, vp, pool_seed).map_err(|e| (id.clone(), e.to_string()))?;
    let members: Vec<Member> = generated.set.members.into_iter().filter(|m| !m.is_demonstration()).collect();
    if members.is_empty() {
        return Err((id, "empty pool".into()));
    }
    let features = members
        .iter()
        .map(|m| extract(&m.trajectory, &anchor.scenario, cfg.tau_predict).map(|f| f.values))
        .collect::<smirl_core::Result<Vec<_>>>()
        .map_err(|e| (id.clone(), e.to_string()))?;
    Ok(Pool {
        set: SampleSet {
            demo_id: id,
            members,
        },
        anchor,
        features,
    })
}

fn add_noise(t: &mut Trajectory, sigma: f64, rng: &mut smirl_core::rng::Stream) {
    if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("sigma is finite and positive");
        for s in &mut t.states {
            s.x += n.sample(rng);
            s.y += n.sample(rng);
        }
    }
}

/// Generates the corpus. Cases are sampled in parallel on the current
/// rayon pool; every random draw comes from a stream keyed by the case id.
pub fn generate_synthetic(spec: &SyntheticSpec, cfg: &SamplerConfig, vp: &VehicleParams) -> Result<SynthCorpus> {
    spec.validate()?;
    let results: Vec<_> = (0..spec.n_demos)
        .into_par_iter()
        .map(|i| sample_pool(spec, i, cfg, vp))
        .collect();
    let mut pools = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(p) => pools.push(p),
            Err(e) => skipped.push(e),
        }
    }
    if pools.is_empty() {
        return Err(Error::Core(CoreError::SamplingFailure {
            id: "*".into(),
            reason: "every synthetic case failed to sample".into(),
        }));
    }
    let raw: Vec<smirl_core::FeatureVector> = pools
        .iter()
        .flat_map(|p| p.features.iter().map(|f| smirl_core::FeatureVector::new(f.clone())))
        .collect();
    let normalizer = FeatureNormalizer::fit(&raw)?;
    let demos = pools
        .par_iter()
        .map(|p| -> Result<Demonstration> {
            let scaled: Vec<Vec<f64>> = p.features.iter().map(|f| normalizer.apply_values(f)).collect();
            let flat = redistribute(&p.set, &scaled, DEFAULT_BINS, spec.seed)?;
            let rewards: Vec<f64> = flat
                .features
                .iter()
                .map(|f| smirl_core::irl::linear_reward(&spec.theta_star, f))
                .collect();
            let k = boltzmann_draw(&rewards, spec.beta, &mut stream(spec.seed, "synth-draw", &p.set.demo_id));
            let mut ego = flat.set.members[k].trajectory.clone();
            ego.controls = None;
            add_noise(&mut ego, spec.noise, &mut stream(spec.seed, "synth-noise", &p.set.demo_id));
            Ok(Demonstration {
                id: p.anchor.id.clone(),
                ego,
                scenario: p.anchor.scenario.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_test = (demos.len() as f64 * spec.test_fraction).round() as usize;
    let mut train = demos;
    let test = train.split_off(train.len() - n_test);
    Ok(SynthCorpus {
        train,
        test,
        truth: RewardParams::new(spec.theta_star.clone(), spec.beta, normalizer)?,
        skipped,
    })
}

/// Weights expressed over features scaled by `to` instead of `from`, so
/// that `theta . f / from == theta' . f / to` for every raw `f`.
pub fn rescale_theta(theta: &[f64], from: &FeatureNormalizer, to: &FeatureNormalizer) -> Vec<f64> {
    theta
        .iter()
        .zip(from.max_per_feature.iter().zip(&to.max_per_feature))
        .map(|(t, (f, g))| t * g / f)
        .collect()
}
