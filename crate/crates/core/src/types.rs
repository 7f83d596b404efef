//! Shared domain types and configuration.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::features::FeatureNormalizer;
use crate::geometry::{ConvexPolygon, OccupancyGrid, Point2, Polyline};
use crate::math::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
}

impl State {
    /// Builds a state with the heading wrapped into `(-pi, pi]`.
    pub fn new(x: f64, y: f64, psi: f64, v: f64) -> Self {
        State {
            x,
            y,
            psi: wrap_angle(psi),
            v,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Point2 {
        Point2::from_heading(self.psi) * self.v
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.psi.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub a: f64,
    pub delta: f64,
}

impl Control {
    pub const fn new(a: f64, delta: f64) -> Self {
        Control { a, delta }
    }
}

/// Uniformly sampled state sequence starting at time `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    #[serde(default)]
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Vec<Control>>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, states: Vec<State>) -> Self {
        Trajectory {
            t0,
            dt,
            states,
            controls: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t0
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.states.iter().map(State::position).collect()
    }

    /// Polyline through the positions; `None` when the trajectory does not
    /// move.
    pub fn path(&self) -> Option<Polyline> {
        Polyline::new(self.positions()).ok()
    }

    pub fn mean_speed(&self) -> f64 {
        if self.states.is_empty() {
            return 0.0;
        }
        self.states.iter().map(|s| s.v).sum::<f64>() / self.states.len() as f64
    }

    /// State at time `t`: linear interpolation inside the recorded range and
    /// constant-velocity extrapolation from the nearest end outside it.
    pub fn state_at(&self, t: f64) -> State {
        let n = self.states.len();
        let u = (t - self.t0) / self.dt;
        if u <= 0.0 || n == 1 {
            return extrapolate(&self.states[0], t - self.t0);
        }
        if u >= (n - 1) as f64 {
            return extrapolate(&self.states[n - 1], t - self.t_end());
        }
        let k = libm::floor(u) as usize;
        let w = u - k as f64;
        let a = &self.states[k];
        let b = &self.states[k + 1];
        State::new(
            a.x + w * (b.x - a.x),
            a.y + w * (b.y - a.y),
            a.psi + w * wrap_angle(b.psi - a.psi),
            a.v + w * (b.v - a.v),
        )
    }
}

fn extrapolate(s: &State, tau: f64) -> State {
    let p = s.position() + s.velocity() * tau;
    State::new(p.x, p.y, s.psi, s.v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    pub line: Polyline,
    pub lane_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// The first path is the ego's route; an optional second path is the
    /// interacting vehicle's route.
    pub reference_paths: Vec<ReferencePath>,
    #[serde(default)]
    pub obstacles: Vec<ConvexPolygon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<OccupancyGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_agent: Option<Trajectory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict_point: Option<Point2>,
    pub v_desired: f64,
}

impl Scenario {
    pub fn ego_path(&self) -> Result<&ReferencePath> {
        self.reference_paths
            .first()
            .ok_or_else(|| param("scenario has no reference path"))
    }

    pub fn is_interactive(&self) -> bool {
        self.other_agent.is_some()
    }

    /// Route of the interacting vehicle: the second reference path when
    /// given, otherwise the polyline through its recorded positions.
    pub fn other_path(&self) -> Option<Polyline> {
        if let Some(p) = self.reference_paths.get(1) {
            return Some(p.line.clone());
        }
        self.other_agent.as_ref().and_then(Trajectory::path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: String,
    pub ego: Trajectory,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    VDes,
    ALon,
    ALat,
    JLon,
    FutDis,
    FutIntDis,
}

impl FeatureKind {
    /// The global feature order. Non-interactive scenarios use the first
    /// [`FeatureKind::NON_INTERACTIVE`] entries.
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::VDes,
        FeatureKind::ALon,
        FeatureKind::ALat,
        FeatureKind::JLon,
        FeatureKind::FutDis,
        FeatureKind::FutIntDis,
    ];

    pub const NON_INTERACTIVE: usize = 4;
    pub const INTERACTIVE: usize = 6;

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::VDes => "v_des",
            FeatureKind::ALon => "a_lon",
            FeatureKind::ALat => "a_lat",
            FeatureKind::JLon => "j_lon",
            FeatureKind::FutDis => "fut_dis",
            FeatureKind::FutIntDis => "fut_int_dis",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<FeatureKind> {
        FeatureKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Feature kinds of a vector with `dim` entries.
    pub fn kinds(dim: usize) -> &'static [FeatureKind] {
        &FeatureKind::ALL[..dim.min(FeatureKind::ALL.len())]
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, kind: FeatureKind) -> Option<f64> {
        self.values.get(kind.index()).copied()
    }

    pub fn kinds(&self) -> &'static [FeatureKind] {
        FeatureKind::kinds(self.dim())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub theta: Vec<f64>,
    pub beta: f64,
    pub normalizer: FeatureNormalizer,
}

impl RewardParams {
    pub fn new(theta: Vec<f64>, beta: f64, normalizer: FeatureNormalizer) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(param("beta must be positive"));
        }
        if theta.len() != normalizer.dim() {
            return Err(Error::Dimension {
                expected: normalizer.dim(),
                got: theta.len(),
            });
        }
        Ok(RewardParams {
            theta,
            beta,
            normalizer,
        })
    }

    /// Weights of dimension `dim` with unit normalizers and `beta = 1`.
    pub fn unnormalized(theta: Vec<f64>) -> Self {
        let dim = theta.len();
        RewardParams {
            theta,
            beta: 1.0,
            normalizer: FeatureNormalizer::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub l1_lambda: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            epsilon: 1e-3,
            l1_lambda: 1e-3,
            max_iters: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(param("alpha must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(param("epsilon must be positive"));
        }
        if !(self.l1_lambda >= 0.0) || !self.l1_lambda.is_finite() {
            return Err(param("l1_lambda must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub k_samples: usize,
    pub f_threshold: f64,
    pub w_contract: f64,
    pub w_repel: f64,
    pub w_attract: f64,
    pub k_rep: f64,
    pub k_att: f64,
    pub d_influence: f64,
    /// Lateral offsets of lattice nodes from the reference path, meters.
    pub lateral_offsets: Vec<f64>,
    pub node_spacing: f64,
    /// Largest lateral change between consecutive lattice layers, meters.
    pub max_lateral_step: f64,
    /// Upper bound on distinct lattice paths kept per demonstration.
    pub max_paths: usize,
    /// Minimum pure-pursuit lookahead distance, meters.
    pub lookahead: f64,
    /// Lookahead time: the lookahead distance is at least this times the
    /// tracking speed.
    pub lookahead_time: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_lat_max: f64,
    pub tau_predict: f64,
    /// Radius of the disc approximating each vehicle footprint.
    pub vehicle_radius: f64,
    pub goal_tolerance: f64,
    /// Time gap required at the conflict point for yield and pass.
    pub decision_margin: f64,
    /// Terminal-time offsets around the suggested profile, seconds.
    pub time_offsets: Vec<f64>,
    /// Terminal-speed offsets around the suggested profile, m/s.
    pub speed_offsets: Vec<f64>,
    /// Integration step of the pure-pursuit tracker, seconds.
    pub sim_dt: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            k_samples: 200,
            f_threshold: 1.0,
            w_contract: 1.0 / 3.0,
            w_repel: 1.0 / 3.0,
            w_attract: 1.0 / 3.0,
            k_rep: 1.0,
            k_att: 1.0,
            d_influence: 5.0,
            lateral_offsets: alloc::vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5],
            node_spacing: 5.0,
            max_lateral_step: 1.0,
            max_paths: 24,
            lookahead: 4.0,
            lookahead_time: 1.0,
            a_min: -4.0,
            a_max: 2.5,
            a_lat_max: 3.5,
            tau_predict: 1.0,
            vehicle_radius: 1.0,
            goal_tolerance: 2.0,
            decision_margin: 0.5,
            time_offsets: alloc::vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0],
            speed_offsets: alloc::vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            sim_dt: 0.05,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_samples < 2 {
            return Err(param("k_samples must be at least 2"));
        }
        let w = self.w_contract + self.w_repel + self.w_attract;
        if (w - 1.0).abs() > 1e-9 || self.w_contract < 0.0 || self.w_repel < 0.0 || self.w_attract < 0.0 {
            return Err(param("force weights must be non-negative and sum to 1"));
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err(param("acceleration bounds must satisfy a_min < 0 < a_max"));
        }
        let positive = [
            ("node_spacing", self.node_spacing),
            ("lookahead", self.lookahead),
            ("lookahead_time", self.lookahead_time),
            ("a_lat_max", self.a_lat_max),
            ("tau_predict", self.tau_predict),
            ("d_influence", self.d_influence),
            ("sim_dt", self.sim_dt),
            ("goal_tolerance", self.goal_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(param(format!("{name} must be positive")));
            }
        }
        if !(self.f_threshold >= 0.0) {
            return Err(param("f_threshold must be non-negative"));
        }
        if self.lateral_offsets.is_empty() {
            return Err(param("lateral_offsets must not be empty"));
        }
        if self.time_offsets.is_empty() || self.speed_offsets.is_empty() {
            return Err(param("speed sampling grids must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub delta_max: f64,
    pub a_max_abs: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.7,
            delta_max: 0.6,
            a_max_abs: 8.0,
        }
    }
}

impl VehicleParams {
    pub fn max_curvature(&self) -> f64 {
        libm::tan(self.delta_max) / self.wheelbase
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0) {
            return Err(param("wheelbase must be positive"));
        }
        if !(self.delta_max > 0.0 && self.delta_max < core::f64::consts::FRAC_PI_2) {
            return Err(param("delta_max must lie in (0, pi/2)"));
        }
        if !(self.a_max_abs > 0.0) {
            return Err(param("a_max_abs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    None,
    Yield,
    Pass,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Decision::None => "none",
            Decision::Yield => "yield",
            Decision::Pass => "pass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Demonstration,
    /// Index of the sample in generation order.
    Sampled(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub trajectory: Trajectory,
    pub decision: Decision,
    pub origin: Origin,
}

impl Member {
    pub fn is_demonstration(&self) -> bool {
        self.origin == Origin::Demonstration
    }
}

/// Trajectories sharing one demonstration's initial and goal conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub demo_id: String,
    pub members: Vec<Member>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn demo_index(&self) -> Option<usize> {
        self.members.iter().position(Member::is_demonstration)
    }
}

/// One broken invariant of a [`Demonstration`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn violation(out: &mut Vec<Violation>, field: &str, rule: &str) {
    out.push(Violation {
        field: field.to_string(),
        rule: rule.to_string(),
    });
}

/// Tolerance used when comparing recorded states with the rollout of
/// recorded controls.
pub const CONTROL_CONSISTENCY_TOL: f64 = 1e-6;

fn check_trajectory(t: &Trajectory, field: &str, vp: &VehicleParams, out: &mut Vec<Violation>) {
    if t.states.len() < 3 {
        violation(out, field, "N ≥ 3 violated");
    }
    if !(t.dt > 0.0) || !t.dt.is_finite() {
        violation(out, field, "dt > 0 violated");
    }
    if !t.t0.is_finite() {
        violation(out, field, "t0 finite violated");
    }
    if t.states.iter().any(|s| !s.is_finite()) {
        violation(out, field, "finite states violated");
    }
    if t.states.iter().any(|s| s.v < 0.0) {
        violation(out, field, "v ≥ 0 violated");
    }
    let pi = core::f64::consts::PI;
    if t.states.iter().any(|s| !(s.psi > -pi && s.psi <= pi)) {
        violation(out, field, "psi ∈ (−π, π] violated");
    }
    if let Some(controls) = &t.controls {
        if controls.len() + 1 != t.states.len() {
            violation(out, field, "controls length N−1 violated");
            return;
        }
        if controls
            .iter()
            .any(|u| !(u.a.abs() <= vp.a_max_abs) || !(u.delta.abs() <= vp.delta_max))
        {
            violation(out, field, "control bounds violated");
            return;
        }
        if t.dt > 0.0 {
            let consistent = t.states.windows(2).zip(controls).all(|(w, u)| {
                let next = crate::dynamics::step_unchecked(&w[0], u, t.dt, vp);
                (next.x - w[1].x).abs() <= CONTROL_CONSISTENCY_TOL
                    && (next.y - w[1].y).abs() <= CONTROL_CONSISTENCY_TOL
                    && wrap_angle(next.psi - w[1].psi).abs() <= CONTROL_CONSISTENCY_TOL
                    && (next.v - w[1].v).abs() <= CONTROL_CONSISTENCY_TOL
            });
            if !consistent {
                violation(out, field, "states consistent with dynamics violated");
            }
        }
    }
}

/// Lists every broken invariant of `d`, using default vehicle parameters for
/// the control bounds. An empty list means the demonstration is valid.
pub fn validate_demonstration(d: &Demonstration) -> Vec<Violation> {
    validate_demonstration_with(d, &VehicleParams::default())
}

pub fn validate_demonstration_with(d: &Demonstration, vp: &VehicleParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.id.is_empty() {
        violation(&mut out, "id", "non-empty identifier violated");
    }
    check_trajectory(&d.ego, "ego", vp, &mut out);
    let sc = &d.scenario;
    if sc.reference_paths.is_empty() {
        violation(&mut out, "scenario.reference_paths", "at least one path violated");
    }
    for p in &sc.reference_paths {
        if !(p.line.length() > 0.0) {
            violation(&mut out, "scenario.reference_paths", "arc length > 0 violated");
        }
        if !(p.lane_width > 0.0) {
            violation(&mut out, "scenario.reference_paths", "lane width > 0 violated");
        }
    }
    if let Some(g) = &sc.grid {
        if !(g.resolution > 0.0) {
            violation(&mut out, "scenario.grid", "resolution > 0 violated");
        }
        if g.occupied.len() != g.width * g.height {
            violation(&mut out, "scenario.grid", "cell count = width × height violated");
        }
    }
    if !(sc.v_desired > 0.0) || !sc.v_desired.is_finite() {
        violation(&mut out, "scenario.v_desired", "v_desired > 0 violated");
    }
    if let Some(other) = &sc.other_agent {
        let mut inner = Vec::new();
        check_trajectory(other, "scenario.other_agent", vp, &mut inner);
        out.extend(inner);
        let slack = 1e-9 * (1.0 + d.ego.t_end().abs());
        if !d.ego.is_empty()
            && !other.is_empty()
            && (other.t0 > d.ego.t0 + slack || other.t_end() < d.ego.t_end() - slack)
        {
            violation(&mut out, "scenario.other_agent", "time ranges overlap fully violated");
        }
    }
    if let Some(c) = sc.conflict_point {
        if !c.is_finite() {
            violation(&mut out, "scenario.conflict_point", "finite coordinates violated");
        }
    }
    out
}
