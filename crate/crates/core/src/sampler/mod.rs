//! Feasible, collision-free trajectory samples sharing a demonstration's
//! initial state and goal.
//!
//! The pipeline per demonstration is: lattice paths ([`paths`]), pure-pursuit
//! smoothing ([`smoothing`]), one suggested speed profile per yield/pass
//! decision plus cubic local variations ([`speed`], [`decisions`]), and
//! finally feasibility and safety filtering. The demonstration itself is
//! appended to its own set.

pub mod decisions;
pub mod paths;
pub mod smoothing;
pub mod speed;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::{check_feasible, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{ObstacleField, Point2};
use crate::rng::{stream, Stream};
use crate::types::{
    Decision, Demonstration, Member, Origin, SampleSet, SamplerConfig, Scenario, State, Trajectory,
    VehicleParams,
};

pub use decisions::{classify_arrival, conflict_timing, enumerate_decisions, ConflictTiming};
pub use paths::{node_force, node_forces, sample_paths, ElasticNode, Environment, Forces, PathCandidate};
pub use smoothing::{smooth_path, SmoothPath};
pub use speed::{sample_speed_profiles, suggested_speed_profile, Cubic, SpeedPlan, SpeedProfile};

/// Counts of what happened while building one sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleStats {
    pub paths: usize,
    pub smoothed: usize,
    pub candidates: usize,
    pub infeasible: usize,
    pub unsafe_: usize,
    pub off_goal: usize,
    pub ambiguous: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub set: SampleSet,
    pub stats: SampleStats,
}

/// Whether every state keeps the vehicle footprint clear of the static
/// obstacles and of the interacting vehicle's footprint at the same time.
pub fn is_safe(t: &Trajectory, scenario: &Scenario, cfg: &SamplerConfig) -> bool {
    let r = cfg.vehicle_radius;
    let statics = ObstacleField {
        polygons: scenario.obstacles.clone(),
        capsules: Vec::new(),
        grid: scenario.grid.clone(),
    };
    t.states.iter().enumerate().all(|(k, s)| {
        let p = s.position();
        if statics.clearance(p) <= r {
            return false;
        }
        match &scenario.other_agent {
            Some(o) => o.state_at(t.time(k)).position().distance(p) >= 2.0 * r,
            None => true,
        }
    })
}

/// Time at which `t` first reaches `station` along `path`, interpolated
/// between states.
fn crossing_time(t: &Trajectory, path: &crate::geometry::Polyline, station: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for (k, s) in t.states.iter().enumerate() {
        let st = path.project(s.position()).station;
        let time = t.time(k);
        if st >= station {
            return Some(match prev {
                Some((ps, pt)) if st > ps => pt + (station - ps) / (st - ps) * (time - pt),
                _ => time,
            });
        }
        prev = Some((st, time));
    }
    None
}

/// Decision realised by a trajectory: its arrival at the conflict point
/// relative to the other vehicle's, rounded to the nearer side when it falls
/// inside the margin.
pub fn trajectory_decision(t: &Trajectory, scenario: &Scenario) -> Decision {
    let (Some(timing), Some(c)) = (conflict_timing(scenario, t.t0), scenario.conflict_point) else {
        return Decision::None;
    };
    let Ok(ego) = scenario.ego_path() else {
        return Decision::None;
    };
    let station = ego.line.project(c).station;
    match (crossing_time(t, &ego.line, station), timing.other_arrival) {
        (_, None) => Decision::Pass,
        (None, Some(_)) => Decision::Yield,
        (Some(te), Some(to)) => classify_arrival(te, &timing, 0.0).unwrap_or(if te < to {
            Decision::Pass
        } else {
            Decision::Yield
        }),
    }
}

fn trajectory_from_profile(
    path: &SmoothPath,
    profile: &SpeedProfile,
    start: &State,
    t0: f64,
) -> Trajectory {
    let mut states: Vec<State> = profile
        .s
        .iter()
        .zip(&profile.v)
        .map(|(&s, &v)| {
            let p = path.point_at(s);
            State::new(p.x, p.y, path.heading_at(s), v)
        })
        .collect();
    states[0] = *start;
    Trajectory::new(t0, profile.dt, states)
}

/// Yield profile: the fastest plan whose arrival at `s_conf` is no earlier
/// than `target` (relative time), found by bisection on a speed cap held
/// from the start until the conflict point.
fn yield_profile(
    path: &SmoothPath,
    v0: f64,
    v_limit: f64,
    s_conf: f64,
    target: f64,
    cfg: &SamplerConfig,
    dt: f64,
) -> Option<SpeedProfile> {
    let plan_with = |vc: f64| -> Option<(SpeedPlan, SpeedProfile)> {
        let cap = move |s: f64| -> f64 {
            if s <= s_conf {
                vc.max(libm::sqrt((v0 * v0 + cfg.a_min * s).max(0.0)))
            } else {
                f64::INFINITY
            }
        };
        suggested_speed_profile(path, v0, None, v_limit, cfg, dt, Decision::Yield, Some(&cap)).ok()
    };
    let (plan, prof) = plan_with(v_limit)?;
    if plan.arrival_time(s_conf) >= target {
        return Some(prof);
    }
    let (mut lo, mut hi) = (0.2, v_limit);
    let (slow_plan, _) = plan_with(lo)?;
    if slow_plan.arrival_time(s_conf) < target {
        return None;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match plan_with(mid) {
            Some((p, _)) if p.arrival_time(s_conf) >= target => lo = mid,
            _ => hi = mid,
        }
    }
    plan_with(lo).map(|(_, p)| p)
}

fn shuffle<T>(v: &mut [T], rng: &mut Stream) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Builds the sample set of `d`: up to `cfg.k_samples` generated
/// trajectories (stratified across decisions) followed by the
/// demonstration itself.
///
/// Every generated trajectory starts exactly at the demonstration's initial
/// state, ends within `cfg.goal_tolerance` of its final position, passes
/// [`check_feasible`] and [`is_safe`]. Fails with
/// [`Error::SamplingFailure`] when no trajectory survives.
pub fn generate_sample_set(
    d: &Demonstration,
    cfg: &SamplerConfig,
    vp: &VehicleParams,
    seed: u64,
) -> Result<Generated> {
    cfg.validate()?;
    vp.validate()?;
    let fail = |reason: alloc::string::String| Error::SamplingFailure {
        id: d.id.clone(),
        reason,
    };
    if d.ego.len() < 3 {
        return Err(fail("demonstration has fewer than three states".into()));
    }
    let mut rng = stream(seed, "sample", &d.id);
    let sc = &d.scenario;
    let t0 = d.ego.t0;
    let dt = d.ego.dt;
    let start = d.ego.states[0];
    let goal = d.ego.states.last().unwrap().position();
    let env = Environment::new(sc, t0, cfg)?;
    let mut stats = SampleStats::default();

    let lattice = sample_paths(&env, start.position(), goal, cfg, &mut rng).map_err(|e| fail(e.to_string()))?;
    stats.paths = lattice.len();
    let v_track = d.ego.mean_speed().max(1.0);
    let mut smoothed = Vec::new();
    for cand in &lattice {
        let Ok(sp) = smooth_path(&cand.line, &start, v_track, cfg, vp) else {
            continue;
        };
        let free = sp
            .line
            .points()
            .windows(2)
            .all(|w| env.edge_is_free(w[0], w[1], cfg.vehicle_radius));
        if free {
            smoothed.push(sp);
        }
    }
    stats.smoothed = smoothed.len();

    let timing = conflict_timing(sc, t0);
    let decisions = enumerate_decisions(sc, t0);
    let lane_width = sc.ego_path()?.lane_width;
    let v_limit = sc.v_desired;
    let margin = cfg.decision_margin;

    let mut candidates: Vec<(Decision, Trajectory)> = Vec::new();
    for path in &smoothed {
        let s_conf = sc.conflict_point.and_then(|c| {
            let pr = path.line.project(c);
            (pr.distance <= lane_width && pr.station >= 0.0 && pr.station <= path.length()).then_some(pr.station)
        });
        let active = match (&timing, s_conf) {
            (Some(_), Some(_)) => decisions.clone(),
            _ => alloc::vec![Decision::None],
        };
        let Ok((fast_plan, fast)) = suggested_speed_profile(path, start.v, None, v_limit, cfg, dt, Decision::None, None)
        else {
            continue;
        };
        let mut suggestions: Vec<SpeedProfile> = Vec::new();
        for dec in active {
            let sugg = match dec {
                Decision::None => Some(fast.clone()),
                Decision::Pass => {
                    let (tm, sf) = (timing.unwrap(), s_conf.unwrap());
                    let arrival = t0 + fast_plan.arrival_time(sf);
                    match classify_arrival(arrival, &tm, margin) {
                        Some(Decision::Pass) => Some(SpeedProfile {
                            decision: Decision::Pass,
                            ..fast.clone()
                        }),
                        _ => None,
                    }
                }
                Decision::Yield => {
                    let t_o = timing.unwrap().other_arrival.unwrap();
                    yield_profile(path, start.v, v_limit, s_conf.unwrap(), t_o + margin + 0.1 - t0, cfg, dt)
                }
            };
            if let Some(s) = sugg {
                if !suggestions.iter().any(|q| q.s == s.s) {
                    suggestions.push(s);
                }
            }
        }
        for sugg in &suggestions {
            for prof in sample_speed_profiles(path, sugg, cfg) {
                stats.candidates += 1;
                let label = match (&timing, s_conf) {
                    (Some(tm), Some(sf)) => match prof.arrival_time(sf) {
                        Some(ta) => classify_arrival(t0 + ta, tm, margin),
                        None => None,
                    },
                    _ => Some(Decision::None),
                };
                let Some(label) = label else {
                    stats.ambiguous += 1;
                    continue;
                };
                let traj = trajectory_from_profile(path, &prof, &start, t0);
                if traj.states.last().unwrap().position().distance(goal) > cfg.goal_tolerance {
                    stats.off_goal += 1;
                    continue;
                }
                if !check_feasible(&traj, vp, FEASIBILITY_TOL) {
                    stats.infeasible += 1;
                    continue;
                }
                if !is_safe(&traj, sc, cfg) {
                    stats.unsafe_ += 1;
                    continue;
                }
                candidates.push((label, traj));
            }
        }
    }

    // Stratified selection: round-robin over decision groups in a seeded
    // random order within each group.
    let mut groups: Vec<Vec<usize>> = [Decision::None, Decision::Yield, Decision::Pass]
        .iter()
        .map(|dec| (0..candidates.len()).filter(|&i| candidates[i].0 == *dec).collect())
        .collect();
    for g in &mut groups {
        shuffle(g, &mut rng);
    }
    let mut chosen = Vec::new();
    let mut cursor = [0usize; 3];
    while chosen.len() < cfg.k_samples {
        let mut progressed = false;
        for (gi, g) in groups.iter().enumerate() {
            if chosen.len() >= cfg.k_samples {
                break;
            }
            if cursor[gi] < g.len() {
                chosen.push(g[cursor[gi]]);
                cursor[gi] += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    chosen.sort_unstable();
    stats.kept = chosen.len();
    if chosen.is_empty() {
        return Err(fail(format!(
            "no trajectory survived ({} paths, {} smoothed, {} candidates)",
            stats.paths, stats.smoothed, stats.candidates
        )));
    }
    let mut members: Vec<Member> = chosen
        .into_iter()
        .map(|i| Member {
            trajectory: candidates[i].1.clone(),
            decision: candidates[i].0,
            origin: Origin::Sampled(i as u32),
        })
        .collect();
    members.push(Member {
        trajectory: d.ego.clone(),
        decision: trajectory_decision(&d.ego, sc),
        origin: Origin::Demonstration,
    });
    Ok(Generated {
        set: SampleSet {
            demo_id: d.id.clone(),
            members,
        },
        stats,
    })
}

/// Start pose and goal point of a demonstration.
pub fn boundary_conditions(d: &Demonstration) -> (State, Point2) {
    (d.ego.states[0], d.ego.states.last().unwrap().position())
}
