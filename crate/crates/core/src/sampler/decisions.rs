//! Yield/pass decisions at the conflict point.

use alloc::vec;
use alloc::vec::Vec;

use crate::types::{Decision, Scenario};

/// When the interacting vehicle reaches the conflict point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictTiming {
    /// Absolute arrival time, `None` when it never arrives.
    pub other_arrival: Option<f64>,
    /// The other vehicle was already past the conflict point at `t0`.
    pub already_passed: bool,
}

/// Arrival of the interacting vehicle at the conflict point, searched from
/// `t0` over its recorded states and then at its last recorded speed.
pub fn conflict_timing(scenario: &Scenario, t0: f64) -> Option<ConflictTiming> {
    let other = scenario.other_agent.as_ref()?;
    let c = scenario.conflict_point?;
    let path = scenario.other_path()?;
    let sc = path.project(c).station;
    let station_at = |t: f64| path.project(other.state_at(t).position()).station;
    let s0 = station_at(t0);
    if s0 > sc {
        return Some(ConflictTiming {
            other_arrival: None,
            already_passed: true,
        });
    }
    let mut t_prev = t0;
    let mut s_prev = s0;
    for k in 0..other.len() {
        let t = other.time(k);
        if t <= t0 {
            continue;
        }
        let s = station_at(t);
        if s >= sc {
            let w = if s > s_prev { (sc - s_prev) / (s - s_prev) } else { 0.0 };
            return Some(ConflictTiming {
                other_arrival: Some(t_prev + w * (t - t_prev)),
                already_passed: false,
            });
        }
        t_prev = t;
        s_prev = s;
    }
    let last = other.states.last()?;
    let arrival = if last.v > 1e-3 {
        Some(t_prev + (sc - s_prev) / last.v)
    } else {
        None
    };
    Some(ConflictTiming {
        other_arrival: arrival,
        already_passed: false,
    })
}

/// Decisions available to the ego vehicle at time `t0`: `[None]` without an
/// interacting vehicle or conflict point, `[Pass]` when the other vehicle
/// has already passed the conflict point (or never reaches it), and
/// `[Yield, Pass]` otherwise.
pub fn enumerate_decisions(scenario: &Scenario, t0: f64) -> Vec<Decision> {
    match conflict_timing(scenario, t0) {
        None => vec![Decision::None],
        Some(ConflictTiming {
            other_arrival: Some(_),
            already_passed: false,
        }) => vec![Decision::Yield, Decision::Pass],
        Some(_) => vec![Decision::Pass],
    }
}

/// Decision realised by an ego arrival time at the conflict point, `None`
/// when it falls inside the margin around the other vehicle's arrival.
pub fn classify_arrival(ego_arrival: f64, timing: &ConflictTiming, margin: f64) -> Option<Decision> {
    match timing.other_arrival {
        Some(t_o) if !timing.already_passed => {
            if ego_arrival <= t_o - margin {
                Some(Decision::Pass)
            } else if ego_arrival >= t_o + margin {
                Some(Decision::Yield)
            } else {
                None
            }
        }
        _ => Some(Decision::Pass),
    }
}
