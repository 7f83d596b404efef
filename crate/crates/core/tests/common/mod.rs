#![allow(dead_code)]

use smirl_core::dynamics::rollout_from;
use smirl_core::geometry::{ConvexPolygon, Point2, Polyline};
use smirl_core::types::ReferencePath;
use smirl_core::{Control, Demonstration, Scenario, State, Trajectory, VehicleParams};

pub fn straight_road(length: f64) -> ReferencePath {
    ReferencePath {
        line: Polyline::new(vec![Point2::new(-10.0, 0.0), Point2::new(length, 0.0)]).unwrap(),
        lane_width: 3.5,
    }
}

/// A `straight` m lead-in, a left arc of `radius` over `sweep` radians and
/// a straight exit, sampled every metre.
pub fn curve_road(straight: f64, radius: f64, sweep: f64) -> ReferencePath {
    let mut pts = Vec::new();
    let mut x = -10.0;
    while x < straight {
        pts.push(Point2::new(x, 0.0));
        x += 1.0;
    }
    let steps = (radius * sweep).ceil() as usize;
    for i in 0..=steps {
        let a = sweep * i as f64 / steps as f64;
        pts.push(Point2::new(straight + radius * a.sin(), radius * (1.0 - a.cos())));
    }
    let end = *pts.last().unwrap();
    let dir = Point2::new(sweep.cos(), sweep.sin());
    for i in 1..=40 {
        pts.push(end + dir * i as f64);
    }
    ReferencePath {
        line: Polyline::new(pts).unwrap(),
        lane_width: 3.5,
    }
}

pub fn scenario(path: ReferencePath, v_desired: f64) -> Scenario {
    Scenario {
        reference_paths: vec![path],
        obstacles: Vec::new(),
        grid: None,
        other_agent: None,
        conflict_point: None,
        v_desired,
    }
}

/// Constant-speed drive along the x axis.
pub fn straight_demo(id: &str, v: f64, n: usize, scenario: Scenario) -> Demonstration {
    let controls = vec![Control::new(0.0, 0.0); n - 1];
    let ego = rollout_from(0.0, &State::new(0.0, 0.0, 0.0, v), &controls, 0.1, &VehicleParams::default()).unwrap();
    Demonstration {
        id: id.into(),
        ego,
        scenario,
    }
}

/// Demonstration that follows `path` at constant speed `v` with states
/// placed exactly on the polyline.
pub fn path_demo(id: &str, v: f64, n: usize, scenario: Scenario) -> Demonstration {
    let line = scenario.reference_paths[0].line.clone();
    let s0 = line.project(Point2::new(0.0, 0.0)).station;
    let states = (0..n)
        .map(|k| {
            let s = s0 + v * 0.1 * k as f64;
            let p = line.point_at(s);
            State::new(p.x, p.y, line.heading_at(s), v)
        })
        .collect();
    Demonstration {
        id: id.into(),
        ego: Trajectory::new(0.0, 0.1, states),
        scenario,
    }
}

pub fn parked_car(x: f64, y: f64) -> ConvexPolygon {
    ConvexPolygon::oriented_box(Point2::new(x, y), 0.0, 4.5, 1.8)
}

/// Ego on the x axis, the other vehicle driving north on `x = 30` from
/// `y = -y0` at speed `vo`, recorded for 10 s.
pub fn crossing_scenario(y0: f64, vo: f64) -> Scenario {
    let other_states: Vec<State> = (0..101)
        .map(|k| State::new(30.0, -y0 + vo * 0.1 * k as f64, std::f64::consts::FRAC_PI_2, vo))
        .collect();
    let other_path = ReferencePath {
        line: Polyline::new(vec![Point2::new(30.0, -y0 - 10.0), Point2::new(30.0, 100.0)]).unwrap(),
        lane_width: 3.5,
    };
    Scenario {
        reference_paths: vec![straight_road(120.0), other_path],
        obstacles: Vec::new(),
        grid: None,
        other_agent: Some(Trajectory::new(0.0, 0.1, other_states)),
        conflict_point: Some(Point2::new(30.0, 0.0)),
        v_desired: 12.0,
    }
}
