mod common;

use common::*;
use proptest::prelude::*;
use smirl_core::dynamics::{check_feasible, FEASIBILITY_TOL};
use smirl_core::geometry::{Point2, Polyline};
use smirl_core::sampler::*;
use smirl_core::{Decision, Demonstration, Error, Origin, SamplerConfig, State, VehicleParams};

fn check_set(d: &Demonstration, g: &Generated, cfg: &SamplerConfig) {
    let vp = VehicleParams::default();
    let set = &g.set;
    assert_eq!(set.demo_id, d.id);
    let last = set.members.last().unwrap();
    assert_eq!(last.origin, Origin::Demonstration);
    assert_eq!(last.trajectory, d.ego);
    assert!(set.members.len() <= cfg.k_samples + 1);
    let goal = d.ego.states.last().unwrap().position();
    for m in &set.members[..set.members.len() - 1] {
        let t = &m.trajectory;
        assert_eq!(t.states[0], d.ego.states[0]);
        assert_eq!((t.t0, t.dt), (d.ego.t0, d.ego.dt));
        assert!(t.states.last().unwrap().position().distance(goal) <= cfg.goal_tolerance);
        assert!(check_feasible(t, &vp, FEASIBILITY_TOL));
        assert!(is_safe(t, &d.scenario, cfg));
        assert!(matches!(m.origin, Origin::Sampled(_)));
    }
}

#[test]
fn straight_road_samples_are_anchored_feasible_and_safe() {
    let cfg = SamplerConfig::default();
    let d = straight_demo("s", 10.0, 41, scenario(straight_road(100.0), 12.0));
    let g = generate_sample_set(&d, &cfg, &VehicleParams::default(), 1).unwrap();
    assert_eq!(g.set.members.len(), cfg.k_samples + 1);
    assert!(g.set.members.iter().all(|m| m.decision == Decision::None));
    check_set(&d, &g, &cfg);
}

#[test]
fn start_above_the_desired_speed_brakes_down() {
    let cfg = SamplerConfig::default();
    let d = straight_demo("fast", 12.5, 51, scenario(straight_road(100.0), 10.0));
    let g = generate_sample_set(&d, &cfg, &VehicleParams::default(), 3).unwrap();
    check_set(&d, &g, &cfg);
    let (_, prof) = suggested_speed_profile(
        &straight_smooth(60.0),
        12.5,
        None,
        10.0,
        &cfg,
        0.1,
        Decision::None,
        None,
    )
    .unwrap();
    assert_eq!(prof.v[0], 12.5);
    assert!(prof.v.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!((prof.v.last().unwrap() - 10.0).abs() < 1e-9);
    assert!(prof.a.iter().all(|&a| a >= cfg.a_min - 1e-9));
}

#[test]
fn samples_keep_clear_of_a_parked_car() {
    let cfg = SamplerConfig::default();
    let mut sc = scenario(straight_road(100.0), 12.0);
    sc.obstacles.push(parked_car(20.0, -2.2));
    let d = straight_demo("p", 10.0, 41, sc);
    let g = generate_sample_set(&d, &cfg, &VehicleParams::default(), 2).unwrap();
    assert!(g.set.members.len() > 10);
    check_set(&d, &g, &cfg);
    for m in &g.set.members[..g.set.members.len() - 1] {
        for s in &m.trajectory.states {
            assert!(d.scenario.obstacles[0].distance(s.position()).0 > cfg.vehicle_radius);
        }
    }
}

#[test]
fn blocked_road_is_a_sampling_failure() {
    let cfg = SamplerConfig::default();
    let mut sc = scenario(straight_road(100.0), 12.0);
    sc.obstacles.push(smirl_core::geometry::ConvexPolygon::oriented_box(Point2::new(20.0, 0.0), 0.0, 2.0, 12.0));
    let d = straight_demo("b", 10.0, 41, sc);
    let err = generate_sample_set(&d, &cfg, &VehicleParams::default(), 3).unwrap_err();
    assert!(matches!(err, Error::SamplingFailure { .. }));
}

#[test]
fn zero_force_threshold_on_a_curve_admits_no_path() {
    let cfg = SamplerConfig {
        f_threshold: 0.0,
        ..SamplerConfig::default()
    };
    let d = path_demo("c", 8.0, 61, scenario(curve_road(30.0, 40.0, std::f64::consts::FRAC_PI_2), 10.0));
    let env = Environment::new(&d.scenario, 0.0, &cfg).unwrap();
    let mut rng = smirl_core::rng::stream(0, "t", "t");
    let start = d.ego.states[0].position();
    let goal = d.ego.states.last().unwrap().position();
    assert!(sample_paths(&env, start, goal, &cfg, &mut rng).unwrap().is_empty());
    assert!(matches!(
        generate_sample_set(&d, &cfg, &VehicleParams::default(), 0),
        Err(Error::SamplingFailure { .. })
    ));
}

#[test]
fn curve_samples_respect_every_bound() {
    let cfg = SamplerConfig::default();
    let d = path_demo("c", 8.0, 61, scenario(curve_road(30.0, 40.0, std::f64::consts::FRAC_PI_2), 10.0));
    let g = generate_sample_set(&d, &cfg, &VehicleParams::default(), 4).unwrap();
    assert_eq!(g.set.members.len(), cfg.k_samples + 1);
    check_set(&d, &g, &cfg);
}

#[test]
fn node_force_components() {
    let cfg = SamplerConfig::default();
    let sc = scenario(straight_road(100.0), 12.0);
    let env = Environment::new(&sc, 0.0, &cfg).unwrap();
    let straight = ElasticNode {
        position: Point2::new(5.0, 0.0),
        prev: Point2::new(0.0, 0.0),
        next: Point2::new(10.0, 0.0),
    };
    assert!(node_force(&straight, &env, &cfg) < 1e-12);
    // Offset by 1 m between two centred neighbours: contraction (0, -2),
    // attraction (0, -1).
    let bent = ElasticNode {
        position: Point2::new(5.0, 1.0),
        ..straight
    };
    let f = node_forces(&bent, &env, &cfg);
    assert!((f.contract - Point2::new(0.0, -2.0)).norm() < 1e-12);
    assert!((f.attract - Point2::new(0.0, -1.0)).norm() < 1e-12);
    assert_eq!(f.repel, Point2::new(0.0, 0.0));
    assert!((node_force(&bent, &env, &cfg) - 1.0).abs() < 1e-12);
}

#[test]
fn repulsion_matches_the_potential_gradient() {
    let cfg = SamplerConfig::default();
    let mut sc = scenario(straight_road(100.0), 12.0);
    sc.obstacles.push(parked_car(20.0, -3.0));
    let env = Environment::new(&sc, 0.0, &cfg).unwrap();
    // Directly above the box's top edge (y = -2.1) at distance 2.1.
    let node = ElasticNode {
        position: Point2::new(20.0, 0.0),
        prev: Point2::new(15.0, 0.0),
        next: Point2::new(25.0, 0.0),
    };
    let f = node_forces(&node, &env, &cfg);
    let d: f64 = 2.1;
    let expected = cfg.k_rep * (1.0 / d - 1.0 / cfg.d_influence);
    assert!((f.repel.y - expected).abs() < 1e-9 && f.repel.x.abs() < 1e-9);
}

#[test]
fn smoothing_a_right_angle_stays_within_the_steering_limit() {
    let cfg = SamplerConfig::default();
    let vp = VehicleParams::default();
    let corner = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(30.0, 0.0), Point2::new(30.0, 30.0)]).unwrap();
    let sp = smooth_path(&corner, &State::new(0.0, 0.0, 0.0, 5.0), 5.0, &cfg, &vp).unwrap();
    assert!(sp.max_abs_curvature() <= vp.max_curvature() + 1e-12);
    assert!(sp.line.end().distance(corner.end()) <= cfg.goal_tolerance);
    assert_eq!(sp.headings.len(), sp.line.points().len());
    // Heading interpolation reproduces the segment curvature.
    let s = 0.5 * sp.length();
    let h = 1e-3;
    let rate = smirl_core::math::wrap_angle(sp.heading_at(s + h) - sp.heading_at(s - h)) / (2.0 * h);
    assert!((rate - sp.curvature_at(s)).abs() < 1e-6);
}

fn straight_smooth(length: f64) -> SmoothPath {
    let n = (length / 0.5) as usize;
    let pts: Vec<Point2> = (0..=n).map(|i| Point2::new(i as f64 * length / n as f64, 0.0)).collect();
    SmoothPath {
        headings: vec![0.0; pts.len()],
        curvature: vec![0.0; pts.len() - 1],
        line: Polyline::new(pts).unwrap(),
    }
}

#[test]
fn time_optimal_profile_matches_closed_form() {
    let cfg = SamplerConfig::default();
    // From rest: accelerate at a_max to 10 m/s (4 s, 20 m), cruise 80 m.
    let path = straight_smooth(100.0);
    let (plan, prof) = suggested_speed_profile(&path, 0.0, None, 10.0, &cfg, 0.1, Decision::None, None).unwrap();
    assert!((plan.duration() - 12.0).abs() < 1e-9);
    assert!((plan.arrival_time(20.0) - 4.0).abs() < 1e-9);
    assert!((plan.arrival_time(60.0) - 8.0).abs() < 1e-9);
    assert_eq!(prof.len(), 121);
    assert!((prof.s.last().unwrap() - 100.0).abs() < 1e-9);
    for w in prof.v.windows(2) {
        let a = (w[1] - w[0]) / 0.1;
        assert!(a <= cfg.a_max + 1e-9 && a >= cfg.a_min - 1e-9);
    }
    // Braking to a stop at the end: the last 12.5 m at a_min from 10 m/s.
    let (plan, _) = suggested_speed_profile(&path, 10.0, Some(0.0), 10.0, &cfg, 0.1, Decision::None, None).unwrap();
    assert!((plan.duration() - (87.5 / 10.0 + 2.5)).abs() < 1e-9);
}

#[test]
fn curvature_caps_slow_the_plan_down() {
    let cfg = SamplerConfig::default();
    let mut path = straight_smooth(100.0);
    // A 20 m stretch of curvature 0.1 caps the speed at sqrt(35) m/s.
    for (i, k) in path.curvature.iter_mut().enumerate() {
        if (80..120).contains(&i) {
            *k = 0.1;
        }
    }
    let (plan, prof) = suggested_speed_profile(&path, 10.0, None, 10.0, &cfg, 0.1, Decision::None, None).unwrap();
    let cap = (cfg.a_lat_max / 0.1f64).sqrt();
    for (s, v) in plan.stations.iter().zip(&plan.speeds) {
        if (40.0..=60.0).contains(s) {
            assert!(*v <= cap + 1e-9);
        }
    }
    // Approaching the curve the vertex speeds follow braking at a_min down
    // to the cap at its start.
    for (s, v) in plan.stations.iter().zip(&plan.speeds) {
        if *s <= 40.0 {
            let braking = (cap * cap - 2.0 * cfg.a_min * (40.0 - s)).sqrt();
            assert!((v - braking.min(10.0)).abs() < 1e-9, "s {s} v {v}");
        }
    }
    for (s, v) in prof.s.iter().zip(&prof.v) {
        let k = path.curvature_at(*s);
        assert!(v * v * k <= cfg.a_lat_max + 1e-6, "s {s} v {v}");
    }
}

#[test]
fn cubic_meets_its_boundary_conditions() {
    let c = Cubic::fit(8.0, 50.0, 11.0, 5.0);
    assert!(c.s(0.0).abs() < 1e-12);
    assert!((c.v(0.0) - 8.0).abs() < 1e-12);
    assert!((c.s(5.0) - 50.0).abs() < 1e-9);
    assert!((c.v(5.0) - 11.0).abs() < 1e-9);
    let h = 1e-5;
    assert!(((c.s(2.0 + h) - c.s(2.0 - h)) / (2.0 * h) - c.v(2.0)).abs() < 1e-6);
    assert!(((c.v(2.0 + h) - c.v(2.0 - h)) / (2.0 * h) - c.a(2.0)).abs() < 1e-6);
}

#[test]
fn local_samples_respect_bounds_and_include_the_suggestion() {
    let cfg = SamplerConfig::default();
    let path = straight_smooth(80.0);
    let (_, sugg) = suggested_speed_profile(&path, 8.0, None, 12.0, &cfg, 0.1, Decision::None, None).unwrap();
    let local = sample_speed_profiles(&path, &sugg, &cfg);
    assert!(local.len() > 5);
    assert!(local.contains(&sugg));
    for p in &local {
        assert_eq!(p.s[0], 0.0);
        assert_eq!(p.v[0], 8.0);
        assert!(p.s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(p.a.iter().all(|a| *a >= cfg.a_min - 1e-9 && *a <= cfg.a_max + 1e-9));
        if p == &sugg {
            // The time-optimal plan is sampled on the period grid and stops
            // within one period of the end.
            assert!(80.0 - p.s.last().unwrap() <= p.v.last().unwrap() * p.dt + 1e-9);
        } else {
            assert!((p.s.last().unwrap() - 80.0).abs() < 1e-6);
        }
    }
}

#[test]
fn decisions_follow_the_conflict_timing() {
    // Other vehicle 30 m before the conflict at 8 m/s: arrives at 3.75 s.
    let sc = crossing_scenario(30.0, 8.0);
    let timing = conflict_timing(&sc, 0.0).unwrap();
    assert!((timing.other_arrival.unwrap() - 3.75).abs() < 1e-9);
    assert_eq!(enumerate_decisions(&sc, 0.0), vec![Decision::Yield, Decision::Pass]);
    assert_eq!(enumerate_decisions(&sc, 5.0), vec![Decision::Pass]);
    assert_eq!(classify_arrival(3.0, &timing, 0.5), Some(Decision::Pass));
    assert_eq!(classify_arrival(4.5, &timing, 0.5), Some(Decision::Yield));
    assert_eq!(classify_arrival(3.5, &timing, 0.5), None);
    let free = scenario(straight_road(100.0), 12.0);
    assert_eq!(enumerate_decisions(&free, 0.0), vec![Decision::None]);
}

#[test]
fn interactive_samples_cover_both_decisions_consistently() {
    let cfg = SamplerConfig::default();
    let sc = crossing_scenario(30.0, 8.0);
    let d = straight_demo("x", 10.0, 61, sc);
    let g = generate_sample_set(&d, &cfg, &VehicleParams::default(), 5).unwrap();
    check_set(&d, &g, &cfg);
    let members = &g.set.members[..g.set.members.len() - 1];
    let yields = members.iter().filter(|m| m.decision == Decision::Yield).count();
    let passes = members.iter().filter(|m| m.decision == Decision::Pass).count();
    assert!(yields > 0 && passes > 0, "yield {yields} pass {passes}");
    assert_eq!(yields + passes, members.len());
    for m in members {
        assert_eq!(trajectory_decision(&m.trajectory, &d.scenario), m.decision);
    }
}

#[test]
fn same_seed_same_set() {
    let cfg = SamplerConfig::default();
    let d = straight_demo("s", 10.0, 41, scenario(straight_road(100.0), 12.0));
    let vp = VehicleParams::default();
    let a = generate_sample_set(&d, &cfg, &vp, 9).unwrap();
    let b = generate_sample_set(&d, &cfg, &vp, 9).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_curves_yield_valid_sets(radius in 25.0f64..80.0, v in 4.0f64..12.0, seed in 0u64..1000) {
        let cfg = SamplerConfig { k_samples: 50, ..SamplerConfig::default() };
        let d = path_demo("r", v, 51, scenario(curve_road(30.0, radius, 1.2), 10.0));
        if let Ok(g) = generate_sample_set(&d, &cfg, &VehicleParams::default(), seed) {
            check_set(&d, &g, &cfg);
        }
    }
}
