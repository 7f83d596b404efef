//! Kinematic bicycle model and feasibility checks.

use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::math::{wrap_angle, wrap_angle_real, Real};
use crate::types::{Control, State, Trajectory, VehicleParams};

/// Default tolerance for [`check_feasible`].
pub const FEASIBILITY_TOL: f64 = 1e-2;

/// A state whose components may be recorded on a differentiation tape.
#[derive(Debug, Clone, Copy)]
pub struct StateOf<T> {
    pub x: T,
    pub y: T,
    pub psi: T,
    pub v: T,
}

impl<T: Real> StateOf<T> {
    pub fn constant(s: &State) -> Self {
        StateOf {
            x: T::cst(s.x),
            y: T::cst(s.y),
            psi: T::cst(s.psi),
            v: T::cst(s.v),
        }
    }

    pub fn value(&self) -> State {
        State {
            x: self.x.value(),
            y: self.y.value(),
            psi: self.psi.value(),
            v: self.v.value(),
        }
    }
}

/// One bicycle update without bound checks, generic over the scalar type.
pub fn step_generic<T: Real>(s: &StateOf<T>, a: T, delta: T, dt: f64, p: &VehicleParams) -> StateOf<T> {
    let x = s.x + s.v * s.psi.cos() * dt;
    let y = s.y + s.v * s.psi.sin() * dt;
    let psi = wrap_angle_real(s.psi + s.v * delta.tan() * (dt / p.wheelbase));
    let v = (s.v + a * dt).max_by_value(T::cst(0.0));
    StateOf { x, y, psi, v }
}

pub(crate) fn step_unchecked(s: &State, u: &Control, dt: f64, p: &VehicleParams) -> State {
    step_generic(&StateOf::constant(s), u.a, u.delta, dt, p).value()
}

fn check_control(u: &Control, p: &VehicleParams) -> Result<()> {
    if !(u.a.abs() <= p.a_max_abs) {
        return Err(param("longitudinal acceleration out of bounds"));
    }
    if !(u.delta.abs() <= p.delta_max) {
        return Err(param("steering angle out of bounds"));
    }
    Ok(())
}

/// Advances `s` by one period of the kinematic bicycle model. Speed is
/// clamped at zero.
pub fn step(s: &State, u: &Control, dt: f64, p: &VehicleParams) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(param("dt must be positive"));
    }
    check_control(u, p)?;
    Ok(step_unchecked(s, u, dt, p))
}

pub fn rollout(s0: &State, controls: &[Control], dt: f64, p: &VehicleParams) -> Result<Trajectory> {
    rollout_from(0.0, s0, controls, dt, p)
}

/// [`rollout`] with an explicit start time.
pub fn rollout_from(t0: f64, s0: &State, controls: &[Control], dt: f64, p: &VehicleParams) -> Result<Trajectory> {
    if controls.is_empty() {
        return Err(param("rollout needs at least one control"));
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    let first = State::new(s0.x, s0.y, s0.psi, s0.v);
    states.push(first);
    let mut s = first;
    for u in controls {
        s = step(&s, u, dt, p)?;
        states.push(s);
    }
    Ok(Trajectory {
        t0,
        dt,
        states,
        controls: Some(controls.to_vec()),
    })
}

/// Rollout over a flat control vector `[a_0, delta_0, a_1, delta_1, ...]`
/// without bound checks, generic over the scalar type.
pub fn rollout_generic<T: Real>(s0: &State, u: &[T], dt: f64, p: &VehicleParams) -> Vec<StateOf<T>> {
    let mut out = Vec::with_capacity(u.len() / 2 + 1);
    let mut s = StateOf::constant(s0);
    out.push(s);
    for c in u.chunks_exact(2) {
        s = step_generic(&s, c[0], c[1], dt, p);
        out.push(s);
    }
    out
}

/// Controls that reproduce the recorded states under [`step`]: the
/// acceleration from the speed difference and the steering angle from the
/// heading change. Steering is zero where the speed is zero.
pub fn reconstruct_controls(t: &Trajectory, p: &VehicleParams) -> Vec<Control> {
    t.states
        .windows(2)
        .map(|w| {
            let (s, n) = (&w[0], &w[1]);
            let a = (n.v - s.v) / t.dt;
            let delta = if s.v > 0.0 {
                libm::atan(p.wheelbase * wrap_angle(n.psi - s.psi) / (s.v * t.dt))
            } else {
                0.0
            };
            Control::new(a, delta)
        })
        .collect()
}

/// Reconstructed controls clamped into the vehicle bounds.
pub fn clamped_controls(t: &Trajectory, p: &VehicleParams) -> Vec<Control> {
    reconstruct_controls(t, p)
        .into_iter()
        .map(|u| {
            Control::new(
                u.a.clamp(-p.a_max_abs, p.a_max_abs),
                u.delta.clamp(-p.delta_max, p.delta_max),
            )
        })
        .collect()
}

/// Whether the motion implied by the states respects the vehicle bounds
/// within `tol`: accelerations from both the recorded speeds and the
/// position-implied speeds, and the heading change per distance travelled.
pub fn check_feasible(t: &Trajectory, p: &VehicleParams, tol: f64) -> bool {
    let n = t.states.len();
    if n < 2 || !(t.dt > 0.0) || t.states.iter().any(|s| !s.is_finite() || s.v < 0.0) {
        return false;
    }
    let a_lim = p.a_max_abs + tol;
    let k_lim = p.max_curvature() + tol;
    let chords: Vec<f64> = t
        .states
        .windows(2)
        .map(|w| w[0].position().distance(w[1].position()))
        .collect();
    for w in t.states.windows(2) {
        if ((w[1].v - w[0].v) / t.dt).abs() > a_lim {
            return false;
        }
    }
    for c in chords.windows(2) {
        if ((c[1] - c[0]) / (t.dt * t.dt)).abs() > a_lim {
            return false;
        }
    }
    for (w, &c) in t.states.windows(2).zip(&chords) {
        let turn = wrap_angle(w[1].psi - w[0].psi).abs();
        if c > 1e-6 && turn / c > k_lim {
            return false;
        }
        if c <= 1e-6 && turn > 1e-6 {
            return false;
        }
    }
    true
}

/// Curvature implied by consecutive headings and positions, one entry per
/// step.
pub fn implied_curvature(t: &Trajectory) -> Vec<f64> {
    t.states
        .windows(2)
        .map(|w| {
            let c = w[0].position().distance(w[1].position());
            if c > 1e-6 {
                wrap_angle(w[1].psi - w[0].psi) / c
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn vp() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn straight_step() {
        let s = step(&State::new(0.0, 0.0, 0.0, 10.0), &Control::new(0.0, 0.0), 0.1, &vp()).unwrap();
        assert_eq!(s, State::new(1.0, 0.0, 0.0, 10.0));
    }

    #[test]
    fn speed_clamped_at_zero() {
        let s = step(&State::new(0.0, 0.0, 0.0, 0.0), &Control::new(-1.0, 0.0), 0.1, &vp()).unwrap();
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn steering_update_matches_formula() {
        let s = step(&State::new(0.0, 0.0, 0.0, 5.0), &Control::new(0.0, 0.1), 0.1, &vp()).unwrap();
        let expected = 0.1 * (5.0 / 2.7) * libm::tan(0.1);
        assert!((s.psi - expected).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs_rejected() {
        let s = State::new(0.0, 0.0, 0.0, 5.0);
        assert!(step(&s, &Control::new(0.0, 0.0), 0.0, &vp()).is_err());
        assert!(step(&s, &Control::new(9.0, 0.0), 0.1, &vp()).is_err());
        assert!(step(&s, &Control::new(0.0, 0.7), 0.1, &vp()).is_err());
        assert!(rollout(&s, &[], 0.1, &vp()).is_err());
    }

    #[test]
    fn rollout_straight_line() {
        let t = rollout(&State::new(0.0, 0.0, 0.0, 10.0), &[Control::default(); 10], 0.1, &vp()).unwrap();
        assert_eq!(t.len(), 11);
        for (k, s) in t.states.iter().enumerate() {
            assert!((s.x - k as f64).abs() < 1e-12);
            assert_eq!(s.y, 0.0);
        }
        assert!(check_feasible(&t, &vp(), FEASIBILITY_TOL));
    }

    #[test]
    fn teleport_is_infeasible() {
        let mut t = rollout(&State::new(0.0, 0.0, 0.0, 10.0), &[Control::default(); 10], 0.1, &vp()).unwrap();
        t.states[5].x += 100.0;
        assert!(!check_feasible(&t, &vp(), FEASIBILITY_TOL));
    }

    #[test]
    fn reconstructed_controls_reproduce_rollout() {
        let controls: Vec<Control> = (0..40)
            .map(|k| Control::new(0.5 * libm::sin(k as f64 * 0.3), 0.3 * libm::sin(k as f64 * 0.2)))
            .collect();
        let t = rollout(&State::new(1.0, 2.0, 0.3, 6.0), &controls, 0.1, &vp()).unwrap();
        let rec = reconstruct_controls(&t, &vp());
        let t2 = rollout(&t.states[0], &rec, 0.1, &vp()).unwrap();
        for (a, b) in t.states.iter().zip(&t2.states) {
            assert!((a.x - b.x).abs() < 1e-9);
            assert!((a.y - b.y).abs() < 1e-9);
            assert!(wrap_angle(a.psi - b.psi).abs() < 1e-9);
            assert!((a.v - b.v).abs() < 1e-9);
        }
    }
}
