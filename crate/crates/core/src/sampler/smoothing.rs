//! Step II: pure-pursuit smoothing.
//!
//! A kinematic bicycle at constant speed tracks the lattice polyline with a
//! speed-scaled lookahead. Its trace is kinematically feasible by construction: the
//! steering command is clamped, so the curvature never exceeds
//! `tan(delta_max) / wheelbase`.

use alloc::vec::Vec;

use crate::dynamics::step_generic;
use crate::dynamics::StateOf;
use crate::error::{param, Error, Result};
use crate::geometry::{Point2, Polyline};
use crate::math::wrap_angle;
use crate::types::{SamplerConfig, State, VehicleParams};

/// The trace of the tracker: vertices with the vehicle heading at each
/// vertex and the constant curvature driven on each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPath {
    pub line: Polyline,
    pub headings: Vec<f64>,
    /// Curvature of each segment; `curvature.len() == headings.len() - 1`.
    pub curvature: Vec<f64>,
}

impl SmoothPath {
    pub fn length(&self) -> f64 {
        self.line.length()
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        self.line.point_at(s.clamp(0.0, self.length()))
    }

    /// Heading interpolated linearly in arc length between vertices, so its
    /// rate of change equals the segment curvature.
    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = self.line.segment_at(s);
        let st = self.line.stations();
        let w = (s - st[i]) / (st[i + 1] - st[i]);
        wrap_angle(self.headings[i] + w * wrap_angle(self.headings[i + 1] - self.headings[i]))
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.curvature[self.line.segment_at(s.clamp(0.0, self.length()))]
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }
}

/// Tracks `path` from `start` at speed `v_track` with pure pursuit.
///
/// Fails when the tracker has not reached the end of the path after
/// travelling twice its length, or when it ends farther than
/// `cfg.goal_tolerance` from the path's end point.
pub fn smooth_path(
    path: &Polyline,
    start: &State,
    v_track: f64,
    cfg: &SamplerConfig,
    vp: &VehicleParams,
) -> Result<SmoothPath> {
    if path.points().len() < 2 {
        return Err(param("path needs at least two points"));
    }
    if !(v_track > 0.0) {
        return Err(param("tracking speed must be positive"));
    }
    let length = path.length();
    let dt = cfg.sim_dt;
    let lookahead = cfg.lookahead.max(cfg.lookahead_time * v_track);
    let max_steps = libm::ceil(2.0 * length / (v_track * dt)) as usize + 10;
    let mut s = StateOf::<f64>::constant(&State::new(start.x, start.y, start.psi, v_track));
    let mut pts = alloc::vec![start.position()];
    let mut headings = alloc::vec![s.psi];
    let mut curvature = Vec::new();
    let mut station = path.project(start.position()).station;
    for _ in 0..max_steps {
        let p = Point2::new(s.x, s.y);
        let target = path.point_at(station + lookahead);
        let to = target - p;
        let ld = to.norm().max(1e-6);
        let alpha = wrap_angle(to.heading() - s.psi);
        let delta = libm::atan(2.0 * vp.wheelbase * libm::sin(alpha) / ld).clamp(-vp.delta_max, vp.delta_max);
        let next = step_generic(&s, 0.0, delta, dt, vp);
        let q = Point2::new(next.x, next.y);
        let kappa = libm::tan(delta) / vp.wheelbase;
        let next_station = path
            .project_window(q, station - 2.0 * lookahead, station + 2.0 * lookahead)
            .station;
        if next_station >= length {
            let f = if next_station > station {
                ((length - station) / (next_station - station)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            if f * v_track * dt > 1e-9 {
                pts.push(p + (q - p) * f);
                headings.push(wrap_angle(s.psi + f * wrap_angle(next.psi - s.psi)));
                curvature.push(kappa);
            }
            let line = Polyline::new(pts).map_err(|_| Error::SmoothingFailure("degenerate trace".into()))?;
            let end = line.end();
            if end.distance(path.end()) > cfg.goal_tolerance {
                return Err(Error::SmoothingFailure(alloc::format!(
                    "trace ends {:.2} m from the goal",
                    end.distance(path.end())
                )));
            }
            return Ok(SmoothPath {
                line,
                headings,
                curvature,
            });
        }
        pts.push(q);
        headings.push(next.psi);
        curvature.push(kappa);
        s = next;
        station = station.max(next_station);
    }
    Err(Error::SmoothingFailure(
        "tracker did not reach the end of the path".into(),
    ))
}
