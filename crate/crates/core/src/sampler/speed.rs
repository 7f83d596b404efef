//! Step III: speed profiles along a smoothed path.
//!
//! The suggested profile is the time-optimal plan under the speed limit,
//! the lateral-acceleration cap `sqrt(a_lat_max / |kappa|)` and the
//! longitudinal bounds, obtained by a forward (acceleration) and a backward
//! (braking) pass over the path vertices. Between vertices `v^2` is linear in
//! arc length, i.e. the acceleration is constant. Local samples are cubic
//! polynomials `s(t)` around the suggested terminal time and speed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sampler::smoothing::SmoothPath;
use crate::types::{Decision, SamplerConfig};

/// Arc length, speed and acceleration sampled every `dt` from time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub dt: f64,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub decision: Decision,
    /// Arrival time at the end of the path (may fall between samples).
    pub duration: f64,
}

impl SpeedProfile {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// First time at which the profile reaches arc length `target`, by
    /// linear interpolation between samples.
    pub fn arrival_time(&self, target: f64) -> Option<f64> {
        if self.s.first().is_some_and(|&s0| s0 >= target) {
            return Some(0.0);
        }
        for k in 1..self.s.len() {
            if self.s[k] >= target {
                let (a, b) = (self.s[k - 1], self.s[k]);
                let w = if b > a { (target - a) / (b - a) } else { 0.0 };
                return Some((k as f64 - 1.0 + w) * self.dt);
            }
        }
        None
    }
}

/// Speed cap at every vertex of `path`: the smaller of `v_limit` and the
/// lateral-acceleration cap of both adjacent segments.
pub fn vertex_caps(path: &SmoothPath, v_limit: f64, a_lat_max: f64) -> Vec<f64> {
    let n = path.headings.len();
    (0..n)
        .map(|i| {
            let mut k: f64 = 0.0;
            if i > 0 {
                k = k.max(path.curvature[i - 1].abs());
            }
            if i < n - 1 {
                k = k.max(path.curvature[i].abs());
            }
            if k > 0.0 {
                v_limit.min(libm::sqrt(a_lat_max / k))
            } else {
                v_limit
            }
        })
        .collect()
}

/// Vertex speeds of the time-optimal plan over a grid of stations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPlan {
    pub stations: Vec<f64>,
    pub speeds: Vec<f64>,
    /// Time at which each station is reached.
    pub times: Vec<f64>,
}

impl SpeedPlan {
    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn arrival_time(&self, s: f64) -> f64 {
        let i = match self.stations.iter().position(|&x| x >= s) {
            Some(0) => return 0.0,
            Some(i) => i - 1,
            None => return self.duration(),
        };
        self.times[i] + self.time_into_segment(i, s - self.stations[i])
    }

    /// Time needed to cover distance `d` from the start of segment `i`.
    fn time_into_segment(&self, i: usize, d: f64) -> f64 {
        let len = self.stations[i + 1] - self.stations[i];
        let d = d.clamp(0.0, len);
        let (v0, v1) = (self.speeds[i], self.speeds[i + 1]);
        let a = (v1 * v1 - v0 * v0) / (2.0 * len);
        if a.abs() < 1e-12 {
            d / v0
        } else {
            (libm::sqrt((v0 * v0 + 2.0 * a * d).max(0.0)) - v0) / a
        }
    }

    /// Samples the plan every `dt` up to its duration.
    pub fn to_profile(&self, dt: f64, decision: Decision) -> SpeedProfile {
        let total = self.duration();
        let n = libm::floor(total / dt + 1e-9) as usize + 1;
        let mut s = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut i = 0;
        for k in 0..n {
            let t = k as f64 * dt;
            while i + 2 < self.times.len() && self.times[i + 1] <= t {
                i += 1;
            }
            let len = self.stations[i + 1] - self.stations[i];
            let (v0, v1) = (self.speeds[i], self.speeds[i + 1]);
            let acc = (v1 * v1 - v0 * v0) / (2.0 * len);
            let tau = (t - self.times[i]).max(0.0);
            let d = (v0 * tau + 0.5 * acc * tau * tau).clamp(0.0, len);
            s.push(self.stations[i] + d);
            v.push((v0 + acc * tau).max(0.0));
            a.push(acc);
        }
        SpeedProfile {
            dt,
            s,
            v,
            a,
            decision,
            duration: total,
        }
    }
}

/// Forward-backward time-optimal plan over the stations of `path` with
/// per-vertex caps. `v_goal` optionally fixes the terminal speed.
pub fn plan_speeds(
    stations: &[f64],
    caps: &[f64],
    v0: f64,
    v_goal: Option<f64>,
    cfg: &SamplerConfig,
) -> Result<SpeedPlan> {
    let n = stations.len();
    if n < 2 {
        return Err(Error::Infeasible("path has fewer than two vertices".into()));
    }
    if !(v0 >= 0.0) {
        return Err(Error::Infeasible("initial speed must be non-negative".into()));
    }
    if v0 > caps[0] + 1e-9 {
        return Err(Error::Infeasible(alloc::format!(
            "initial speed {v0:.3} exceeds the cap {:.3}",
            caps[0]
        )));
    }
    let mut v = alloc::vec![0.0; n];
    v[0] = v0;
    for i in 0..n - 1 {
        let ds = stations[i + 1] - stations[i];
        v[i + 1] = caps[i + 1].min(libm::sqrt(v[i] * v[i] + 2.0 * cfg.a_max * ds));
    }
    if let Some(g) = v_goal {
        if g > v[n - 1] + 1e-9 {
            return Err(Error::Infeasible(alloc::format!(
                "terminal speed {g:.3} is not reachable"
            )));
        }
        v[n - 1] = g;
    }
    for i in (0..n - 1).rev() {
        let ds = stations[i + 1] - stations[i];
        v[i] = v[i].min(libm::sqrt(v[i + 1] * v[i + 1] - 2.0 * cfg.a_min * ds));
    }
    if v[0] < v0 - 1e-9 {
        return Err(Error::Infeasible(
            "braking from the initial speed exceeds a_min".into(),
        ));
    }
    v[0] = v0;
    let mut times = alloc::vec![0.0; n];
    for i in 0..n - 1 {
        let ds = stations[i + 1] - stations[i];
        let vs = v[i] + v[i + 1];
        if !(vs > 0.0) {
            return Err(Error::Infeasible("the plan comes to a standstill".into()));
        }
        times[i + 1] = times[i] + 2.0 * ds / vs;
    }
    Ok(SpeedPlan {
        stations: stations.to_vec(),
        speeds: v,
        times,
    })
}

/// Time-optimal profile along `path` starting at `v0`, capped by `v_limit`
/// and by `extra_cap(s)` when given.
pub fn suggested_speed_profile(
    path: &SmoothPath,
    v0: f64,
    v_goal: Option<f64>,
    v_limit: f64,
    cfg: &SamplerConfig,
    dt: f64,
    decision: Decision,
    extra_cap: Option<&dyn Fn(f64) -> f64>,
) -> Result<(SpeedPlan, SpeedProfile)> {
    let stations = path.line.stations();
    let mut caps = vertex_caps(path, v_limit, cfg.a_lat_max);
    if let Some(f) = extra_cap {
        for (c, &s) in caps.iter_mut().zip(stations) {
            *c = c.min(f(s));
        }
    }
    // A vehicle already faster than the limit brakes down to it at a_min.
    if v0 > v_limit {
        let lat = vertex_caps(path, f64::INFINITY, cfg.a_lat_max);
        for ((c, &s), l) in caps.iter_mut().zip(stations).zip(lat) {
            let braking = libm::sqrt((v0 * v0 + 2.0 * cfg.a_min * s).max(0.0));
            if braking > *c {
                *c = braking.min(l);
            }
        }
    }
    let plan = plan_speeds(stations, &caps, v0, v_goal, cfg)?;
    let profile = plan.to_profile(dt, decision);
    Ok((plan, profile))
}

/// Cubic `s(t) = v0 t + c2 t^2 + c3 t^3` with `s(T) = length`,
/// `s'(T) = v_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub v0: f64,
    pub c2: f64,
    pub c3: f64,
    pub duration: f64,
}

impl Cubic {
    pub fn fit(v0: f64, length: f64, v_end: f64, duration: f64) -> Cubic {
        let t = duration;
        let a = length - v0 * t;
        let b = v_end - v0;
        Cubic {
            v0,
            c2: (3.0 * a - b * t) / (t * t),
            c3: (b * t - 2.0 * a) / (t * t * t),
            duration,
        }
    }

    pub fn s(&self, t: f64) -> f64 {
        t * (self.v0 + t * (self.c2 + t * self.c3))
    }

    pub fn v(&self, t: f64) -> f64 {
        self.v0 + t * (2.0 * self.c2 + 3.0 * self.c3 * t)
    }

    pub fn a(&self, t: f64) -> f64 {
        2.0 * self.c2 + 6.0 * self.c3 * t
    }

    /// Smallest speed over `[0, duration]`.
    pub fn min_speed(&self) -> f64 {
        let mut m = self.v(0.0).min(self.v(self.duration));
        if self.c3 != 0.0 {
            let t = -self.c2 / (3.0 * self.c3);
            if t > 0.0 && t < self.duration {
                m = m.min(self.v(t));
            }
        }
        m
    }
}

/// Whether the faster end of every sampling interval respects the
/// lateral-acceleration cap of every trace segment the interval covers.
fn lateral_ok(path: &SmoothPath, s: &[f64], v: &[f64], a_lat_max: f64) -> bool {
    s.windows(2).zip(v.windows(2)).all(|(sw, vw)| {
        let (i0, i1) = (path.line.segment_at(sw[0]), path.line.segment_at(sw[1]));
        let k = path.curvature[i0..=i1].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let vmax = vw[0].max(vw[1]);
        vmax * vmax * k <= a_lat_max + 1e-9
    })
}

/// Local samples around `suggested`: for every terminal-time offset and
/// terminal-speed offset in the config grid, the cubic through the start
/// conditions and the perturbed terminal conditions. Terminal times are
/// rounded to whole periods so the last sample lands on the path end. The
/// zero/zero grid point yields the suggested profile itself. Samples that
/// reverse, leave `[a_min, a_max]` or exceed the lateral-acceleration cap
/// are discarded.
pub fn sample_speed_profiles(path: &SmoothPath, suggested: &SpeedProfile, cfg: &SamplerConfig) -> Vec<SpeedProfile> {
    let dt = suggested.dt;
    let length = path.length();
    let v0 = suggested.v[0];
    let v_end = *suggested.v.last().unwrap();
    let lat_caps = vertex_caps(path, f64::INFINITY, cfg.a_lat_max);
    let cap_at = |s: f64| -> f64 {
        let i = path.line.segment_at(s.clamp(0.0, length));
        lat_caps[i].min(lat_caps[i + 1])
    };
    let mut out = Vec::new();
    let mut seen: Vec<(i64, i64)> = Vec::new();
    for &dtime in &cfg.time_offsets {
        for &dspeed in &cfg.speed_offsets {
            if dtime == 0.0 && dspeed == 0.0 {
                if lateral_ok(path, &suggested.s, &suggested.v, cfg.a_lat_max) {
                    out.push(suggested.clone());
                }
                continue;
            }
            let steps = libm::round((suggested.duration + dtime) / dt);
            if steps < 2.0 {
                continue;
            }
            let ve = v_end + dspeed;
            if ve < 0.0 {
                continue;
            }
            let key = (steps as i64, libm::round(ve * 1e6) as i64);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let duration = steps * dt;
            let c = Cubic::fit(v0, length, ve, duration);
            if c.min_speed() < -1e-9 {
                continue;
            }
            let (a0, a1) = (c.a(0.0), c.a(duration));
            if a0.min(a1) < cfg.a_min - 1e-9 || a0.max(a1) > cfg.a_max + 1e-9 {
                continue;
            }
            let n = steps as usize + 1;
            let mut s = Vec::with_capacity(n);
            let mut v = Vec::with_capacity(n);
            let mut a = Vec::with_capacity(n);
            let mut ok = true;
            for k in 0..n {
                let t = k as f64 * dt;
                let (sk, vk) = (c.s(t).clamp(0.0, length), c.v(t).max(0.0));
                // Check the cap at the sample and halfway to the next one.
                let th = t + 0.5 * dt;
                if vk > cap_at(sk) + 1e-9 || (k + 1 < n && c.v(th) > cap_at(c.s(th)) + 1e-9) {
                    ok = false;
                    break;
                }
                s.push(sk);
                v.push(vk);
                a.push(c.a(t));
            }
            if ok && lateral_ok(path, &s, &v, cfg.a_lat_max) {
                out.push(SpeedProfile {
                    dt,
                    s,
                    v,
                    a,
                    decision: suggested.decision,
                    duration,
                });
            }
        }
    }
    out
}
