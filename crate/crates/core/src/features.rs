//! The six trajectory features and their max-normalization.
//!
//! Every feature is a per-step average so trajectories of different length
//! are comparable. All functions are generic over [`Real`] so the same code
//! yields values for evaluation and derivatives for the model-based
//! baselines.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::StateOf;
use crate::error::{param, Error, Result};
use crate::geometry::Polyline;
use crate::math::{wrap_angle_real, Real};
use crate::types::{FeatureKind, FeatureVector, Scenario, Trajectory};

/// Mean squared deviation of the speed from `v_desired`.
pub fn f_speed<T: Real>(v: &[T], v_desired: f64) -> T {
    mean(v.iter().map(|&vi| (vi - v_desired).square()), v.len())
}

/// Longitudinal accelerations from central differences of the speed,
/// one-sided at both ends.
pub fn accelerations<T: Real>(v: &[T], dt: f64) -> Vec<T> {
    let n = v.len();
    if n < 2 {
        return alloc::vec![T::cst(0.0); n];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (v[1] - v[0]) / dt
            } else if k == n - 1 {
                (v[n - 1] - v[n - 2]) / dt
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Path curvature from the heading change across each state divided by the
/// distance travelled between the neighbouring positions.
pub fn curvatures<T: Real>(states: &[StateOf<T>]) -> Vec<T> {
    let n = states.len();
    if n < 2 {
        return alloc::vec![T::cst(0.0); n];
    }
    let chord = |i: usize| -> T {
        let dx = states[i + 1].x - states[i].x;
        let dy = states[i + 1].y - states[i].y;
        (dx * dx + dy * dy).sqrt()
    };
    let chords: Vec<T> = (0..n - 1).map(chord).collect();
    (0..n)
        .map(|k| {
            let (a, b, len) = if k == 0 {
                (0, 1, chords[0])
            } else if k == n - 1 {
                (n - 2, n - 1, chords[n - 2])
            } else {
                (k - 1, k + 1, chords[k - 1] + chords[k])
            };
            if len.value() > 1e-6 {
                wrap_angle_real(states[b].psi - states[a].psi) / len
            } else {
                T::cst(0.0)
            }
        })
        .collect()
}

/// Mean squared longitudinal acceleration.
pub fn f_accel_lon<T: Real>(v: &[T], dt: f64) -> T {
    let a = accelerations(v, dt);
    mean(a.iter().map(|&x| x.square()), v.len())
}

/// Mean squared lateral acceleration `v^2 * kappa`.
pub fn f_accel_lat<T: Real>(states: &[StateOf<T>]) -> T {
    let k = curvatures(states);
    mean(
        states.iter().zip(&k).map(|(s, &ki)| (s.v * s.v * ki).square()),
        states.len(),
    )
}

/// `(1/n) * sum_{k>=1} ((a_k - a_{k-1}) / dt)^2`.
pub fn jerk_of_accelerations<T: Real>(a: &[T], dt: f64, n: usize) -> T {
    mean(a.windows(2).map(|w| ((w[1] - w[0]) / dt).square()), n)
}

/// Mean squared longitudinal jerk.
pub fn f_jerk<T: Real>(v: &[T], dt: f64) -> T {
    jerk_of_accelerations(&accelerations(v, dt), dt, v.len())
}

fn mean<T: Real>(terms: impl Iterator<Item = T>, n: usize) -> T {
    let mut acc = T::cst(0.0);
    for t in terms {
        acc = acc + t;
    }
    if n == 0 {
        acc
    } else {
        acc / n as f64
    }
}

/// Minimum over `tau` in `[0, horizon]` of `|r0 + w * tau|` for planar
/// vectors.
pub fn min_distance_linear<T: Real>(r0: (T, T), w: (T, T), horizon: f64) -> T {
    let ww = w.0 * w.0 + w.1 * w.1;
    let tau = if ww.value() > 1e-12 {
        let t = -(r0.0 * w.0 + r0.1 * w.1) / ww;
        if t.value() <= 0.0 {
            T::cst(0.0)
        } else if t.value() >= horizon {
            T::cst(horizon)
        } else {
            t
        }
    } else {
        T::cst(0.0)
    };
    let dx = r0.0 + w.0 * tau;
    let dy = r0.1 + w.1 * tau;
    (dx * dx + dy * dy).sqrt()
}

/// Minimum over `tau` in `[0, horizon]` of `|d0 - rate * tau|`.
pub fn min_abs_linear<T: Real>(d0: T, rate: T, horizon: f64) -> T {
    let end = d0 - rate * horizon;
    if (d0.value() > 0.0) != (end.value() > 0.0) && d0.value() != 0.0 && end.value() != 0.0 {
        T::cst(0.0)
    } else {
        d0.abs().min_by_value(end.abs())
    }
}

/// `(1/N) * sum_i exp(-d_i)` where `d_i` is the smallest distance between the
/// two vehicles over `[t_i, t_i + tau_predict]`, both extrapolated at their
/// current velocity.
pub fn f_future_distance<T: Real>(
    ego: &[StateOf<T>],
    t0: f64,
    dt: f64,
    other: &Trajectory,
    tau_predict: f64,
) -> T {
    let terms = ego.iter().enumerate().map(|(i, e)| {
        let o = other.state_at(t0 + i as f64 * dt);
        let ov = o.velocity();
        let r0 = (e.x - o.x, e.y - o.y);
        let w = (e.v * e.psi.cos() - ov.x, e.v * e.psi.sin() - ov.y);
        (-min_distance_linear(r0, w, tau_predict)).exp()
    });
    mean(terms, ego.len())
}

/// Precomputed geometry for the features of one scenario.
#[derive(Debug, Clone)]
pub struct FeatureContext<'a> {
    scenario: &'a Scenario,
    tau_predict: f64,
    ego_path: &'a Polyline,
    interaction: Option<Interaction<'a>>,
}

#[derive(Debug, Clone)]
struct Interaction<'a> {
    other: &'a Trajectory,
    other_path: Polyline,
    ego_conflict: f64,
    other_conflict: f64,
}

impl<'a> FeatureContext<'a> {
    pub fn new(scenario: &'a Scenario, tau_predict: f64) -> Result<Self> {
        if !(tau_predict > 0.0) {
            return Err(param("tau_predict must be positive"));
        }
        let ego_path = &scenario.ego_path()?.line;
        let interaction = match (&scenario.other_agent, scenario.conflict_point) {
            (Some(other), Some(c)) => {
                let other_path = scenario
                    .other_path()
                    .ok_or_else(|| param("interacting vehicle has no usable path"))?;
                Some(Interaction {
                    other,
                    ego_conflict: ego_path.project(c).station,
                    other_conflict: other_path.project(c).station,
                    other_path,
                })
            }
            _ => None,
        };
        Ok(FeatureContext {
            scenario,
            tau_predict,
            ego_path,
            interaction,
        })
    }

    /// Number of features produced for this scenario.
    pub fn dim(&self) -> usize {
        if self.scenario.other_agent.is_some() {
            FeatureKind::INTERACTIVE
        } else {
            FeatureKind::NON_INTERACTIVE
        }
    }

    /// Whether the interaction-distance feature is informative (the scenario
    /// has both an interacting vehicle and a conflict point).
    pub fn has_conflict(&self) -> bool {
        self.interaction.is_some()
    }

    /// Mean over steps of `exp(-min_tau |s_ego - s_other|)` where `s` is the
    /// signed distance still to travel to the conflict point along each
    /// vehicle's route. Zero when the scenario has no conflict point.
    pub fn future_interaction_distance<T: Real>(&self, ego: &[StateOf<T>], t0: f64, dt: f64) -> T {
        let Some(int) = &self.interaction else {
            return T::cst(0.0);
        };
        let terms = ego.iter().enumerate().map(|(i, e)| {
            let o = int.other.state_at(t0 + i as f64 * dt);
            let d_o = int.other_conflict - int.other_path.project(o.position()).station;
            let d_e = -self.ego_path.station_of(e.x, e.y) + int.ego_conflict;
            let gap = d_e - d_o;
            let rate = e.v - o.v;
            (-min_abs_linear(gap, rate, self.tau_predict)).exp()
        });
        mean(terms, ego.len())
    }

    /// Raw feature values of a state sequence sampled every `dt` from `t0`.
    pub fn values<T: Real>(&self, states: &[StateOf<T>], t0: f64, dt: f64) -> Vec<T> {
        let v: Vec<T> = states.iter().map(|s| s.v).collect();
        let mut out = Vec::with_capacity(self.dim());
        out.push(f_speed(&v, self.scenario.v_desired));
        out.push(f_accel_lon(&v, dt));
        out.push(f_accel_lat(states));
        out.push(f_jerk(&v, dt));
        if let Some(other) = &self.scenario.other_agent {
            out.push(f_future_distance(states, t0, dt, other, self.tau_predict));
            out.push(self.future_interaction_distance(states, t0, dt));
        }
        out
    }

    pub fn extract(&self, t: &Trajectory) -> FeatureVector {
        let states: Vec<StateOf<f64>> = t.states.iter().map(StateOf::constant).collect();
        FeatureVector::new(self.values(&states, t.t0, t.dt))
    }
}

/// Raw feature vector of `t` in `scenario`: four entries without an
/// interacting vehicle, six with one.
pub fn extract(t: &Trajectory, scenario: &Scenario, tau_predict: f64) -> Result<FeatureVector> {
    Ok(FeatureContext::new(scenario, tau_predict)?.extract(t))
}

/// Per-feature maxima used to scale raw features into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNormalizer {
    pub max_per_feature: Vec<f64>,
}

impl FeatureNormalizer {
    pub fn identity(dim: usize) -> Self {
        FeatureNormalizer {
            max_per_feature: alloc::vec![1.0; dim],
        }
    }

    pub fn new(max_per_feature: Vec<f64>) -> Result<Self> {
        if max_per_feature.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(param("normalizers must be positive and finite"));
        }
        Ok(FeatureNormalizer { max_per_feature })
    }

    /// Per-feature maximum over `dataset`; a feature that is zero everywhere
    /// gets normalizer 1.
    pub fn fit<'v>(dataset: impl IntoIterator<Item = &'v FeatureVector>) -> Result<Self> {
        let mut it = dataset.into_iter();
        let first = it.next().ok_or_else(|| param("cannot fit a normalizer on an empty dataset"))?;
        let mut max = first.values.clone();
        for fv in it {
            if fv.dim() != max.len() {
                return Err(Error::Dimension {
                    expected: max.len(),
                    got: fv.dim(),
                });
            }
            for (m, &x) in max.iter_mut().zip(&fv.values) {
                *m = m.max(x);
            }
        }
        for m in &mut max {
            if !(*m > 0.0) || !m.is_finite() {
                *m = 1.0;
            }
        }
        Ok(FeatureNormalizer { max_per_feature: max })
    }

    pub fn dim(&self) -> usize {
        self.max_per_feature.len()
    }

    pub fn apply(&self, fv: &FeatureVector) -> Result<FeatureVector> {
        if fv.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: fv.dim(),
            });
        }
        Ok(FeatureVector::new(
            fv.values
                .iter()
                .zip(&self.max_per_feature)
                .map(|(x, m)| x / m)
                .collect(),
        ))
    }

    /// [`FeatureNormalizer::apply`] on values of any scalar type.
    pub fn apply_values<T: Real>(&self, values: &[T]) -> Vec<T> {
        values
            .iter()
            .zip(&self.max_per_feature)
            .map(|(&x, &m)| x / m)
            .collect()
    }
}

pub fn fit_normalizer(dataset: &[FeatureVector]) -> Result<FeatureNormalizer> {
    FeatureNormalizer::fit(dataset)
}

pub fn apply_normalizer(fv: &FeatureVector, norm: &FeatureNormalizer) -> Result<FeatureVector> {
    norm.apply(fv)
}
