//! Laplace approximation of the partition function.
//!
//! The reward is expanded to second order in the demonstration's control
//! sequence, `R(u0 + du) ~ R0 + g'du + du'H du / 2`, and `Z` becomes a
//! Gaussian integral:
//! `log Z = beta R0 + (beta/2) g'A^-1 g + (n/2) log(2 pi / beta) - (1/2) log det A`
//! with `A = -H`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::ad::{Tape, Var};
use crate::dynamics::{clamped_controls, rollout_generic, StateOf};
use crate::error::{Error, Result};
use crate::features::{FeatureContext, FeatureNormalizer};
use crate::irl::{Evaluation, Objective};
use crate::math::Real;
use crate::types::{Demonstration, State, VehicleParams};

/// Step of the central differences taken on the exact gradient.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Added on top of the smallest shift that makes `A` positive definite.
pub const SHIFT_MARGIN: f64 = 1e-6;
/// Below this spectral radius the reward is treated as flat.
pub const FLAT_TOL: f64 = 1e-12;

/// Gradient and Hessian of the reward with respect to the control sequence
/// at the expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceTerms {
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl LaplaceTerms {
    pub fn dim(&self) -> usize {
        self.g.len()
    }
}

/// `A = -H` factorized, with the diagonal shift that was needed.
#[derive(Debug, Clone)]
pub struct Precision {
    pub chol: Cholesky<f64, Dyn>,
    pub shift: f64,
}

/// Factorizes `-h`. When it is not positive definite the smallest shift
/// `mu I` that makes it so (plus [`SHIFT_MARGIN`] relative to the largest
/// eigenvalue magnitude, doubled until the factorization succeeds) is added. A flat or
/// non-finite Hessian is an [`Error::DegenerateHessian`].
pub fn precision(h: &DMatrix<f64>) -> Result<Precision> {
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateHessian("non-finite Hessian".into()));
    }
    let a = -h;
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(Precision { chol, shift: 0.0 });
    }
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if scale <= FLAT_TOL {
        return Err(Error::DegenerateHessian("reward is flat in the controls".into()));
    }
    let base = (-eig.eigenvalues.min()).max(0.0);
    let n = a.nrows();
    let mut margin = SHIFT_MARGIN * scale.max(1.0);
    for _ in 0..40 {
        let shift = base + margin;
        if let Some(chol) = Cholesky::new(&a + DMatrix::<f64>::identity(n, n) * shift) {
            return Ok(Precision { chol, shift });
        }
        margin *= 2.0;
    }
    Err(Error::DegenerateHessian("no positive definite regularization".into()))
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
}

/// `beta R0 - log Z` under the quadratic model, i.e.
/// `-(beta/2) g'A^-1 g - (n/2) log(2 pi / beta) + (1/2) log det A`.
pub fn laplace_log_likelihood(terms: &LaplaceTerms, beta: f64) -> Result<f64> {
    let p = precision(&terms.h)?;
    let w = p.chol.solve(&terms.g);
    let n = terms.dim() as f64;
    Ok(-0.5 * beta * terms.g.dot(&w) - 0.5 * n * libm::log(2.0 * core::f64::consts::PI / beta)
        + 0.5 * log_det(&p.chol))
}

/// Raw feature values, gradients and Hessians at a demonstration's
/// reconstructed control sequence. Independent of the reward weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoDerivatives {
    pub id: alloc::string::String,
    /// Flat controls `[a_0, delta_0, a_1, delta_1, ...]`.
    pub controls: Vec<f64>,
    pub values: Vec<f64>,
    pub gradients: Vec<DVector<f64>>,
    pub hessians: Vec<DMatrix<f64>>,
}

/// Feature values and gradients of the rollout of `u` from `s0`.
pub fn feature_jacobian(
    ctx: &FeatureContext<'_>,
    s0: &State,
    u: &[f64],
    t0: f64,
    dt: f64,
    vp: &VehicleParams,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let tape = Tape::with_capacity(u.len() * 200);
    let vars: Vec<Var<'_>> = u.iter().map(|&x| tape.var(x)).collect();
    let states: Vec<StateOf<Var<'_>>> = rollout_generic(s0, &vars, dt, vp);
    let f = ctx.values(&states, t0, dt);
    let values = f.iter().map(|v| v.value()).collect();
    let grads = f.iter().map(|&fi| tape.gradient(fi, &vars)).collect();
    (values, grads)
}

/// Flat controls reproducing `d` within the vehicle bounds.
pub fn demo_controls(d: &Demonstration, vp: &VehicleParams) -> Vec<f64> {
    clamped_controls(&d.ego, vp)
        .iter()
        .flat_map(|c| [c.a, c.delta])
        .collect()
}

/// Derivatives of every raw feature at the demonstration's controls; the
/// Hessian is the central difference of the exact gradient.
pub fn demo_derivatives(d: &Demonstration, vp: &VehicleParams, tau_predict: f64) -> Result<DemoDerivatives> {
    let ctx = FeatureContext::new(&d.scenario, tau_predict)?;
    let u = demo_controls(d, vp);
    let s0 = d.ego.states[0];
    let (t0, dt) = (d.ego.t0, d.ego.dt);
    let (values, grads) = feature_jacobian(&ctx, &s0, &u, t0, dt, vp);
    let n = u.len();
    let nf = values.len();
    let mut hessians = alloc::vec![DMatrix::<f64>::zeros(n, n); nf];
    let mut probe = u.clone();
    for i in 0..n {
        probe[i] = u[i] + HESSIAN_STEP;
        let (_, gp) = feature_jacobian(&ctx, &s0, &probe, t0, dt, vp);
        probe[i] = u[i] - HESSIAN_STEP;
        let (_, gm) = feature_jacobian(&ctx, &s0, &probe, t0, dt, vp);
        probe[i] = u[i];
        for (j, h) in hessians.iter_mut().enumerate() {
            for r in 0..n {
                h[(r, i)] = (gp[j][r] - gm[j][r]) / (2.0 * HESSIAN_STEP);
            }
        }
    }
    for h in &mut hessians {
        let sym = (&*h + h.transpose()) * 0.5;
        *h = sym;
    }
    Ok(DemoDerivatives {
        id: d.id.clone(),
        controls: u,
        values,
        gradients: grads.into_iter().map(DVector::from_vec).collect(),
        hessians,
    })
}

impl DemoDerivatives {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The same derivatives with every feature divided by its normalizer.
    pub fn normalized(&self, norm: &FeatureNormalizer) -> Result<DemoDerivatives> {
        if norm.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: norm.dim(),
            });
        }
        let m = &norm.max_per_feature;
        Ok(DemoDerivatives {
            id: self.id.clone(),
            controls: self.controls.clone(),
            values: self.values.iter().zip(m).map(|(v, s)| v / s).collect(),
            gradients: self.gradients.iter().zip(m).map(|(g, s)| g / *s).collect(),
            hessians: self.hessians.iter().zip(m).map(|(h, s)| h / *s).collect(),
        })
    }

    /// Reward gradient and Hessian for weights `theta`.
    pub fn terms(&self, theta: &[f64]) -> LaplaceTerms {
        let n = self.controls.len();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for (j, &t) in theta.iter().enumerate() {
            g.axpy(t, &self.gradients[j], 1.0);
            h += &self.hessians[j] * t;
        }
        LaplaceTerms { g, h }
    }

    /// Laplace log-likelihood and its gradient with respect to `theta`.
    pub fn log_likelihood_and_gradient(&self, theta: &[f64], beta: f64) -> Result<(f64, Vec<f64>)> {
        let t = self.terms(theta);
        let p = precision(&t.h)?;
        let n = t.dim();
        let w = p.chol.solve(&t.g);
        let a_inv = p.chol.inverse();
        let ll = -0.5 * beta * t.g.dot(&w) - 0.5 * n as f64 * libm::log(2.0 * core::f64::consts::PI / beta)
            + 0.5 * log_det(&p.chol);
        let grad = (0..theta.len())
            .map(|j| {
                let hj = &self.hessians[j];
                let hw = hj * &w;
                let trace = a_inv.component_mul(hj).sum();
                -beta * self.gradients[j].dot(&w) - 0.5 * beta * w.dot(&hw) - 0.5 * trace
            })
            .collect();
        Ok((ll, grad))
    }
}

/// Laplace log-likelihood of one demonstration under `rp`.
pub fn cioc_log_likelihood(
    d: &Demonstration,
    rp: &crate::types::RewardParams,
    vp: &VehicleParams,
    tau_predict: f64,
) -> Result<f64> {
    let dd = demo_derivatives(d, vp, tau_predict)?.normalized(&rp.normalizer)?;
    laplace_log_likelihood(&dd.terms(&rp.theta), rp.beta)
}

/// Mean Laplace log-likelihood over demonstrations.
pub struct CiocObjective {
    pub demos: Vec<DemoDerivatives>,
    pub beta: f64,
}

impl Objective for CiocObjective {
    fn dim(&self) -> usize {
        self.demos.first().map_or(0, DemoDerivatives::dim)
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        let m = self.demos.len() as f64;
        let mut value = 0.0;
        let mut grad = alloc::vec![0.0; theta.len()];
        for d in &self.demos {
            let (ll, g) = d.log_likelihood_and_gradient(theta, self.beta)?;
            value += ll / m;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b / m;
            }
        }
        let gap = crate::math::norm2(&grad) / self.beta;
        Ok(Evaluation {
            value: Some(value),
            gradient: grad,
            gap,
        })
    }
}
