//! The averaged one-dimensional SDE: coefficient construction and the two
//! law-equivalent integrators.
//!
//! Averaging against the invariant density m gives
//!
//! ```text
//! Fhat(t, v)   = int_D f(t, x, v) m(x) dx
//! Ghat_j(t, v) = int_D g(t, x, v) e_j(x) m(x) dx
//! Sigmahat(t)  = (sigma(t, x_a) / |D|, sigma(t, x_b) / |D|)   (divergence form)
//! Phi(t, v)^2  = sum_j lambda_j^2 Ghat_j^2
//!                + theta_1^2 Sigmahat_a^2 + theta_2^2 Sigmahat_b^2
//! ```
//!
//! (`Phi` squares both the interior and the boundary term; the variance
//! identity for the combined martingale fixes the squared form.)
//!
//! The coupled integrator consumes the same pre-colored `NoisePath` as the
//! SPDE solver; the law-form integrator drives `dv = Fhat dt + Phi dbeta`
//! with a scalar Brownian motion. The two coincide in law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::{validate, ModelSpec, Purpose};
use crate::error::{Error, Result};
use crate::neumann::solve_neumann;
use crate::noise::{NoisePath, QSpec};
use crate::operator::{EllipticOperator1D, InvariantMeasure, SpectralBasis};

#[derive(Debug, Clone)]
pub struct AveragedModel<'a> {
    pub basis: &'a SpectralBasis,
    pub measure: &'a InvariantMeasure,
    pub model: &'a ModelSpec,
    pub lambdas: Vec<f64>,
    pub theta: (f64, f64),
    /// Ghat vector hoisted when g is state- and time-free.
    ghat_static: Option<Vec<f64>>,
}

/// Construct the averaged evaluators for an H2-validated model.
pub fn build<'a>(
    model: &'a ModelSpec,
    basis: &'a SpectralBasis,
    measure: &'a InvariantMeasure,
    q: &QSpec,
    theta: (f64, f64),
) -> Result<AveragedModel<'a>> {
    validate(model, Purpose::Simulate)?;
    if basis.grid != measure.grid {
        return Err(Error::GridMismatch {
            detail: "basis and invariant measure live on different grids".into(),
        });
    }
    let lambdas = q.lambdas(basis.k_modes())?;
    let mut out = AveragedModel {
        basis,
        measure,
        model,
        lambdas,
        theta,
        ghat_static: None,
    };
    if !model.g.depends_on_u() && !model.g.depends_on_t() {
        out.ghat_static = Some(out.ghat_quadrature(0.0, 0.0));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScalarPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ScalarPath {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

impl<'a> AveragedModel<'a> {
    pub fn fhat(&self, t: f64, v: f64) -> f64 {
        let grid = &self.basis.grid;
        let mut acc = 0.0;
        for i in 0..grid.n_points() {
            acc += grid.weight(i)
                * self.model.f.eval(t, grid.point(i), v)
                * self.measure.density[i];
        }
        acc
    }

    fn ghat_quadrature(&self, t: f64, v: f64) -> Vec<f64> {
        let grid = &self.basis.grid;
        let np = grid.n_points();
        let gm: Vec<f64> = (0..np)
            .map(|i| {
                grid.weight(i)
                    * self.model.g.eval(t, grid.point(i), v)
                    * self.measure.density[i]
            })
            .collect();
        (0..self.basis.k_modes())
            .map(|j| {
                let e = self.basis.efunc(j);
                gm.iter().zip(e).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `Ghat_j(t, v)` for all stored modes.
    pub fn ghat_modes(&self, t: f64, v: f64) -> Vec<f64> {
        match &self.ghat_static {
            Some(g) => g.clone(),
            None => self.ghat_quadrature(t, v),
        }
    }

    /// Boundary averages in divergence form: `sigma(t, eta) / |D|`.
    pub fn sigmahat(&self, t: f64) -> (f64, f64) {
        let grid = &self.basis.grid;
        let len = self.basis.domain_len();
        (
            self.model.sigma.eval(t, grid.x_a, 0.0) / len,
            self.model.sigma.eval(t, grid.x_b, 0.0) / len,
        )
    }

    /// General quadrature route for Sigmahat:
    /// `<Sigmahat, f_i> = delta_0 <N_{delta_0}[sigma(t, .) f_i], mu>` with
    /// `f_i` the endpoint indicators. Cross-asserted against the closed form.
    pub fn sigmahat_quadrature(
        &self,
        op: &EllipticOperator1D,
        t: f64,
        delta0: f64,
        grid_n: usize,
    ) -> Result<(f64, f64)> {
        let sig_a = self.model.sigma.eval(t, op.x_a, 0.0);
        let sig_b = self.model.sigma.eval(t, op.x_b, 0.0);
        let len = op.len();
        let mut out = [0.0; 2];
        for (slot, bdata) in [(0usize, (sig_a, 0.0)), (1usize, (0.0, sig_b))] {
            let sol = solve_neumann(op, delta0, bdata, grid_n)?;
            // mu is uniform in divergence form
            out[slot] = delta0 * sol.grid.trapezoid(&sol.values) / len;
        }
        Ok((out[0], out[1]))
    }

    /// Scalar effective diffusion (squared boundary term).
    pub fn phi(&self, t: f64, v: f64) -> f64 {
        let ghat = self.ghat_modes(t, v);
        let mut acc: f64 = ghat
            .iter()
            .zip(&self.lambdas)
            .map(|(g, l)| (l * g) * (l * g))
            .sum();
        let (sa, sb) = self.sigmahat(t);
        acc += (self.theta.0 * sa).powi(2) + (self.theta.1 * sb).powi(2);
        acc.sqrt()
    }

    /// Euler-Maruyama driven by the shared noise path: the strong-coupling
    /// counterpart of the SPDE run.
    pub fn integrate_coupled(&self, v0: f64, noise: &NoisePath) -> Result<ScalarPath> {
        if noise.k_modes != self.basis.k_modes() {
            return Err(Error::GridMismatch {
                detail: "noise mode count differs from basis".into(),
            });
        }
        let dt = noise.dt;
        let mut v = v0;
        let mut values = Vec::with_capacity(noise.n_steps + 1);
        values.push(v);
        for step in 0..noise.n_steps {
            let t = step as f64 * dt;
            let ghat = self.ghat_modes(t, v);
            let dw = noise.dw_row(step);
            // increments are pre-colored by lambda_j, theta_i
            let interior: f64 = ghat.iter().zip(dw).map(|(g, w)| g * w).sum();
            let (db1, db2) = noise.db_row(step);
            let (sa, sb) = self.sigmahat(t);
            v += self.fhat(t, v) * dt + interior + sa * db1 + sb * db2;
            if !v.is_finite() {
                return Err(Error::IntegrationFailure {
                    step,
                    what: "averaged sde produced non-finite value".into(),
                });
            }
            values.push(v);
        }
        Ok(ScalarPath { dt, values })
    }

    /// Law-equivalent form `dv = Fhat dt + Phi(t, v) dbeta` on raw scalar
    /// Brownian increments (each N(0, dt)).
    pub fn integrate_law(&self, v0: f64, dt: f64, dbeta: &[f64]) -> Result<ScalarPath> {
        let mut v = v0;
        let mut values = Vec::with_capacity(dbeta.len() + 1);
        values.push(v);
        for (step, db) in dbeta.iter().enumerate() {
            let t = step as f64 * dt;
            v += self.fhat(t, v) * dt + self.phi(t, v) * db;
            if !v.is_finite() {
                return Err(Error::IntegrationFailure {
                    step,
                    what: "law-form sde produced non-finite value".into(),
                });
            }
            values.push(v);
        }
        Ok(ScalarPath { dt, values })
    }
}

/// Raw scalar Brownian increments N(0, dt), seeded independently of the
/// coupled stream.
pub fn brownian_increments(seed: u64, dt: f64, n_steps: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0be7_a000_0000_0001);
    let s = dt.sqrt();
    (0..n_steps)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            s * z
        })
        .collect()
}
