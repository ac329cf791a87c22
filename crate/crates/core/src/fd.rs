//! Physical-space theta-scheme oracle for the same equation (Crank-Nicolson
//! by default): an independent cross-check of the spectral solver with
//! relaxed tolerances, and the only time evolution that accepts a drift term
//! (deterministic runs only).
//!
//! Diffusion is treated implicitly with weight `theta_scheme >= 0.5`
//! (unconditionally stable); reaction and noise enter explicitly. Interior
//! noise increments are projected to the grid as `sum_j e_j(x_i) dW_j`;
//! boundary white noise enters the half-cell flux balance as the increment
//! `sigma dB` (the time-integral of the scaled flux-rate boundary condition).

use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::noise::NoisePath;
use crate::operator::{EllipticOperator1D, SpectralBasis};
use crate::spde::InitialCondition;
use crate::tridiag::{pivoted_solve, Tridiagonal};

pub struct FdProblem<'a> {
    pub op: &'a EllipticOperator1D,
    pub model: &'a ModelSpec,
    pub eps: f64,
    /// Implicitness weight in [0.5, 1]; 0.5 is Crank-Nicolson.
    pub theta_scheme: f64,
    pub u0: InitialCondition,
}

pub enum FdForcing<'a> {
    None,
    /// Stochastic forcing shared with the spectral solver; the basis supplies
    /// the grid projection of the interior modes.
    Noise {
        path: &'a NoisePath,
        basis: &'a SpectralBasis,
    },
    /// Deterministic conormal flux data `t -> (h_a, h_b)`, scaled by `1/eps`
    /// in the evolution like the elliptic term.
    BoundaryFlux(&'a dyn Fn(f64) -> (f64, f64)),
}

#[derive(Debug, Clone)]
pub struct FdTrajectory {
    pub grid: Grid,
    pub dt: f64,
    values: Vec<f64>, // (n_steps + 1) x (n + 1)
}

impl FdTrajectory {
    pub fn n_steps(&self) -> usize {
        self.values.len() / self.grid.n_points() - 1
    }

    pub fn row(&self, step: usize) -> &[f64] {
        let np = self.grid.n_points();
        &self.values[step * np..(step + 1) * np]
    }

    pub fn mass(&self, step: usize) -> f64 {
        self.grid.trapezoid(self.row(step))
    }
}

pub fn fd_integrate(
    problem: &FdProblem,
    grid_n: usize,
    dt: f64,
    n_steps: usize,
    forcing: FdForcing,
) -> Result<FdTrajectory> {
    if !(0.5..=1.0).contains(&problem.theta_scheme) {
        return Err(Error::Config(
            "theta_scheme must lie in [0.5, 1] for unconditional stability".into(),
        ));
    }
    if problem.op.form() != crate::operator::OperatorForm::Divergence
        && matches!(forcing, FdForcing::Noise { .. })
    {
        return Err(Error::DriftFormRejected {
            operation: "stochastic fd_integrate",
        });
    }
    let grid = Grid::new(problem.op.x_a, problem.op.x_b, grid_n);
    let np = grid.n_points();
    let h = grid.h();

    if let FdForcing::Noise { path, basis } = &forcing {
        if (path.dt - dt).abs() > 1e-15 * dt || path.n_steps < n_steps {
            return Err(Error::GridMismatch {
                detail: "noise path grid does not match the fd time grid".into(),
            });
        }
        if basis.grid.n != grid_n || basis.grid.x_a != grid.x_a {
            return Err(Error::GridMismatch {
                detail: "basis grid does not match the fd grid".into(),
            });
        }
    }

    // weighted operator rows: w_i du_i/dt = (1/eps) (L u)_i + ...
    let cond: Vec<f64> = (0..grid_n)
        .map(|i| problem.op.a_coeff.eval(grid.point(i) + 0.5 * h) / h)
        .collect();
    let weights: Vec<f64> = (0..np).map(|i| grid.weight(i)).collect();
    let mut l_diag = vec![0.0; np];
    let mut l_lower = vec![0.0; grid_n];
    let mut l_upper = vec![0.0; grid_n];
    for i in 0..np {
        let left = if i > 0 { cond[i - 1] } else { 0.0 };
        let right = if i < grid_n { cond[i] } else { 0.0 };
        l_diag[i] = -(left + right);
    }
    for i in 0..grid_n {
        l_lower[i] = cond[i];
        l_upper[i] = cond[i];
    }
    // drift rows w_i b_i u'(x_i): central in the interior, one-sided at the
    // endpoints (deterministic oracle runs only)
    if !problem.op.is_divergence() {
        for i in 0..np {
            let bw = problem.op.b_coeff.eval(grid.point(i)) * weights[i];
            if i == 0 {
                l_diag[0] += -bw / h;
                l_upper[0] += bw / h;
            } else if i == np - 1 {
                l_diag[np - 1] += bw / h;
                l_lower[np - 2] += -bw / h;
            } else {
                l_upper[i] += 0.5 * bw / h;
                l_lower[i - 1] += -0.5 * bw / h;
            }
        }
    }

    let r = dt / problem.eps;
    let th = problem.theta_scheme;
    let lhs = Tridiagonal {
        diag: (0..np).map(|i| weights[i] - th * r * l_diag[i]).collect(),
        lower: l_lower.iter().map(|v| -th * r * v).collect(),
        upper: l_upper.iter().map(|v| -th * r * v).collect(),
    };
    let explicit = 1.0 - th;

    let mut u: Vec<f64> = match &problem.u0 {
        InitialCondition::Constant(c) => vec![*c; np],
        InitialCondition::Grid(values) => {
            if values.len() != np {
                return Err(Error::GridMismatch {
                    detail: format!("u0 has {} samples, fd grid has {np}", values.len()),
                });
            }
            values.clone()
        }
    };

    let mut out = Vec::with_capacity((n_steps + 1) * np);
    out.extend_from_slice(&u);
    let mut rhs = vec![0.0; np];
    let mut dw_grid = vec![0.0; np];

    for step in 0..n_steps {
        let t = step as f64 * dt;
        // rhs = (W + (1-theta) r L) u
        for i in 0..np {
            let mut lu = l_diag[i] * u[i];
            if i > 0 {
                lu += l_lower[i - 1] * u[i - 1];
            }
            if i < np - 1 {
                lu += l_upper[i] * u[i + 1];
            }
            rhs[i] = weights[i] * u[i] + explicit * r * lu;
        }
        // explicit reaction
        for i in 0..np {
            rhs[i] += weights[i] * dt * problem.model.f.eval(t, grid.point(i), u[i]);
        }
        match &forcing {
            FdForcing::None => {}
            FdForcing::Noise { path, basis } => {
                let dw = path.dw_row(step);
                dw_grid.fill(0.0);
                for (j, &inc) in dw.iter().enumerate() {
                    if inc == 0.0 {
                        continue;
                    }
                    let e = basis.efunc(j);
                    for i in 0..np {
                        dw_grid[i] += inc * e[i];
                    }
                }
                for i in 0..np {
                    rhs[i] +=
                        weights[i] * problem.model.g.eval(t, grid.point(i), u[i]) * dw_grid[i];
                }
                let (db1, db2) = path.db_row(step);
                rhs[0] += problem.model.sigma.eval(t, grid.x_a, 0.0) * db1;
                rhs[np - 1] += problem.model.sigma.eval(t, grid.x_b, 0.0) * db2;
            }
            FdForcing::BoundaryFlux(flux) => {
                let (fa0, fb0) = flux(t);
                let (fa1, fb1) = flux(t + dt);
                rhs[0] += r * (th * fa1 + explicit * fa0);
                rhs[np - 1] += r * (th * fb1 + explicit * fb0);
            }
        }
        u = pivoted_solve(&lhs, &rhs)?;
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::IntegrationFailure {
                step,
                what: "non-finite grid value in fd solve".into(),
            });
        }
        out.extend_from_slice(&u);
    }

    Ok(FdTrajectory {
        grid,
        dt,
        values: out,
    })
}
