//! The 1D elliptic operator `A u = (a(x) u')' + b(x) u'` on `[x_a, x_b]` with
//! conormal (zero-flux) boundary conditions: eigendecomposition, invariant
//! measure, spectral gap and semigroup action.
//!
//! In divergence form (`b = 0`) the operator is self-adjoint in L2(D); the
//! eigenbasis is the computational coordinate system for every solver in this
//! crate. The finite-volume discretization below has exactly vanishing row
//! sums, so the constant function is a discrete eigenfunction with eigenvalue
//! zero, and discrete eigenvectors are orthonormal under the same trapezoid
//! weights used for quadrature everywhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::tridiag;

/// Closed-form spatial coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialField {
    Constant { value: f64 },
    /// offset + amplitude * sin(frequency * x + phase)
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl SpatialField {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpatialField::Constant { value } => *value,
            SpatialField::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (frequency * x + phase).sin(),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            SpatialField::Constant { value } => Some(*value),
            SpatialField::Sine { amplitude, .. } if *amplitude == 0.0 => {
                Some(self.eval(0.0))
            }
            _ => None,
        }
    }

    pub fn zero() -> Self {
        SpatialField::Constant { value: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorForm {
    Divergence,
    Drift,
}

/// `A = (a(x) u')' + b(x) u'` with conormal boundary condition, uniformly
/// elliptic: inf a > 0.
#[derive(Debug, Clone)]
pub struct EllipticOperator1D {
    pub x_a: f64,
    pub x_b: f64,
    pub a_coeff: SpatialField,
    pub b_coeff: SpatialField,
}

impl EllipticOperator1D {
    pub fn new(
        x_a: f64,
        x_b: f64,
        a_coeff: SpatialField,
        b_coeff: SpatialField,
    ) -> Result<Self> {
        if !(x_a < x_b) {
            return Err(Error::InvalidDomain { x_a, x_b });
        }
        // dense sampling stands in for inf over D
        let probe = Grid::new(x_a, x_b, 4096);
        let mut min_a = f64::INFINITY;
        let mut at_x = x_a;
        for i in 0..=probe.n {
            let x = probe.point(i);
            let v = a_coeff.eval(x);
            if v < min_a {
                min_a = v;
                at_x = x;
            }
        }
        if min_a <= 0.0 {
            return Err(Error::EllipticityViolation { min_a, at_x });
        }
        Ok(EllipticOperator1D {
            x_a,
            x_b,
            a_coeff,
            b_coeff,
        })
    }

    pub fn divergence(x_a: f64, x_b: f64, a_coeff: SpatialField) -> Result<Self> {
        Self::new(x_a, x_b, a_coeff, SpatialField::zero())
    }

    pub fn len(&self) -> f64 {
        self.x_b - self.x_a
    }

    pub fn form(&self) -> OperatorForm {
        match self.b_coeff.as_constant() {
            Some(0.0) => OperatorForm::Divergence,
            _ => OperatorForm::Drift,
        }
    }

    pub fn is_divergence(&self) -> bool {
        self.form() == OperatorForm::Divergence
    }
}

/// Eigenpairs of `-A` with conormal boundary conditions, sampled on the grid.
///
/// Modes are L2(D)-orthonormal and sorted by ascending eigenvalue, with
/// `alphas[0] = 0` and `efuncs` row 0 the constant `1/sqrt(|D|)`. Signs are
/// fixed by `e_k(x_a) > 0`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub grid: Grid,
    pub alphas: Vec<f64>,
    efuncs: Vec<f64>, // K x (n+1) row-major
    pub traces: Vec<(f64, f64)>,
}

impl SpectralBasis {
    pub fn k_modes(&self) -> usize {
        self.alphas.len()
    }

    pub fn domain_len(&self) -> f64 {
        self.grid.len()
    }

    /// First positive eigenvalue; the spectral gap in the self-adjoint case.
    pub fn gap(&self) -> f64 {
        self.alphas[1]
    }

    pub fn efunc(&self, k: usize) -> &[f64] {
        let np = self.grid.n_points();
        &self.efuncs[k * np..(k + 1) * np]
    }

    /// Mode coefficients `<h, e_k>_H` for grid samples `h`.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        assert_eq!(h.len(), self.grid.n_points());
        (0..self.k_modes())
            .map(|k| self.grid.inner(h, self.efunc(k)))
            .collect()
    }

    /// Grid samples of `sum_k modes[k] e_k`.
    pub fn reconstruct(&self, modes: &[f64]) -> Vec<f64> {
        assert_eq!(modes.len(), self.k_modes());
        let np = self.grid.n_points();
        let mut out = vec![0.0; np];
        for (k, &c) in modes.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = self.efunc(k);
            for i in 0..np {
                out[i] += c * e[i];
            }
        }
        out
    }

    /// Semigroup action `e^{tA} h` truncated to the stored modes. Mass is
    /// conserved exactly in mode coordinates because `alphas[0] = 0`.
    pub fn semigroup_apply(&self, t: f64, h: &[f64]) -> Vec<f64> {
        assert!(t >= 0.0, "semigroup defined for t >= 0");
        let mut modes = self.project(h);
        for (k, c) in modes.iter_mut().enumerate() {
            *c *= (-self.alphas[k] * t).exp();
        }
        self.reconstruct(&modes)
    }

    /// Max absolute deviation of the trapezoid Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let k = self.k_modes();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..=i {
                let g = self.grid.inner(self.efunc(i), self.efunc(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of the divergence-form operator.
///
/// Constant `a` takes the closed-form Neumann cosine branch; variable `a`
/// uses the symmetric finite-volume discretization and a tridiagonal
/// bisection eigensolver. `k_modes <= grid_n / 4` keeps the discrete
/// eigenvalues close to the continuum.
pub fn eigensolve(
    op: &EllipticOperator1D,
    k_modes: usize,
    grid_n: usize,
) -> Result<SpectralBasis> {
    if !op.is_divergence() {
        return Err(Error::DriftFormRejected {
            operation: "eigensolve",
        });
    }
    if k_modes == 0 || k_modes > grid_n / 4 {
        return Err(Error::TooManyModes {
            k_modes,
            limit: grid_n / 4,
        });
    }
    let grid = Grid::new(op.x_a, op.x_b, grid_n);
    let basis = match op.a_coeff.as_constant() {
        Some(a0) => cosine_basis(grid, a0, k_modes),
        None => numeric_basis(op, grid, k_modes)?,
    };
    Ok(basis)
}

fn cosine_basis(grid: Grid, a0: f64, k_modes: usize) -> SpectralBasis {
    let len = grid.len();
    let np = grid.n_points();
    let mut alphas = Vec::with_capacity(k_modes);
    let mut efuncs = Vec::with_capacity(k_modes * np);
    let mut traces = Vec::with_capacity(k_modes);
    for k in 0..k_modes {
        if k == 0 {
            alphas.push(0.0);
            let v = 1.0 / len.sqrt();
            efuncs.extend(std::iter::repeat(v).take(np));
            traces.push((v, v));
        } else {
            let freq = k as f64 * std::f64::consts::PI / len;
            alphas.push(a0 * freq * freq);
            let amp = (2.0 / len).sqrt();
            for i in 0..np {
                efuncs.push(amp * (freq * (grid.point(i) - grid.x_a)).cos());
            }
            traces.push((amp, amp * (k as f64 * std::f64::consts::PI).cos()));
        }
    }
    SpectralBasis {
        grid,
        alphas,
        efuncs,
        traces,
    }
}

/// Finite-volume matrix of `(a u')'` with zero-flux rows: conductances
/// `a(x_{i+1/2})/h` between neighbors, trapezoid weights as cell volumes.
/// Returns the symmetrized tridiagonal `-W^{-1/2} L W^{-1/2}` pieces.
fn fv_symmetrized(
    grid: &Grid,
    conductance: impl Fn(f64) -> f64,
    cell_weight: impl Fn(usize) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let h = grid.h();
    let cond: Vec<f64> = (0..n)
        .map(|i| conductance(grid.point(i) + 0.5 * h) / h)
        .collect();
    let w: Vec<f64> = (0..=n).map(cell_weight).collect();
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n];
    for i in 0..=n {
        let left = if i > 0 { cond[i - 1] } else { 0.0 };
        let right = if i < n { cond[i] } else { 0.0 };
        diag[i] = (left + right) / w[i];
    }
    for i in 0..n {
        off[i] = -cond[i] / (w[i] * w[i + 1]).sqrt();
    }
    (diag, off)
}

fn numeric_basis(
    op: &EllipticOperator1D,
    grid: Grid,
    k_modes: usize,
) -> Result<SpectralBasis> {
    let np = grid.n_points();
    let (diag, off) = fv_symmetrized(&grid, |x| op.a_coeff.eval(x), |i| grid.weight(i));
    let pairs = tridiag::lowest_eigenpairs(&diag, &off, k_modes)?;

    let mut alphas = Vec::with_capacity(k_modes);
    let mut efuncs = Vec::with_capacity(k_modes * np);
    let mut traces = Vec::with_capacity(k_modes);
    for (k, (lambda, v)) in pairs.into_iter().enumerate() {
        if k == 0 {
            // row sums of L vanish identically, so the zero eigenpair is exact
            alphas.push(0.0);
            let c = 1.0 / grid.len().sqrt();
            efuncs.extend(std::iter::repeat(c).take(np));
            traces.push((c, c));
            continue;
        }
        alphas.push(lambda);
        // map back from the symmetrized variable and fix the sign
        let mut e: Vec<f64> = (0..np).map(|i| v[i] / grid.weight(i).sqrt()).collect();
        let norm = grid.l2_norm(&e);
        let sign = if e[0] < 0.0 { -1.0 } else { 1.0 };
        for x in e.iter_mut() {
            *x *= sign / norm;
        }
        traces.push((e[0], e[np - 1]));
        efuncs.extend(e);
    }
    Ok(SpectralBasis {
        grid,
        alphas,
        efuncs,
        traces,
    })
}

/// Invariant measure of the semigroup: density samples, unit total mass and
/// the spectral gap.
#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub gap: f64,
}

impl InvariantMeasure {
    pub fn total(&self) -> f64 {
        self.grid.trapezoid(&self.density)
    }
}

/// Invariant density of the reflected diffusion.
///
/// Divergence form gives the uniform density `1/|D|` exactly. With drift the
/// density solves the stationary adjoint problem `a m' - b m = 0` (which is
/// also the adjoint flux condition at both endpoints), i.e.
/// `m(x) ∝ exp(int_{x_a}^x b/a)`, normalized to unit mass. The gap comes from
/// the weighted Sturm-Liouville eigenproblem, in which the drift operator is
/// self-adjoint.
pub fn invariant_density(op: &EllipticOperator1D, grid_n: usize) -> Result<InvariantMeasure> {
    let grid = Grid::new(op.x_a, op.x_b, grid_n);
    if op.is_divergence() {
        let gap = divergence_gap(op, grid_n)?;
        let density = vec![1.0 / grid.len(); grid.n_points()];
        return Ok(InvariantMeasure { grid, density, gap });
    }

    // cumulative trapezoid of b/a on a doubled grid (midpoints included)
    let fine = Grid::new(op.x_a, op.x_b, 2 * grid_n);
    let ratio: Vec<f64> = (0..=fine.n)
        .map(|i| {
            let x = fine.point(i);
            op.b_coeff.eval(x) / op.a_coeff.eval(x)
        })
        .collect();
    for r in &ratio {
        if !r.is_finite() {
            return Err(Error::Config(
                "invariant density quadrature failed: b/a not finite".into(),
            ));
        }
    }
    let hf = fine.h();
    let mut cum = vec![0.0; fine.n_points()];
    for i in 1..=fine.n {
        cum[i] = cum[i - 1] + 0.5 * hf * (ratio[i - 1] + ratio[i]);
    }
    let m_fine: Vec<f64> = cum.iter().map(|c| c.exp()).collect();
    if m_fine.iter().any(|m| !m.is_finite()) {
        return Err(Error::Config(
            "invariant density quadrature failed: exp overflow in exp(int b/a)".into(),
        ));
    }
    let mass = fine.trapezoid(&m_fine);
    let density: Vec<f64> = (0..=grid.n).map(|i| m_fine[2 * i] / mass).collect();
    let m_mid: Vec<f64> = (0..grid.n).map(|i| m_fine[2 * i + 1] / mass).collect();

    // generalized eigenproblem: conductance a*m, weight w*m
    let (diag, off) = fv_symmetrized(
        &grid,
        |x| {
            let i = ((x - grid.x_a) / grid.h() - 0.5).round() as usize;
            op.a_coeff.eval(x) * m_mid[i.min(grid.n - 1)]
        },
        |i| grid.weight(i) * density[i],
    );
    let pairs = tridiag::lowest_eigenpairs(&diag, &off, 2)?;
    let gap = pairs[1].0;

    Ok(InvariantMeasure { grid, density, gap })
}

fn divergence_gap(op: &EllipticOperator1D, grid_n: usize) -> Result<f64> {
    if let Some(a0) = op.a_coeff.as_constant() {
        let freq = std::f64::consts::PI / op.len();
        return Ok(a0 * freq * freq);
    }
    let grid = Grid::new(op.x_a, op.x_b, grid_n);
    let (diag, off) = fv_symmetrized(&grid, |x| op.a_coeff.eval(x), |i| grid.weight(i));
    let pairs = tridiag::lowest_eigenpairs(&diag, &off, 2)?;
    Ok(pairs[1].0)
}

/// `|h|_{H_mu} = (int |h|^2 m dx)^{1/2}` by trapezoid quadrature.
pub fn hmu_norm(meas: &InvariantMeasure, h: &[f64]) -> f64 {
    assert_eq!(h.len(), meas.grid.n_points());
    let mut acc = 0.0;
    for i in 0..h.len() {
        acc += meas.grid.weight(i) * h[i] * h[i] * meas.density[i];
    }
    acc.max(0.0).sqrt()
}

/// `<h, mu> = int h m dx`.
pub fn mu_average(meas: &InvariantMeasure, h: &[f64]) -> f64 {
    assert_eq!(h.len(), meas.grid.n_points());
    let mut acc = 0.0;
    for i in 0..h.len() {
        acc += meas.grid.weight(i) * h[i] * meas.density[i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_op() -> EllipticOperator1D {
        EllipticOperator1D::divergence(0.0, PI, SpatialField::Constant { value: 1.0 }).unwrap()
    }

    #[test]
    fn analytic_cosine_eigenpairs() {
        let basis = eigensolve(&unit_op(), 3, 64).unwrap();
        assert_eq!(basis.alphas, vec![0.0, 1.0, 4.0]);
        let e0 = basis.efunc(0);
        assert!((e0[10] - 1.0 / PI.sqrt()).abs() < 1e-14);
        let amp = (2.0 / PI).sqrt();
        let e1 = basis.efunc(1);
        for i in 0..=64 {
            let x = basis.grid.point(i);
            assert!((e1[i] - amp * x.cos()).abs() < 1e-13);
        }
        let e2 = basis.efunc(2);
        assert!((e2[0] - amp * 1.0).abs() < 1e-13);
    }

    #[test]
    fn spectral_gap_is_first_neumann_eigenvalue() {
        let basis = eigensolve(&unit_op(), 4, 64).unwrap();
        assert!((basis.gap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn numeric_branch_matches_analytic_on_constant_a() {
        // force the numeric path with a zero-amplitude sine disguised... the
        // as_constant shortcut catches that, so perturb infinitesimally
        let op = EllipticOperator1D::divergence(
            0.0,
            PI,
            SpatialField::Sine {
                offset: 1.0,
                amplitude: 1e-12,
                frequency: 1.0,
                phase: 0.0,
            },
        )
        .unwrap();
        let basis = eigensolve(&op, 6, 512).unwrap();
        for k in 1..6 {
            let expect = (k * k) as f64;
            let rel = (basis.alphas[k] - expect).abs() / expect;
            assert!(rel < 2e-3, "mode {k}: {} vs {expect}", basis.alphas[k]);
        }
        assert!(basis.gram_residual() < 1e-8);
        // sign convention
        for k in 0..6 {
            assert!(basis.traces[k].0 > 0.0);
        }
    }

    #[test]
    fn eigensolve_rejects_drift_and_oversized_k() {
        let drift = EllipticOperator1D::new(
            0.0,
            1.0,
            SpatialField::Constant { value: 1.0 },
            SpatialField::Constant { value: 1.0 },
        )
        .unwrap();
        assert!(matches!(
            eigensolve(&drift, 2, 64),
            Err(Error::DriftFormRejected { .. })
        ));
        assert!(matches!(
            eigensolve(&unit_op(), 20, 64),
            Err(Error::TooManyModes { .. })
        ));
    }

    #[test]
    fn ellipticity_violation_detected() {
        let bad = EllipticOperator1D::divergence(
            0.0,
            PI,
            SpatialField::Sine {
                offset: 0.3,
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0,
            },
        );
        assert!(matches!(bad, Err(Error::EllipticityViolation { .. })));
    }

    #[test]
    fn uniform_invariant_density_in_divergence_form() {
        let meas = invariant_density(&unit_op(), 128).unwrap();
        for d in &meas.density {
            assert!((d - 1.0 / PI).abs() < 1e-15);
        }
        assert!((meas.total() - 1.0).abs() < 1e-12);
        assert!((meas.gap - 1.0).abs() < 1e-12);

        // independent of a in divergence form
        let op2 =
            EllipticOperator1D::divergence(-1.0, 1.0, SpatialField::Constant { value: 2.0 })
                .unwrap();
        let meas2 = invariant_density(&op2, 64).unwrap();
        assert!((meas2.density[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn drift_invariant_density_exponential() {
        let op = EllipticOperator1D::new(
            0.0,
            1.0,
            SpatialField::Constant { value: 1.0 },
            SpatialField::Constant { value: 1.0 },
        )
        .unwrap();
        let meas = invariant_density(&op, 256).unwrap();
        let norm = std::f64::consts::E - 1.0;
        for i in 0..=256 {
            let x = meas.grid.point(i);
            let expect = x.exp() / norm;
            assert!(
                (meas.density[i] - expect).abs() < 1e-6,
                "x={x}: {} vs {expect}",
                meas.density[i]
            );
        }
        assert!((meas.total() - 1.0).abs() < 1e-10);

        // stationary BVP oracle: a m' - b m = 0 in the interior (central FD)
        let h = meas.grid.h();
        for i in 1..256 {
            let mp = (meas.density[i + 1] - meas.density[i - 1]) / (2.0 * h);
            let res = 1.0 * mp - 1.0 * meas.density[i];
            assert!(res.abs() < 1e-4, "adjoint residual {res} at i={i}");
        }
        // adjoint flux condition at the endpoints (one-sided FD)
        let m0p = (meas.density[1] - meas.density[0]) / h;
        assert!((m0p - meas.density[0]).abs() < 3e-3);
    }

    #[test]
    fn semigroup_identity_eigen_decay_and_ergodicity() {
        let basis = eigensolve(&unit_op(), 16, 256).unwrap();
        let meas = invariant_density(&unit_op(), 256).unwrap();

        // t = 0 reproduces anything in the span
        let h = basis.reconstruct(&{
            let mut c = vec![0.0; 16];
            c[0] = 0.7;
            c[3] = -1.1;
            c
        });
        let h0 = basis.semigroup_apply(0.0, &h);
        for (x, y) in h0.iter().zip(&h) {
            assert!((x - y).abs() < 1e-12);
        }

        // eigenfunction decay
        let e1: Vec<f64> = basis.efunc(1).to_vec();
        let out = basis.semigroup_apply(1.0, &e1);
        for (o, e) in out.iter().zip(&e1) {
            assert!((o - (-1.0f64).exp() * e).abs() < 1e-12);
        }

        // ergodicity: |e^{tA} h - <h,mu>|_{H_mu} <= e^{-gamma t} |h|_{H_mu}
        let h = basis.grid.sample(|x| x);
        let t = 3.0;
        let decayed = basis.semigroup_apply(t, &h);
        let mean = mu_average(&meas, &h);
        let centered: Vec<f64> = decayed.iter().map(|v| v - mean).collect();
        let lhs = hmu_norm(&meas, &centered);
        let rhs = (-basis.gap() * t).exp() * hmu_norm(&meas, &h);
        assert!(lhs <= rhs * (1.0 + 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn hmu_norm_examples() {
        let meas = invariant_density(&unit_op(), 256).unwrap();
        // probability measure: |c|_{H_mu} = |c|
        let c = vec![-2.5; 257];
        assert!((hmu_norm(&meas, &c) - 2.5).abs() < 1e-12);
        // e_1 in divergence form: |e_1|_{H_mu} = |D|^{-1/2} |e_1|_H = 1/sqrt(pi)
        let basis = eigensolve(&unit_op(), 4, 256).unwrap();
        let n = hmu_norm(&meas, basis.efunc(1));
        assert!((n - 1.0 / PI.sqrt()).abs() < 1e-6);
        // zero
        assert_eq!(hmu_norm(&meas, &vec![0.0; 257]), 0.0);
    }

    #[test]
    fn embedding_identity_divergence_form() {
        let basis = eigensolve(&unit_op(), 8, 256).unwrap();
        let meas = invariant_density(&unit_op(), 256).unwrap();
        let h = basis.grid.sample(|x| (2.0 * x).sin() + 0.3 * x);
        let lhs = hmu_norm(&meas, &h);
        let rhs = basis.grid.l2_norm(&h) / PI.sqrt();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mass_conservation_in_mode_coordinates() {
        let basis = eigensolve(&unit_op(), 8, 128).unwrap();
        let h = basis.grid.sample(|x| 1.0 + x * x);
        let before = basis.project(&h)[0];
        let after = basis.project(&basis.semigroup_apply(2.5, &h))[0];
        assert!((before - after).abs() < 1e-12);
    }
}
