//! The fluctuation field `z = (u - v) / sqrt(eps)`, the analytic covariance
//! of its Gaussian limit, and the statistical comparison between them.
//!
//! In mode coordinates (k, l >= 1; the centering projection removes mode 0)
//! the limit covariance at time t is
//!
//! ```text
//! C_kl = [ sum_j lambda_j^2 <g(t,.) e_j, e_k> <g(t,.) e_j, e_l>
//!          + sum_i theta_i^2 sigma(t, eta_i)^2 e_k(eta_i) e_l(eta_i) ]
//!        / (alpha_k + alpha_l)
//! ```
//!
//! obtained by integrating the squared semigroup kernels over `[0, inf)` in
//! the eigenbasis. Weak convergence is tested through finitely many linear
//! functionals: projections on the low modes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::averaged::ScalarPath;
use crate::coefficients::{validate, ModelSpec, Purpose};
use crate::error::{Error, Result};
use crate::noise::QSpec;
use crate::operator::SpectralBasis;
use crate::spde::SpdePath;

/// Covariance of the Gaussian limit over modes 1..K-1.
#[derive(Debug, Clone)]
pub struct I0Covariance {
    pub t: f64,
    pub k_modes: usize,
    data: Vec<f64>, // (k_modes - 1)^2 row-major
}

impl I0Covariance {
    /// Number of retained fluctuation modes (mode 0 excluded).
    pub fn dim(&self) -> usize {
        self.k_modes - 1
    }

    /// Entry for eigenmodes `k, l >= 1`.
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        assert!(k >= 1 && l >= 1 && k < self.k_modes && l < self.k_modes);
        self.data[(k - 1) * self.dim() + (l - 1)]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.data
    }
}

/// Analytic covariance of the fluctuation limit at time `t`. Requires the
/// additive-noise hypotheses (validated for purpose = fluctuate).
pub fn i0_covariance(
    model: &ModelSpec,
    basis: &SpectralBasis,
    q: &QSpec,
    theta: (f64, f64),
    t: f64,
) -> Result<I0Covariance> {
    validate(model, Purpose::Fluctuate)?;
    let k_modes = basis.k_modes();
    if k_modes < 2 {
        return Err(Error::Config("fluctuation needs at least 2 modes".into()));
    }
    let lambdas = q.lambdas(k_modes)?;
    let dim = k_modes - 1;
    let grid = &basis.grid;

    // B[k-1][j] = lambda_j <g(t,.) e_j, e_k>
    let mut b = vec![0.0; dim * k_modes];
    if !model.g.depends_on_x() {
        let g0 = model.g.eval(t, grid.x_a, 0.0);
        for k in 1..k_modes {
            b[(k - 1) * k_modes + k] = lambdas[k] * g0;
        }
    } else {
        let np = grid.n_points();
        let gw: Vec<f64> = (0..np)
            .map(|i| model.g.eval(t, grid.point(i), 0.0) * grid.weight(i))
            .collect();
        for k in 1..k_modes {
            let ek = basis.efunc(k);
            for j in 0..k_modes {
                let ej = basis.efunc(j);
                let mut acc = 0.0;
                for i in 0..np {
                    acc += gw[i] * ek[i] * ej[i];
                }
                b[(k - 1) * k_modes + j] = lambdas[j] * acc;
            }
        }
    }

    let sig_a = model.sigma.eval(t, grid.x_a, 0.0);
    let sig_b = model.sigma.eval(t, grid.x_b, 0.0);
    let wa = theta.0 * theta.0 * sig_a * sig_a;
    let wb = theta.1 * theta.1 * sig_b * sig_b;

    let mut data = vec![0.0; dim * dim];
    for k in 1..k_modes {
        for l in 1..=k {
            let rowk = &b[(k - 1) * k_modes..k * k_modes];
            let rowl = &b[(l - 1) * k_modes..l * k_modes];
            let interior: f64 = rowk.iter().zip(rowl).map(|(x, y)| x * y).sum();
            let boundary = wa * basis.traces[k].0 * basis.traces[l].0
                + wb * basis.traces[k].1 * basis.traces[l].1;
            let c = (interior + boundary) / (basis.alphas[k] + basis.alphas[l]);
            data[(k - 1) * dim + (l - 1)] = c;
            data[(l - 1) * dim + (k - 1)] = c;
        }
    }

    Ok(I0Covariance { t, k_modes, data })
}

/// Mode trajectory of the fluctuation field: row per time step,
/// `z_k = (u_k - sqrt(|D|) v delta_{k0}) / sqrt(eps)`.
pub fn z_modes(
    spde: &SpdePath,
    scalar: &ScalarPath,
    basis: &SpectralBasis,
    eps: f64,
) -> Result<Vec<f64>> {
    if spde.n_steps() != scalar.n_steps() || (spde.dt - scalar.dt).abs() > 1e-15 * spde.dt {
        return Err(Error::GridMismatch {
            detail: "spde and averaged paths live on different time grids".into(),
        });
    }
    let k = spde.k_modes;
    let sqrt_len = basis.domain_len().sqrt();
    let sqrt_eps = eps.sqrt();
    let mut out = Vec::with_capacity((spde.n_steps() + 1) * k);
    for step in 0..=spde.n_steps() {
        let u = spde.mode_row(step);
        let v = scalar.values[step];
        for (j, &uj) in u.iter().enumerate() {
            let centered = if j == 0 { uj - sqrt_len * v } else { uj };
            out.push(centered / sqrt_eps);
        }
    }
    Ok(out)
}

/// Per-mode diagnostics of a sample set against the analytic covariance.
#[derive(Debug, Clone)]
pub struct ModeDiag {
    pub mode: usize,
    pub mean: f64,
    /// mean / (sd / sqrt(M)): standard-error units.
    pub mean_z: f64,
    pub var_analytic: f64,
    pub var_empirical: f64,
    pub rel_err: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone)]
pub struct GaussianReport {
    pub m_samples: usize,
    pub per_mode: Vec<ModeDiag>,
    /// max over k != l of |C_emp - C| / sqrt(C_kk C_ll)
    pub offdiag_max_rel: f64,
}

impl GaussianReport {
    pub fn max_diag_rel(&self, modes: usize) -> f64 {
        self.per_mode
            .iter()
            .take(modes)
            .map(|d| d.rel_err.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_mean_z(&self, modes: usize) -> f64 {
        self.per_mode
            .iter()
            .take(modes)
            .map(|d| d.mean_z.abs())
            .fold(0.0, f64::max)
    }

    /// Mean over the first `modes` diagonals of |rel err|: the scalar
    /// discrepancy used for the eps-trend comparison.
    pub fn mean_discrepancy(&self, modes: usize) -> f64 {
        let n = modes.min(self.per_mode.len());
        self.per_mode
            .iter()
            .take(n)
            .map(|d| d.rel_err.abs())
            .sum::<f64>()
            / n as f64
    }
}

/// Compare `m x dim` samples (rows are draws of modes 1..dim) against the
/// analytic covariance. `m >= 500` so the moment diagnostics are meaningful.
pub fn gaussian_compare(
    samples: &[f64],
    dim: usize,
    cov: &I0Covariance,
) -> Result<GaussianReport> {
    if dim == 0 || dim > cov.dim() || samples.len() % dim != 0 {
        return Err(Error::Config("sample matrix shape mismatch".into()));
    }
    let m = samples.len() / dim;
    if m < 500 {
        return Err(Error::Config(format!(
            "need at least 500 samples for the gaussian diagnostics, got {m}"
        )));
    }
    let mf = m as f64;

    let mut mean = vec![0.0; dim];
    for row in 0..m {
        for j in 0..dim {
            mean[j] += samples[row * dim + j];
        }
    }
    for x in mean.iter_mut() {
        *x /= mf;
    }

    let mut cmat = vec![0.0; dim * dim];
    let mut m3 = vec![0.0; dim];
    let mut m4 = vec![0.0; dim];
    for row in 0..m {
        for j in 0..dim {
            let dj = samples[row * dim + j] - mean[j];
            m3[j] += dj * dj * dj;
            m4[j] += dj * dj * dj * dj;
            for l in 0..=j {
                let dl = samples[row * dim + l] - mean[l];
                cmat[j * dim + l] += dj * dl;
            }
        }
    }
    for j in 0..dim {
        for l in 0..=j {
            let c = cmat[j * dim + l] / (mf - 1.0);
            cmat[j * dim + l] = c;
            cmat[l * dim + j] = c;
        }
    }

    let mut per_mode = Vec::with_capacity(dim);
    for j in 0..dim {
        let var_emp = cmat[j * dim + j];
        let sd = var_emp.sqrt();
        let var_ref = cov.entry(j + 1, j + 1);
        let sigma3 = (m3[j] / mf) / sd.powi(3).max(1e-300);
        let kurt = (m4[j] / mf) / var_emp.powi(2).max(1e-300) - 3.0;
        per_mode.push(ModeDiag {
            mode: j + 1,
            mean: mean[j],
            mean_z: mean[j] / (sd / mf.sqrt()).max(1e-300),
            var_analytic: var_ref,
            var_empirical: var_emp,
            rel_err: if var_ref > 0.0 {
                (var_emp - var_ref) / var_ref
            } else {
                var_emp
            },
            skewness: sigma3,
            excess_kurtosis: kurt,
        });
    }

    let mut offdiag: f64 = 0.0;
    for j in 0..dim {
        for l in 0..j {
            let scale = (cov.entry(j + 1, j + 1) * cov.entry(l + 1, l + 1)).sqrt();
            if scale > 0.0 {
                let d = (cmat[j * dim + l] - cov.entry(j + 1, l + 1)).abs() / scale;
                offdiag = offdiag.max(d);
            }
        }
    }

    Ok(GaussianReport {
        m_samples: m,
        per_mode,
        offdiag_max_rel: offdiag,
    })
}

/// Draw `m` samples from N(0, C) restricted to the first `dim` modes, via a
/// semidefinite-tolerant Cholesky factor. Used by the self-test path.
pub fn sample_gaussian(cov: &I0Covariance, dim: usize, m: usize, seed: u64) -> Vec<f64> {
    assert!(dim <= cov.dim());
    let mut a = vec![0.0; dim * dim];
    for k in 0..dim {
        for l in 0..dim {
            a[k * dim + l] = cov.entry(k + 1, l + 1);
        }
    }
    let l = semidefinite_cholesky(&a, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a55_1a00_0000_0002);
    let mut out = vec![0.0; m * dim];
    let mut z = vec![0.0; dim];
    for row in 0..m {
        for zj in z.iter_mut() {
            *zj = rng.sample::<f64, _>(StandardNormal);
        }
        for k in 0..dim {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += l[k * dim + j] * z[j];
            }
            out[row * dim + k] = acc;
        }
    }
    out
}

/// Lower-triangular factor of a PSD matrix; tiny negative pivots are clamped
/// to zero so semidefinite limits (silent modes) factor cleanly.
fn semidefinite_cholesky(a: &[f64], n: usize) -> Vec<f64> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
    let tol = 1e-12 * scale.max(1e-300);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= tol {
            continue; // pivot treated as zero; column stays zero
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    l
}
