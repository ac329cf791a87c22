//! Tridiagonal linear algebra kernels.
//!
//! The discrete elliptic operator, the Neumann boundary-value solve and the
//! theta-scheme time stepper all reduce to symmetric (or mildly
//! non-symmetric) tridiagonal systems, so one small toolbox covers them:
//! Thomas and partial-pivoting LU solves, plus a bisection +
//! inverse-iteration eigensolver for the lowest eigenpairs of a symmetric
//! tridiagonal matrix.

use crate::error::{Error, Result};

/// Tridiagonal matrix: `lower[i]` couples row i+1 to column i, `upper[i]`
/// couples row i to column i+1.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    #[allow(dead_code)] // exercised by tests
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.lower[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }
}

/// Thomas algorithm for diagonally dominant (or SPD) tridiagonal systems.
pub fn thomas_solve(t: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = t.n();
    assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if t.diag[0] == 0.0 {
        return Err(Error::SingularSystem { delta: 0.0 });
    }
    c[0] = t.upper.first().copied().unwrap_or(0.0) / t.diag[0];
    d[0] = rhs[0] / t.diag[0];
    for i in 1..n {
        let denom = t.diag[i] - t.lower[i - 1] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::SingularSystem { delta: 0.0 });
        }
        if i < n - 1 {
            c[i] = t.upper[i] / denom;
        }
        d[i] = (rhs[i] - t.lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Tridiagonal LU solve with partial pivoting; fill-in is limited to a second
/// super-diagonal. Used where the system may be indefinite or near-singular
/// (shifted systems in inverse iteration).
pub fn pivoted_solve(t: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = t.n();
    assert_eq!(rhs.len(), n);
    if n == 1 {
        if t.diag[0] == 0.0 {
            return Err(Error::SingularSystem { delta: 0.0 });
        }
        return Ok(vec![rhs[0] / t.diag[0]]);
    }
    let mut d = t.diag.clone();
    let mut u1: Vec<f64> = t.upper.iter().copied().chain([0.0]).collect();
    let mut u2 = vec![0.0; n];
    let mut sub = t.lower.clone();
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if sub[i].abs() > d[i].abs() {
            // swap rows i and i+1, column by column
            std::mem::swap(&mut d[i], &mut sub[i]);
            std::mem::swap(&mut u1[i], &mut d[i + 1]);
            std::mem::swap(&mut u2[i], &mut u1[i + 1]);
            b.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            return Err(Error::SingularSystem { delta: 0.0 });
        }
        let m = sub[i] / d[i];
        d[i + 1] -= m * u1[i];
        u1[i + 1] -= m * u2[i];
        b[i + 1] -= m * b[i];
    }
    if d[n - 1] == 0.0 {
        return Err(Error::SingularSystem { delta: 0.0 });
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    x[n - 2] = (b[n - 2] - u1[n - 2] * x[n - 1]) / d[n - 2];
    for i in (0..n - 1).rev().skip(1) {
        x[i] = (b[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

/// Number of eigenvalues of the symmetric tridiagonal (diag, off) strictly
/// below `x`, by the Sturm sequence of the shifted LDL^T recurrence.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenpairs of the symmetric tridiagonal matrix (diag, off),
/// eigenvalues ascending, eigenvectors unit 2-norm.
///
/// Bisection on Sturm counts pins each eigenvalue, then shifted inverse
/// iteration recovers the eigenvector. Sturm-Liouville discretizations have
/// simple eigenvalues, but near-degenerate pairs are re-orthogonalized anyway.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = diag.len();
    assert!(k <= n && n >= 2);
    assert_eq!(off.len(), n - 1);

    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i < n - 1 {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1e-300);

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for idx in 0..k {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) > idx {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 1e-15 * scale {
                break;
            }
        }
        let lambda = 0.5 * (a + b);
        let vec = inverse_iteration(diag, off, lambda, scale, idx, &pairs)?;
        pairs.push((lambda, vec));
    }
    Ok(pairs)
}

fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    scale: f64,
    mode: usize,
    previous: &[(f64, Vec<f64>)],
) -> Result<Vec<f64>> {
    let n = diag.len();
    // shift slightly off the eigenvalue so the solve is merely ill-conditioned
    let shifted = Tridiagonal {
        diag: diag.iter().map(|d| d - lambda - 1e-12 * scale).collect(),
        lower: off.to_vec(),
        upper: off.to_vec(),
    };
    // deterministic, mode-dependent start vector
    let mut v: Vec<f64> = (0..n)
        .map(|i| 0.3 + (i as f64 * 0.7371 + mode as f64 * 1.133).sin())
        .collect();
    normalize(&mut v);

    let mut residual = f64::INFINITY;
    for _ in 0..10 {
        let mut w = pivoted_solve(&shifted, &v)?;
        for (plam, pvec) in previous {
            if (plam - lambda).abs() < 1e-8 * scale {
                let proj: f64 = w.iter().zip(pvec).map(|(a, b)| a * b).sum();
                for (wi, pi) in w.iter_mut().zip(pvec) {
                    *wi -= proj * pi;
                }
            }
        }
        normalize(&mut w);
        v = w;
        residual = residual_norm(diag, off, lambda, &v);
        if residual <= 1e-11 * scale.max(1.0) {
            return Ok(v);
        }
    }
    Err(Error::EigensolveFailure {
        mode,
        residual,
        iterations: 10,
    })
}

fn residual_norm(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * v[i];
        if i > 0 {
            r += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            r += off[i] * v[i + 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

fn normalize(v: &mut [f64]) {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> (Vec<f64>, Vec<f64>) {
        // free 1D graph Laplacian: eigenvalues 2 - 2cos(k pi / n)
        let mut diag = vec![2.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        (diag, vec![-1.0; n - 1])
    }

    #[test]
    fn eigenpairs_of_graph_laplacian() {
        let n = 64;
        let (diag, off) = laplacian(n);
        let pairs = lowest_eigenpairs(&diag, &off, 5).unwrap();
        for (k, (lam, _)) in pairs.iter().enumerate() {
            let expect = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
            assert!(
                (lam - expect).abs() < 1e-10,
                "mode {k}: {lam} vs {expect}"
            );
        }
        // eigenvectors orthonormal
        for i in 0..pairs.len() {
            for j in 0..=i {
                let dot: f64 = pairs[i].1.iter().zip(&pairs[j].1).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot.abs() - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn thomas_and_pivoted_agree() {
        let t = Tridiagonal {
            diag: vec![4.0, 5.0, 6.0, 5.0, 4.0],
            lower: vec![1.0, -1.5, 2.0, 0.5],
            upper: vec![-1.0, 1.0, 0.7, 1.2],
        };
        let rhs = vec![1.0, -2.0, 3.0, 0.5, 2.2];
        let a = thomas_solve(&t, &rhs).unwrap();
        let b = pivoted_solve(&t, &rhs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let back = t.matvec(&a);
        for (x, y) in back.iter().zip(&rhs) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn pivoted_handles_zero_leading_pivot() {
        let t = Tridiagonal {
            diag: vec![0.0, 1.0, 2.0],
            lower: vec![1.0, 1.0],
            upper: vec![2.0, -1.0],
        };
        let rhs = vec![2.0, 1.5, 3.0];
        let x = pivoted_solve(&t, &rhs).unwrap();
        let back = t.matvec(&x);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
