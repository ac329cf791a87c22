//! Uniform grid on the interval and composite trapezoid quadrature.
//!
//! Every module discretizes on the same vertex-centered grid: `n` cells,
//! `n + 1` points, with half-width boundary cells. The trapezoid weights
//! (h/2, h, ..., h, h/2) are also the finite-volume cell widths, which keeps
//! quadrature and the discrete operator mutually consistent.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_a: f64,
    pub x_b: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_a: f64, x_b: f64, n: usize) -> Self {
        assert!(x_b > x_a && n >= 2, "degenerate grid");
        Grid { x_a, x_b, n }
    }

    pub fn len(&self) -> f64 {
        self.x_b - self.x_a
    }

    pub fn h(&self) -> f64 {
        self.len() / self.n as f64
    }

    pub fn n_points(&self) -> usize {
        self.n + 1
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_a + self.len() * (i as f64 / self.n as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weight of point `i` (equals the finite-volume cell width).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    /// Composite trapezoid rule for samples on this grid.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points());
        let h = self.h();
        let interior: f64 = values[1..self.n].iter().sum();
        h * (0.5 * (values[0] + values[self.n]) + interior)
    }

    /// Trapezoid of the pointwise product of two sampled functions.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points());
        debug_assert_eq!(g.len(), self.n_points());
        let h = self.h();
        let mut acc = 0.5 * (f[0] * g[0] + f[self.n] * g[self.n]);
        for i in 1..self.n {
            acc += f[i] * g[i];
        }
        h * acc
    }

    /// L2(D) norm by trapezoid quadrature.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).max(0.0).sqrt()
    }

    pub fn sample(&self, func: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.n).map(|i| func(self.point(i))).collect()
    }
}
