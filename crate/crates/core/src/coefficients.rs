//! Declarative reaction / diffusion-coefficient / boundary-intensity fields
//! with hypothesis validation.
//!
//! The family set is closed so that Lipschitz and time-Hölder constants are
//! computable from the parameters, which is what the validator needs. Every
//! admissible field is affine in `u` (a product of two u-dependent factors is
//! rejected as non-Lipschitz), a fact the solvers exploit through
//! [`ScalarField::affine_parts`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    /// c0
    Constant { value: f64 },
    /// c0 + c1 u
    AffineU { intercept: f64, slope: f64 },
    /// rate * (target - u)
    Relaxation { rate: f64, target: f64 },
    /// offset + amplitude * sin(frequency * x)
    SpaceSine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// (1 + kappa * sin(omega * t)) * inner
    TimeSine {
        kappa: f64,
        omega: f64,
        inner: Box<ScalarField>,
    },
    Product {
        left: Box<ScalarField>,
        right: Box<ScalarField>,
    },
    Sum {
        left: Box<ScalarField>,
        right: Box<ScalarField>,
    },
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn eval(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::AffineU { intercept, slope } => intercept + slope * u,
            ScalarField::Relaxation { rate, target } => rate * (target - u),
            ScalarField::SpaceSine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (frequency * x).sin(),
            ScalarField::TimeSine {
                kappa,
                omega,
                inner,
            } => (1.0 + kappa * (omega * t).sin()) * inner.eval(t, x, u),
            ScalarField::Product { left, right } => {
                left.eval(t, x, u) * right.eval(t, x, u)
            }
            ScalarField::Sum { left, right } => {
                left.eval(t, x, u) + right.eval(t, x, u)
            }
        }
    }

    /// Partial derivative in the third (state) variable.
    pub fn eval_du(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            ScalarField::Constant { .. } | ScalarField::SpaceSine { .. } => 0.0,
            ScalarField::AffineU { slope, .. } => *slope,
            ScalarField::Relaxation { rate, .. } => -rate,
            ScalarField::TimeSine {
                kappa,
                omega,
                inner,
            } => (1.0 + kappa * (omega * t).sin()) * inner.eval_du(t, x, u),
            ScalarField::Product { left, right } => {
                left.eval_du(t, x, u) * right.eval(t, x, u)
                    + left.eval(t, x, u) * right.eval_du(t, x, u)
            }
            ScalarField::Sum { left, right } => {
                left.eval_du(t, x, u) + right.eval_du(t, x, u)
            }
        }
    }

    pub fn depends_on_u(&self) -> bool {
        match self {
            ScalarField::Constant { .. } | ScalarField::SpaceSine { .. } => false,
            ScalarField::AffineU { slope, .. } => *slope != 0.0,
            ScalarField::Relaxation { rate, .. } => *rate != 0.0,
            ScalarField::TimeSine { inner, .. } => inner.depends_on_u(),
            ScalarField::Product { left, right } | ScalarField::Sum { left, right } => {
                left.depends_on_u() || right.depends_on_u()
            }
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            ScalarField::SpaceSine { amplitude, .. } => *amplitude != 0.0,
            ScalarField::TimeSine { inner, .. } => inner.depends_on_x(),
            ScalarField::Product { left, right } | ScalarField::Sum { left, right } => {
                left.depends_on_x() || right.depends_on_x()
            }
            _ => false,
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            ScalarField::TimeSine { kappa, .. } => *kappa != 0.0,
            ScalarField::Product { left, right } | ScalarField::Sum { left, right } => {
                left.depends_on_t() || right.depends_on_t()
            }
            _ => false,
        }
    }

    /// Decompose `field(t, x, u) = c0 + c1 u` at fixed `(t, x)`; exact for
    /// every admissible (validated) field.
    pub fn affine_parts(&self, t: f64, x: f64) -> (f64, f64) {
        let c0 = self.eval(t, x, 0.0);
        (c0, self.eval(t, x, 1.0) - c0)
    }

    /// Uniform bound over `t in [0, T]`, `x in D`, valid for u-free fields.
    fn sup_bound(&self) -> Option<f64> {
        if self.depends_on_u() {
            return None;
        }
        Some(match self {
            ScalarField::Constant { value } => value.abs(),
            ScalarField::AffineU { intercept, .. } => intercept.abs(),
            ScalarField::Relaxation { rate, target } => (rate * target).abs(),
            ScalarField::SpaceSine {
                offset, amplitude, ..
            } => offset.abs() + amplitude.abs(),
            ScalarField::TimeSine { kappa, inner, .. } => {
                (1.0 + kappa.abs()) * inner.sup_bound()?
            }
            ScalarField::Product { left, right } => {
                left.sup_bound()? * right.sup_bound()?
            }
            ScalarField::Sum { left, right } => left.sup_bound()? + right.sup_bound()?,
        })
    }

    /// Lipschitz constant in `u`, uniform over `t, x`; `None` when the field
    /// is not uniformly Lipschitz (two u-dependent factors multiplied).
    pub fn lipschitz_u(&self) -> Option<f64> {
        Some(match self {
            ScalarField::Constant { .. } | ScalarField::SpaceSine { .. } => 0.0,
            ScalarField::AffineU { slope, .. } => slope.abs(),
            ScalarField::Relaxation { rate, .. } => rate.abs(),
            ScalarField::TimeSine { kappa, inner, .. } => {
                (1.0 + kappa.abs()) * inner.lipschitz_u()?
            }
            ScalarField::Product { left, right } => {
                match (left.depends_on_u(), right.depends_on_u()) {
                    (true, true) => return None,
                    (true, false) => right.sup_bound()? * left.lipschitz_u()?,
                    (false, true) => left.sup_bound()? * right.lipschitz_u()?,
                    (false, false) => 0.0,
                }
            }
            ScalarField::Sum { left, right } => left.lipschitz_u()? + right.lipschitz_u()?,
        })
    }

    /// Bound on |d/dt field|, uniform over `x` (and `u = 0` slice for u-free
    /// fields); smooth families are Hölder in time with exponent 1.
    fn time_seminorm(&self) -> Option<f64> {
        Some(match self {
            ScalarField::Constant { .. }
            | ScalarField::AffineU { .. }
            | ScalarField::Relaxation { .. }
            | ScalarField::SpaceSine { .. } => 0.0,
            ScalarField::TimeSine {
                kappa,
                omega,
                inner,
            } => {
                (kappa * omega).abs() * inner.sup_bound()?
                    + (1.0 + kappa.abs()) * inner.time_seminorm()?
            }
            ScalarField::Product { left, right } => {
                left.sup_bound()? * right.time_seminorm()?
                    + left.time_seminorm()? * right.sup_bound()?
            }
            ScalarField::Sum { left, right } => {
                left.time_seminorm()? + right.time_seminorm()?
            }
        })
    }
}

/// The model's reaction f, diffusion coefficient g and boundary intensity
/// sigma (evaluated at the endpoints only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub f: ScalarField,
    pub g: ScalarField,
    pub sigma: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Simulate,
    Fluctuate,
}

/// Constants reported by a successful validation; the Gronwall-style sanity
/// bounds and experiment reports consume them.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub purpose: Purpose,
    pub lipschitz_f: f64,
    pub lipschitz_g: f64,
    pub sup_sigma: f64,
    /// Lipschitz constant of df/du in u (0 for the affine family).
    pub df_lipschitz: Option<f64>,
    /// Time-Hölder exponent of g and sigma (1 for the smooth families).
    pub holder_alpha: f64,
    pub g_time_seminorm: f64,
    pub sigma_time_seminorm: f64,
}

/// Check Hypotheses H2 (simulate) and additionally H4 (fluctuate), returning
/// the constants, or a structured rejection naming the failed hypothesis.
pub fn validate(model: &ModelSpec, purpose: Purpose) -> Result<ValidationReport> {
    let lipschitz_f = model.f.lipschitz_u().ok_or(Error::HypothesisViolation {
        hypothesis: "H2(1)",
        detail: "f is not uniformly Lipschitz in u (product of two u-dependent factors)"
            .into(),
    })?;
    let lipschitz_g = model.g.lipschitz_u().ok_or(Error::HypothesisViolation {
        hypothesis: "H2(1)",
        detail: "g is not uniformly Lipschitz in u (product of two u-dependent factors)"
            .into(),
    })?;
    if model.sigma.depends_on_u() {
        return Err(Error::HypothesisViolation {
            hypothesis: "H2(2)",
            detail: "sigma must be a function of (t, x) only".into(),
        });
    }
    let sup_sigma = model.sigma.sup_bound().ok_or(Error::HypothesisViolation {
        hypothesis: "H2(2)",
        detail: "sigma is not uniformly bounded".into(),
    })?;

    let mut df_lipschitz = None;
    let mut g_time_seminorm = 0.0;
    let mut sigma_time_seminorm = model.sigma.time_seminorm().unwrap_or(0.0);
    if purpose == Purpose::Fluctuate {
        if model.g.depends_on_u() {
            return Err(Error::HypothesisViolation {
                hypothesis: "H4(2)",
                detail: "g must not depend on the state variable (additive noise)".into(),
            });
        }
        // the affine family has u-independent derivative, so df/du is
        // Lipschitz in u with constant 0
        df_lipschitz = Some(0.0);
        g_time_seminorm = model.g.time_seminorm().ok_or(Error::HypothesisViolation {
            hypothesis: "H4(3)",
            detail: "g time regularity not computable".into(),
        })?;
        sigma_time_seminorm =
            model.sigma.time_seminorm().ok_or(Error::HypothesisViolation {
                hypothesis: "H4(3)",
                detail: "sigma time regularity not computable".into(),
            })?;
    }

    Ok(ValidationReport {
        purpose,
        lipschitz_f,
        lipschitz_g,
        sup_sigma,
        df_lipschitz,
        holder_alpha: 1.0,
        g_time_seminorm,
        sigma_time_seminorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relaxation_closed_form() {
        let f = ScalarField::Relaxation {
            rate: 2.0,
            target: 1.0,
        };
        assert_eq!(f.eval(0.3, 0.7, 0.5), 1.0);
        assert_eq!(f.eval_du(0.3, 0.7, 0.5), -2.0);
    }

    #[test]
    fn constant_field() {
        let f = ScalarField::constant(3.0);
        assert_eq!(f.eval(1.0, 2.0, -5.0), 3.0);
        assert_eq!(f.eval_du(1.0, 2.0, -5.0), 0.0);
    }

    #[test]
    fn affine_and_finite_difference_derivative() {
        let f = ScalarField::AffineU {
            intercept: 1.0,
            slope: 2.0,
        };
        assert_eq!(f.eval(0.0, 0.0, 2.0), 5.0);
        let eps = 1e-6;
        let fd = (f.eval(0.0, 0.0, 2.0 + eps) - f.eval(0.0, 0.0, 2.0 - eps)) / (2.0 * eps);
        assert!((fd - f.eval_du(0.0, 0.0, 2.0)).abs() < 1e-8);

        // also through a time modulation wrapper
        let g = ScalarField::TimeSine {
            kappa: 0.5,
            omega: 3.0,
            inner: Box::new(f),
        };
        let t = 0.27;
        let fd = (g.eval(t, 0.0, 2.0 + eps) - g.eval(t, 0.0, 2.0 - eps)) / (2.0 * eps);
        assert!((fd - g.eval_du(t, 0.0, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn affine_parts_reproduce_eval() {
        let f = ScalarField::Product {
            left: Box::new(ScalarField::SpaceSine {
                offset: 1.0,
                amplitude: 0.5,
                frequency: 2.0,
            }),
            right: Box::new(ScalarField::Relaxation {
                rate: 3.0,
                target: 0.2,
            }),
        };
        let (t, x) = (0.4, 1.1);
        let (c0, c1) = f.affine_parts(t, x);
        for u in [-2.0, 0.0, 0.7, 5.0] {
            assert!((c0 + c1 * u - f.eval(t, x, u)).abs() < 1e-12);
        }
    }

    #[test]
    fn fluctuate_rejects_state_dependent_g() {
        let model = ModelSpec {
            f: ScalarField::constant(0.0),
            g: ScalarField::AffineU {
                intercept: 1.0,
                slope: 0.3,
            },
            sigma: ScalarField::constant(1.0),
        };
        match validate(&model, Purpose::Fluctuate) {
            Err(Error::HypothesisViolation { hypothesis, .. }) => {
                assert_eq!(hypothesis, "H4(2)")
            }
            other => panic!("expected H4(2) rejection, got {other:?}"),
        }
        // the same model simulates fine
        assert!(validate(&model, Purpose::Simulate).is_ok());
    }

    #[test]
    fn all_constants_accepted_for_both_purposes() {
        let model = ModelSpec {
            f: ScalarField::constant(1.0),
            g: ScalarField::constant(0.5),
            sigma: ScalarField::constant(2.0),
        };
        assert!(validate(&model, Purpose::Simulate).is_ok());
        let rep = validate(&model, Purpose::Fluctuate).unwrap();
        assert_eq!(rep.sup_sigma, 2.0);
        assert_eq!(rep.lipschitz_f, 0.0);
    }

    #[test]
    fn relaxation_accepted_for_fluctuation_with_zero_df_lipschitz() {
        let model = ModelSpec {
            f: ScalarField::Relaxation {
                rate: 2.0,
                target: 1.0,
            },
            g: ScalarField::constant(0.5),
            sigma: ScalarField::constant(0.5),
        };
        let rep = validate(&model, Purpose::Fluctuate).unwrap();
        assert_eq!(rep.df_lipschitz, Some(0.0));
        assert_eq!(rep.lipschitz_f, 2.0);
    }

    #[test]
    fn product_of_two_state_factors_is_rejected() {
        let model = ModelSpec {
            f: ScalarField::Product {
                left: Box::new(ScalarField::AffineU {
                    intercept: 0.0,
                    slope: 1.0,
                }),
                right: Box::new(ScalarField::AffineU {
                    intercept: 0.0,
                    slope: 1.0,
                }),
            },
            g: ScalarField::constant(0.0),
            sigma: ScalarField::constant(0.0),
        };
        match validate(&model, Purpose::Simulate) {
            Err(Error::HypothesisViolation { hypothesis, .. }) => {
                assert_eq!(hypothesis, "H2(1)")
            }
            other => panic!("expected H2(1) rejection, got {other:?}"),
        }
    }

    #[test]
    fn reported_lipschitz_bounds_difference_quotients() {
        use rand::{Rng, SeedableRng};
        let field = ScalarField::TimeSine {
            kappa: 0.4,
            omega: 2.0,
            inner: Box::new(ScalarField::Product {
                left: Box::new(ScalarField::SpaceSine {
                    offset: 1.0,
                    amplitude: 0.5,
                    frequency: 1.0,
                }),
                right: Box::new(ScalarField::Relaxation {
                    rate: 2.0,
                    target: 1.0,
                }),
            }),
        };
        let lip = field.lipschitz_u().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let t: f64 = rng.random_range(0.0..2.0);
            let x: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let u1: f64 = rng.random_range(-5.0..5.0);
            let u2: f64 = rng.random_range(-5.0..5.0);
            let num = (field.eval(t, x, u1) - field.eval(t, x, u2)).abs();
            assert!(num <= lip * (u1 - u2).abs() + 1e-12);
        }
    }
}
