//! JSON experiment configuration: one document drives every subcommand.
//! Unknown keys are rejected everywhere; silent typos corrupt experiments.

use serde::{Deserialize, Serialize};

use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, QSpec};
use crate::operator::{
    eigensolve, invariant_density, EllipticOperator1D, InvariantMeasure, SpatialField,
    SpectralBasis,
};
use crate::spde::InitialCondition;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: OperatorConfig,
    pub coefficients: ModelSpec,
    pub noise: NoiseConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub experiment: ExperimentBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub x_a: f64,
    pub x_b: f64,
    pub a: SpatialField,
    #[serde(default)]
    pub b: Option<SpatialField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub q: QSpec,
    pub theta: [f64; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub k_modes: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Start of the sup-norm window for converge runs; defaults to 0 for a
    /// constant initial condition and t_end/10 otherwise.
    #[serde(default)]
    pub delta_cut: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Constant(f64),
    Grid(Vec<f64>),
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Constant(0.0)
    }
}

impl InitialConfig {
    pub fn is_constant(&self) -> bool {
        matches!(self, InitialConfig::Constant(_))
    }

    pub fn to_initial_condition(&self) -> InitialCondition {
        match self {
            InitialConfig::Constant(c) => InitialCondition::Constant(*c),
            InitialConfig::Grid(v) => InitialCondition::Grid(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Eigen,
    Simulate,
    Converge,
    Bound,
    Fluctuate,
    Validate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: ExperimentKind,
    /// Single-run stiffness (simulate).
    #[serde(default)]
    pub eps: Option<f64>,
    /// Ladder for converge / bound / fluctuate.
    #[serde(default)]
    pub eps_ladder: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Low modes compared against the analytic covariance (fluctuate).
    #[serde(default = "default_modes_compared")]
    pub modes_compared: usize,
    /// Draw directly from N(0, C) instead of simulating (fluctuate).
    #[serde(default)]
    pub self_test: bool,
}

fn default_replicas() -> usize {
    1
}

fn default_modes_compared() -> usize {
    4
}

/// Config resolved into live objects shared by the runners.
pub struct Setup {
    pub operator: EllipticOperator1D,
    pub basis: SpectralBasis,
    pub measure: InvariantMeasure,
    pub noise_spec: NoiseSpec,
    pub dt: f64,
    pub n_steps: usize,
    pub delta_cut: f64,
    pub initial: InitialCondition,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve and cross-check the blocks. The spectral machinery requires a
    /// divergence-form operator; a drift block is accepted only by the
    /// validate kind (which reports on it) and rejected here otherwise.
    pub fn setup(&self) -> Result<Setup> {
        let d = &self.discretization;
        if d.dt <= 0.0 || d.t_end <= 0.0 {
            return Err(Error::Config("dt and t_end must be positive".into()));
        }
        let operator = EllipticOperator1D::new(
            self.operator.x_a,
            self.operator.x_b,
            self.operator.a.clone(),
            self.operator.b.clone().unwrap_or_else(SpatialField::zero),
        )?;
        let basis = eigensolve(&operator, d.k_modes, d.grid_n)?;
        let measure = invariant_density(&operator, d.grid_n)?;
        let noise_spec = NoiseSpec {
            q_eigs: self.noise.q.clone(),
            theta: (self.noise.theta[0], self.noise.theta[1]),
            k_modes: d.k_modes,
            seed: self.noise.seed,
        };
        noise_spec.validate()?;
        if let InitialConfig::Grid(values) = &self.initial {
            if values.len() != d.grid_n + 1 {
                return Err(Error::Config(format!(
                    "initial grid has {} samples, expected grid_n + 1 = {}",
                    values.len(),
                    d.grid_n + 1
                )));
            }
        }
        let n_steps = (d.t_end / d.dt).round() as usize;
        if n_steps == 0 {
            return Err(Error::Config("t_end / dt rounds to zero steps".into()));
        }
        let delta_cut = match d.delta_cut {
            Some(dc) => {
                if self.experiment.kind == ExperimentKind::Converge
                    && !(dc >= 0.0 && dc < d.t_end)
                {
                    return Err(Error::Config(format!(
                        "delta_cut = {dc} must lie in [0, t_end)"
                    )));
                }
                dc
            }
            None => {
                if self.initial.is_constant() {
                    0.0
                } else {
                    d.t_end / 10.0
                }
            }
        };
        let ladder_kinds = [
            ExperimentKind::Converge,
            ExperimentKind::Bound,
            ExperimentKind::Fluctuate,
        ];
        if ladder_kinds.contains(&self.experiment.kind)
            && !self.experiment.self_test
            && self.experiment.eps_ladder.is_empty()
        {
            return Err(Error::Config(
                "this experiment kind needs a non-empty eps_ladder".into(),
            ));
        }
        if self
            .experiment
            .eps_ladder
            .iter()
            .chain(self.experiment.eps.iter())
            .any(|e| *e <= 0.0 || *e > 1.0)
        {
            return Err(Error::Config("eps values must lie in (0, 1]".into()));
        }
        Ok(Setup {
            operator,
            basis,
            measure,
            noise_spec,
            dt: d.dt,
            n_steps,
            delta_cut,
            initial: self.initial.to_initial_condition(),
        })
    }
}
