//! Experiment configuration schema.
//!
//! One JSON document references the model file and carries the controller,
//! simulation, solver and constraint parameters. Unknown keys are rejected
//! everywhere.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;

use qmpc::error::{Error, Result};
use qmpc::model::{ContinuousDynamics, ModelFile};
use qmpc::pmpc::{MpcConfig, SolverBackend};
use qmpc::polyalg::{MonomialBasis, PolyVec};
use qmpc::qubo::{ConstraintSense, ConstraintSpec};
use qmpc::sim::{Reference, SimConfig};
use qmpc::solve::SaSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Classical,
    Exhaustive,
    Sa,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model file path, relative to the configuration file.
    pub model: PathBuf,
    pub mpc: MpcSection,
    pub sim: SimSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub constraints: Vec<ConstraintSection>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    pub horizon: usize,
    pub state_weight: Vec<f64>,
    pub terminal_weight: Vec<f64>,
    pub input_weight: Vec<f64>,
    pub blocks: Vec<usize>,
    pub alpha: u32,
    pub c_lo: Vec<f64>,
    pub c_hi: Vec<f64>,
    pub n_bits: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_s: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub reference: ReferenceSection,
    #[serde(default = "default_substeps")]
    pub rk4_substeps: usize,
}

fn default_substeps() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferenceSection {
    Constant { value: Vec<f64> },
    Step { before: Vec<f64>, after: Vec<f64>, at_step: usize },
    Series { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub backend: BackendKind,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let sched = SaSchedule::default();
        Self {
            backend: BackendKind::Classical,
            sweeps: sched.sweeps,
            beta_start: sched.beta_start,
            beta_end: sched.beta_end,
            restarts: sched.restarts,
            seed: sched.seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub sense: ConstraintSense,
    /// Terms of the constraint polynomial over the command vector.
    pub terms: Vec<ConstraintTerm>,
    #[serde(default)]
    pub slack_bits: u32,
    #[serde(default)]
    pub slack_scale: Option<f64>,
    /// Gadget-consistency penalty weight; derived from the base problem
    /// when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintTerm {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub n_bits: Option<u32>,
    pub restarts: Option<usize>,
    pub sweeps: Option<usize>,
}

/// A loaded experiment: parsed configuration plus the resolved plant.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plant: ContinuousDynamics,
    pub base_dir: PathBuf,
}

impl Experiment {
    pub fn load(config_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(config_path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("experiment config: {e}")))?;
        let base_dir = config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        let model_path = base_dir.join(&config.model);
        let model_file = ModelFile::from_path(&model_path)?;
        if (model_file.t_d - config.sim.t_s).abs() > 1e-12 * (1.0 + config.sim.t_s.abs()) {
            return Err(Error::Config(format!(
                "model discretization time {} differs from sampling time {}; \
                 regenerate the model file instead of resampling",
                model_file.t_d, config.sim.t_s
            )));
        }
        let plant = model_file.to_dynamics()?;
        Ok(Self {
            config,
            plant,
            base_dir,
        })
    }

    pub fn mpc(&self, ov: &Overrides) -> MpcConfig {
        let m = &self.config.mpc;
        MpcConfig {
            horizon: m.horizon,
            state_weight: DVector::from_row_slice(&m.state_weight),
            terminal_weight: DVector::from_row_slice(&m.terminal_weight),
            input_weight: DVector::from_row_slice(&m.input_weight),
            blocks: m.blocks.clone(),
            alpha: m.alpha,
            c_lo: DVector::from_row_slice(&m.c_lo),
            c_hi: DVector::from_row_slice(&m.c_hi),
            n_bits: ov.n_bits.unwrap_or(m.n_bits),
        }
    }

    pub fn schedule(&self, ov: &Overrides) -> SaSchedule {
        let s = &self.config.solver;
        SaSchedule {
            sweeps: ov.sweeps.unwrap_or(s.sweeps),
            beta_start: s.beta_start,
            beta_end: s.beta_end,
            restarts: ov.restarts.unwrap_or(s.restarts),
            seed: ov.seed.unwrap_or(s.seed),
        }
    }

    pub fn backend(&self, ov: &Overrides) -> SolverBackend {
        match ov.backend.unwrap_or(self.config.solver.backend) {
            BackendKind::Classical => SolverBackend::Classical,
            BackendKind::Exhaustive => SolverBackend::ExhaustiveQubo,
            BackendKind::Sa => SolverBackend::SaQubo(self.schedule(ov)),
        }
    }

    pub fn reference(&self) -> Result<Reference> {
        match &self.config.sim.reference {
            ReferenceSection::Constant { value } => {
                Ok(Reference::constant(DVector::from_row_slice(value)))
            }
            ReferenceSection::Step {
                before,
                after,
                at_step,
            } => Ok(Reference::step_change(
                DVector::from_row_slice(before),
                DVector::from_row_slice(after),
                *at_step,
            )),
            ReferenceSection::Series { values } => Reference::series(
                values.iter().map(|v| DVector::from_row_slice(v)).collect(),
            ),
        }
    }

    pub fn sim(&self, ov: &Overrides) -> Result<SimConfig> {
        Ok(SimConfig {
            plant: self.plant.clone(),
            mpc: self.mpc(ov),
            t_s: self.config.sim.t_s,
            steps: self.config.sim.steps,
            x0: DVector::from_row_slice(&self.config.sim.x0),
            reference: self.reference()?,
            backend: self.backend(ov),
            seed: ov.seed.unwrap_or(self.config.solver.seed),
            rk4_substeps: self.config.sim.rk4_substeps,
        })
    }

    /// Constraint polynomials over the command vector.
    pub fn constraint_specs(&self) -> Result<Vec<(ConstraintSpec, Option<f64>)>> {
        let n_c = self.config.mpc.c_lo.len();
        let mut specs = Vec::new();
        for section in &self.config.constraints {
            let degree = section
                .terms
                .iter()
                .map(|t| t.exponents.iter().sum::<u32>())
                .max()
                .unwrap_or(0)
                .max(1);
            let basis = MonomialBasis::build(n_c, degree);
            let terms: Vec<(usize, Vec<u32>, f64)> = section
                .terms
                .iter()
                .map(|t| (0usize, t.exponents.clone(), t.coeff))
                .collect();
            let poly = PolyVec::from_terms(1, basis, &terms)?;
            specs.push((
                ConstraintSpec {
                    poly,
                    sense: section.sense,
                    slack_bits: section.slack_bits,
                    slack_scale: section.slack_scale,
                },
                section.lambda,
            ));
        }
        Ok(specs)
    }
}
