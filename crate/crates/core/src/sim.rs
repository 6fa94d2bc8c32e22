//! Closed-loop receding-horizon simulation against the integrated plant.
//!
//! Timing follows the measure/compute/apply split: the command computed from
//! the measurement at step `i` is applied during the next sampling interval,
//! so the command logged at step `i + 1` is the one decided at step `i`. The
//! plant advances with Runge-Kutta steps under a zero-order hold.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{euler_discretize, plant_step_rk4, ContinuousDynamics};
use crate::pmpc::{rhs_controller_step, MpcConfig, SolverBackend};
use crate::solve::derive_seed;

/// Time-indexed reference signal; reads past the end hold the last value.
#[derive(Debug, Clone)]
pub struct Reference {
    samples: Vec<DVector<f64>>,
}

impl Reference {
    pub fn series(samples: Vec<DVector<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("reference needs at least one sample".into()));
        }
        Ok(Self { samples })
    }

    pub fn constant(value: DVector<f64>) -> Self {
        Self {
            samples: vec![value],
        }
    }

    /// Constant `before` until `at_step`, then constant `after`.
    pub fn step_change(before: DVector<f64>, after: DVector<f64>, at_step: usize) -> Self {
        let mut samples = vec![before; at_step];
        samples.push(after);
        Self { samples }
    }

    pub fn at(&self, step: usize) -> &DVector<f64> {
        &self.samples[step.min(self.samples.len() - 1)]
    }

    pub fn n_x(&self) -> usize {
        self.samples[0].len()
    }
}

/// Closed-loop experiment description.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub plant: ContinuousDynamics,
    pub mpc: MpcConfig,
    /// Sampling time; also the model discretization time.
    pub t_s: f64,
    pub steps: usize,
    pub x0: DVector<f64>,
    pub reference: Reference,
    pub backend: SolverBackend,
    pub seed: u64,
    /// Plant integration substeps per sampling interval.
    pub rk4_substeps: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.t_s.is_finite() || self.t_s <= 0.0 {
            return Err(Error::Config("sampling time must be positive".into()));
        }
        if self.steps < 1 {
            return Err(Error::Config("simulation needs at least one step".into()));
        }
        if self.rk4_substeps < 1 {
            return Err(Error::Config("integration needs at least one substep".into()));
        }
        if self.x0.len() != self.plant.n_x() {
            return Err(Error::Config(format!(
                "initial state has length {}, plant has {} states",
                self.x0.len(),
                self.plant.n_x()
            )));
        }
        if self.reference.n_x() != self.plant.n_x() {
            return Err(Error::Config("reference dimension must match the state".into()));
        }
        self.mpc.validate(self.plant.n_x(), self.plant.n_u())
    }
}

/// One logged sampling instant.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub t: f64,
    /// Measured plant state at `t`.
    pub x: DVector<f64>,
    /// Command applied during `[t, t + T_s)` (decided one sample earlier).
    pub u: DVector<f64>,
    pub r: DVector<f64>,
    /// Command vector solved at this step.
    pub c_opt: DVector<f64>,
    /// First command sample decided at this step (applied next interval).
    pub u_next: DVector<f64>,
    /// Objective value of the solve at this step.
    pub j_opt: f64,
    /// Objective value including the reference constant.
    pub cost_full: f64,
    pub saturated: bool,
    pub wall_s: f64,
    pub backend: &'static str,
}

/// Closed-loop log, one entry per sampling instant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub n_x: usize,
    pub n_u: usize,
}

impl Trajectory {
    /// Equality of everything except wall-clock timings.
    pub fn payload_eq(&self, other: &Trajectory) -> bool {
        self.n_x == other.n_x
            && self.n_u == other.n_u
            && self.steps.len() == other.steps.len()
            && self.steps.iter().zip(&other.steps).all(|(a, b)| {
                a.t == b.t
                    && a.x == b.x
                    && a.u == b.u
                    && a.r == b.r
                    && a.c_opt == b.c_opt
                    && a.u_next == b.u_next
                    && a.j_opt == b.j_opt
                    && a.cost_full == b.cost_full
                    && a.saturated == b.saturated
                    && a.backend == b.backend
            })
    }

    /// CSV with 17-significant-digit floats:
    /// `t,x_1..x_nx,u_1..u_nu,r_1..r_nx,J,wall_ms,backend`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.n_x {
            header.push_str(&format!(",x_{i}"));
        }
        for i in 1..=self.n_u {
            header.push_str(&format!(",u_{i}"));
        }
        for i in 1..=self.n_x {
            header.push_str(&format!(",r_{i}"));
        }
        header.push_str(",J,wall_ms,backend");
        writeln!(out, "{header}")?;
        for s in &self.steps {
            let mut line = format!("{:.16e}", s.t);
            for v in s.x.iter().chain(s.u.iter()).chain(s.r.iter()) {
                line.push_str(&format!(",{v:.16e}"));
            }
            line.push_str(&format!(",{:.16e}", s.j_opt));
            line.push_str(&format!(",{:.3}", s.wall_s * 1e3));
            line.push_str(&format!(",{}", s.backend));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("csv into memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Run the receding-horizon loop.
///
/// The very first interval applies a zero command while the first solve is
/// in flight; afterwards each interval applies the command decided from the
/// previous measurement. Solver failures abort with the partial trajectory
/// attached.
pub fn run_closed_loop(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n_x = cfg.plant.n_x();
    let n_u = cfg.plant.n_u();
    let model = euler_discretize(&cfg.plant, cfg.t_s)?;
    let horizon = cfg.mpc.horizon;

    let mut trajectory = Trajectory {
        steps: Vec::with_capacity(cfg.steps),
        n_x,
        n_u,
    };
    let mut x = cfg.x0.clone();
    let mut u_applied = DVector::zeros(n_u);

    for i in 0..cfg.steps {
        let r_window: Vec<DVector<f64>> = (0..=horizon)
            .map(|k| cfg.reference.at(i + 1 + k).clone())
            .collect();
        let backend = match &cfg.backend {
            SolverBackend::SaQubo(sched) => {
                let mut stepped = sched.clone();
                stepped.seed = derive_seed(cfg.seed ^ sched.seed, i as u64);
                SolverBackend::SaQubo(stepped)
            }
            other => other.clone(),
        };
        let solved = rhs_controller_step(&cfg.mpc, &model, &x, &u_applied, &r_window, &backend)
            .map_err(|e| Error::Simulation {
                step: i,
                source: Box::new(e),
                partial: Box::new(trajectory.clone()),
            })?;

        log::debug!(
            "step {i}: x = {:?}, next command = {:?} (J = {})",
            x.as_slice(),
            solved.command.as_slice(),
            solved.j_opt
        );
        trajectory.steps.push(TrajectoryStep {
            t: i as f64 * cfg.t_s,
            x: x.clone(),
            u: u_applied.clone(),
            r: cfg.reference.at(i).clone(),
            c_opt: solved.c_opt.clone(),
            u_next: solved.command.clone(),
            j_opt: solved.j_opt,
            cost_full: solved.cost_full,
            saturated: solved.saturated,
            wall_s: solved.wall_s,
            backend: solved.backend,
        });

        // Advance the plant one sampling interval under zero-order hold.
        let h = cfg.t_s / cfg.rk4_substeps as f64;
        for _ in 0..cfg.rk4_substeps {
            x = plant_step_rk4(&cfg.plant, &x, &u_applied, h).map_err(|e| Error::Simulation {
                step: i,
                source: Box::new(e),
                partial: Box::new(trajectory.clone()),
            })?;
        }
        u_applied = solved.command;
    }
    Ok(trajectory)
}

/// Aggregate trajectory statistics.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub steps: usize,
    /// Root mean square of the tracking error norm over all steps.
    pub rms_tracking_error: f64,
    /// Accumulated running cost: input weight on applied commands plus state
    /// weight on measured tracking errors, summed over all steps.
    pub total_cost: f64,
    pub mean_wall_ms: f64,
    pub max_wall_ms: f64,
    /// Fraction of steps whose solved command sits on a bound.
    pub saturation_fraction: f64,
    pub backend: String,
}

impl Metrics {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

pub fn compute_metrics(trajectory: &Trajectory, mpc: &MpcConfig) -> Metrics {
    let n = trajectory.steps.len();
    let mut sq_err = 0.0;
    let mut total_cost = 0.0;
    let mut wall_sum = 0.0;
    let mut wall_max = 0.0f64;
    let mut saturated = 0usize;
    for s in &trajectory.steps {
        let e = &s.r - &s.x;
        sq_err += e.norm_squared();
        for i in 0..trajectory.n_x {
            total_cost += mpc.state_weight[i] * e[i] * e[i];
        }
        for i in 0..trajectory.n_u {
            total_cost += mpc.input_weight[i] * s.u[i] * s.u[i];
        }
        wall_sum += s.wall_s * 1e3;
        wall_max = wall_max.max(s.wall_s * 1e3);
        if s.saturated {
            saturated += 1;
        }
    }
    Metrics {
        steps: n,
        rms_tracking_error: if n > 0 { (sq_err / n as f64).sqrt() } else { 0.0 },
        total_cost,
        mean_wall_ms: if n > 0 { wall_sum / n as f64 } else { 0.0 },
        max_wall_ms: wall_max,
        saturation_fraction: if n > 0 { saturated as f64 / n as f64 } else { 0.0 },
        backend: trajectory
            .steps
            .first()
            .map(|s| s.backend.to_string())
            .unwrap_or_default(),
    }
}
