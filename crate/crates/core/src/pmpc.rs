//! Objective assembly and the per-step controller.
//!
//! The finite-horizon tracking objective is written as a quadratic form in
//! the monomial vector of the reduced command: input cost plus predicted
//! tracking cost collapse into one weight matrix against the monomial basis,
//! leaving a constant reference term out. The controller step builds the
//! prediction operator at the measured state, assembles the objective and
//! minimizes it with the selected backend, returning the first command
//! sample of the optimizer.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::model::DiscreteModel;
use crate::predict::{blocking_matrix, build_omega, PredictionOperator};
use crate::qubo;
use crate::solve::{self, SaSchedule};

/// Controller parameters: horizon, diagonal weights, move blocking, bounds
/// and encoding width for binary backends.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Diagonal of the running state weight (length `n_x`).
    pub state_weight: DVector<f64>,
    /// Diagonal of the terminal state weight (length `n_x`).
    pub terminal_weight: DVector<f64>,
    /// Diagonal of the input weight (length `n_u`).
    pub input_weight: DVector<f64>,
    /// Move-blocking block lengths; they must sum to `horizon`.
    pub blocks: Vec<usize>,
    /// Expansion degree of the prediction polynomial.
    pub alpha: u32,
    /// Component-wise command bounds (length `n_c = blocks.len() * n_u`).
    pub c_lo: DVector<f64>,
    pub c_hi: DVector<f64>,
    /// Bits per command component for binary encodings.
    pub n_bits: u32,
}

impl MpcConfig {
    pub fn n_c(&self, n_u: usize) -> usize {
        self.blocks.len() * n_u
    }

    pub fn validate(&self, n_x: usize, n_u: usize) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.blocks.iter().sum::<usize>() != self.horizon {
            return Err(Error::Config(format!(
                "move-blocking blocks sum to {}, horizon is {}",
                self.blocks.iter().sum::<usize>(),
                self.horizon
            )));
        }
        if self.state_weight.len() != n_x || self.terminal_weight.len() != n_x {
            return Err(Error::Config("state weights must have length n_x".into()));
        }
        if self.input_weight.len() != n_u {
            return Err(Error::Config("input weight must have length n_u".into()));
        }
        if self
            .state_weight
            .iter()
            .chain(self.terminal_weight.iter())
            .chain(self.input_weight.iter())
            .any(|&w| w < 0.0 || !w.is_finite())
        {
            return Err(Error::Config("weights must be non-negative and finite".into()));
        }
        let n_c = self.n_c(n_u);
        if self.c_lo.len() != n_c || self.c_hi.len() != n_c {
            return Err(Error::Config(format!(
                "command bounds must have length {n_c}"
            )));
        }
        for i in 0..n_c {
            if !self.c_lo[i].is_finite() || !self.c_hi[i].is_finite() {
                return Err(Error::Config("command bounds must be finite".into()));
            }
            if self.c_lo[i] >= self.c_hi[i] {
                return Err(Error::Config(format!(
                    "lower bound {} is not below upper bound {} for component {i}",
                    self.c_lo[i], self.c_hi[i]
                )));
            }
        }
        if self.n_bits < 1 {
            return Err(Error::Config("encoding needs at least one bit".into()));
        }
        Ok(())
    }

    pub fn blocking(&self, n_u: usize) -> Result<DMatrix<f64>> {
        blocking_matrix(n_u, &self.blocks)
    }
}

/// Assembled quadratic objective data for one controller step.
#[derive(Debug, Clone)]
pub struct ObjectiveData {
    input_weight: DMatrix<f64>,
    state_weight: DMatrix<f64>,
    monomial_weight: DMatrix<f64>,
    op: PredictionOperator,
    reference: DVector<f64>,
    /// Precomputed row `r' W_x Omega`, the linear part of the objective.
    linear: RowDVector<f64>,
}

impl ObjectiveData {
    pub fn monomial_weight(&self) -> &DMatrix<f64> {
        &self.monomial_weight
    }

    pub fn state_weight(&self) -> &DMatrix<f64> {
        &self.state_weight
    }

    pub fn input_weight(&self) -> &DMatrix<f64> {
        &self.input_weight
    }

    pub fn operator(&self) -> &PredictionOperator {
        &self.op
    }

    pub fn reference(&self) -> &DVector<f64> {
        &self.reference
    }

    pub fn linear_row(&self) -> &RowDVector<f64> {
        &self.linear
    }

    pub fn n_c(&self) -> usize {
        self.op.n_c()
    }

    /// Objective value at a command vector (reference constant dropped).
    pub fn eval(&self, c: &DVector<f64>) -> Result<f64> {
        let mu = self.op.basis().eval(c)?;
        Ok((mu.transpose() * &self.monomial_weight * &mu)[(0, 0)] - 2.0 * (&self.linear * &mu)[0])
    }

    /// Gradient of the objective with respect to the command vector.
    pub fn grad(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let mu = self.op.basis().eval(c)?;
        let jac = self.op.basis().jacobian(c);
        let inner = &self.monomial_weight * &mu - self.linear.transpose();
        Ok(2.0 * jac.transpose() * inner)
    }

    /// The dropped constant `r' W_x r`; adding it to [`eval`](Self::eval)
    /// gives the full tracking-plus-input cost.
    pub fn reference_offset(&self) -> f64 {
        (self.reference.transpose() * &self.state_weight * &self.reference)[(0, 0)]
    }
}

/// Build the objective weights for a prediction operator and a stacked
/// reference sequence of length `horizon * n_x`.
pub fn assemble_objective(
    cfg: &MpcConfig,
    op: &PredictionOperator,
    reference: &DVector<f64>,
) -> Result<ObjectiveData> {
    let n_x = op.n_x();
    let n_u = op.n_u();
    cfg.validate(n_x, n_u)?;
    let horizon = op.horizon();
    if reference.len() != horizon * n_x {
        return Err(Error::Dimension(format!(
            "reference has length {}, expected horizon * n_x = {}",
            reference.len(),
            horizon * n_x
        )));
    }

    let mut input_weight = DMatrix::zeros(horizon * n_u, horizon * n_u);
    for k in 0..horizon {
        for i in 0..n_u {
            input_weight[(k * n_u + i, k * n_u + i)] = cfg.input_weight[i];
        }
    }
    let mut state_weight = DMatrix::zeros(horizon * n_x, horizon * n_x);
    for k in 0..horizon {
        let w = if k + 1 == horizon {
            &cfg.terminal_weight
        } else {
            &cfg.state_weight
        };
        for i in 0..n_x {
            state_weight[(k * n_x + i, k * n_x + i)] = w[i];
        }
    }

    // Command samples as linear functions of the monomial vector.
    let basis = op.basis();
    let n_mu = basis.len();
    let gamma = op.blocking();
    let mut gamma_sel = DMatrix::zeros(gamma.nrows(), n_mu);
    for i in 0..op.n_c() {
        let j = basis.linear_index(i);
        for r in 0..gamma.nrows() {
            gamma_sel[(r, j)] = gamma[(r, i)];
        }
    }

    let mut monomial_weight = gamma_sel.transpose() * &input_weight * &gamma_sel
        + op.matrix().transpose() * &state_weight * op.matrix();
    let sym = (&monomial_weight + monomial_weight.transpose()) * 0.5;
    monomial_weight = sym;

    let linear = (reference.transpose() * &state_weight * op.matrix()).row(0).into_owned();

    Ok(ObjectiveData {
        input_weight,
        state_weight,
        monomial_weight,
        op: op.clone(),
        reference: reference.clone(),
        linear,
    })
}

/// Default number of projected-gradient multistarts.
pub const DEFAULT_MULTISTARTS: usize = 8;

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn clamp_vec(v: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].clamp(lo[i], hi[i]))
}

/// Norm of the projected-gradient optimality residual `x - P(x - grad)`.
pub fn projected_gradient_norm(
    obj: &ObjectiveData,
    c: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<f64> {
    let g = obj.grad(c)?;
    Ok((c - clamp_vec(&(c - g), lo, hi)).norm())
}

/// Box-constrained minimization of the objective by projected gradient
/// descent with deterministic low-discrepancy multistarts.
pub fn solve_classical(
    obj: &ObjectiveData,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    solve_classical_with(obj, lo, hi, DEFAULT_MULTISTARTS)
}

pub fn solve_classical_with(
    obj: &ObjectiveData,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    starts: usize,
) -> Result<(DVector<f64>, f64)> {
    let n = obj.n_c();
    if lo.len() != n || hi.len() != n {
        return Err(Error::Dimension("bounds must have length n_c".into()));
    }
    if (0..n).any(|i| !lo[i].is_finite() || !hi[i].is_finite() || lo[i] >= hi[i]) {
        return Err(Error::Config("solver needs finite, ordered box bounds".into()));
    }
    if n > HALTON_BASES.len() {
        return Err(Error::Config(format!(
            "classical solver supports up to {} command variables",
            HALTON_BASES.len()
        )));
    }

    let mut best: Option<(DVector<f64>, f64)> = None;
    for s in 1..=starts.max(1) {
        let mut x = DVector::from_fn(n, |i, _| {
            lo[i] + (hi[i] - lo[i]) * halton(s, HALTON_BASES[i])
        });
        let mut fx = obj.eval(&x)?;
        if !fx.is_finite() {
            return Err(Error::Numerical("objective is non-finite at a start point".into()));
        }
        let mut step = 1.0;
        for _ in 0..20_000 {
            let g = obj.grad(&x)?;
            let residual = (&x - clamp_vec(&(&x - &g), lo, hi)).norm();
            if residual < 1e-9 {
                break;
            }
            // Backtracking on the projected step.
            let mut accepted = false;
            for _ in 0..60 {
                let cand = clamp_vec(&(&x - &g * step), lo, hi);
                let fc = obj.eval(&cand)?;
                if !fc.is_finite() {
                    step *= 0.5;
                    continue;
                }
                let decrease = g.dot(&(&x - &cand));
                if fc <= fx - 1e-4 * decrease {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    step = (step * 1.3).min(1e8);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        match &best {
            Some((_, fb)) if *fb <= fx => {}
            _ => best = Some((x, fx)),
        }
    }
    best.ok_or_else(|| Error::Solver("no feasible start point".into()))
}

/// Solver selection for the controller step.
#[derive(Debug, Clone)]
pub enum SolverBackend {
    /// Projected-gradient descent on the continuous relaxation.
    Classical,
    /// Compile to binary form and enumerate every assignment.
    ExhaustiveQubo,
    /// Compile to binary form and run simulated annealing.
    SaQubo(SaSchedule),
}

impl SolverBackend {
    pub fn label(&self) -> &'static str {
        match self {
            SolverBackend::Classical => "classical",
            SolverBackend::ExhaustiveQubo => "exhaustive",
            SolverBackend::SaQubo(_) => "sa",
        }
    }
}

/// Outcome of one controller step.
#[derive(Debug, Clone)]
pub struct ControllerStep {
    /// First command sample, to apply on the next interval.
    pub command: DVector<f64>,
    /// Full minimizing command vector.
    pub c_opt: DVector<f64>,
    /// Objective value at the minimizer (reference constant dropped).
    pub j_opt: f64,
    /// Objective value plus the reference constant.
    pub cost_full: f64,
    /// Whether any command component sits on its bound.
    pub saturated: bool,
    pub wall_s: f64,
    pub backend: &'static str,
}

/// One receding-horizon controller step: build the prediction operator at the
/// measured state, assemble the objective for the reference window and return
/// the first sample of the minimizing command sequence.
///
/// `r_window` must hold `horizon + 1` reference vectors for the prediction
/// steps `1..=horizon+1`; the first entry aligns with the expansion state and
/// does not enter the objective.
pub fn rhs_controller_step(
    cfg: &MpcConfig,
    model: &DiscreteModel,
    x_t: &DVector<f64>,
    u_t: &DVector<f64>,
    r_window: &[DVector<f64>],
    backend: &SolverBackend,
) -> Result<ControllerStep> {
    let started = Instant::now();
    let n_x = model.n_x();
    let n_u = model.n_u();
    cfg.validate(n_x, n_u)?;
    if r_window.len() < cfg.horizon + 1 {
        return Err(Error::Dimension(format!(
            "reference window holds {} entries, needs horizon + 1 = {}",
            r_window.len(),
            cfg.horizon + 1
        )));
    }
    let gamma = cfg.blocking(n_u)?;
    let op = build_omega(model, x_t, u_t, &gamma, cfg.horizon, cfg.alpha)?;
    let mut reference = DVector::zeros(cfg.horizon * n_x);
    for k in 0..cfg.horizon {
        if r_window[k + 1].len() != n_x {
            return Err(Error::Dimension("reference entries must have length n_x".into()));
        }
        reference.rows_mut(k * n_x, n_x).copy_from(&r_window[k + 1]);
    }
    let obj = assemble_objective(cfg, &op, &reference)?;

    let c_opt = match backend {
        SolverBackend::Classical => solve_classical(&obj, &cfg.c_lo, &cfg.c_hi)?.0,
        SolverBackend::ExhaustiveQubo => {
            let enc = qubo::BinaryEncoding::new(cfg.c_lo.clone(), cfg.c_hi.clone(), cfg.n_bits)?;
            let problem = qubo::compile_qubo(&obj, &enc, None)?;
            let result = solve::solve_exhaustive(&problem)?;
            problem.decode(&result.xi_best)?
        }
        SolverBackend::SaQubo(sched) => {
            let enc = qubo::BinaryEncoding::new(cfg.c_lo.clone(), cfg.c_hi.clone(), cfg.n_bits)?;
            let problem = qubo::compile_qubo(&obj, &enc, None)?;
            let result = solve::solve_sa(&problem, sched)?;
            problem.decode(&result.xi_best)?
        }
    };

    let j_opt = obj.eval(&c_opt)?;
    if !j_opt.is_finite() {
        return Err(Error::Numerical("controller objective is non-finite".into()));
    }
    let saturated = (0..c_opt.len()).any(|i| {
        let tol = 1e-9 * (cfg.c_hi[i] - cfg.c_lo[i]);
        c_opt[i] - cfg.c_lo[i] <= tol || cfg.c_hi[i] - c_opt[i] <= tol
    });
    let command = (&gamma * &c_opt).rows(0, n_u).into_owned();
    Ok(ControllerStep {
        command,
        cost_full: j_opt + obj.reference_offset(),
        j_opt,
        c_opt,
        saturated,
        wall_s: started.elapsed().as_secs_f64(),
        backend: backend.label(),
    })
}
