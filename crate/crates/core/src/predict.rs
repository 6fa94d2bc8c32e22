//! Multi-step prediction factorized as a coefficient matrix times a monomial
//! vector.
//!
//! The map from the reduced command vector `c` to the predicted state
//! sequence is built recursively: the one-step model is expanded around
//! `c = 0` to degree `alpha`, then re-substituted into itself once per
//! horizon step. Each step `k` yields a coefficient block; stacking the
//! blocks gives a single matrix so that the whole predicted sequence is one
//! matrix-vector product per candidate `c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::DiscreteModel;
use crate::polyalg::{compose_state_input, Monomial, MonomialBasis, PolyVec};

/// Piecewise-constant move-blocking matrix for the given block lengths.
///
/// Block `j` of length `L_j` holds the command constant for `L_j` horizon
/// samples; the result maps `blocks.len() * n_u` free variables onto
/// `sum(blocks) * n_u` command samples and has full column rank.
pub fn blocking_matrix(n_u: usize, blocks: &[usize]) -> Result<DMatrix<f64>> {
    if blocks.is_empty() || blocks.contains(&0) {
        return Err(Error::Config(
            "move-blocking needs non-empty blocks of positive length".into(),
        ));
    }
    let horizon: usize = blocks.iter().sum();
    let n_c = blocks.len() * n_u;
    let mut gamma = DMatrix::zeros(horizon * n_u, n_c);
    let mut sample = 0;
    for (j, &len) in blocks.iter().enumerate() {
        for _ in 0..len {
            for i in 0..n_u {
                gamma[(sample * n_u + i, j * n_u + i)] = 1.0;
            }
            sample += 1;
        }
    }
    Ok(gamma)
}

/// Row-selection matrix extracting command sample `k` (1-based) from the
/// stacked command sequence. Exposed for tests; the recursion itself slices
/// index ranges.
pub fn selection_matrix_u(k: usize, horizon: usize, n_u: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n_u, horizon * n_u);
    for i in 0..n_u {
        s[(i, (k - 1) * n_u + i)] = 1.0;
    }
    s
}

/// Row-selection matrix extracting predicted state `k+1` (block `k`, 1-based)
/// from the stacked prediction.
pub fn selection_matrix_x(k: usize, horizon: usize, n_x: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n_x, horizon * n_x);
    for i in 0..n_x {
        s[(i, (k - 1) * n_x + i)] = 1.0;
    }
    s
}

/// The stacked prediction coefficients for one controller step.
#[derive(Debug, Clone)]
pub struct PredictionOperator {
    stacked: DMatrix<f64>,
    basis: MonomialBasis,
    horizon: usize,
    n_x: usize,
    n_u: usize,
    blocking: DMatrix<f64>,
    x1: DVector<f64>,
}

impl PredictionOperator {
    /// Stacked coefficient matrix, `horizon * n_x` rows by `basis.len()` columns.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_c(&self) -> usize {
        self.blocking.ncols()
    }

    pub fn blocking(&self) -> &DMatrix<f64> {
        &self.blocking
    }

    /// First prediction `x_1 = f(x_t, u_t)`, the expansion point state.
    pub fn x1(&self) -> &DVector<f64> {
        &self.x1
    }

    /// Coefficient block of prediction step `k` (1-based).
    pub fn block(&self, k: usize) -> DMatrix<f64> {
        self.stacked
            .view(((k - 1) * self.n_x, 0), (self.n_x, self.basis.len()))
            .into()
    }

    /// Predicted state sequence `(x_2, ..., x_{T+1})` for a command vector.
    pub fn predict(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let mu = self.basis.eval(c)?;
        Ok(&self.stacked * mu)
    }
}

/// Maximum expansion degree accepted by [`build_omega`].
pub const MAX_DEGREE: u32 = 6;

/// Build the stacked prediction operator for the current state and command.
///
/// `blocking` maps the reduced command vector onto the full command sequence
/// and must have full column rank with fewer columns than `horizon * n_u`
/// rows (equality is allowed for the identity parametrization).
pub fn build_omega(
    model: &DiscreteModel,
    x_t: &DVector<f64>,
    u_t: &DVector<f64>,
    blocking: &DMatrix<f64>,
    horizon: usize,
    alpha: u32,
) -> Result<PredictionOperator> {
    let n_x = model.n_x();
    let n_u = model.n_u();
    if horizon < 1 {
        return Err(Error::Config("prediction horizon must be at least 1".into()));
    }
    if alpha < 1 {
        return Err(Error::Config("expansion degree must be at least 1".into()));
    }
    if alpha > MAX_DEGREE {
        return Err(Error::Config(format!(
            "expansion degree {alpha} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    if blocking.nrows() != horizon * n_u {
        return Err(Error::Dimension(format!(
            "blocking matrix has {} rows, expected horizon * n_u = {}",
            blocking.nrows(),
            horizon * n_u
        )));
    }
    let n_c = blocking.ncols();
    if n_c == 0 || n_c > horizon * n_u {
        return Err(Error::Dimension(format!(
            "blocking matrix has {n_c} columns, expected between 1 and {}",
            horizon * n_u
        )));
    }
    if blocking.clone().svd(false, false).rank(1e-10) < n_c {
        return Err(Error::Config(
            "blocking matrix must have full column rank".into(),
        ));
    }

    let basis = MonomialBasis::build(n_c, alpha);
    let x1 = model.step(x_t, u_t)?;

    // Linear polynomials for each command sample: row i of block k is the
    // blocking row (k-1)*n_u + i written on the linear monomials of c.
    let input_sub = |k: usize| -> Result<PolyVec> {
        let mut terms: Vec<(usize, Vec<u32>, f64)> = Vec::new();
        for i in 0..n_u {
            let row = (k - 1) * n_u + i;
            for j in 0..n_c {
                let w = blocking[(row, j)];
                if w != 0.0 {
                    terms.push((i, Monomial::var(n_c, j).exponents().to_vec(), w));
                }
            }
        }
        PolyVec::from_terms(n_u, basis.clone(), &terms)
    };

    let mut stacked = DMatrix::zeros(horizon * n_x, basis.len());
    let mut state_sub = PolyVec::constants(&x1, basis.clone());
    for k in 1..=horizon {
        let composed = compose_state_input(model.map(), &state_sub, &input_sub(k)?, alpha)?;
        stacked
            .view_mut(((k - 1) * n_x, 0), (n_x, basis.len()))
            .copy_from(composed.coeffs());
        state_sub = composed;
    }

    Ok(PredictionOperator {
        stacked,
        basis,
        horizon,
        n_x,
        n_u,
        blocking: blocking.clone(),
        x1,
    })
}
