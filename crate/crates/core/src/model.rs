//! Plant dynamics and the discrete-time prediction model.
//!
//! Plants are continuous-time polynomial vector fields `dx/dt = f_c(x, u)`.
//! The prediction model advances with a forward-Euler step, which keeps the
//! map exactly polynomial: `f(x, u) = x + T_d * f_c(x, u)`. Simulation between
//! samples uses a classical Runge-Kutta 4 step with the command held constant.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{Monomial, MonomialBasis, PolyVec};

/// Continuous-time polynomial plant `dx/dt = f_c(x, u)`.
///
/// The vector field is a polynomial over the `n_x + n_u` variables
/// `(x_1, ..., x_nx, u_1, ..., u_nu)`, one row per state component.
#[derive(Debug, Clone)]
pub struct ContinuousDynamics {
    field: PolyVec,
    n_x: usize,
    n_u: usize,
}

impl ContinuousDynamics {
    pub fn new(field: PolyVec, n_x: usize, n_u: usize) -> Result<Self> {
        if field.n_rows() != n_x {
            return Err(Error::Dimension(format!(
                "vector field has {} rows for {} states",
                field.n_rows(),
                n_x
            )));
        }
        if field.basis().n_vars() != n_x + n_u {
            return Err(Error::Dimension(format!(
                "vector field over {} variables, expected {} states + {} inputs",
                field.basis().n_vars(),
                n_x,
                n_u
            )));
        }
        Ok(Self { field, n_x, n_u })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn field(&self) -> &PolyVec {
        &self.field
    }

    /// Evaluate `f_c` at a state/command pair.
    pub fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_x || u.len() != self.n_u {
            return Err(Error::Dimension(format!(
                "plant expects ({}, {}) but got ({}, {})",
                self.n_x,
                self.n_u,
                x.len(),
                u.len()
            )));
        }
        let mut point = DVector::zeros(self.n_x + self.n_u);
        point.rows_mut(0, self.n_x).copy_from(x);
        point.rows_mut(self.n_x, self.n_u).copy_from(u);
        self.field.eval(&point)
    }
}

/// Discrete-time prediction model `x_{k+1} = f(x_k, u_k)`.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    map: PolyVec,
    n_x: usize,
    n_u: usize,
    t_d: f64,
}

impl DiscreteModel {
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn t_d(&self) -> f64 {
        self.t_d
    }

    pub fn map(&self) -> &PolyVec {
        &self.map
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_x || u.len() != self.n_u {
            return Err(Error::Dimension(format!(
                "model expects ({}, {}) but got ({}, {})",
                self.n_x,
                self.n_u,
                x.len(),
                u.len()
            )));
        }
        let mut point = DVector::zeros(self.n_x + self.n_u);
        point.rows_mut(0, self.n_x).copy_from(x);
        point.rows_mut(self.n_x, self.n_u).copy_from(u);
        self.map.eval(&point)
    }
}

/// Forward-Euler discretization: `f(x, u) = x + T_d * f_c(x, u)`.
pub fn euler_discretize(dynamics: &ContinuousDynamics, t_d: f64) -> Result<DiscreteModel> {
    if !t_d.is_finite() || t_d <= 0.0 {
        return Err(Error::Config(format!(
            "discretization time must be positive, got {t_d}"
        )));
    }
    let n_vars = dynamics.n_x + dynamics.n_u;
    let degree = dynamics.field.max_term_degree().max(1);
    let basis = MonomialBasis::build(n_vars, degree);
    let mut terms: Vec<(usize, Vec<u32>, f64)> = Vec::new();
    for r in 0..dynamics.n_x {
        terms.push((r, Monomial::var(n_vars, r).exponents().to_vec(), 1.0));
    }
    let identity = PolyVec::from_terms(dynamics.n_x, basis.clone(), &terms)?;
    // Re-express the field on the (possibly wider) shared basis.
    let mut field_terms: Vec<(usize, Vec<u32>, f64)> = Vec::new();
    for r in 0..dynamics.n_x {
        for (j, m) in dynamics.field.basis().monomials().iter().enumerate() {
            let v = dynamics.field.coeffs()[(r, j)];
            if v != 0.0 {
                field_terms.push((r, m.exponents().to_vec(), v));
            }
        }
    }
    let field = PolyVec::from_terms(dynamics.n_x, basis, &field_terms)?;
    let map = identity.add(&field.scale(t_d))?;
    Ok(DiscreteModel {
        map,
        n_x: dynamics.n_x,
        n_u: dynamics.n_u,
        t_d,
    })
}

/// One classical RK4 step of the plant with the command held constant.
pub fn plant_step_rk4(
    dynamics: &ContinuousDynamics,
    x: &DVector<f64>,
    u: &DVector<f64>,
    t_s: f64,
) -> Result<DVector<f64>> {
    let k1 = dynamics.eval(x, u)?;
    let k2 = dynamics.eval(&(x + &k1 * (t_s / 2.0)), u)?;
    let k3 = dynamics.eval(&(x + &k2 * (t_s / 2.0)), u)?;
    let k4 = dynamics.eval(&(x + &k3 * t_s), u)?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (t_s / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "plant integration produced a non-finite state".into(),
        ));
    }
    Ok(next)
}

/// On-disk model description.
///
/// ```json
/// {
///   "n_x": 1,
///   "n_u": 1,
///   "T_d": 0.05,
///   "terms": [
///     { "row": 0, "exponents_x": [1], "exponents_u": [0], "coeff": -1.0 },
///     { "row": 0, "exponents_x": [0], "exponents_u": [1], "coeff": 1.0 }
///   ]
/// }
/// ```
///
/// `terms` define the continuous-time vector field row by row; unknown fields
/// are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_x: usize,
    pub n_u: usize,
    #[serde(rename = "T_d")]
    pub t_d: f64,
    pub terms: Vec<ModelTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTerm {
    pub row: usize,
    pub exponents_x: Vec<u32>,
    pub exponents_u: Vec<u32>,
    pub coeff: f64,
}

impl ModelFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    pub fn to_dynamics(&self) -> Result<ContinuousDynamics> {
        if self.n_x == 0 {
            return Err(Error::Config("model needs at least one state".into()));
        }
        let n_vars = self.n_x + self.n_u;
        let mut degree = 1;
        for t in &self.terms {
            if t.exponents_x.len() != self.n_x || t.exponents_u.len() != self.n_u {
                return Err(Error::Config(format!(
                    "term for row {} has exponent vectors of length ({}, {}), expected ({}, {})",
                    t.row,
                    t.exponents_x.len(),
                    t.exponents_u.len(),
                    self.n_x,
                    self.n_u
                )));
            }
            let d: u32 = t.exponents_x.iter().chain(&t.exponents_u).sum();
            degree = degree.max(d);
        }
        let basis = MonomialBasis::build(n_vars, degree);
        let terms: Vec<(usize, Vec<u32>, f64)> = self
            .terms
            .iter()
            .map(|t| {
                let mut exps = t.exponents_x.clone();
                exps.extend_from_slice(&t.exponents_u);
                (t.row, exps, t.coeff)
            })
            .collect();
        let field = PolyVec::from_terms(self.n_x, basis, &terms)?;
        ContinuousDynamics::new(field, self.n_x, self.n_u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dv(values: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(values)
    }

    /// dx/dt = -x (one state, one unused input)
    fn decay_plant() -> ContinuousDynamics {
        let basis = MonomialBasis::build(2, 1);
        let field = PolyVec::from_terms(1, basis, &[(0, vec![1, 0], -1.0)]).unwrap();
        ContinuousDynamics::new(field, 1, 1).unwrap()
    }

    /// dx/dt = u
    fn integrator_plant() -> ContinuousDynamics {
        let basis = MonomialBasis::build(2, 1);
        let field = PolyVec::from_terms(1, basis, &[(0, vec![0, 1], 1.0)]).unwrap();
        ContinuousDynamics::new(field, 1, 1).unwrap()
    }

    #[test]
    fn euler_of_linear_decay() {
        let model = euler_discretize(&decay_plant(), 0.1).unwrap();
        // f(x, u) = 0.9 x
        let next = model.step(&dv(&[1.0]), &dv(&[0.0])).unwrap();
        assert_relative_eq!(next[0], 0.9, max_relative = 1e-15);
        let next = model.step(&dv(&[-2.0]), &dv(&[0.0])).unwrap();
        assert_relative_eq!(next[0], -1.8, max_relative = 1e-15);
    }

    #[test]
    fn euler_of_integrator() {
        let model = euler_discretize(&integrator_plant(), 0.5).unwrap();
        // f(x, u) = x + 0.5 u
        let next = model.step(&dv(&[1.0]), &dv(&[2.0])).unwrap();
        assert_relative_eq!(next[0], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn euler_of_quadratic_field() {
        // dx/dt = x^2, T_d = 0.1, x = 2 -> 2 + 0.1 * 4 = 2.4
        let basis = MonomialBasis::build(2, 2);
        let field = PolyVec::from_terms(1, basis, &[(0, vec![2, 0], 1.0)]).unwrap();
        let plant = ContinuousDynamics::new(field, 1, 1).unwrap();
        let model = euler_discretize(&plant, 0.1).unwrap();
        let next = model.step(&dv(&[2.0]), &dv(&[0.0])).unwrap();
        assert_relative_eq!(next[0], 2.4, max_relative = 1e-15);
    }

    #[test]
    fn euler_rejects_nonpositive_step() {
        assert!(euler_discretize(&decay_plant(), 0.0).is_err());
        assert!(euler_discretize(&decay_plant(), -0.1).is_err());
    }

    #[test]
    fn euler_model_is_exact_polynomial_identity() {
        // coefficients of f must equal identity + T_d * field, coefficient-wise
        let plant = decay_plant();
        let t_d = 0.2;
        let model = euler_discretize(&plant, t_d).unwrap();
        for (j, m) in model.map().basis().monomials().iter().enumerate() {
            let mut expect = 0.0;
            if m.exponents() == [1, 0] {
                expect += 1.0;
            }
            if let Some(k) = plant.field().basis().index_of(m.exponents()) {
                expect += t_d * plant.field().coeffs()[(0, k)];
            }
            assert_eq!(model.map().coeffs()[(0, j)], expect);
        }
    }

    #[test]
    fn rk4_zero_field_keeps_state() {
        let basis = MonomialBasis::build(2, 1);
        let field = PolyVec::zeros(1, basis);
        let plant = ContinuousDynamics::new(field, 1, 1).unwrap();
        let next = plant_step_rk4(&plant, &dv(&[3.25]), &dv(&[1.0]), 0.7).unwrap();
        assert_eq!(next[0], 3.25);
    }

    #[test]
    fn rk4_matches_exponential_decay() {
        let next = plant_step_rk4(&decay_plant(), &dv(&[1.0]), &dv(&[0.0]), 0.1).unwrap();
        assert_relative_eq!(next[0], (-0.1f64).exp(), epsilon = 1e-6);
        assert_relative_eq!(next[0], 0.904837418, epsilon = 1e-6);
    }

    #[test]
    fn rk4_integrates_constant_input_exactly() {
        let next = plant_step_rk4(&integrator_plant(), &dv(&[0.0]), &dv(&[2.0]), 0.5).unwrap();
        assert_relative_eq!(next[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rk4_error_shrinks_at_fifth_order() {
        // one-step error against exp(-h) for h and h/2
        let plant = decay_plant();
        let exact = |h: f64| (-h).exp();
        let h = 0.2;
        let e1 = (plant_step_rk4(&plant, &dv(&[1.0]), &dv(&[0.0]), h).unwrap()[0] - exact(h)).abs();
        let e2 = (plant_step_rk4(&plant, &dv(&[1.0]), &dv(&[0.0]), h / 2.0).unwrap()[0]
            - exact(h / 2.0))
        .abs();
        let ratio = e1 / e2;
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_reports_divergence() {
        // dx/dt = x^2 blows up within a large step from x = 10
        let basis = MonomialBasis::build(2, 2);
        let field = PolyVec::from_terms(1, basis, &[(0, vec![2, 0], 1.0e150)]).unwrap();
        let plant = ContinuousDynamics::new(field, 1, 1).unwrap();
        let res = plant_step_rk4(&plant, &dv(&[1.0e150]), &dv(&[0.0]), 1.0);
        assert!(matches!(res, Err(Error::Numerical(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let text = r#"{
            "n_x": 1, "n_u": 1, "T_d": 0.05,
            "terms": [
                {"row": 0, "exponents_x": [1], "exponents_u": [0], "coeff": -1.0},
                {"row": 0, "exponents_x": [0], "exponents_u": [1], "coeff": 1.0}
            ]
        }"#;
        let file = ModelFile::from_json(text).unwrap();
        let dynamics = file.to_dynamics().unwrap();
        let v = dynamics.eval(&dv(&[2.0]), &dv(&[0.5])).unwrap();
        assert_relative_eq!(v[0], -1.5, max_relative = 1e-15);
    }

    #[test]
    fn model_file_rejects_unknown_fields() {
        let text = r#"{"n_x": 1, "n_u": 1, "T_d": 0.05, "terms": [], "extra": 1}"#;
        assert!(matches!(ModelFile::from_json(text), Err(Error::Parse(_))));
    }
}
