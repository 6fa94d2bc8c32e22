//! Dense multivariate polynomial arithmetic truncated at a fixed total degree.
//!
//! A polynomial vector is stored as a coefficient matrix against an ordered
//! monomial basis: row `r` of the matrix holds the coefficients of component
//! `r`, column `j` multiplies basis monomial `j`, and evaluation is a plain
//! matrix-vector product. The basis enumerates every monomial of total degree
//! up to the truncation degree, graded-lexicographically with the constant
//! monomial last, so a degree-1 basis over `c` reads `(c_1, ..., c_n, 1)`.
//!
//! All operations drop monomials above the truncation degree. Because the
//! exponents are non-negative, truncating intermediate products never changes
//! the retained coefficients, so chained multiplication and composition are
//! exact on everything they keep.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coefficients with absolute value below this are stored as exact zero.
pub const COEFF_ZERO_TOL: f64 = 1e-14;

/// A monomial as an exponent vector, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn constant(n_vars: usize) -> Self {
        Self {
            exponents: vec![0; n_vars],
        }
    }

    /// The monomial `x_i`.
    pub fn var(n_vars: usize, i: usize) -> Self {
        let mut exponents = vec![0; n_vars];
        exponents[i] = 1;
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(point)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    /// Value of `d(self)/d(x_i)` at `point`.
    fn partial_eval(&self, i: usize, point: &[f64]) -> f64 {
        let e = self.exponents[i];
        if e == 0 {
            return 0.0;
        }
        let mut v = e as f64 * point[i].powi(e as i32 - 1);
        for (k, (&ek, &x)) in self.exponents.iter().zip(point).enumerate() {
            if k != i {
                v *= x.powi(ek as i32);
            }
        }
        v
    }
}

/// Ordered basis of all monomials in `n_vars` variables up to a total degree.
///
/// The ordering is fixed: total degree descending, then exponent vectors in
/// descending lexicographic order. The constant monomial is therefore always
/// last and the linear monomials `x_1, ..., x_n` form the contiguous block
/// just before it, in variable order.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n_vars: usize,
    degree: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for MonomialBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars == other.n_vars && self.degree == other.degree
    }
}

impl MonomialBasis {
    /// Enumerate the full basis. `n_vars` must be at least 1.
    pub fn build(n_vars: usize, degree: u32) -> Self {
        assert!(n_vars >= 1, "basis needs at least one variable");
        let mut monomials = Vec::new();
        let mut current = vec![0u32; n_vars];
        enumerate_exponents(&mut current, 0, degree, &mut monomials);
        monomials.sort_by(|a, b| {
            (b.degree(), &b.exponents).cmp(&(a.degree(), &a.exponents))
        });
        let index = monomials
            .iter()
            .enumerate()
            .map(|(j, m)| (m.exponents.clone(), j))
            .collect();
        Self {
            n_vars,
            degree,
            monomials,
            index,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of basis monomials, `C(n_vars + degree, degree)`.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    /// Position of the constant monomial (always the last one).
    pub fn constant_index(&self) -> usize {
        self.monomials.len() - 1
    }

    /// Position of the linear monomial `x_i`.
    pub fn linear_index(&self, i: usize) -> usize {
        let m = Monomial::var(self.n_vars, i);
        self.index[m.exponents()]
    }

    /// Evaluate every basis monomial at `point`, in basis order.
    pub fn eval(&self, point: &DVector<f64>) -> Result<DVector<f64>> {
        if point.len() != self.n_vars {
            return Err(Error::Dimension(format!(
                "basis over {} variables evaluated at a point of length {}",
                self.n_vars,
                point.len()
            )));
        }
        let p = point.as_slice();
        Ok(DVector::from_iterator(
            self.monomials.len(),
            self.monomials.iter().map(|m| m.eval(p)),
        ))
    }

    /// Jacobian of the basis vector: entry `(j, i)` is `d(monomial_j)/d(x_i)`.
    pub fn jacobian(&self, point: &DVector<f64>) -> DMatrix<f64> {
        let p = point.as_slice();
        DMatrix::from_fn(self.monomials.len(), self.n_vars, |j, i| {
            self.monomials[j].partial_eval(i, p)
        })
    }
}

fn enumerate_exponents(
    current: &mut Vec<u32>,
    var: usize,
    remaining: u32,
    out: &mut Vec<Monomial>,
) {
    if var == current.len() {
        out.push(Monomial::new(current.clone()));
        return;
    }
    for e in 0..=remaining {
        current[var] = e;
        enumerate_exponents(current, var + 1, remaining - e, out);
    }
    current[var] = 0;
}

/// A vector-valued polynomial: coefficient matrix times monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVec {
    coeffs: DMatrix<f64>,
    basis: MonomialBasis,
}

impl PolyVec {
    pub fn zeros(n_rows: usize, basis: MonomialBasis) -> Self {
        Self {
            coeffs: DMatrix::zeros(n_rows, basis.len()),
            basis,
        }
    }

    /// Build from explicit terms `(row, exponents, coefficient)`.
    pub fn from_terms(
        n_rows: usize,
        basis: MonomialBasis,
        terms: &[(usize, Vec<u32>, f64)],
    ) -> Result<Self> {
        let mut coeffs = DMatrix::zeros(n_rows, basis.len());
        for (row, exps, coeff) in terms {
            if *row >= n_rows {
                return Err(Error::Dimension(format!(
                    "term row {row} out of range for {n_rows} rows"
                )));
            }
            if exps.len() != basis.n_vars() {
                return Err(Error::Dimension(format!(
                    "term exponent vector has length {}, basis has {} variables",
                    exps.len(),
                    basis.n_vars()
                )));
            }
            let j = basis.index_of(exps).ok_or_else(|| {
                Error::Dimension(format!(
                    "term degree {} exceeds basis degree {}",
                    exps.iter().sum::<u32>(),
                    basis.degree()
                ))
            })?;
            coeffs[(*row, j)] += coeff;
        }
        Ok(Self { coeffs, basis }.clamped())
    }

    /// Constant polynomial vector with the given values.
    pub fn constants(values: &DVector<f64>, basis: MonomialBasis) -> Self {
        let mut coeffs = DMatrix::zeros(values.len(), basis.len());
        let cj = basis.constant_index();
        for r in 0..values.len() {
            coeffs[(r, cj)] = values[r];
        }
        Self { coeffs, basis }
    }

    pub fn from_coeffs(coeffs: DMatrix<f64>, basis: MonomialBasis) -> Result<Self> {
        if coeffs.ncols() != basis.len() {
            return Err(Error::Dimension(format!(
                "coefficient matrix has {} columns, basis has {} monomials",
                coeffs.ncols(),
                basis.len()
            )));
        }
        Ok(Self { coeffs, basis })
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn n_rows(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Highest total degree among monomials with a nonzero coefficient.
    pub fn max_term_degree(&self) -> u32 {
        let mut deg = 0;
        for (j, m) in self.basis.monomials().iter().enumerate() {
            if self.coeffs.column(j).iter().any(|&v| v != 0.0) {
                deg = deg.max(m.degree());
            }
        }
        deg
    }

    /// Evaluate all rows at `point`.
    pub fn eval(&self, point: &DVector<f64>) -> Result<DVector<f64>> {
        let mu = self.basis.eval(point)?;
        Ok(&self.coeffs * mu)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: &self.coeffs * factor,
            basis: self.basis.clone(),
        }
        .clamped()
    }

    pub fn add(&self, other: &PolyVec) -> Result<Self> {
        if self.basis != other.basis || self.n_rows() != other.n_rows() {
            return Err(Error::Dimension(
                "adding polynomial vectors with different shapes or bases".into(),
            ));
        }
        Ok(Self {
            coeffs: &self.coeffs + &other.coeffs,
            basis: self.basis.clone(),
        }
        .clamped())
    }

    /// Product of two single-row polynomials, truncated at `degree`.
    pub fn mul_trunc(&self, other: &PolyVec, degree: u32) -> Result<Self> {
        if self.n_rows() != 1 || other.n_rows() != 1 {
            return Err(Error::Dimension(
                "truncated product is defined on single-row polynomials".into(),
            ));
        }
        if self.basis.n_vars() != other.basis.n_vars() {
            return Err(Error::Dimension(
                "truncated product needs the same variable set".into(),
            ));
        }
        let out_basis = MonomialBasis::build(self.basis.n_vars(), degree);
        let row = mul_rows(
            &self.basis,
            self.coeffs.row(0).transpose().as_slice(),
            &other.basis,
            other.coeffs.row(0).transpose().as_slice(),
            &out_basis,
        );
        let coeffs = DMatrix::from_row_slice(1, out_basis.len(), &row);
        Ok(Self {
            coeffs,
            basis: out_basis,
        }
        .clamped())
    }

    /// Substitute `subs` (one row per variable of `self`) into every row and
    /// truncate at `degree`. The substitution rows live over the output
    /// variable set and must share one basis.
    pub fn compose_trunc(&self, subs: &PolyVec, degree: u32) -> Result<Self> {
        if subs.n_rows() != self.basis.n_vars() {
            return Err(Error::Dimension(format!(
                "composition needs {} substitution rows, got {}",
                self.basis.n_vars(),
                subs.n_rows()
            )));
        }
        let out_basis = MonomialBasis::build(subs.basis.n_vars(), degree);
        let n_out = out_basis.len();
        let const_j = out_basis.constant_index();

        // Powers of each substitution row, truncated as they are built.
        let mut max_exp = vec![0u32; self.basis.n_vars()];
        for (j, m) in self.basis.monomials().iter().enumerate() {
            if self.coeffs.column(j).iter().any(|&v| v != 0.0) {
                for (i, &e) in m.exponents().iter().enumerate() {
                    max_exp[i] = max_exp[i].max(e);
                }
            }
        }
        let mut unit = vec![0.0; n_out];
        unit[const_j] = 1.0;
        let mut powers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.basis.n_vars());
        for (i, &me) in max_exp.iter().enumerate() {
            let base: Vec<f64> = resample_row(
                &subs.basis,
                subs.coeffs.row(i).transpose().as_slice(),
                &out_basis,
            )?;
            let mut pows = vec![unit.clone()];
            for e in 1..=me {
                let next = mul_rows_raw(&pows[(e - 1) as usize], &base, &out_basis);
                pows.push(next);
            }
            powers.push(pows);
        }

        let mut coeffs = DMatrix::zeros(self.n_rows(), n_out);
        for (j, m) in self.basis.monomials().iter().enumerate() {
            if self.coeffs.column(j).iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut term = unit.clone();
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = mul_rows_raw(&term, &powers[i][e as usize], &out_basis);
                }
            }
            for r in 0..self.n_rows() {
                let w = self.coeffs[(r, j)];
                if w != 0.0 {
                    for (k, &t) in term.iter().enumerate() {
                        coeffs[(r, k)] += w * t;
                    }
                }
            }
        }
        Ok(Self {
            coeffs,
            basis: out_basis,
        }
        .clamped())
    }

    fn clamped(mut self) -> Self {
        for v in self.coeffs.iter_mut() {
            if v.abs() < COEFF_ZERO_TOL {
                *v = 0.0;
            }
        }
        self
    }
}

/// Convenience wrapper mirroring the two-block substitution used by the
/// prediction recursion: `f` is a polynomial in `(x, u)` and the first
/// `x_sub.n_rows()` variables get `x_sub`, the rest get `u_sub`.
pub fn compose_state_input(
    f: &PolyVec,
    x_sub: &PolyVec,
    u_sub: &PolyVec,
    degree: u32,
) -> Result<PolyVec> {
    if x_sub.basis() != u_sub.basis() {
        return Err(Error::Dimension(
            "state and input substitutions must share a basis".into(),
        ));
    }
    if x_sub.n_rows() + u_sub.n_rows() != f.basis().n_vars() {
        return Err(Error::Dimension(format!(
            "substitution rows {} + {} do not cover {} variables",
            x_sub.n_rows(),
            u_sub.n_rows(),
            f.basis().n_vars()
        )));
    }
    let n_sub = x_sub.n_rows() + u_sub.n_rows();
    let mut stacked = DMatrix::zeros(n_sub, x_sub.basis().len());
    stacked
        .view_mut((0, 0), (x_sub.n_rows(), x_sub.basis().len()))
        .copy_from(x_sub.coeffs());
    stacked
        .view_mut((x_sub.n_rows(), 0), (u_sub.n_rows(), u_sub.basis().len()))
        .copy_from(u_sub.coeffs());
    let subs = PolyVec::from_coeffs(stacked, x_sub.basis().clone())?;
    f.compose_trunc(&subs, degree)
}

/// Re-express a coefficient row on a different (possibly larger) basis over
/// the same variables. Fails if a nonzero term does not fit.
fn resample_row(from: &MonomialBasis, row: &[f64], to: &MonomialBasis) -> Result<Vec<f64>> {
    let mut out = vec![0.0; to.len()];
    for (j, &v) in row.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let exps = from.monomials()[j].exponents();
        match to.index_of(exps) {
            Some(k) => out[k] += v,
            None => {
                return Err(Error::Dimension(format!(
                    "substitution term of degree {} exceeds truncation degree {}",
                    from.monomials()[j].degree(),
                    to.degree()
                )))
            }
        }
    }
    Ok(out)
}

fn mul_rows_raw(a: &[f64], b: &[f64], basis: &MonomialBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.len()];
    let monos = basis.monomials();
    for (ja, &va) in a.iter().enumerate() {
        if va == 0.0 {
            continue;
        }
        for (jb, &vb) in b.iter().enumerate() {
            if vb == 0.0 {
                continue;
            }
            let m = monos[ja].mul(&monos[jb]);
            if m.degree() <= basis.degree() {
                if let Some(k) = basis.index_of(m.exponents()) {
                    out[k] += va * vb;
                }
            }
        }
    }
    out
}

fn mul_rows(
    a_basis: &MonomialBasis,
    a: &[f64],
    b_basis: &MonomialBasis,
    b: &[f64],
    out_basis: &MonomialBasis,
) -> Vec<f64> {
    let mut out = vec![0.0; out_basis.len()];
    for (ja, &va) in a.iter().enumerate() {
        if va == 0.0 {
            continue;
        }
        for (jb, &vb) in b.iter().enumerate() {
            if vb == 0.0 {
                continue;
            }
            let m = a_basis.monomials()[ja].mul(&b_basis.monomials()[jb]);
            if m.degree() <= out_basis.degree() {
                if let Some(k) = out_basis.index_of(m.exponents()) {
                    out[k] += va * vb;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(values: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(values)
    }

    #[test]
    fn affine_basis_is_variables_then_constant() {
        let basis = MonomialBasis::build(2, 1);
        let exps: Vec<&[u32]> = basis.monomials().iter().map(|m| m.exponents()).collect();
        assert_eq!(exps, vec![&[1, 0][..], &[0, 1][..], &[0, 0][..]]);
        assert_eq!(basis.len(), 3);
        assert_eq!(basis.linear_index(0), 0);
        assert_eq!(basis.linear_index(1), 1);
        assert_eq!(basis.constant_index(), 2);
    }

    #[test]
    fn univariate_degree_two_basis_orders_by_degree() {
        let basis = MonomialBasis::build(1, 2);
        let exps: Vec<&[u32]> = basis.monomials().iter().map(|m| m.exponents()).collect();
        assert_eq!(exps, vec![&[2][..], &[1][..], &[0][..]]);
    }

    #[test]
    fn basis_size_matches_binomial_count() {
        // C(3 + 2, 2) = 10
        assert_eq!(MonomialBasis::build(3, 2).len(), 10);
    }

    #[test]
    fn eval_affine_basis() {
        let basis = MonomialBasis::build(2, 1);
        let mu = basis.eval(&dv(&[0.0, 0.0])).unwrap();
        assert_eq!(mu.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn eval_univariate_squared_basis() {
        let basis = MonomialBasis::build(1, 2);
        let mu = basis.eval(&dv(&[3.0])).unwrap();
        assert_eq!(mu.as_slice(), &[9.0, 3.0, 1.0]);
    }

    #[test]
    fn eval_mixed_monomials_by_position() {
        let basis = MonomialBasis::build(2, 2);
        let mu = basis.eval(&dv(&[2.0, 5.0])).unwrap();
        // c1*c2, c1, c2, 1 evaluate to 10, 2, 5, 1
        assert_eq!(mu[basis.index_of(&[1, 1]).unwrap()], 10.0);
        assert_eq!(mu[basis.index_of(&[1, 0]).unwrap()], 2.0);
        assert_eq!(mu[basis.index_of(&[0, 1]).unwrap()], 5.0);
        assert_eq!(mu[basis.index_of(&[0, 0]).unwrap()], 1.0);
    }

    #[test]
    fn eval_rejects_wrong_point_length() {
        let basis = MonomialBasis::build(2, 1);
        assert!(basis.eval(&dv(&[1.0])).is_err());
    }

    fn one_row(basis: &MonomialBasis, terms: &[(Vec<u32>, f64)]) -> PolyVec {
        let terms: Vec<(usize, Vec<u32>, f64)> =
            terms.iter().map(|(e, c)| (0, e.clone(), *c)).collect();
        PolyVec::from_terms(1, basis.clone(), &terms).unwrap()
    }

    #[test]
    fn product_truncation_drops_cross_term() {
        let basis = MonomialBasis::build(2, 1);
        // (1 + c1)(1 + c2) at degree 1 -> 1 + c1 + c2
        let a = one_row(&basis, &[(vec![0, 0], 1.0), (vec![1, 0], 1.0)]);
        let b = one_row(&basis, &[(vec![0, 0], 1.0), (vec![0, 1], 1.0)]);
        let p = a.mul_trunc(&b, 1).unwrap();
        let expect = one_row(
            &basis,
            &[(vec![0, 0], 1.0), (vec![1, 0], 1.0), (vec![0, 1], 1.0)],
        );
        assert_eq!(p.coeffs(), expect.coeffs());
    }

    #[test]
    fn product_keeps_square_within_degree() {
        let basis = MonomialBasis::build(1, 2);
        let c1 = one_row(&MonomialBasis::build(1, 1), &[(vec![1], 1.0)]);
        let p = c1.mul_trunc(&c1, 2).unwrap();
        let expect = one_row(&basis, &[(vec![2], 1.0)]);
        assert_eq!(p.coeffs(), expect.coeffs());
    }

    #[test]
    fn product_expands_binomial_square() {
        // (1 + c1)^2 at degree 2 -> 1 + 2 c1 + c1^2
        let lin = MonomialBasis::build(1, 1);
        let a = one_row(&lin, &[(vec![0], 1.0), (vec![1], 1.0)]);
        let p = a.mul_trunc(&a, 2).unwrap();
        let basis = MonomialBasis::build(1, 2);
        let expect = one_row(&basis, &[(vec![0], 1.0), (vec![1], 2.0), (vec![2], 1.0)]);
        assert_eq!(p.coeffs(), expect.coeffs());
    }

    #[test]
    fn compose_affine_substitution() {
        // f(x, u) = x + u with x <- 0.5, u <- c1
        let f_basis = MonomialBasis::build(2, 1);
        let f = one_row(&f_basis, &[(vec![1, 0], 1.0), (vec![0, 1], 1.0)]);
        let c_basis = MonomialBasis::build(1, 1);
        let x_sub = one_row(&c_basis, &[(vec![0], 0.5)]);
        let u_sub = one_row(&c_basis, &[(vec![1], 1.0)]);
        let g = compose_state_input(&f, &x_sub, &u_sub, 1).unwrap();
        let expect = one_row(&c_basis, &[(vec![0], 0.5), (vec![1], 1.0)]);
        assert_eq!(g.coeffs(), expect.coeffs());
    }

    #[test]
    fn compose_truncates_square_at_degree_one() {
        // f(x) = x^2 with x <- c1 + 1, truncated at degree 1 -> 2 c1 + 1
        let f_basis = MonomialBasis::build(1, 2);
        let f = one_row(&f_basis, &[(vec![2], 1.0)]);
        let c_basis = MonomialBasis::build(1, 1);
        let sub = one_row(&c_basis, &[(vec![1], 1.0), (vec![0], 1.0)]);
        let g = f.compose_trunc(&sub, 1).unwrap();
        let expect = one_row(&c_basis, &[(vec![1], 2.0), (vec![0], 1.0)]);
        assert_eq!(g.coeffs(), expect.coeffs());
    }

    #[test]
    fn compose_exact_at_degree_two() {
        // same substitution, degree 2 -> c1^2 + 2 c1 + 1
        let f_basis = MonomialBasis::build(1, 2);
        let f = one_row(&f_basis, &[(vec![2], 1.0)]);
        let c_basis = MonomialBasis::build(1, 1);
        let sub = one_row(&c_basis, &[(vec![1], 1.0), (vec![0], 1.0)]);
        let g = f.compose_trunc(&sub, 2).unwrap();
        let basis2 = MonomialBasis::build(1, 2);
        let expect = one_row(&basis2, &[(vec![2], 1.0), (vec![1], 2.0), (vec![0], 1.0)]);
        assert_eq!(g.coeffs(), expect.coeffs());
    }

    #[test]
    fn basis_build_is_deterministic() {
        let a = MonomialBasis::build(4, 3);
        let b = MonomialBasis::build(4, 3);
        assert_eq!(a.monomials(), b.monomials());
    }

    prop_compose! {
        fn small_poly(n_vars: usize, degree: u32)
            (coeffs in prop::collection::vec(-2.0f64..2.0, MonomialBasis::build(n_vars, degree).len()))
            -> PolyVec
        {
            let basis = MonomialBasis::build(n_vars, degree);
            let m = DMatrix::from_row_slice(1, basis.len(), &coeffs);
            PolyVec::from_coeffs(m, basis).unwrap()
        }
    }

    proptest! {
        // eval(a * b) == eval(a) * eval(b) whenever no truncation occurs
        #[test]
        fn product_is_evaluation_homomorphism(
            a in small_poly(2, 1),
            b in small_poly(2, 1),
            x in -1.5f64..1.5,
            y in -1.5f64..1.5,
        ) {
            let p = a.mul_trunc(&b, 2).unwrap();
            let point = dv(&[x, y]);
            let lhs = p.eval(&point).unwrap()[0];
            let rhs = a.eval(&point).unwrap()[0] * b.eval(&point).unwrap()[0];
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        // eval(f o subs) == f(eval(subs)) when substituted degree fits
        #[test]
        fn composition_is_exact_when_untruncated(
            f in small_poly(2, 2),
            x_sub in small_poly(1, 1),
            u_sub in small_poly(1, 1),
            t in -1.0f64..1.0,
        ) {
            let g = compose_state_input(&f, &x_sub, &u_sub, 2).unwrap();
            let point = dv(&[t]);
            let xv = x_sub.eval(&point).unwrap()[0];
            let uv = u_sub.eval(&point).unwrap()[0];
            let direct = f.eval(&dv(&[xv, uv])).unwrap()[0];
            let composed = g.eval(&point).unwrap()[0];
            prop_assert!((composed - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }
}
