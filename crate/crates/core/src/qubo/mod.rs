//! Compilation of the polynomial control objective into quadratic binary
//! form.
//!
//! Commands are fixed-point encoded (`c = c_lo + scale * word`, most
//! significant bit first), the monomial vector becomes a polynomial in bits,
//! over-quadratic products are rewritten with substitution gadgets, and the
//! result is a symmetric matrix plus a constant such that the matrix form
//! over bits reproduces the objective on the encoded grid. Polynomial
//! constraints enter as squared-residual penalty blocks with slack bits for
//! inequalities. A spin-variable form is provided for annealing-style
//! solvers.
//!
//! Successive bit widths do not produce nested grids (the step divides by
//! `2^n_b - 1`, not `2^n_b`), so refining the encoding improves the reachable
//! optimum only approximately, not monotonically in the strict sense.

pub mod binpoly;
pub mod io;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmpc::ObjectiveData;
use crate::polyalg::PolyVec;

pub use binpoly::{penalty_value, reduce_degree, BinPoly, GadgetDef, PenaltyEntry, Quadratizer};

/// Default cap on compiled binary variables.
pub const DEFAULT_VARIABLE_CAP: usize = 4096;

/// Fixed-point encoding of a bounded real vector, most significant bit first.
///
/// All-zero words decode to the lower bound, all-one words to the upper
/// bound; the grid step per component is `(hi - lo) / (2^n_bits - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEncoding {
    c_lo: DVector<f64>,
    c_hi: DVector<f64>,
    n_bits: u32,
}

impl BinaryEncoding {
    pub fn new(c_lo: DVector<f64>, c_hi: DVector<f64>, n_bits: u32) -> Result<Self> {
        if c_lo.len() != c_hi.len() || c_lo.is_empty() {
            return Err(Error::Config("encoding bounds must be non-empty and equal-length".into()));
        }
        if !(1..=32).contains(&n_bits) {
            return Err(Error::Config("encoding width must be between 1 and 32 bits".into()));
        }
        for i in 0..c_lo.len() {
            if !c_lo[i].is_finite() || !c_hi[i].is_finite() || c_lo[i] >= c_hi[i] {
                return Err(Error::Config(format!(
                    "encoding needs finite ordered bounds, got [{}, {}] for component {i}",
                    c_lo[i], c_hi[i]
                )));
            }
        }
        Ok(Self { c_lo, c_hi, n_bits })
    }

    pub fn n_vars(&self) -> usize {
        self.c_lo.len()
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    /// Total encoding bits.
    pub fn m0(&self) -> usize {
        self.n_vars() * self.n_bits as usize
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.c_lo
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.c_hi
    }

    /// Bit place values `(2^{n_bits-1}, ..., 2, 1)`.
    pub fn place_values(&self) -> Vec<f64> {
        (0..self.n_bits)
            .rev()
            .map(|j| (1u64 << j) as f64)
            .collect()
    }

    /// Per-component scaling `(hi - lo) / (2^n_bits - 1)`.
    pub fn scale(&self, i: usize) -> f64 {
        (self.c_hi[i] - self.c_lo[i]) / ((1u64 << self.n_bits) - 1) as f64
    }

    /// Grid step of component `i`; equals the scaling of the least bit.
    pub fn step(&self, i: usize) -> f64 {
        self.scale(i)
    }

    pub fn max_range(&self) -> f64 {
        (0..self.n_vars())
            .map(|i| self.c_hi[i] - self.c_lo[i])
            .fold(0.0, f64::max)
    }

    /// Map an encoding-bit word to the real vector it represents.
    pub fn encode(&self, bits: &[u8]) -> Result<DVector<f64>> {
        if bits.len() != self.m0() {
            return Err(Error::Dimension(format!(
                "encoding expects {} bits, got {}",
                self.m0(),
                bits.len()
            )));
        }
        let nb = self.n_bits as usize;
        let places = self.place_values();
        Ok(DVector::from_fn(self.n_vars(), |i, _| {
            let word: f64 = (0..nb)
                .map(|j| places[j] * f64::from(bits[i * nb + j]))
                .sum();
            self.c_lo[i] + self.scale(i) * word
        }))
    }

    /// Affine bit expression of component `i`, indices offset into the
    /// global variable layout.
    fn component_poly(&self, i: usize) -> BinPoly {
        let nb = self.n_bits as usize;
        let s = self.scale(i);
        let weights: Vec<(usize, f64)> = self
            .place_values()
            .iter()
            .enumerate()
            .map(|(j, &p)| (i * nb + j, s * p))
            .collect();
        BinPoly::affine(self.c_lo[i], &weights)
    }

    /// Real grid point for one word per component.
    pub fn point_from_words(&self, words: &[u64]) -> DVector<f64> {
        DVector::from_fn(self.n_vars(), |i, _| {
            self.c_lo[i] + self.scale(i) * words[i] as f64
        })
    }
}

/// Named contiguous variable range inside a compiled problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarGroup {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl VarGroup {
    pub fn new(name: &str, start: usize, len: usize) -> Self {
        Self {
            name: name.to_string(),
            start,
            len,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// A compiled binary quadratic problem: symmetric matrix, additive constant,
/// variable groups and optional decode information.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    q: DMatrix<f64>,
    constant: f64,
    groups: Vec<VarGroup>,
    encoding: Option<BinaryEncoding>,
    gadgets: Vec<GadgetDef>,
}

impl QuboProblem {
    /// Wrap a matrix, symmetrizing it (the quadratic form is unchanged).
    pub fn new(q: DMatrix<f64>, constant: f64) -> Self {
        let sym = (&q + q.transpose()) * 0.5;
        Self {
            q: sym,
            constant,
            groups: Vec::new(),
            encoding: None,
            gadgets: Vec::new(),
        }
    }

    pub fn with_groups(mut self, groups: Vec<VarGroup>) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_encoding(mut self, encoding: BinaryEncoding) -> Self {
        self.encoding = Some(encoding);
        self
    }

    pub fn with_gadgets(mut self, gadgets: Vec<GadgetDef>) -> Self {
        self.gadgets = gadgets;
        self
    }

    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn groups(&self) -> &[VarGroup] {
        &self.groups
    }

    pub fn encoding(&self) -> Option<&BinaryEncoding> {
        self.encoding.as_ref()
    }

    pub fn gadgets(&self) -> &[GadgetDef] {
        &self.gadgets
    }

    pub fn abs_sum(&self) -> f64 {
        self.q.iter().map(|v| v.abs()).sum()
    }

    /// Quadratic form `xi' Q xi` at a bit assignment.
    pub fn energy(&self, bits: &[u8]) -> f64 {
        debug_assert_eq!(bits.len(), self.m());
        let mut h = 0.0;
        for (i, &bi) in bits.iter().enumerate() {
            if bi == 0 {
                continue;
            }
            for (j, &bj) in bits.iter().enumerate() {
                if bj != 0 {
                    h += self.q[(i, j)];
                }
            }
        }
        h
    }

    /// Energy plus the additive constant: the objective value on the grid.
    pub fn value(&self, bits: &[u8]) -> f64 {
        self.energy(bits) + self.constant
    }

    /// Real command vector encoded by the leading bits; gadget and slack
    /// bits are ignored.
    pub fn decode(&self, bits: &[u8]) -> Result<DVector<f64>> {
        let enc = self.encoding.as_ref().ok_or_else(|| {
            Error::Config("problem carries no encoding to decode with".into())
        })?;
        if bits.len() < enc.m0() {
            return Err(Error::Dimension(format!(
                "decode needs at least {} bits, got {}",
                enc.m0(),
                bits.len()
            )));
        }
        enc.encode(&bits[..enc.m0()])
    }

    /// Fill gadget bits consistently from the leading assignment, in
    /// allocation order.
    pub fn consistent_bits(&self, leading: &[u8]) -> Vec<u8> {
        let mut bits = vec![0u8; self.m()];
        bits[..leading.len()].copy_from_slice(leading);
        for g in &self.gadgets {
            bits[g.var] = bits[g.left] & bits[g.right];
        }
        bits
    }
}

/// Default consistency penalty weight: twice the mass of the objective part.
pub fn default_penalty_weight(objective_abs_sum: f64, constant: f64) -> f64 {
    2.0 * (objective_abs_sum + constant.abs())
}

fn affine_map_rows(
    obj: &ObjectiveData,
    rows: &[(f64, Vec<(usize, f64)>)],
    m: usize,
) -> (DMatrix<f64>, DVector<f64>, RowDVector<f64>, f64) {
    let n_mu = rows.len();
    let mut map = DMatrix::zeros(n_mu, m);
    let mut floor = DVector::zeros(n_mu);
    for (j, (constant, linear)) in rows.iter().enumerate() {
        floor[j] = *constant;
        for &(v, w) in linear {
            map[(j, v)] += w;
        }
    }
    let w = obj.monomial_weight();
    let lin = obj.linear_row();
    let h = (floor.transpose() * w - lin) * 2.0 * &map;
    let constant = (floor.transpose() * w * &floor)[(0, 0)] - 2.0 * (lin * &floor)[0];
    (map, floor, h.row(0).into_owned(), constant)
}

/// Compile a degree-1 objective to binary quadratic form.
///
/// The monomial vector is affine in the command, so the encoded objective is
/// exactly a quadratic form in the encoding bits plus a constant.
pub fn build_affine_qubo(obj: &ObjectiveData, enc: &BinaryEncoding) -> Result<QuboProblem> {
    let basis = obj.operator().basis();
    if basis.degree() != 1 {
        return Err(Error::Config(format!(
            "affine compilation requires expansion degree 1, got {}",
            basis.degree()
        )));
    }
    if enc.n_vars() != obj.n_c() {
        return Err(Error::Dimension(format!(
            "encoding covers {} variables, objective has {}",
            enc.n_vars(),
            obj.n_c()
        )));
    }
    let m0 = enc.m0();
    let n_mu = basis.len();
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = vec![(0.0, Vec::new()); n_mu];
    for i in 0..enc.n_vars() {
        let (offset, linear) = enc.component_poly(i).as_affine()?;
        rows[basis.linear_index(i)] = (offset, linear);
    }
    rows[basis.constant_index()] = (1.0, Vec::new());

    let (map, _, h, constant) = affine_map_rows(obj, &rows, m0);
    let mut q = map.transpose() * obj.monomial_weight() * &map;
    for i in 0..m0 {
        q[(i, i)] += h[i];
    }
    Ok(QuboProblem::new(q, constant)
        .with_groups(vec![VarGroup::new("encoding", 0, m0)])
        .with_encoding(enc.clone()))
}

/// Compile an objective of expansion degree 2 or higher.
///
/// Every weighted monomial of the basis is expanded over the encoding bits,
/// flattened by idempotence and rewritten to an affine expression in an
/// augmented bit vector; pair substitutions are enforced through the penalty
/// matrix scaled by `penalty_weight` (defaulting to twice the objective
/// mass). Components with zero weight are skipped entirely.
pub fn compile_polynomial_qubo(
    obj: &ObjectiveData,
    enc: &BinaryEncoding,
    penalty_weight: Option<f64>,
) -> Result<QuboProblem> {
    compile_polynomial_qubo_with_cap(obj, enc, penalty_weight, DEFAULT_VARIABLE_CAP)
}

pub fn compile_polynomial_qubo_with_cap(
    obj: &ObjectiveData,
    enc: &BinaryEncoding,
    penalty_weight: Option<f64>,
    cap: usize,
) -> Result<QuboProblem> {
    let basis = obj.operator().basis();
    if basis.degree() < 2 {
        return Err(Error::Config(format!(
            "polynomial compilation requires expansion degree at least 2, got {}",
            basis.degree()
        )));
    }
    if enc.n_vars() != obj.n_c() {
        return Err(Error::Dimension(format!(
            "encoding covers {} variables, objective has {}",
            enc.n_vars(),
            obj.n_c()
        )));
    }
    let m0 = enc.m0();
    let n_mu = basis.len();
    let w = obj.monomial_weight();
    let lin = obj.linear_row();
    let component_polys: Vec<BinPoly> =
        (0..enc.n_vars()).map(|i| enc.component_poly(i)).collect();

    let mut quad = Quadratizer::new(m0);
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(n_mu);
    for (j, monomial) in basis.monomials().iter().enumerate() {
        let relevant = lin[j] != 0.0
            || w.row(j).iter().any(|&v| v != 0.0)
            || w.column(j).iter().any(|&v| v != 0.0);
        if !relevant {
            rows.push((0.0, Vec::new()));
            continue;
        }
        let mut p = BinPoly::constant(1.0);
        for (i, &e) in monomial.exponents().iter().enumerate() {
            for _ in 0..e {
                p = p.mul(&component_polys[i]);
            }
        }
        let reduced = quad.reduce(&p, 1)?;
        rows.push(reduced.as_affine()?);
    }
    let m1 = quad.next_var();
    if m1 > cap {
        return Err(Error::Capacity {
            needed: m1,
            cap,
            what: "polynomial compilation".into(),
        });
    }

    let (map, _, h, constant) = affine_map_rows(obj, &rows, m1);
    let mut q = map.transpose() * w * &map;
    for i in 0..m1 {
        q[(i, i)] += h[i];
    }
    let lambda = penalty_weight
        .unwrap_or_else(|| default_penalty_weight(q.iter().map(|v| v.abs()).sum(), constant));
    let mut q_full = q;
    for (i, j, v) in quad.penalty_entries() {
        if i == j {
            q_full[(i, i)] += lambda * v;
        } else {
            q_full[(i, j)] += lambda * v * 0.5;
            q_full[(j, i)] += lambda * v * 0.5;
        }
    }

    let mut groups = vec![VarGroup::new("encoding", 0, m0)];
    if m1 > m0 {
        groups.push(VarGroup::new("reduction", m0, m1 - m0));
    }
    Ok(QuboProblem::new(q_full, constant)
        .with_groups(groups)
        .with_encoding(enc.clone())
        .with_gadgets(quad.gadgets().to_vec()))
}

/// Compile an objective through the path matching its expansion degree.
pub fn compile_qubo(
    obj: &ObjectiveData,
    enc: &BinaryEncoding,
    penalty_weight: Option<f64>,
) -> Result<QuboProblem> {
    if obj.operator().basis().degree() == 1 {
        build_affine_qubo(obj, enc)
    } else {
        compile_polynomial_qubo(obj, enc, penalty_weight)
    }
}

/// Constraint direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintSense {
    /// `P(c) = 0`
    Eq,
    /// `P(c) <= 0`
    Le,
}

/// A polynomial constraint on the command vector.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    /// Single-row polynomial over the command variables.
    pub poly: PolyVec,
    pub sense: ConstraintSense,
    /// Slack bits for inequalities (ignored for equalities).
    pub slack_bits: u32,
    /// Slack scaling; derived from the sampled grid when absent.
    pub slack_scale: Option<f64>,
}

/// Compiled penalty block of one constraint, indexed in the global layout.
#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    /// One-sided quadratic entries of the squared residual.
    pub entries: Vec<PenaltyEntry>,
    /// Constant part of the squared residual.
    pub constant: f64,
    /// One-sided consistency penalty entries of the reduction gadgets.
    pub upsilon: Vec<PenaltyEntry>,
    pub groups: Vec<VarGroup>,
    pub gadgets: Vec<GadgetDef>,
    /// First variable index owned by this block.
    pub start_var: usize,
    /// One past the last variable index owned by this block.
    pub end_var: usize,
    pub warnings: Vec<String>,
}

impl ConstraintBlock {
    /// Squared-residual value at a bit assignment (gadget penalty excluded).
    pub fn residual_value(&self, bits: &[u8]) -> f64 {
        let quad: f64 = self
            .entries
            .iter()
            .map(|&(i, j, v)| {
                if bits[i] != 0 && bits[j] != 0 {
                    v
                } else {
                    0.0
                }
            })
            .sum();
        quad + self.constant
    }
}

/// Compile one polynomial constraint into a penalty block.
///
/// Inequalities get a non-negative encoded slack so that the residual
/// `P(c) + s` can vanish on the feasible side; the squared residual is then
/// reduced to quadratic form. `next_var` is the first variable index the
/// block may claim.
pub fn compile_constraint(
    spec: &ConstraintSpec,
    enc: &BinaryEncoding,
    next_var: usize,
) -> Result<ConstraintBlock> {
    if spec.poly.n_rows() != 1 {
        return Err(Error::Dimension("constraint polynomial must have one row".into()));
    }
    if spec.poly.basis().n_vars() != enc.n_vars() {
        return Err(Error::Dimension(format!(
            "constraint over {} variables, encoding covers {}",
            spec.poly.basis().n_vars(),
            enc.n_vars()
        )));
    }
    let mut warnings = Vec::new();
    let component_polys: Vec<BinPoly> =
        (0..enc.n_vars()).map(|i| enc.component_poly(i)).collect();
    let mut residual = BinPoly::zero();
    for (j, monomial) in spec.poly.basis().monomials().iter().enumerate() {
        let coeff = spec.poly.coeffs()[(0, j)];
        if coeff == 0.0 {
            continue;
        }
        let mut p = BinPoly::constant(coeff);
        for (i, &e) in monomial.exponents().iter().enumerate() {
            for _ in 0..e {
                p = p.mul(&component_polys[i]);
            }
        }
        residual.add_assign(&p);
    }

    let mut groups = Vec::new();
    let mut slack_len = 0usize;
    if spec.sense == ConstraintSense::Le {
        if spec.slack_bits < 1 {
            return Err(Error::Config(
                "inequality constraints need at least one slack bit".into(),
            ));
        }
        slack_len = spec.slack_bits as usize;
        let max_word = ((1u64 << spec.slack_bits) - 1) as f64;
        let needed = max_needed_slack(&spec.poly, enc)?;
        let scale = match spec.slack_scale {
            Some(s) => {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::Config("slack scaling must be positive".into()));
                }
                if s * max_word < needed * (1.0 - 1e-12) {
                    warnings.push(format!(
                        "slack range {:.6e} is below the sampled requirement {:.6e}; \
                         deeply feasible points cannot zero the residual",
                        s * max_word,
                        needed
                    ));
                }
                s
            }
            None => {
                if needed > 0.0 {
                    needed / max_word
                } else {
                    1.0
                }
            }
        };
        let places: Vec<f64> = (0..spec.slack_bits)
            .rev()
            .map(|j| (1u64 << j) as f64)
            .collect();
        for (j, &p) in places.iter().enumerate() {
            residual.add_term(&[next_var + j], scale * p);
        }
        groups.push(VarGroup::new("slack", next_var, slack_len));
    }

    let squared = residual.mul(&residual);
    let mut quad = Quadratizer::new(next_var + slack_len);
    let reduced = quad.reduce(&squared, 2)?;
    let end_var = quad.next_var();
    if end_var > next_var + slack_len {
        groups.push(VarGroup::new(
            "constraint_reduction",
            next_var + slack_len,
            end_var - next_var - slack_len,
        ));
    }

    let mut entries = Vec::new();
    let mut constant = 0.0;
    for (vars, coeff) in reduced.terms() {
        match vars.len() {
            0 => constant += coeff,
            1 => entries.push((vars[0], vars[0], coeff)),
            2 => entries.push((vars[0], vars[1], coeff)),
            d => {
                return Err(Error::Numerical(format!(
                    "constraint reduction left a degree-{d} term"
                )))
            }
        }
    }

    Ok(ConstraintBlock {
        entries,
        constant,
        upsilon: quad.penalty_entries(),
        groups,
        gadgets: quad.gadgets().to_vec(),
        start_var: next_var,
        end_var,
        warnings,
    })
}

/// Largest slack needed to zero the residual on the feasible side, sampled
/// over grid corners and a coarse lattice.
fn max_needed_slack(poly: &PolyVec, enc: &BinaryEncoding) -> Result<f64> {
    let n = enc.n_vars();
    let full = (1u64 << enc.n_bits) - 1;
    let levels_per_dim: u64 = (full + 1).min(5);
    let mut words = vec![0u64; n];
    let mut needed = 0.0f64;
    let total = (levels_per_dim as u128).pow(n as u32).min(1 << 20);
    for idx in 0..total {
        let mut rest = idx;
        for w in words.iter_mut() {
            let level = (rest % levels_per_dim as u128) as u64;
            rest /= levels_per_dim as u128;
            *w = if levels_per_dim == 1 {
                0
            } else {
                (level * full + (levels_per_dim - 1) / 2) / (levels_per_dim - 1)
            };
        }
        let point = enc.point_from_words(&words);
        let value = poly.eval(&point)?[0];
        needed = needed.max(-value);
    }
    Ok(needed.max(0.0))
}

/// Sum zero-padded penalty blocks onto a base problem.
///
/// Block `i` contributes its squared residual plus `lambda[i]` times its
/// gadget consistency penalty; variable ranges owned by different blocks
/// must not overlap.
pub fn assemble_constrained_qubo(
    base: &QuboProblem,
    blocks: &[ConstraintBlock],
    lambdas: &[f64],
) -> Result<QuboProblem> {
    if blocks.len() != lambdas.len() {
        return Err(Error::Config(format!(
            "{} constraint blocks but {} penalty weights",
            blocks.len(),
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !l.is_finite() || l <= 0.0) {
        return Err(Error::Config("penalty weights must be positive".into()));
    }
    let mut claimed: Vec<(usize, usize)> = Vec::new();
    for b in blocks {
        if b.start_var < base.m() {
            return Err(Error::Config(format!(
                "constraint block claims variable {} inside the base range 0..{}",
                b.start_var,
                base.m()
            )));
        }
        for &(s, e) in &claimed {
            if b.start_var < e && s < b.end_var {
                return Err(Error::Config(
                    "constraint blocks have overlapping variable ranges".into(),
                ));
            }
        }
        claimed.push((b.start_var, b.end_var));
    }

    let m_bar = blocks
        .iter()
        .map(|b| b.end_var)
        .chain(std::iter::once(base.m()))
        .max()
        .unwrap();
    let mut q = DMatrix::zeros(m_bar, m_bar);
    q.view_mut((0, 0), (base.m(), base.m())).copy_from(base.matrix());
    let add_sym = |q: &mut DMatrix<f64>, i: usize, j: usize, v: f64| {
        if i == j {
            q[(i, i)] += v;
        } else {
            q[(i, j)] += 0.5 * v;
            q[(j, i)] += 0.5 * v;
        }
    };
    let mut constant = base.constant();
    let mut groups = base.groups().to_vec();
    let mut gadgets = base.gadgets().to_vec();
    for (b, &lambda) in blocks.iter().zip(lambdas) {
        for &(i, j, v) in &b.entries {
            add_sym(&mut q, i, j, v);
        }
        for &(i, j, v) in &b.upsilon {
            add_sym(&mut q, i, j, lambda * v);
        }
        constant += b.constant;
        groups.extend(b.groups.iter().cloned());
        gadgets.extend(b.gadgets.iter().cloned());
    }

    let mut out = QuboProblem::new(q, constant)
        .with_groups(groups)
        .with_gadgets(gadgets);
    if let Some(enc) = base.encoding() {
        out = out.with_encoding(enc.clone());
    }
    Ok(out)
}

/// Spin-variable form of a binary quadratic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    coupling: DMatrix<f64>,
    field: DVector<f64>,
    offset: f64,
}

impl IsingProblem {
    pub fn m(&self) -> usize {
        self.field.len()
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn field(&self) -> &DVector<f64> {
        &self.field
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `sigma' J sigma + h sigma + offset` at a spin assignment.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let m = self.m();
        debug_assert_eq!(spins.len(), m);
        let mut e = self.offset;
        for i in 0..m {
            e += self.field[i] * f64::from(spins[i]);
            for j in 0..m {
                e += self.coupling[(i, j)] * f64::from(spins[i]) * f64::from(spins[j]);
            }
        }
        e
    }

    /// Spin assignment for a bit assignment (`sigma = 2 xi - 1`).
    pub fn spins_from_bits(bits: &[u8]) -> Vec<i8> {
        bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect()
    }
}

/// Convert to spin variables: `J = Q/4`, `h = (row sums of Q)/2`, offset
/// `(sum of Q)/4`, so the spin energy reproduces the binary energy exactly.
pub fn to_ising(problem: &QuboProblem) -> IsingProblem {
    let q = problem.matrix();
    let m = problem.m();
    let coupling = q * 0.25;
    let field = DVector::from_fn(m, |i, _| 0.5 * q.row(i).sum());
    let offset = 0.25 * q.sum();
    IsingProblem {
        coupling,
        field,
        offset,
    }
}
