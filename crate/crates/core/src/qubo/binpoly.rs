//! Polynomials over binary variables and quadratization by substitution
//! gadgets.
//!
//! Terms are index sets: because every variable is 0/1, powers collapse and a
//! monomial is just the set of variables it touches. Degree reduction
//! replaces a variable pair inside an over-long monomial with a fresh
//! variable and charges the penalty `3 z - 2 z a - 2 z b + a b`, which is
//! zero exactly when `z = a b`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse polynomial in 0/1 variables; keys are sorted, deduplicated
/// variable index lists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinPoly {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl BinPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        let mut p = Self::default();
        p.add_term(&[], value);
        p
    }

    pub fn var(index: usize) -> Self {
        let mut p = Self::default();
        p.add_term(&[index], 1.0);
        p
    }

    /// Affine expression `offset + sum(weight_i * xi_i)`.
    pub fn affine(offset: f64, weights: &[(usize, f64)]) -> Self {
        let mut p = Self::default();
        p.add_term(&[], offset);
        for &(i, w) in weights {
            p.add_term(&[i], w);
        }
        p
    }

    /// Add `coeff` to the monomial over `vars` (any order, repeats collapse).
    pub fn add_term(&mut self, vars: &[usize], coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add_assign(&mut self, other: &BinPoly) {
        for (vars, &coeff) in &other.terms {
            self.add_term(vars, coeff);
        }
    }

    pub fn scale(&self, factor: f64) -> BinPoly {
        let mut out = BinPoly::default();
        for (vars, &coeff) in &self.terms {
            out.add_term(vars, coeff * factor);
        }
        out
    }

    pub fn mul(&self, other: &BinPoly) -> BinPoly {
        let mut out = BinPoly::default();
        for (va, &ca) in &self.terms {
            for (vb, &cb) in &other.terms {
                let mut key = va.clone();
                key.extend_from_slice(vb);
                out.add_term(&key, ca * cb);
            }
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|v| v.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.terms.iter().map(|(v, &c)| (v.as_slice(), c))
    }

    pub fn coeff(&self, vars: &[usize]) -> f64 {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    /// Sum of absolute coefficient values.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|v| v.last().copied()).max()
    }

    pub fn eval(&self, bits: &[u8]) -> f64 {
        self.terms
            .iter()
            .map(|(vars, &c)| {
                if vars.iter().all(|&v| bits[v] != 0) {
                    c
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Split an affine polynomial into `(constant, linear weights)`.
    /// Fails if any term has degree above 1.
    pub fn as_affine(&self) -> Result<(f64, Vec<(usize, f64)>)> {
        let mut constant = 0.0;
        let mut linear = Vec::new();
        for (vars, &coeff) in &self.terms {
            match vars.len() {
                0 => constant = coeff,
                1 => linear.push((vars[0], coeff)),
                d => {
                    return Err(Error::Numerical(format!(
                        "expected an affine polynomial, found a degree-{d} term"
                    )))
                }
            }
        }
        Ok((constant, linear))
    }
}

/// A substitution `fresh = left * right` introduced during degree reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetDef {
    pub var: usize,
    pub left: usize,
    pub right: usize,
}

/// One-sided quadratic entry `(i, j, value)` of a penalty matrix.
pub type PenaltyEntry = (usize, usize, f64);

/// Shared degree-reduction state: substitution pairs are reused across every
/// polynomial reduced through the same instance, so a family of components
/// ends up affine in one common augmented variable vector.
#[derive(Debug, Clone)]
pub struct Quadratizer {
    next_var: usize,
    pairs: BTreeMap<(usize, usize), usize>,
    gadgets: Vec<GadgetDef>,
    penalty: BTreeMap<(usize, usize), f64>,
}

impl Quadratizer {
    /// `next_var` is the first free variable index.
    pub fn new(next_var: usize) -> Self {
        Self {
            next_var,
            pairs: BTreeMap::new(),
            gadgets: Vec::new(),
            penalty: BTreeMap::new(),
        }
    }

    pub fn next_var(&self) -> usize {
        self.next_var
    }

    pub fn gadgets(&self) -> &[GadgetDef] {
        &self.gadgets
    }

    /// One-sided penalty entries `(i, j, value)`; `xi' P xi` is the summed
    /// consistency penalty of all substitutions.
    pub fn penalty_entries(&self) -> Vec<PenaltyEntry> {
        self.penalty.iter().map(|(&(i, j), &v)| (i, j, v)).collect()
    }

    pub fn penalty_matrix(&self, m: usize) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(m, m);
        for (&(i, j), &v) in &self.penalty {
            u[(i, j)] += v;
        }
        u
    }

    fn pair_var(&mut self, a: usize, b: usize) -> usize {
        if let Some(&l) = self.pairs.get(&(a, b)) {
            return l;
        }
        let l = self.next_var;
        self.next_var += 1;
        self.pairs.insert((a, b), l);
        self.gadgets.push(GadgetDef {
            var: l,
            left: a,
            right: b,
        });
        *self.penalty.entry((a, b)).or_insert(0.0) += 1.0;
        *self.penalty.entry((l, a)).or_insert(0.0) += -2.0;
        *self.penalty.entry((l, b)).or_insert(0.0) += -2.0;
        *self.penalty.entry((l, l)).or_insert(0.0) += 3.0;
        l
    }

    /// Rewrite every monomial above `target` degree by pair substitution.
    /// Pairing is deterministic: terms are visited in sorted order and the
    /// two lowest-index variables of an over-long term are merged first.
    pub fn reduce(&mut self, poly: &BinPoly, target: usize) -> Result<BinPoly> {
        if target < 1 {
            return Err(Error::Config("reduction target degree must be at least 1".into()));
        }
        let mut current = poly.clone();
        loop {
            let Some(vars) = current
                .terms
                .keys()
                .find(|v| v.len() > target)
                .cloned()
            else {
                return Ok(current);
            };
            let (a, b) = (vars[0], vars[1]);
            let l = self.pair_var(a, b);
            let mut next = BinPoly::default();
            for (term_vars, &coeff) in &current.terms {
                if term_vars.len() > target
                    && term_vars.binary_search(&a).is_ok()
                    && term_vars.binary_search(&b).is_ok()
                {
                    let mut rewritten: Vec<usize> = term_vars
                        .iter()
                        .copied()
                        .filter(|&v| v != a && v != b)
                        .collect();
                    rewritten.push(l);
                    next.add_term(&rewritten, coeff);
                } else {
                    next.add_term(term_vars, coeff);
                }
            }
            current = next;
        }
    }
}

/// Single-polynomial degree reduction. Returns the rewritten polynomial, the
/// one-sided penalty entries and the next free variable index.
pub fn reduce_degree(
    poly: &BinPoly,
    target: usize,
    next_var: usize,
) -> Result<(BinPoly, Vec<PenaltyEntry>, usize)> {
    let mut quad = Quadratizer::new(next_var);
    let reduced = quad.reduce(poly, target)?;
    Ok((reduced, quad.penalty_entries(), quad.next_var()))
}

/// Evaluate the consistency penalty entries at a bit assignment.
pub fn penalty_value(entries: &[PenaltyEntry], bits: &[u8]) -> f64 {
    entries
        .iter()
        .map(|&(i, j, v)| {
            if bits[i] != 0 && bits[j] != 0 {
                v
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn powers_collapse_by_idempotence() {
        // (x0 + 1)^2 = x0^2 + 2 x0 + 1 = 3 x0 + 1
        let p = BinPoly::affine(1.0, &[(0, 1.0)]);
        let sq = p.mul(&p);
        assert_eq!(sq.coeff(&[0]), 3.0);
        assert_eq!(sq.coeff(&[]), 1.0);
        assert_eq!(sq.degree(), 1);
    }

    #[test]
    fn product_merges_variable_sets() {
        let p = BinPoly::var(0).mul(&BinPoly::var(2));
        assert_eq!(p.coeff(&[0, 2]), 1.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn penalty_is_positive_on_violation() {
        // z = 1 with a = 1, b = 0 costs 3 - 2 = 1
        let mut quad = Quadratizer::new(3);
        let poly = {
            let mut p = BinPoly::default();
            p.add_term(&[0, 1, 2], 1.0);
            p
        };
        quad.reduce(&poly, 2).unwrap();
        let entries = quad.penalty_entries();
        // bits: a=1, b=0, c=anything(0), z=1
        assert_eq!(penalty_value(&entries, &[1, 0, 0, 1]), 1.0);
    }

    #[test]
    fn penalty_vanishes_exactly_on_consistent_assignments() {
        let mut quad = Quadratizer::new(2);
        let poly = {
            let mut p = BinPoly::default();
            p.add_term(&[0, 1], 1.0);
            p
        };
        // force one gadget by reducing to degree 1
        quad.reduce(&poly, 1).unwrap();
        let entries = quad.penalty_entries();
        for a in 0..2u8 {
            for b in 0..2u8 {
                let consistent = a & b;
                assert_eq!(penalty_value(&entries, &[a, b, consistent]), 0.0);
                let wrong = 1 - consistent;
                assert!(penalty_value(&entries, &[a, b, wrong]) > 0.0);
            }
        }
    }

    #[test]
    fn cubic_term_reduces_left_pair_first() {
        let mut poly = BinPoly::default();
        poly.add_term(&[0, 1, 2], 1.0);
        let (reduced, entries, next) = reduce_degree(&poly, 2, 3).unwrap();
        assert_eq!(next, 4);
        // term becomes x2 * x3 with x3 = x0 x1
        assert_eq!(reduced.coeff(&[2, 3]), 1.0);
        assert_eq!(reduced.degree(), 2);
        let expect: Vec<(usize, usize, f64)> =
            vec![(0, 1, 1.0), (3, 0, -2.0), (3, 1, -2.0), (3, 3, 3.0)];
        let mut got = entries.clone();
        got.sort_by_key(|&(i, j, _)| (i, j));
        let mut want = expect;
        want.sort_by_key(|&(i, j, _)| (i, j));
        assert_eq!(got, want);

        // constrained minima agree over all 16 assignments of (x0..x3)
        let lambda = 2.0 * poly.abs_coeff_sum();
        let mut best_orig = f64::INFINITY;
        for m in 0..8u32 {
            let bits = [(m & 1) as u8, ((m >> 1) & 1) as u8, ((m >> 2) & 1) as u8];
            best_orig = best_orig.min(poly.eval(&bits));
        }
        let mut best_reduced = f64::INFINITY;
        for m in 0..16u32 {
            let bits = [
                (m & 1) as u8,
                ((m >> 1) & 1) as u8,
                ((m >> 2) & 1) as u8,
                ((m >> 3) & 1) as u8,
            ];
            let v = reduced.eval(&bits) + lambda * penalty_value(&entries, &bits);
            best_reduced = best_reduced.min(v);
        }
        assert_eq!(best_orig, best_reduced);
    }

    #[test]
    fn shared_pairs_are_reused_across_polynomials() {
        let mut quad = Quadratizer::new(2);
        let mut p1 = BinPoly::default();
        p1.add_term(&[0, 1], 1.0);
        let mut p2 = BinPoly::default();
        p2.add_term(&[0, 1], -3.0);
        let r1 = quad.reduce(&p1, 1).unwrap();
        let r2 = quad.reduce(&p2, 1).unwrap();
        assert_eq!(quad.next_var(), 3);
        assert_eq!(r1.coeff(&[2]), 1.0);
        assert_eq!(r2.coeff(&[2]), -3.0);
        assert_eq!(quad.gadgets().len(), 1);
    }

    /// Exhaustive check that reduction plus penalty preserves minima and
    /// minimizers on random polynomials.
    #[test]
    fn reduction_preserves_minima_on_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n = rng.gen_range(3..=5);
            let mut poly = BinPoly::default();
            for _ in 0..rng.gen_range(3..10) {
                let deg = rng.gen_range(1..=4.min(n));
                let mut vars: Vec<usize> = (0..n).collect();
                for i in (1..vars.len()).rev() {
                    vars.swap(i, rng.gen_range(0..=i));
                }
                vars.truncate(deg);
                poly.add_term(&vars, rng.gen_range(-2.0..2.0));
            }
            let (reduced, entries, next) = reduce_degree(&poly, 2, n).unwrap();
            let lambda = 2.0 * poly.abs_coeff_sum();

            let mut best_orig = f64::INFINITY;
            for m in 0..(1u32 << n) {
                let bits: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
                best_orig = best_orig.min(poly.eval(&bits));
            }
            let mut best_red = f64::INFINITY;
            let mut arg_red: Vec<u8> = Vec::new();
            for m in 0..(1u64 << next) {
                let bits: Vec<u8> = (0..next).map(|i| ((m >> i) & 1) as u8).collect();
                let v = reduced.eval(&bits) + lambda * penalty_value(&entries, &bits);
                if v < best_red {
                    best_red = v;
                    arg_red = bits;
                }
            }
            assert!(
                (best_orig - best_red).abs() <= 1e-12 * (1.0 + best_orig.abs()),
                "minima differ: {best_orig} vs {best_red}"
            );
            // restriction of the reduced minimizer solves the original
            let restricted = poly.eval(&arg_red[..n]);
            assert!(
                (restricted - best_orig).abs() <= 1e-12 * (1.0 + best_orig.abs()),
                "restricted minimizer misses optimum"
            );
        }
    }
}
