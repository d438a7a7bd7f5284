//! Exact Gaussian moment oracle and polynomial inner products.
//!
//! Every integral in the coefficient system is an expectation of a polynomial
//! under a zero-mean Gaussian marginal or a product of two such marginals.
//! Those reduce to raw moments E[X^a], which the Wick pairing recursion
//! computes exactly: the first variable instance pairs with each remaining
//! instance, weighted by the corresponding covariance entry.  Odd total
//! degrees vanish identically.
//!
//! The recursion memoizes on the exponent pattern, so the cost is governed by
//! the number of distinct sub-patterns rather than the factorially growing
//! pairing count.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{GaddError, Result};
use crate::measure::{MarginalMeasure, VariableSubset};

/// Default cap on the total degree accepted by the moment oracle.
pub const DEFAULT_DEGREE_CAP: u32 = 32;

/// Per-variable exponents aligned with a [`VariableSubset`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Self {
        Self(degrees)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// True when every entry is at least 1.  Basis functions of a strictly
    /// |u|-variate component carry all-nonzero indices.
    pub fn all_nonzero(&self) -> bool {
        self.0.iter().all(|&d| d >= 1)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", d)?;
        }
        write!(f, ")")
    }
}

/// A sparse polynomial over the variables of a subset, stored as a map from
/// monomial exponents to coefficients.  Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    subset: VariableSubset,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(subset: VariableSubset) -> Self {
        Self {
            subset,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(subset: VariableSubset, value: f64) -> Self {
        let mut p = Self::zero(subset);
        let k = p.subset.len();
        p.insert(vec![0; k], value);
        p
    }

    /// A single monomial c * x^e.
    pub fn monomial(subset: VariableSubset, exponents: Vec<u32>, coefficient: f64) -> Result<Self> {
        if exponents.len() != subset.len() {
            return Err(GaddError::DimensionMismatch {
                expected: subset.len(),
                actual: exponents.len(),
            });
        }
        let mut p = Self::zero(subset);
        p.insert(exponents, coefficient);
        Ok(p)
    }

    pub fn subset(&self) -> &VariableSubset {
        &self.subset
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn insert(&mut self, exponents: Vec<u32>, coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponents) {
            Entry::Vacant(slot) => {
                slot.insert(coefficient);
            }
            Entry::Occupied(mut slot) => {
                let updated = *slot.get() + coefficient;
                if updated == 0.0 {
                    slot.remove();
                } else {
                    *slot.get_mut() = updated;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.subset != other.subset {
            return Err(GaddError::SubsetNotContained {
                inner: other.subset.indices().to_vec(),
                outer: self.subset.indices().to_vec(),
            });
        }
        let mut out = self.clone();
        for (e, &c) in other.terms.iter() {
            out.insert(e.clone(), c);
        }
        Ok(out)
    }

    pub fn axpy(&mut self, scale: f64, other: &Polynomial) {
        debug_assert_eq!(self.subset, other.subset);
        for (e, &c) in other.terms.iter() {
            self.insert(e.clone(), scale * c);
        }
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = Self::zero(self.subset.clone());
        for (e, &c) in self.terms.iter() {
            out.insert(e.clone(), factor * c);
        }
        out
    }

    /// Product of two polynomials over the same subset.
    pub fn multiply(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.subset != other.subset {
            return Err(GaddError::SubsetNotContained {
                inner: other.subset.indices().to_vec(),
                outer: self.subset.indices().to_vec(),
            });
        }
        let mut out = Self::zero(self.subset.clone());
        for (ea, &ca) in self.terms.iter() {
            for (eb, &cb) in other.terms.iter() {
                let e: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// Partial derivative with respect to the variable at local position
    /// `pos`.
    pub fn derivative(&self, pos: usize) -> Polynomial {
        let mut out = Self::zero(self.subset.clone());
        for (e, &c) in self.terms.iter() {
            if e[pos] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[pos] -= 1;
            out.insert(d, c * e[pos] as f64);
        }
        out
    }

    /// Multiplies by the variable at local position `pos`.
    pub fn shift_up(&self, pos: usize) -> Polynomial {
        let mut out = Self::zero(self.subset.clone());
        for (e, &c) in self.terms.iter() {
            let mut s = e.clone();
            s[pos] += 1;
            out.insert(s, c);
        }
        out
    }

    /// Re-embeds the polynomial over a larger subset, mapping each exponent
    /// to the corresponding position of `target`.
    pub fn promote(&self, target: &VariableSubset) -> Result<Polynomial> {
        if !self.subset.is_subset_of(target) {
            return Err(GaddError::SubsetNotContained {
                inner: self.subset.indices().to_vec(),
                outer: target.indices().to_vec(),
            });
        }
        let positions: Vec<usize> = self
            .subset
            .indices()
            .iter()
            .map(|&i| target.position(i).expect("checked containment"))
            .collect();
        let mut out = Self::zero(target.clone());
        for (e, &c) in self.terms.iter() {
            let mut big = vec![0u32; target.len()];
            for (local, &exp) in e.iter().enumerate() {
                big[positions[local]] = exp;
            }
            out.insert(big, c);
        }
        Ok(out)
    }

    /// Evaluates the polynomial at a point aligned with its subset, by
    /// recursive Horner factoring on successive variables.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.subset.len() {
            return Err(GaddError::DimensionMismatch {
                expected: self.subset.len(),
                actual: point.len(),
            });
        }
        let terms: Vec<(&[u32], f64)> =
            self.terms.iter().map(|(e, &c)| (e.as_slice(), c)).collect();
        Ok(horner_eval(&terms, 0, point))
    }
}

/// Horner evaluation over lexicographically sorted terms: factor out the
/// leading variable, recurse on contiguous groups sharing its exponent.
fn horner_eval(terms: &[(&[u32], f64)], dim: usize, point: &[f64]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    if dim == point.len() {
        return terms.iter().map(|&(_, c)| c).sum();
    }
    // Contiguous groups by exponent at `dim`, ascending (BTreeMap order).
    let mut groups: Vec<(u32, f64)> = Vec::new();
    let mut start = 0;
    while start < terms.len() {
        let e = terms[start].0[dim];
        let mut end = start;
        while end < terms.len() && terms[end].0[dim] == e {
            end += 1;
        }
        groups.push((e, horner_eval(&terms[start..end], dim + 1, point)));
        start = end;
    }
    let x = point[dim];
    let mut acc = 0.0;
    let mut prev: Option<u32> = None;
    for &(e, v) in groups.iter().rev() {
        if let Some(p) = prev {
            for _ in 0..(p - e) {
                acc *= x;
            }
        }
        acc += v;
        prev = Some(e);
    }
    if let Some(p) = prev {
        for _ in 0..p {
            acc *= x;
        }
    }
    acc
}

/// E[X^a] under N(0, S_u), exact via memoized Wick pairing.
///
/// Returns 0 for odd total degree.  Degrees above [`DEFAULT_DEGREE_CAP`]
/// are rejected as a resource guard.
pub fn gaussian_moment(marginal: &MarginalMeasure, alpha: &MultiIndex) -> Result<f64> {
    gaussian_moment_with_cap(marginal, alpha, DEFAULT_DEGREE_CAP)
}

/// [`gaussian_moment`] with an explicit degree cap.
pub fn gaussian_moment_with_cap(
    marginal: &MarginalMeasure,
    alpha: &MultiIndex,
    cap: u32,
) -> Result<f64> {
    if alpha.len() != marginal.dimension() {
        return Err(GaddError::DimensionMismatch {
            expected: marginal.dimension(),
            actual: alpha.len(),
        });
    }
    let degree = alpha.total_degree();
    if degree > cap {
        return Err(GaddError::DegreeTooLarge { degree, cap });
    }
    if degree % 2 == 1 {
        return Ok(0.0);
    }
    let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
    Ok(wick(
        marginal.covariance(),
        alpha.degrees().to_vec(),
        &mut memo,
    ))
}

fn wick(cov: &nalgebra::DMatrix<f64>, alpha: Vec<u32>, memo: &mut HashMap<Vec<u32>, f64>) -> f64 {
    let Some(i) = alpha.iter().position(|&d| d > 0) else {
        return 1.0;
    };
    if let Some(&v) = memo.get(&alpha) {
        return v;
    }
    let mut total = 0.0;
    // Pair one instance of variable i with a second instance of i ...
    if alpha[i] >= 2 {
        let mut rest = alpha.clone();
        rest[i] -= 2;
        total += (alpha[i] - 1) as f64 * cov[(i, i)] * wick(cov, rest, memo);
    }
    // ... or with an instance of any other remaining variable j.
    for j in (i + 1)..alpha.len() {
        if alpha[j] == 0 {
            continue;
        }
        let mut rest = alpha.clone();
        rest[i] -= 1;
        rest[j] -= 1;
        total += alpha[j] as f64 * cov[(i, j)] * wick(cov, rest, memo);
    }
    memo.insert(alpha, total);
    total
}

/// Expectation of a polynomial under a marginal containing its subset.
pub fn expectation(poly: &Polynomial, marginal: &MarginalMeasure) -> Result<f64> {
    let promoted;
    let p = if poly.subset() == marginal.subset() {
        poly
    } else {
        promoted = poly.promote(marginal.subset())?;
        &promoted
    };
    let mut total = 0.0;
    for (e, &c) in p.terms() {
        total += c * gaussian_moment(marginal, &MultiIndex::new(e.clone()))?;
    }
    Ok(total)
}

/// Inner product E[g(X) h(X)] under N(0, S_w); both subsets must be
/// contained in w.
pub fn inner_product(g: &Polynomial, h: &Polynomial, marginal: &MarginalMeasure) -> Result<f64> {
    let w = marginal.subset();
    if !g.subset().is_subset_of(w) {
        return Err(GaddError::SubsetNotContained {
            inner: g.subset().indices().to_vec(),
            outer: w.indices().to_vec(),
        });
    }
    if !h.subset().is_subset_of(w) {
        return Err(GaddError::SubsetNotContained {
            inner: h.subset().indices().to_vec(),
            outer: w.indices().to_vec(),
        });
    }
    let gp = g.promote(w)?;
    let hp = h.promote(w)?;
    expectation(&gp.multiply(&hp)?, marginal)
}

/// The a-moment under the product measure f_a (x) f_b of two disjoint
/// marginals: the moment factorizes into the two blocks.
///
/// `alpha` is aligned with the union subset of `a` and `b` in sorted order.
pub fn product_measure_moment(
    a: &MarginalMeasure,
    b: &MarginalMeasure,
    alpha: &MultiIndex,
) -> Result<f64> {
    if !a.subset().is_disjoint_from(b.subset()) {
        return Err(GaddError::OverlappingSubsets {
            a: a.subset().indices().to_vec(),
            b: b.subset().indices().to_vec(),
        });
    }
    let union = a.subset().union(b.subset());
    if alpha.len() != union.len() {
        return Err(GaddError::DimensionMismatch {
            expected: union.len(),
            actual: alpha.len(),
        });
    }
    let mut alpha_a = vec![0u32; a.subset().len()];
    let mut alpha_b = vec![0u32; b.subset().len()];
    for (pos, &idx) in union.indices().iter().enumerate() {
        if let Some(p) = a.subset().position(idx) {
            alpha_a[p] = alpha.degrees()[pos];
        } else {
            let p = b.subset().position(idx).expect("union membership");
            alpha_b[p] = alpha.degrees()[pos];
        }
    }
    let ma = gaussian_moment(a, &MultiIndex::new(alpha_a))?;
    if ma == 0.0 {
        return Ok(0.0);
    }
    let mb = gaussian_moment(b, &MultiIndex::new(alpha_b))?;
    Ok(ma * mb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GaussianMeasure;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn unit_1d() -> MarginalMeasure {
        MarginalMeasure::new(
            VariableSubset::new(vec![1]).unwrap(),
            DMatrix::identity(1, 1),
        )
        .unwrap()
    }

    fn correlated_2d(rho: f64) -> MarginalMeasure {
        MarginalMeasure::new(
            VariableSubset::new(vec![1, 2]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn second_moment_is_variance() {
        let m = gaussian_moment(&unit_1d(), &MultiIndex::new(vec![2])).unwrap();
        assert_eq!(m, 1.0);
    }

    #[test]
    fn cross_moment_is_correlation() {
        let m = gaussian_moment(&correlated_2d(0.3), &MultiIndex::new(vec![1, 1])).unwrap();
        assert_abs_diff_eq!(m, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn fourth_cross_moment_counts_three_pairings() {
        let rho = 0.4;
        let m = gaussian_moment(&correlated_2d(rho), &MultiIndex::new(vec![2, 2])).unwrap();
        assert_abs_diff_eq!(m, 1.0 + 2.0 * rho * rho, epsilon = 1e-14);
    }

    #[test]
    fn univariate_fourth_moment() {
        let m = gaussian_moment(&unit_1d(), &MultiIndex::new(vec![4])).unwrap();
        assert_abs_diff_eq!(m, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn odd_degree_vanishes_exactly() {
        let m = correlated_2d(0.7);
        for alpha in [vec![1, 0], vec![3, 0], vec![2, 1], vec![1, 4]] {
            assert_eq!(
                gaussian_moment(&m, &MultiIndex::new(alpha)).unwrap(),
                0.0,
                "odd moments must be identically zero"
            );
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let res = gaussian_moment(&unit_1d(), &MultiIndex::new(vec![34]));
        assert!(matches!(res, Err(GaddError::DegreeTooLarge { .. })));
    }

    #[test]
    fn inner_product_of_identity_variable() {
        let m = unit_1d();
        let x = Polynomial::monomial(m.subset().clone(), vec![1], 1.0).unwrap();
        assert_abs_diff_eq!(inner_product(&x, &x, &m).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn normalized_quadratic_has_zero_mean() {
        // (x^2 - 1)/sqrt(2) against the constant 1.
        let m = unit_1d();
        let sub = m.subset().clone();
        let mut q = Polynomial::monomial(sub.clone(), vec![2], 1.0 / 2.0_f64.sqrt()).unwrap();
        q.axpy(
            1.0,
            &Polynomial::constant(sub.clone(), -1.0 / 2.0_f64.sqrt()),
        );
        let one = Polynomial::constant(sub, 1.0);
        assert_abs_diff_eq!(inner_product(&q, &one, &m).unwrap(), 0.0, epsilon = 1e-15);
    }

    /// The closed-form degree-(1,1) orthonormal polynomial for a bivariate
    /// Gaussian with correlation rho.
    fn psi_11(subset: VariableSubset, rho: f64) -> Polynomial {
        let r2 = rho * rho;
        let scale = (1.0 + r2).sqrt() / (r2 - 1.0);
        let mut p = Polynomial::zero(subset.clone());
        p.axpy(
            scale * rho / (1.0 + r2),
            &Polynomial::monomial(subset.clone(), vec![2, 0], 1.0).unwrap(),
        );
        p.axpy(
            scale * rho / (1.0 + r2),
            &Polynomial::monomial(subset.clone(), vec![0, 2], 1.0).unwrap(),
        );
        p.axpy(
            -scale,
            &Polynomial::monomial(subset.clone(), vec![1, 1], 1.0).unwrap(),
        );
        p.axpy(
            scale * rho * (r2 - 1.0) / (1.0 + r2),
            &Polynomial::constant(subset, 1.0),
        );
        p
    }

    #[test]
    fn closed_form_psi_11_has_unit_norm() {
        let m = correlated_2d(0.2);
        let psi = psi_11(m.subset().clone(), 0.2);
        assert_abs_diff_eq!(inner_product(&psi, &psi, &m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inner_product_is_bilinear_and_symmetric() {
        let m = correlated_2d(0.5);
        let sub = m.subset().clone();
        let g1 = Polynomial::monomial(sub.clone(), vec![2, 1], 0.7).unwrap();
        let g2 = Polynomial::monomial(sub.clone(), vec![0, 2], -1.3).unwrap();
        let h = Polynomial::monomial(sub.clone(), vec![1, 1], 2.0).unwrap();
        let a = 1.7;
        let lhs = inner_product(&g1.scale(a).add(&g2).unwrap(), &h, &m).unwrap();
        let rhs = a * inner_product(&g1, &h, &m).unwrap() + inner_product(&g2, &h, &m).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        assert_abs_diff_eq!(
            inner_product(&g1, &h, &m).unwrap(),
            inner_product(&h, &g1, &m).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn inner_product_rejects_uncontained_subsets() {
        let m = correlated_2d(0.2);
        let outside =
            Polynomial::monomial(VariableSubset::new(vec![3]).unwrap(), vec![1], 1.0).unwrap();
        let x = Polynomial::monomial(m.subset().clone(), vec![1, 0], 1.0).unwrap();
        assert!(inner_product(&outside, &x, &m).is_err());
    }

    #[test]
    fn product_measure_moment_examples() {
        let a = unit_1d();
        let b = MarginalMeasure::new(
            VariableSubset::new(vec![2]).unwrap(),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        // Product of two zero means.
        assert_eq!(
            product_measure_moment(&a, &b, &MultiIndex::new(vec![1, 1])).unwrap(),
            0.0
        );
        // 1 x 1 under unit variances.
        assert_eq!(
            product_measure_moment(&a, &b, &MultiIndex::new(vec![2, 2])).unwrap(),
            1.0
        );
        // Correlated block times independent singleton factorizes.
        let ab = MarginalMeasure::new(
            VariableSubset::new(vec![1, 2]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]),
        )
        .unwrap();
        let c = MarginalMeasure::new(
            VariableSubset::new(vec![3]).unwrap(),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        let m = product_measure_moment(&ab, &c, &MultiIndex::new(vec![1, 1, 2])).unwrap();
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn product_measure_rejects_overlap() {
        let a = correlated_2d(0.2);
        let b = MarginalMeasure::new(
            VariableSubset::new(vec![2, 3]).unwrap(),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert!(matches!(
            product_measure_moment(&a, &b, &MultiIndex::new(vec![1, 1, 1])),
            Err(GaddError::OverlappingSubsets { .. })
        ));
    }

    #[test]
    fn product_measure_equals_block_diagonal_moment() {
        let a = correlated_2d(0.6);
        let b = MarginalMeasure::new(
            VariableSubset::new(vec![3, 4]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.5]),
        )
        .unwrap();
        let mut block = DMatrix::<f64>::zeros(4, 4);
        block.view_mut((0, 0), (2, 2)).copy_from(a.covariance());
        block.view_mut((2, 2), (2, 2)).copy_from(b.covariance());
        let joint =
            MarginalMeasure::new(VariableSubset::new(vec![1, 2, 3, 4]).unwrap(), block).unwrap();
        for alpha in [
            vec![2, 0, 2, 0],
            vec![1, 1, 1, 1],
            vec![2, 2, 0, 2],
            vec![4, 0, 0, 0],
        ] {
            let alpha = MultiIndex::new(alpha);
            let split = product_measure_moment(&a, &b, &alpha).unwrap();
            let whole = gaussian_moment(&joint, &alpha).unwrap();
            assert_eq!(split, whole, "factorization must be exact for {:?}", alpha);
        }
    }

    #[test]
    fn horner_evaluation_matches_direct_sum() {
        let sub = VariableSubset::new(vec![1, 2, 3]).unwrap();
        let mut p = Polynomial::zero(sub.clone());
        p.axpy(
            1.5,
            &Polynomial::monomial(sub.clone(), vec![2, 0, 1], 1.0).unwrap(),
        );
        p.axpy(
            -0.75,
            &Polynomial::monomial(sub.clone(), vec![0, 3, 0], 1.0).unwrap(),
        );
        p.axpy(2.0, &Polynomial::constant(sub.clone(), 1.0));
        let x = [1.3, -0.7, 0.4];
        let direct = 1.5 * x[0] * x[0] * x[2] - 0.75 * x[1] * x[1] * x[1] + 2.0;
        assert_abs_diff_eq!(p.evaluate(&x).unwrap(), direct, epsilon = 1e-14);
    }

    #[test]
    fn monte_carlo_cross_check_of_inner_product() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.4, -0.2, 0.4, 1.0]);
        let measure = GaussianMeasure::validate(cov).unwrap();
        let marginal = measure.full_marginal();
        let sub = marginal.subset().clone();

        // A couple of random sparse polynomials of degree <= 4.
        let random_poly = |rng: &mut rand_chacha::ChaCha12Rng| {
            let mut p = Polynomial::zero(sub.clone());
            for _ in 0..4 {
                let mut e = vec![0u32; 3];
                let mut budget = 4;
                for item in e.iter_mut() {
                    let d = rng.gen_range(0..=budget.min(2));
                    *item = d;
                    budget -= d;
                }
                p.axpy(
                    rng.gen_range(-1.0..1.0),
                    &Polynomial::monomial(sub.clone(), e, 1.0).unwrap(),
                );
            }
            p
        };
        let g = random_poly(&mut rng);
        let h = random_poly(&mut rng);

        let exact = inner_product(&g, &h, &marginal).unwrap();

        let n = 1_000_000;
        let samples = measure.sample(n, 77);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for s in &samples {
            let v = g.evaluate(s.as_slice()).unwrap() * h.evaluate(s.as_slice()).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mc = sum / n as f64;
        let var = (sumsq / n as f64 - mc * mc).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mc - exact).abs() <= 3.0 * se + 1e-12,
            "MC estimate {} vs exact {} (3se = {})",
            mc,
            exact,
            3.0 * se
        );
    }
}
