//! Measure-consistent multivariate Hermite orthonormal polynomials.
//!
//! For a Gaussian marginal with density phi(x; S_u), repeated differentiation
//! gives polynomials p_j with d^j phi = p_j phi.  The raw Hermite polynomial
//! is (-1)^{|j|} p_j, computed by the recurrence
//!
//! ```text
//!   p_{j+e_i} = d p_j / d x_i - p_j * (S_u^-1 x)_i,     p_0 = 1.
//! ```
//!
//! These are orthogonal to all polynomials of strictly lower total degree and
//! integrate to zero against the marginal in every coordinate direction when
//! all index parts are nonzero, which is exactly the annihilating property
//! the decomposition needs.  Normalization divides by the norm, i.e. the
//! square root of the self inner product; the unit-norm closed forms for
//! degree <= 2 are then reproduced exactly.
//!
//! Members of the same subset and the same total degree are not mutually
//! orthogonal for a correlated marginal once the degree exceeds 2, so a
//! Gram-Schmidt sweep runs over each same-degree block in canonical order.
//! Without it the coefficient system would pair non-orthonormal functions
//! with Fourier-style projections and the truncated surrogate would no
//! longer reproduce polynomial responses exactly.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{GaddError, Result};
use crate::measure::{GaussianMeasure, MarginalMeasure, VariableSubset};
use crate::moments::{expectation, inner_product, MultiIndex, Polynomial};

/// Resource cap on the total degree of a single basis function.
const HERMITE_DEGREE_CAP: u32 = 16;

/// Resource caps for basis construction at desk scale.
const MAX_ORDER: u32 = 10;
const MAX_SUBSET_SIZE: usize = 6;

/// Verification threshold for hierarchical orthogonality.
const HIERARCHICAL_TOL: f64 = 1e-8;

/// One orthonormal basis function psi_{u,j}.
#[derive(Clone, Debug)]
pub struct BasisFunction {
    subset: VariableSubset,
    index: MultiIndex,
    poly: Polynomial,
    norm_check: f64,
}

impl BasisFunction {
    pub fn subset(&self) -> &VariableSubset {
        &self.subset
    }

    pub fn index(&self) -> &MultiIndex {
        &self.index
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    /// Self inner product at construction time; should be 1 to within 1e-10.
    pub fn norm_check(&self) -> f64 {
        self.norm_check
    }

    /// Evaluates the basis function at a point aligned with its subset.
    pub fn evaluate(&self, x_u: &[f64]) -> Result<f64> {
        self.poly.evaluate(x_u)
    }
}

/// The ordered collection of basis functions for a truncation (S, m): every
/// pair (u, j) with 1 <= |u| <= S, |j| <= m, and all parts of j nonzero.
///
/// Ordering is (|u|, u lexicographic, |j|, j lexicographic within the same
/// total degree); it fixes the row and column order of the coefficient
/// system.
#[derive(Clone, Debug)]
pub struct BasisSet {
    measure: GaussianMeasure,
    s_max: usize,
    order: u32,
    functions: Vec<BasisFunction>,
    lookup: HashMap<(Vec<usize>, Vec<u32>), usize>,
    subsets: Vec<VariableSubset>,
}

impl BasisSet {
    pub fn measure(&self) -> &GaussianMeasure {
        &self.measure
    }

    /// The truncation (S, m).
    pub fn truncation(&self) -> (usize, u32) {
        (self.s_max, self.order)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    /// The subsets covered by the truncation, in canonical order.
    pub fn subsets(&self) -> &[VariableSubset] {
        &self.subsets
    }

    pub fn position(&self, subset: &VariableSubset, index: &MultiIndex) -> Option<usize> {
        self.lookup
            .get(&(subset.indices().to_vec(), index.degrees().to_vec()))
            .copied()
    }

    pub fn get(&self, subset: &VariableSubset, index: &MultiIndex) -> Option<&BasisFunction> {
        self.position(subset, index).map(|p| &self.functions[p])
    }

    /// JSON dump of every function's subset, index, and monomial
    /// coefficients, for inspection and debugging.
    pub fn debug_dump_json(&self) -> String {
        #[derive(Serialize)]
        struct TermDump {
            exponents: Vec<u32>,
            coefficient: f64,
        }
        #[derive(Serialize)]
        struct FunctionDump {
            subset: Vec<usize>,
            index: Vec<u32>,
            terms: Vec<TermDump>,
            norm_check: f64,
        }
        let dump: Vec<FunctionDump> = self
            .functions
            .iter()
            .map(|f| FunctionDump {
                subset: f.subset.indices().to_vec(),
                index: f.index.degrees().to_vec(),
                terms: f
                    .poly
                    .terms()
                    .map(|(e, &c)| TermDump {
                        exponents: e.clone(),
                        coefficient: c,
                    })
                    .collect(),
                norm_check: f.norm_check,
            })
            .collect();
        serde_json::to_string_pretty(&dump).expect("basis dump serialization cannot fail")
    }
}

/// All subsets of {1..n} of size k, in lexicographic order.
pub(crate) fn subsets_of_size(n: usize, k: usize) -> Vec<VariableSubset> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<VariableSubset>,
    ) {
        if current.len() == k {
            out.push(VariableSubset::new(current.clone()).expect("generated sorted"));
            return;
        }
        let remaining = k - current.len();
        for i in start..=(n + 1 - remaining) {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    if k >= 1 && k <= n {
        rec(1, n, k, &mut current, &mut out);
    }
    out
}

/// All non-empty subsets of {1..n} with size at most `max_size`, ordered by
/// (size, lexicographic).
pub(crate) fn subsets_up_to(n: usize, max_size: usize) -> Vec<VariableSubset> {
    (1..=max_size.min(n))
        .flat_map(|k| subsets_of_size(n, k))
        .collect()
}

/// Compositions of `degree` into `parts` parts, each at least 1, in
/// lexicographic order.
pub(crate) fn compositions(degree: u32, parts: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(parts);
    fn rec(remaining: u32, slots: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            current.push(remaining);
            out.push(MultiIndex::new(current.clone()));
            current.pop();
            return;
        }
        for d in 1..=(remaining - slots as u32 + 1) {
            current.push(d);
            rec(remaining - d, slots - 1, current, out);
            current.pop();
        }
    }
    if parts >= 1 && degree >= parts as u32 {
        rec(degree, parts, &mut current, &mut out);
    }
    out
}

/// All-nonzero multi-indices of length `parts` with total degree up to
/// `order`, graded then lexicographic.
pub(crate) fn admissible_indices(parts: usize, order: u32) -> Vec<MultiIndex> {
    (parts as u32..=order)
        .flat_map(|d| compositions(d, parts))
        .collect()
}

/// The raw (unnormalized) Hermite polynomial for index `j` under the
/// marginal, via the differentiation recurrence.
pub fn hermite_raw(marginal: &MarginalMeasure, index: &MultiIndex) -> Result<Polynomial> {
    if index.len() != marginal.dimension() {
        return Err(GaddError::DimensionMismatch {
            expected: marginal.dimension(),
            actual: index.len(),
        });
    }
    let total = index.total_degree();
    if total > HERMITE_DEGREE_CAP {
        return Err(GaddError::DegreeTooLarge {
            degree: total,
            cap: HERMITE_DEGREE_CAP,
        });
    }
    let precision = marginal.precision();
    let subset = marginal.subset().clone();
    let k = subset.len();
    let mut p = Polynomial::constant(subset.clone(), 1.0);
    for (i, &reps) in index.degrees().iter().enumerate() {
        for _ in 0..reps {
            // p <- dp/dx_i - p * (S^-1 x)_i
            let mut next = p.derivative(i);
            for a in 0..k {
                let w = precision[(i, a)];
                if w != 0.0 {
                    next.axpy(-w, &p.shift_up(a));
                }
            }
            p = next;
        }
    }
    if total % 2 == 1 {
        p = p.scale(-1.0);
    }
    Ok(p)
}

/// Scales a raw polynomial to unit norm under the marginal.
pub fn orthonormalize(
    raw: &Polynomial,
    marginal: &MarginalMeasure,
    index: MultiIndex,
) -> Result<BasisFunction> {
    let norm_sq = inner_product(raw, raw, marginal)?;
    if norm_sq.is_nan() || norm_sq <= 0.0 {
        return Err(GaddError::NonPositiveNorm { norm: norm_sq });
    }
    let poly = raw.scale(1.0 / norm_sq.sqrt());
    let norm_check = inner_product(&poly, &poly, marginal)?;
    Ok(BasisFunction {
        subset: marginal.subset().clone(),
        index,
        poly,
        norm_check,
    })
}

/// Builds the full basis for the truncation (S, m).
///
/// The member count is sum_{k=1..min(S,m)} C(N,k) C(m,k), by direct
/// enumeration of admissible pairs.  (The closed form without the S bound
/// on k overcounts whenever S < min(N, m).)
///
/// After the raw construction, two passes run per subset:
///
/// 1. a Gram-Schmidt sweep over members sharing the same total degree, so
///    the within-subset block of the coefficient system is exactly the
///    identity;
/// 2. a verification of zero means and hierarchical orthogonality against
///    all nested members, with a Gram-Schmidt repair if a check fails.
///    The Hermite construction satisfies both properties analytically, so
///    the repair only fires on numerically difficult covariances.
pub fn build_basis(measure: &GaussianMeasure, s_max: usize, order: u32) -> Result<BasisSet> {
    let n = measure.dimension();
    if s_max < 1 || s_max > n {
        return Err(GaddError::InvalidTruncation(format!(
            "S must satisfy 1 <= S <= {}, got {}",
            n, s_max
        )));
    }
    if order < 1 {
        return Err(GaddError::InvalidTruncation("m must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(GaddError::InvalidTruncation(format!(
            "m = {} exceeds the supported cap of {}",
            order, MAX_ORDER
        )));
    }
    if s_max > MAX_SUBSET_SIZE {
        return Err(GaddError::InvalidTruncation(format!(
            "S = {} exceeds the supported cap of {}",
            s_max, MAX_SUBSET_SIZE
        )));
    }

    let subsets = subsets_up_to(n, s_max);
    let mut functions: Vec<BasisFunction> = Vec::new();

    for u in &subsets {
        let marginal = measure.marginal(u)?;
        let indices = admissible_indices(u.len(), order);
        let block_start = functions.len();
        for j in &indices {
            let raw = hermite_raw(&marginal, j)?;
            functions.push(orthonormalize(&raw, &marginal, j.clone())?);
        }
        same_degree_orthonormalize(&mut functions[block_start..], &marginal)?;
        let (nested, current) = functions.split_at_mut(block_start);
        verify_and_repair(current, nested, &marginal)?;
    }

    let lookup = functions
        .iter()
        .enumerate()
        .map(|(pos, f)| {
            (
                (f.subset.indices().to_vec(), f.index.degrees().to_vec()),
                pos,
            )
        })
        .collect();

    Ok(BasisSet {
        measure: measure.clone(),
        s_max,
        order,
        functions,
        lookup,
        subsets,
    })
}

/// Modified Gram-Schmidt over members of one subset sharing a total degree.
/// Signs are fixed so the coefficient of the leading monomial x^j stays
/// positive, matching the univariate convention.
fn same_degree_orthonormalize(
    block: &mut [BasisFunction],
    marginal: &MarginalMeasure,
) -> Result<()> {
    for i in 0..block.len() {
        let degree = block[i].index.total_degree();
        let mut poly = block[i].poly.clone();
        for prev in block[..i].iter() {
            if prev.index.total_degree() != degree {
                continue;
            }
            let c = inner_product(&poly, &prev.poly, marginal)?;
            if c != 0.0 {
                poly.axpy(-c, &prev.poly);
            }
        }
        let norm_sq = inner_product(&poly, &poly, marginal)?;
        if norm_sq.is_nan() || norm_sq <= 0.0 {
            return Err(GaddError::NonPositiveNorm { norm: norm_sq });
        }
        let mut scale = 1.0 / norm_sq.sqrt();
        if poly.coefficient(block[i].index.degrees()) < 0.0 {
            scale = -scale;
        }
        let poly = poly.scale(scale);
        block[i].norm_check = inner_product(&poly, &poly, marginal)?;
        block[i].poly = poly;
    }
    Ok(())
}

/// Checks zero means and hierarchical orthogonality of the freshly built
/// block against all nested members, re-orthogonalizing on failure.
fn verify_and_repair(
    block: &mut [BasisFunction],
    nested: &[BasisFunction],
    marginal: &MarginalMeasure,
) -> Result<()> {
    let u = marginal.subset();
    for f in block.iter_mut() {
        let mut poly = f.poly.clone();
        let mut repaired = false;

        let mean = expectation(&poly, marginal)?;
        if mean.abs() > HIERARCHICAL_TOL {
            poly.axpy(-mean, &Polynomial::constant(u.clone(), 1.0));
            repaired = true;
        }
        for other in nested {
            if !other.subset.is_proper_subset_of(u) {
                continue;
            }
            let c = inner_product(&poly, &other.poly, marginal)?;
            if c.abs() > HIERARCHICAL_TOL {
                let promoted = other.poly.promote(u)?;
                poly.axpy(-c, &promoted);
                repaired = true;
            }
        }
        if repaired {
            let norm_sq = inner_product(&poly, &poly, marginal)?;
            if norm_sq.is_nan() || norm_sq <= 0.0 {
                return Err(GaddError::NonPositiveNorm { norm: norm_sq });
            }
            f.poly = poly.scale(1.0 / norm_sq.sqrt());
            f.norm_check = inner_product(&f.poly, &f.poly, marginal)?;
        }
    }
    Ok(())
}
