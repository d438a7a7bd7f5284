//! Numerical integration for black-box responses: Gauss-Hermite rules in the
//! probabilists' convention, correlated tensor-product rules obtained by
//! mapping standard-normal grids through a Cholesky factor, and the
//! dimension-reduction (cut) scheme that replaces an N-dimensional integral
//! by a signed sum of at-most-S-dimensional integrals.
//!
//! The cut scheme operates in decorrelated coordinates: with L the Cholesky
//! factor of the integration measure's covariance, the integral becomes an
//! expectation over independent standard normals z, and the cut terms fix
//! subsets of z at the origin.  Working in z keeps the cut grids nested --
//! every node of a lower-order term reappears inside the higher-order grids
//! -- so for an odd number of points per dimension the number of unique
//! model evaluations at S = 2 is exactly
//!
//! ```text
//!   N (N - 1) (n - 1)^2 / 2  +  N (n - 1)  +  1.
//! ```
//!
//! The approximation is exact whenever the decorrelated integrand is a sum
//! of at-most-S-variate functions; polynomials of total degree <= S are
//! always in that class regardless of the correlation structure.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{GaddError, Result};
use crate::measure::{MarginalMeasure, ProductMeasure};
use crate::model::Model;

/// Largest supported 1-D rule.
const MAX_POINTS: usize = 64;

/// Guard against runaway tensor grids.
const MAX_GRID_POINTS: usize = 20_000_000;

/// Nodes and weights of a quadrature rule against a Gaussian density.
///
/// Weights are normalized to the probability measure, so they sum to one.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Points per dimension of the generating 1-D rule.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of `f` over the nodes.
    pub fn integrate<F: FnMut(&[f64]) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut total = 0.0;
        for (node, &w) in self.nodes.iter().zip(self.weights.iter()) {
            total += w * f(node.as_slice())?;
        }
        Ok(total)
    }
}

/// The n-point Gauss-Hermite rule for the standard normal weight, via
/// Golub-Welsch on the symmetric tridiagonal Jacobi matrix.
///
/// Nodes are symmetrized so that paired nodes are exact negatives and, for
/// odd n, the middle node is exactly zero; the cut scheme relies on that
/// bitwise structure when deduplicating evaluation points.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_POINTS).contains(&n) {
        return Err(GaddError::QuadratureOrder { n, max: MAX_POINTS });
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eigen = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let q0 = eigen.eigenvectors[(0, i)];
            (eigen.eigenvalues[i], q0 * q0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));

    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let mag = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -mag;
        nodes[j] = mag;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    Ok(QuadratureRule {
        nodes: nodes
            .into_iter()
            .map(|x| DVector::from_vec(vec![x]))
            .collect(),
        weights,
        order: n,
    })
}

/// Iterates a tensor grid of per-dimension node indices in lexicographic
/// order.
fn for_each_grid_index<F: FnMut(&[usize]) -> Result<()>>(
    dims: usize,
    n: usize,
    mut f: F,
) -> Result<()> {
    let mut idx = vec![0usize; dims];
    loop {
        f(&idx)?;
        let mut d = dims;
        loop {
            if d == 0 {
                return Ok(());
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Tensor-product rule for a correlated Gaussian marginal: the standard
/// n^|u| grid mapped through the Cholesky factor of S_u.
///
/// The mapped rule integrates polynomials of total degree <= 2n - 1 exactly;
/// for a diagonal S_u exactness extends to per-variable degree <= 2n - 1.
pub fn correlated_rule(marginal: &MarginalMeasure, n: usize) -> Result<QuadratureRule> {
    let base = gauss_hermite(n)?;
    let k = marginal.dimension();
    let count = n
        .checked_pow(k as u32)
        .filter(|&c| c <= MAX_GRID_POINTS)
        .ok_or(GaddError::QuadratureOrder { n, max: MAX_POINTS })?;
    let l = marginal.cholesky_factor();
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for_each_grid_index(k, n, |idx| {
        let z = DVector::from_fn(k, |d, _| base.nodes[idx[d]][0]);
        let mut w = 1.0;
        for &i in idx {
            w *= base.weights[i];
        }
        nodes.push(l * z);
        weights.push(w);
        Ok(())
    })?;
    Ok(QuadratureRule {
        nodes,
        weights,
        order: n,
    })
}

/// One cut term: the dimensions kept free and the signed combination
/// coefficient in front of its integral.
#[derive(Clone, Debug)]
pub struct CutTerm {
    pub dims: Vec<usize>,
    pub coefficient: f64,
}

/// Result of one dimension-reduction pass.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub value: f64,
    /// Number of distinct points the model was evaluated at.
    pub unique_evaluations: usize,
}

/// The cut-integration plan: reduction order S, points per dimension, the
/// reference point, and the schedule of cut subsets with combination
/// coefficients.
#[derive(Clone, Debug)]
pub struct ReductionPlan {
    order: usize,
    points_per_dim: usize,
    dimension: usize,
    reference: DVector<f64>,
    terms: Vec<CutTerm>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

impl ReductionPlan {
    /// Builds the plan for an N-dimensional integral at reduction order
    /// S in {1, 2} with an n-point rule per dimension.  The reference point
    /// is the measure mean, i.e. the origin.
    pub fn new(dimension: usize, order: usize, n: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(GaddError::UnsupportedReductionOrder { order });
        }
        if !(1..=MAX_POINTS).contains(&n) {
            return Err(GaddError::QuadratureOrder { n, max: MAX_POINTS });
        }
        let s = order.min(dimension);
        let mut terms = Vec::new();
        for k in (0..=s).rev() {
            // (-1)^{S-k} C(N-k-1, S-k); the k = S term always has weight 1.
            let sign = if (s - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            let coeff = if s == k {
                1.0
            } else {
                sign * binomial(dimension - k - 1, s - k)
            };
            for dims in crate::polybasis::subsets_of_size(dimension, k) {
                terms.push(CutTerm {
                    dims: dims.indices().iter().map(|&i| i - 1).collect(),
                    coefficient: coeff,
                });
            }
            if k == 0 {
                terms.push(CutTerm {
                    dims: Vec::new(),
                    coefficient: coeff,
                });
            }
        }
        Ok(Self {
            order,
            points_per_dim: n,
            dimension,
            reference: DVector::zeros(dimension),
            terms,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn reference(&self) -> &DVector<f64> {
        &self.reference
    }

    pub fn terms(&self) -> &[CutTerm] {
        &self.terms
    }

    /// The closed-form unique-evaluation count, valid when the 1-D rule
    /// contains the reference coordinate (odd n).
    pub fn expected_unique_evaluations(&self) -> usize {
        let dim = self.dimension;
        let fresh = self.points_per_dim - 1;
        match self.order.min(dim) {
            1 => dim * fresh + 1,
            _ => dim * (dim - 1) * fresh * fresh / 2 + dim * fresh + 1,
        }
    }

    /// Runs the plan: integrates model(x) * weight(x) against the product
    /// measure, cutting in the measure's decorrelated coordinates.
    ///
    /// Model evaluations are cached by the bit pattern of the decorrelated
    /// node, so shared points across cut terms are evaluated once.
    pub fn integrate<W: Fn(&[f64]) -> Result<f64>>(
        &self,
        measure: &ProductMeasure,
        model: &dyn Model,
        weight: W,
    ) -> Result<ReductionOutcome> {
        if measure.dimension() != self.dimension {
            return Err(GaddError::DimensionMismatch {
                expected: self.dimension,
                actual: measure.dimension(),
            });
        }
        let rule = gauss_hermite(self.points_per_dim)?;
        let l = measure.cholesky_factor();
        let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut total = 0.0;
        for term in &self.terms {
            if term.coefficient == 0.0 {
                continue;
            }
            let mut term_sum = 0.0;
            for_each_grid_index(term.dims.len(), self.points_per_dim, |idx| {
                let mut z = DVector::<f64>::zeros(self.dimension);
                let mut w = 1.0;
                for (slot, &d) in term.dims.iter().enumerate() {
                    z[d] = rule.nodes[idx[slot]][0];
                    w *= rule.weights[idx[slot]];
                }
                let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
                let x = l * &z;
                let y = match cache.get(&key) {
                    Some(&y) => y,
                    None => {
                        let y = model.evaluate(x.as_slice())?;
                        cache.insert(key, y);
                        y
                    }
                };
                term_sum += w * y * weight(x.as_slice())?;
                Ok(())
            })?;
            total += term.coefficient * term_sum;
        }
        Ok(ReductionOutcome {
            value: total,
            unique_evaluations: cache.len(),
        })
    }
}

/// Convenience wrapper: builds the plan and runs it.
pub fn dimension_reduction_integrate<W: Fn(&[f64]) -> Result<f64>>(
    model: &dyn Model,
    measure: &ProductMeasure,
    order: usize,
    n: usize,
    weight: W,
) -> Result<ReductionOutcome> {
    ReductionPlan::new(measure.dimension(), order, n)?.integrate(measure, model, weight)
}
