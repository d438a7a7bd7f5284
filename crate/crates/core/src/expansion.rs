//! Assembly and solution of the coupled coefficient system, component
//! function reconstruction, and the truncated surrogate.
//!
//! Projecting the decomposition onto each basis function gives one linear
//! equation per (subset, multi-index) pair: the coefficient itself plus
//! cross-measure couplings against every subset that overlaps u without
//! being contained in it,
//!
//! ```text
//!   C_{u,j} + sum_{v: v ∩ u != {}, v ⊄ u, v != u} sum_k C_{v,k} J_{uj,vk} = I_{uj}.
//! ```
//!
//! Supersets of u couple too; only v = u and proper subsets drop out (the
//! latter by hierarchical orthogonality).  The right-hand side I integrates
//! the response against the basis function under the product measure
//! f_u (x) f_{-u}, and J pairs two basis functions under f_u (x) f_{v\u}.
//! Both are plain polynomial expectations when the response is an explicit
//! polynomial; otherwise I falls back to quadrature.
//!
//! With independent inputs every coupling integral vanishes, the matrix is
//! the identity, and the solution reduces to the classical projection
//! coefficients.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GaddError, Result};
use crate::measure::{GaussianMeasure, MarginalMeasure, ProductMeasure, VariableSubset};
use crate::model::Model;
use crate::moments::{
    expectation, gaussian_moment, product_measure_moment, MultiIndex, Polynomial,
};
use crate::polybasis::{build_basis, BasisFunction, BasisSet};
use crate::quadrature::{correlated_rule, ReductionPlan};

/// Condition-number ceiling before the solve is rejected.
const CONDITION_LIMIT: f64 = 1e12;

/// Residual tolerance relative to the right-hand side.
const RESIDUAL_RTOL: f64 = 1e-8;

/// How the response integrals are evaluated for black-box models.  Explicit
/// polynomial models always take the exact moment path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntegrationScheme {
    /// Full tensor-product Gauss-Hermite rule in decorrelated coordinates.
    Tensor { points: usize },
    /// Dimension-reduction (cut) scheme of the given order.
    Reduced { order: usize, points: usize },
}

/// The assembled coefficient system A z = b.
///
/// Rows and columns follow the basis ordering.  The diagonal is exactly 1;
/// off-diagonal entries are coupling integrals, present only where the
/// column subset overlaps the row subset without being contained in it.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Solver diagnostics stored with an expansion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    /// 2-norm condition estimate of A.
    pub condition_estimate: f64,
    /// Infinity norm of A z - b after the solve.
    pub residual_inf: f64,
}

/// Cache key: the two factor subsets and the monomial exponents.
type PairMomentKey = (Vec<usize>, Vec<usize>, Vec<u32>);

/// Marginal and moment caches shared across one assembly.
struct AssemblyContext<'m> {
    measure: &'m GaussianMeasure,
    marginals: HashMap<Vec<usize>, MarginalMeasure>,
    moments: HashMap<PairMomentKey, f64>,
}

impl<'m> AssemblyContext<'m> {
    fn new(measure: &'m GaussianMeasure) -> Self {
        Self {
            measure,
            marginals: HashMap::new(),
            moments: HashMap::new(),
        }
    }

    fn marginal(&mut self, u: &VariableSubset) -> Result<MarginalMeasure> {
        if let Some(m) = self.marginals.get(u.indices()) {
            return Ok(m.clone());
        }
        let m = self.measure.marginal(u)?;
        self.marginals.insert(u.indices().to_vec(), m.clone());
        Ok(m)
    }

    /// Moment of x^alpha (aligned with a + b in sorted order) under the
    /// product measure f_a (x) f_b, cached across the assembly.
    fn pair_moment(
        &mut self,
        a: &MarginalMeasure,
        b: Option<&MarginalMeasure>,
        alpha: &[u32],
    ) -> Result<f64> {
        let key = (
            a.subset().indices().to_vec(),
            b.map(|m| m.subset().indices().to_vec()).unwrap_or_default(),
            alpha.to_vec(),
        );
        if let Some(&v) = self.moments.get(&key) {
            return Ok(v);
        }
        let v = match b {
            Some(b) => product_measure_moment(a, b, &MultiIndex::new(alpha.to_vec()))?,
            None => gaussian_moment(a, &MultiIndex::new(alpha.to_vec()))?,
        };
        self.moments.insert(key, v);
        Ok(v)
    }

    /// Expectation of a polynomial over the union of two disjoint subsets
    /// under their product measure.
    fn product_expectation(
        &mut self,
        poly: &Polynomial,
        a: &MarginalMeasure,
        b: Option<&MarginalMeasure>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (e, &c) in poly.terms() {
            total += c * self.pair_moment(a, b, e)?;
        }
        Ok(total)
    }
}

/// The coupling condition of the coefficient system: v overlaps u but is not
/// contained in it.  Supersets of u satisfy this; v = u and proper subsets
/// do not.
fn couples(u: &VariableSubset, v: &VariableSubset) -> bool {
    !u.intersection(v).is_empty() && !v.is_subset_of(u)
}

/// The coupling integral J pairing psi_{u,j} with psi_{v,k} under the
/// product measure f_u (x) f_{v\u}, over the union variables.
pub fn compute_j(
    measure: &GaussianMeasure,
    psi_u: &BasisFunction,
    psi_v: &BasisFunction,
) -> Result<f64> {
    let mut ctx = AssemblyContext::new(measure);
    compute_j_cached(&mut ctx, psi_u, psi_v)
}

fn compute_j_cached(
    ctx: &mut AssemblyContext<'_>,
    psi_u: &BasisFunction,
    psi_v: &BasisFunction,
) -> Result<f64> {
    let u = psi_u.subset();
    let v = psi_v.subset();
    if !couples(u, v) {
        return Err(GaddError::CouplingCondition {
            u: u.indices().to_vec(),
            v: v.indices().to_vec(),
        });
    }
    let union = u.union(v);
    let v_outside = v.difference(u);
    let product = psi_u
        .poly()
        .promote(&union)?
        .multiply(&psi_v.poly().promote(&union)?)?;
    let m_u = ctx.marginal(u)?;
    let m_out = if v_outside.is_empty() {
        None
    } else {
        Some(ctx.marginal(&v_outside)?)
    };
    ctx.product_expectation(&product, &m_u, m_out.as_ref())
}

/// The response integral I: the model against psi_{u,j} under the product
/// measure f_u (x) f_{-u}.
///
/// Exact through the moment oracle when the model exposes its polynomial;
/// otherwise evaluated with the requested quadrature scheme.
pub fn compute_i(
    model: &dyn Model,
    measure: &GaussianMeasure,
    psi: &BasisFunction,
    scheme: IntegrationScheme,
) -> Result<f64> {
    let mut ctx = AssemblyContext::new(measure);
    compute_i_cached(&mut ctx, model, psi, scheme)
}

fn compute_i_cached(
    ctx: &mut AssemblyContext<'_>,
    model: &dyn Model,
    psi: &BasisFunction,
    scheme: IntegrationScheme,
) -> Result<f64> {
    let n = ctx.measure.dimension();
    if model.dimension() != n {
        return Err(GaddError::DimensionMismatch {
            expected: n,
            actual: model.dimension(),
        });
    }
    let u = psi.subset().clone();
    let complement = u.complement(n);

    if let Some(poly) = model.as_polynomial() {
        let full = VariableSubset::full(n);
        let product = poly.multiply(&psi.poly().promote(&full)?)?;
        let m_u = ctx.marginal(&u)?;
        let m_c = if complement.is_empty() {
            None
        } else {
            Some(ctx.marginal(&complement)?)
        };
        return ctx.product_expectation(&product, &m_u, m_c.as_ref());
    }

    let mut parts = vec![ctx.marginal(&u)?];
    if !complement.is_empty() {
        parts.push(ctx.marginal(&complement)?);
    }
    let pm = ProductMeasure::new(parts)?;
    let positions: Vec<usize> = u.indices().iter().map(|&i| i - 1).collect();
    let psi_at = |x: &[f64]| -> Result<f64> {
        let x_u: Vec<f64> = positions.iter().map(|&p| x[p]).collect();
        psi.evaluate(&x_u)
    };
    match scheme {
        IntegrationScheme::Tensor { points } => {
            let rule = correlated_rule(&pm.as_marginal(), points)?;
            rule.integrate(|x| Ok(model.evaluate(x)? * psi_at(x)?))
        }
        IntegrationScheme::Reduced { order, points } => {
            let plan = ReductionPlan::new(n, order, points)?;
            Ok(plan.integrate(&pm, model, psi_at)?.value)
        }
    }
}

/// Assembles the full coefficient system for a basis.
pub fn assemble_system(
    model: &dyn Model,
    basis: &BasisSet,
    scheme: IntegrationScheme,
) -> Result<LinearSystem> {
    let measure = basis.measure().clone();
    let mut ctx = AssemblyContext::new(&measure);
    let l = basis.len();
    let mut a = DMatrix::<f64>::identity(l, l);
    let mut b = DVector::<f64>::zeros(l);
    for (row, fu) in basis.functions().iter().enumerate() {
        for (col, fv) in basis.functions().iter().enumerate() {
            if couples(fu.subset(), fv.subset()) {
                a[(row, col)] = compute_j_cached(&mut ctx, fu, fv)?;
            }
        }
        b[row] = compute_i_cached(&mut ctx, model, fu, scheme)?;
    }
    Ok(LinearSystem { a, b })
}

fn solve_system(system: &LinearSystem) -> Result<(DVector<f64>, Diagnostics)> {
    let l = system.b.len();
    let lu = system.a.clone().lu();
    let z = lu.solve(&system.b).ok_or(GaddError::IllConditioned {
        cond: f64::INFINITY,
    })?;

    let svd = system.a.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let condition_estimate = if l == 0 { 1.0 } else { smax / smin };
    if condition_estimate > CONDITION_LIMIT {
        return Err(GaddError::IllConditioned {
            cond: condition_estimate,
        });
    }

    let residual = &system.a * &z - &system.b;
    let residual_inf = residual.amax();
    let b_inf = system.b.amax();
    if residual_inf > RESIDUAL_RTOL * b_inf {
        return Err(GaddError::SolverResidual {
            residual: residual_inf,
            tolerance: RESIDUAL_RTOL * b_inf,
        });
    }
    Ok((
        z,
        Diagnostics {
            condition_estimate,
            residual_inf,
        },
    ))
}

/// The truncated decomposition: constant term plus one coefficient per basis
/// function, in basis order.
#[derive(Clone, Debug)]
pub struct AddExpansion {
    constant: f64,
    basis: BasisSet,
    coefficients: Vec<f64>,
    diagnostics: Diagnostics,
}

impl AddExpansion {
    /// The constant component, equal to the mean of the response.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn measure(&self) -> &GaussianMeasure {
        self.basis.measure()
    }

    pub fn dimension(&self) -> usize {
        self.basis.measure().dimension()
    }

    pub fn coefficient(&self, subset: &VariableSubset, index: &MultiIndex) -> Option<f64> {
        self.basis
            .position(subset, index)
            .map(|p| self.coefficients[p])
    }

    /// The component function for subset u as an explicit polynomial over
    /// x_u.  Subsets inside the truncation with no admissible indices (or
    /// all-zero coefficients) give the zero polynomial.
    pub fn component_function(&self, u: &VariableSubset) -> Result<Polynomial> {
        let (s_max, _) = self.basis.truncation();
        if u.len() > s_max {
            return Err(GaddError::InvalidTruncation(format!(
                "subset {} exceeds the truncation order {}",
                u, s_max
            )));
        }
        let mut poly = Polynomial::zero(u.clone());
        for (pos, f) in self.basis.functions().iter().enumerate() {
            if f.subset() == u {
                poly.axpy(self.coefficients[pos], f.poly());
            }
        }
        Ok(poly)
    }

    /// Evaluates the truncated surrogate at a full N-dimensional point.
    pub fn evaluate_surrogate(&self, x: &[f64]) -> Result<f64> {
        let n = self.dimension();
        if x.len() != n {
            return Err(GaddError::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        let mut total = self.constant;
        let mut buf: Vec<f64> = Vec::with_capacity(8);
        for (pos, f) in self.basis.functions().iter().enumerate() {
            let c = self.coefficients[pos];
            if c == 0.0 {
                continue;
            }
            buf.clear();
            buf.extend(f.subset().indices().iter().map(|&i| x[i - 1]));
            total += c * f.evaluate(&buf)?;
        }
        Ok(total)
    }

    /// Serializable image of the expansion.
    pub fn to_record(&self) -> ExpansionRecord {
        let (s_max, order) = self.basis.truncation();
        let cov = self.basis.measure().covariance();
        ExpansionRecord {
            dimension: self.dimension(),
            covariance: (0..cov.nrows())
                .map(|i| (0..cov.ncols()).map(|j| cov[(i, j)]).collect())
                .collect(),
            s_max,
            order,
            constant: self.constant,
            coefficients: self
                .basis
                .functions()
                .iter()
                .zip(self.coefficients.iter())
                .map(|(f, &c)| CoefficientRecord {
                    subset: f.subset().indices().to_vec(),
                    index: f.index().degrees().to_vec(),
                    value: c,
                })
                .collect(),
            diagnostics: self.diagnostics,
        }
    }

    /// Rebuilds an expansion from its serialized image.  The basis is
    /// reconstructed from the stored covariance and truncation, so the
    /// component functions round-trip exactly.
    pub fn from_record(record: &ExpansionRecord) -> Result<AddExpansion> {
        let n = record.dimension;
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for (i, row) in record.covariance.iter().enumerate() {
            if row.len() != n || record.covariance.len() != n {
                return Err(GaddError::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                cov[(i, j)] = v;
            }
        }
        let measure = GaussianMeasure::validate(cov)?;
        let basis = build_basis(&measure, record.s_max, record.order)?;
        if basis.len() != record.coefficients.len() {
            return Err(GaddError::Serialization(format!(
                "expansion lists {} coefficients but the truncation admits {}",
                record.coefficients.len(),
                basis.len()
            )));
        }
        let mut coefficients = vec![0.0; basis.len()];
        for c in &record.coefficients {
            let subset = VariableSubset::new(c.subset.clone())?;
            let index = MultiIndex::new(c.index.clone());
            let pos = basis.position(&subset, &index).ok_or_else(|| {
                GaddError::Serialization(format!(
                    "coefficient for subset {:?} index {:?} is outside the truncation",
                    c.subset, c.index
                ))
            })?;
            coefficients[pos] = c.value;
        }
        Ok(AddExpansion {
            constant: record.constant,
            basis,
            coefficients,
            diagnostics: record.diagnostics,
        })
    }
}

/// One serialized coefficient entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub subset: Vec<usize>,
    pub index: Vec<u32>,
    pub value: f64,
}

/// Lossless serialized form of an [`AddExpansion`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub dimension: usize,
    pub covariance: Vec<Vec<f64>>,
    pub s_max: usize,
    pub order: u32,
    pub constant: f64,
    pub coefficients: Vec<CoefficientRecord>,
    pub diagnostics: Diagnostics,
}

/// The constant term: the response mean under the joint measure.
fn constant_term(
    model: &dyn Model,
    measure: &GaussianMeasure,
    scheme: IntegrationScheme,
) -> Result<f64> {
    let joint = measure.full_marginal();
    if let Some(poly) = model.as_polynomial() {
        return expectation(poly, &joint);
    }
    match scheme {
        IntegrationScheme::Tensor { points } => {
            let rule = correlated_rule(&joint, points)?;
            rule.integrate(|x| model.evaluate(x))
        }
        IntegrationScheme::Reduced { order, points } => {
            let pm = ProductMeasure::joint(joint);
            let plan = ReductionPlan::new(measure.dimension(), order, points)?;
            Ok(plan.integrate(&pm, model, |_| Ok(1.0))?.value)
        }
    }
}

/// Builds the basis, assembles the coupled system, and solves it by dense LU
/// with partial pivoting.
pub fn assemble_and_solve(
    model: &dyn Model,
    measure: &GaussianMeasure,
    s_max: usize,
    order: u32,
    scheme: IntegrationScheme,
) -> Result<AddExpansion> {
    if model.dimension() != measure.dimension() {
        return Err(GaddError::DimensionMismatch {
            expected: measure.dimension(),
            actual: model.dimension(),
        });
    }
    let basis = build_basis(measure, s_max, order)?;
    let system = assemble_system(model, &basis, scheme)?;
    let (z, diagnostics) = solve_system(&system)?;
    let constant = constant_term(model, measure, scheme)?;
    Ok(AddExpansion {
        constant,
        basis,
        coefficients: z.iter().copied().collect(),
        diagnostics,
    })
}

/// The classical decomposition under the product measure built from the
/// covariance diagonal: coefficients are plain projections, no system solve.
///
/// With independent inputs this coincides with [`assemble_and_solve`]; with
/// correlated inputs it is the oracle the generalized result degenerates to
/// when the correlations are dropped.
pub fn classical_add(
    model: &dyn Model,
    measure: &GaussianMeasure,
    s_max: usize,
    order: u32,
    scheme: IntegrationScheme,
) -> Result<AddExpansion> {
    let n = measure.dimension();
    let diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            measure.covariance()[(i, i)]
        } else {
            0.0
        }
    });
    let product_measure = GaussianMeasure::validate(diag)?;
    let basis = build_basis(&product_measure, s_max, order)?;
    let mut ctx = AssemblyContext::new(&product_measure);
    let mut coefficients = Vec::with_capacity(basis.len());
    for f in basis.functions() {
        coefficients.push(compute_i_cached(&mut ctx, model, f, scheme)?);
    }
    let constant = constant_term(model, &product_measure, scheme)?;
    Ok(AddExpansion {
        constant,
        basis,
        coefficients,
        diagnostics: Diagnostics {
            condition_estimate: 1.0,
            residual_inf: 0.0,
        },
    })
}
