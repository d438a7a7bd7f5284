//! Zero-mean correlated Gaussian input measure, subset marginals, and
//! Cholesky-based sampling.
//!
//! The joint measure is N(0, S) with a positive-definite covariance S.  Every
//! subset marginal is again Gaussian with the corresponding principal
//! submatrix as covariance, which is all the downstream modules ever need:
//! the moment oracle works on marginal covariances and the quadrature module
//! maps standard-normal grids through their Cholesky factors.
//!
//! Nonzero means are deliberately out of scope; a caller with a shifted
//! input shifts the model instead.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GaddError, Result};

/// Relative symmetry tolerance for accepted covariance matrices.
const SYMMETRY_RTOL: f64 = 1e-12;

/// A Cholesky pivot must exceed this fraction of the largest diagonal entry.
const PIVOT_RTOL: f64 = 1e-10;

/// A sorted, duplicate-free set of 1-based variable indices.
///
/// The empty subset is allowed; it stands for the constant component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableSubset {
    indices: Vec<usize>,
}

impl VariableSubset {
    /// Builds a subset from 1-based indices, which must be strictly
    /// increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        for pair in indices.windows(2) {
            if pair[0] >= pair[1] {
                return Err(GaddError::InvalidSubset(format!(
                    "indices must be strictly increasing, got {:?}",
                    indices
                )));
            }
        }
        if indices.first().is_some_and(|&i| i == 0) {
            return Err(GaddError::InvalidSubset(
                "indices are 1-based; 0 is not a valid index".into(),
            ));
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    /// The full set {1, ..., n}.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Local position of a global index within this subset.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    pub fn is_subset_of(&self, other: &VariableSubset) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    /// Proper (strict) inclusion.
    pub fn is_proper_subset_of(&self, other: &VariableSubset) -> bool {
        self.len() < other.len() && self.is_subset_of(other)
    }

    pub fn is_disjoint_from(&self, other: &VariableSubset) -> bool {
        self.indices.iter().all(|&i| !other.contains(i))
    }

    pub fn union(&self, other: &VariableSubset) -> VariableSubset {
        let mut indices: Vec<usize> = self
            .indices
            .iter()
            .chain(other.indices.iter())
            .copied()
            .collect();
        indices.sort_unstable();
        indices.dedup();
        VariableSubset { indices }
    }

    pub fn intersection(&self, other: &VariableSubset) -> VariableSubset {
        VariableSubset {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        }
    }

    /// Indices of `self` not present in `other`.
    pub fn difference(&self, other: &VariableSubset) -> VariableSubset {
        VariableSubset {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| !other.contains(i))
                .collect(),
        }
    }

    /// The complementary set within {1, ..., n}.
    pub fn complement(&self, n: usize) -> VariableSubset {
        VariableSubset {
            indices: (1..=n).filter(|&i| !self.contains(i)).collect(),
        }
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last > n => Err(GaddError::InvalidSubset(format!(
                "index {} exceeds dimension {}",
                last, n
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for VariableSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i)?;
        }
        write!(f, "}}")
    }
}

/// Lower-triangular Cholesky factor with an explicit pivot threshold, so a
/// failure names the offending pivot instead of just reporting "not PD".
fn cholesky_lower(a: &DMatrix<f64>, pivot_threshold: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= pivot_threshold {
            return Err(GaddError::NotPositiveDefinite {
                index: j,
                pivot: d,
                threshold: pivot_threshold,
            });
        }
        l[(j, j)] = d.sqrt();
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    Ok(l)
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// The zero-mean joint Gaussian measure N(0, S) of N dependent variables.
///
/// Construction goes through [`GaussianMeasure::validate`], which enforces
/// symmetry and positive definiteness and retains the Cholesky factor for
/// sampling and coordinate transforms.
#[derive(Clone, Debug)]
pub struct GaussianMeasure {
    covariance: DMatrix<f64>,
    cholesky: DMatrix<f64>,
}

impl GaussianMeasure {
    /// Validates a covariance matrix and returns the measure.
    ///
    /// The matrix must be square, symmetric to within 1e-12 relative to its
    /// largest entry, and positive definite: every Cholesky pivot must
    /// exceed 1e-10 times the largest diagonal entry.  The stored matrix is
    /// the symmetrized (S + S^T)/2.
    pub fn validate(covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != covariance.ncols() {
            return Err(GaddError::NotSquare {
                rows: covariance.nrows(),
                cols: covariance.ncols(),
            });
        }
        if covariance.nrows() == 0 {
            return Err(GaddError::InvalidSubset(
                "dimension must be at least 1".into(),
            ));
        }
        let scale = max_abs(&covariance).max(f64::MIN_POSITIVE);
        for i in 0..covariance.nrows() {
            for j in (i + 1)..covariance.ncols() {
                let diff = (covariance[(i, j)] - covariance[(j, i)]).abs();
                if diff > SYMMETRY_RTOL * scale {
                    return Err(GaddError::NotSymmetric { i, j, diff });
                }
            }
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let max_diag = (0..sym.nrows()).fold(0.0_f64, |m, i| m.max(sym[(i, i)]));
        let cholesky = cholesky_lower(&sym, PIVOT_RTOL * max_diag)?;
        Ok(Self {
            covariance: sym,
            cholesky,
        })
    }

    pub fn dimension(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower-triangular L with L L^T = S.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// The marginal measure of the subvector indexed by `u`.
    ///
    /// Entries are copied exactly from the principal submatrix, so the
    /// marginal of the full set reproduces the covariance bit for bit.
    pub fn marginal(&self, u: &VariableSubset) -> Result<MarginalMeasure> {
        if u.is_empty() {
            return Err(GaddError::InvalidSubset(
                "marginal of the empty subset is not defined".into(),
            ));
        }
        u.check_range(self.dimension())?;
        let k = u.len();
        let cov = DMatrix::from_fn(k, k, |a, b| {
            self.covariance[(u.indices()[a] - 1, u.indices()[b] - 1)]
        });
        MarginalMeasure::new(u.clone(), cov)
    }

    /// Marginal over the full index set.
    pub fn full_marginal(&self) -> MarginalMeasure {
        self.marginal(&VariableSubset::full(self.dimension()))
            .expect("full subset is always valid")
    }

    /// Draws `count` points from N(0, S) by mapping ChaCha12-seeded standard
    /// normals through the Cholesky factor.  Identical (count, seed) pairs
    /// yield bitwise-identical sequences.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = self.dimension();
        (0..count)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                &self.cholesky * z
            })
            .collect()
    }
}

/// The Gaussian marginal of a variable subset: N(0, S_u) with S_u the
/// principal submatrix of the joint covariance.
#[derive(Clone, Debug)]
pub struct MarginalMeasure {
    subset: VariableSubset,
    covariance: DMatrix<f64>,
    cholesky: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl MarginalMeasure {
    /// Builds a marginal from an explicit covariance.  Used directly in
    /// tests and by the product-measure machinery; normal construction goes
    /// through [`GaussianMeasure::marginal`].
    pub fn new(subset: VariableSubset, covariance: DMatrix<f64>) -> Result<Self> {
        if subset.len() != covariance.nrows() || covariance.nrows() != covariance.ncols() {
            return Err(GaddError::DimensionMismatch {
                expected: subset.len(),
                actual: covariance.nrows(),
            });
        }
        let max_diag = (0..covariance.nrows()).fold(0.0_f64, |m, i| m.max(covariance[(i, i)]));
        let cholesky = cholesky_lower(&covariance, PIVOT_RTOL * max_diag)?;
        // S^-1 = L^-T L^-1 via two triangular solves against the identity.
        let k = covariance.nrows();
        let identity = DMatrix::<f64>::identity(k, k);
        let linv = cholesky
            .clone()
            .solve_lower_triangular(&identity)
            .expect("Cholesky factor has positive diagonal");
        let precision = linv.transpose() * linv;
        Ok(Self {
            subset,
            covariance,
            cholesky,
            precision,
        })
    }

    pub fn subset(&self) -> &VariableSubset {
        &self.subset
    }

    pub fn dimension(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// The inverse covariance S_u^-1, needed by the Hermite recurrence.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Restricts this marginal to a subset `w` of its own variables.
    pub fn restrict(&self, w: &VariableSubset) -> Result<MarginalMeasure> {
        if !w.is_subset_of(&self.subset) {
            return Err(GaddError::SubsetNotContained {
                inner: w.indices().to_vec(),
                outer: self.subset.indices().to_vec(),
            });
        }
        if w.is_empty() {
            return Err(GaddError::InvalidSubset(
                "marginal of the empty subset is not defined".into(),
            ));
        }
        let pos: Vec<usize> = w
            .indices()
            .iter()
            .map(|&i| self.subset.position(i).expect("checked containment"))
            .collect();
        let cov = DMatrix::from_fn(w.len(), w.len(), |a, b| self.covariance[(pos[a], pos[b])]);
        MarginalMeasure::new(w.clone(), cov)
    }
}

/// A product of mutually independent Gaussian marginals over disjoint
/// subsets, e.g. f_u (x) f_{-u}.  As a measure on the union variables it is
/// again Gaussian, with a covariance that is block structured in the
/// partition: within-part entries are copied, cross-part entries are zero.
#[derive(Clone, Debug)]
pub struct ProductMeasure {
    parts: Vec<MarginalMeasure>,
    union: VariableSubset,
    covariance: DMatrix<f64>,
    cholesky: DMatrix<f64>,
}

impl ProductMeasure {
    pub fn new(parts: Vec<MarginalMeasure>) -> Result<Self> {
        if parts.is_empty() {
            return Err(GaddError::InvalidSubset(
                "a product measure needs at least one factor".into(),
            ));
        }
        let mut union = VariableSubset::empty();
        for (k, p) in parts.iter().enumerate() {
            if !union.is_disjoint_from(p.subset()) {
                return Err(GaddError::OverlappingSubsets {
                    a: parts[..k]
                        .iter()
                        .flat_map(|q| q.subset().indices().iter().copied())
                        .collect(),
                    b: p.subset().indices().to_vec(),
                });
            }
            union = union.union(p.subset());
        }
        let dim = union.len();
        let mut covariance = DMatrix::<f64>::zeros(dim, dim);
        for p in &parts {
            for (a, &ia) in p.subset().indices().iter().enumerate() {
                for (b, &ib) in p.subset().indices().iter().enumerate() {
                    let ra = union.position(ia).expect("union member");
                    let rb = union.position(ib).expect("union member");
                    covariance[(ra, rb)] = p.covariance()[(a, b)];
                }
            }
        }
        let max_diag = (0..dim).fold(0.0_f64, |m, i| m.max(covariance[(i, i)]));
        let cholesky = cholesky_lower(&covariance, PIVOT_RTOL * max_diag)?;
        Ok(Self {
            parts,
            union,
            covariance,
            cholesky,
        })
    }

    /// The joint measure itself, viewed as a one-factor product.
    pub fn joint(marginal: MarginalMeasure) -> Self {
        Self::new(vec![marginal]).expect("single factor cannot overlap")
    }

    pub fn parts(&self) -> &[MarginalMeasure] {
        &self.parts
    }

    pub fn union(&self) -> &VariableSubset {
        &self.union
    }

    pub fn dimension(&self) -> usize {
        self.union.len()
    }

    /// Block covariance in union variable order.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// The product measure as a plain Gaussian marginal over the union
    /// subset, for reuse with the moment oracle and quadrature rules.
    pub fn as_marginal(&self) -> MarginalMeasure {
        MarginalMeasure::new(self.union.clone(), self.covariance.clone())
            .expect("block covariance of valid factors is positive definite")
    }
}
