//! Generalized ANOVA dimensional decomposition (ADD) for functions of
//! correlated Gaussian random variables.
//!
//! The classical ANOVA decomposition splits a multivariate function into a
//! hierarchy of component functions indexed by variable subsets, but it is
//! only valid under independent (product-type) input measures.  When the
//! inputs are a correlated Gaussian vector, the component functions instead
//! satisfy weakened annihilating conditions: each non-constant component
//! integrates to zero against its own subset marginal in every coordinate
//! direction.  Two consequences drive everything in this crate: the
//! components have zero means, and components indexed by nested subsets are
//! orthogonal.
//!
//! The decomposition is computed constructively:
//!
//! 1. [`measure`] validates the covariance matrix and exposes subset
//!    marginals and Cholesky-based sampling.
//! 2. [`moments`] is the exact Gaussian moment oracle (Wick pairing) used
//!    for all polynomial inner products.
//! 3. [`polybasis`] builds the measure-consistent multivariate Hermite
//!    orthonormal polynomials for every admissible subset/multi-index pair.
//! 4. [`expansion`] assembles the coupled linear system relating the
//!    expansion coefficients through cross-measure integrals, solves it by
//!    dense LU, and reconstructs component functions and the truncated
//!    surrogate.
//! 5. [`quadrature`] provides Gauss-Hermite rules, correlated tensor rules,
//!    and the dimension-reduction (cut) integration scheme for black-box
//!    models.
//! 6. [`sensitivity`] derives second-moment statistics, the triplet of
//!    global sensitivity indices, total effects, effective dimensions, and
//!    adaptive-sparse truncation selection.

pub mod error;
pub mod expansion;
pub mod measure;
pub mod model;
pub mod moments;
pub mod polybasis;
pub mod quadrature;
pub mod sensitivity;

pub use error::GaddError;
pub use expansion::{AddExpansion, IntegrationScheme, LinearSystem};
pub use measure::{GaussianMeasure, MarginalMeasure, VariableSubset};
pub use model::{Model, PolynomialModel};
pub use moments::{MultiIndex, Polynomial};
pub use polybasis::{BasisFunction, BasisSet};
pub use quadrature::{QuadratureRule, ReductionPlan};
pub use sensitivity::{AdaptiveSelection, SensitivityReport};
