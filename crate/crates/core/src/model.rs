//! The response function under study: either an explicit sparse polynomial
//! or an opaque callable such as an external simulation process.
//!
//! Explicit polynomials unlock the exact moment path for every coefficient
//! integral; anything else goes through the quadrature module.  Either way
//! the model keeps a monotone evaluation counter, which is the currency the
//! dimension-reduction scheme is judged by.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{GaddError, Result};
use crate::measure::VariableSubset;
use crate::moments::Polynomial;

/// A real-valued response y(x) of an N-dimensional input.
pub trait Model: Sync {
    /// Number of input variables N.
    fn dimension(&self) -> usize;

    /// Evaluates the response at a full N-dimensional point.
    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// Total number of evaluations served so far.
    fn evaluation_count(&self) -> u64;

    /// The explicit polynomial behind the model, when there is one.
    fn as_polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

/// A builtin model defined by a sparse polynomial over all N variables.
#[derive(Debug)]
pub struct PolynomialModel {
    poly: Polynomial,
    counter: AtomicU64,
}

impl PolynomialModel {
    /// Wraps a polynomial whose subset must be the full set {1..n}.
    pub fn new(n: usize, poly: Polynomial) -> Result<Self> {
        if poly.subset() != &VariableSubset::full(n) {
            return Err(GaddError::InvalidSubset(format!(
                "model polynomial must be defined over all {} variables",
                n
            )));
        }
        Ok(Self {
            poly,
            counter: AtomicU64::new(0),
        })
    }

    /// The trivariate product-pair response
    /// (a0 + a1 x1)(b0 + b1 x2) + (a0 + a1 x1)(c0 + c1 x3) + (b0 + b1 x2)(c0 + c1 x3).
    pub fn quadratic_symmetric(params: [f64; 6]) -> Self {
        let [a0, a1, b0, b1, c0, c1] = params;
        let sub = VariableSubset::full(3);
        let lin = |exp: Vec<u32>, k0: f64, k1: f64| -> Polynomial {
            let mut p = Polynomial::constant(sub.clone(), k0);
            p.axpy(k1, &Polynomial::monomial(sub.clone(), exp, 1.0).unwrap());
            p
        };
        let fa = lin(vec![1, 0, 0], a0, a1);
        let fb = lin(vec![0, 1, 0], b0, b1);
        let fc = lin(vec![0, 0, 1], c0, c1);
        let mut poly = fa.multiply(&fb).unwrap();
        poly.axpy(1.0, &fa.multiply(&fc).unwrap());
        poly.axpy(1.0, &fb.multiply(&fc).unwrap());
        Self {
            poly,
            counter: AtomicU64::new(0),
        }
    }

    /// The additive response c1 x1 + ... + cN xN.
    pub fn additive_linear(coefficients: &[f64]) -> Self {
        let n = coefficients.len();
        let sub = VariableSubset::full(n);
        let mut poly = Polynomial::zero(sub.clone());
        for (i, &c) in coefficients.iter().enumerate() {
            let mut e = vec![0u32; n];
            e[i] = 1;
            poly.axpy(c, &Polynomial::monomial(sub.clone(), e, 1.0).unwrap());
        }
        Self {
            poly,
            counter: AtomicU64::new(0),
        }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

impl Model for PolynomialModel {
    fn dimension(&self) -> usize {
        self.poly.subset().len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        self.poly.evaluate(x)
    }

    fn evaluation_count(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    fn as_polynomial(&self) -> Option<&Polynomial> {
        Some(&self.poly)
    }
}

/// Wraps a closure as a black-box model; the exact moment path is never
/// taken for these.
pub struct CallableModel<F: Fn(&[f64]) -> Result<f64> + Sync> {
    dimension: usize,
    f: F,
    counter: AtomicU64,
}

impl<F: Fn(&[f64]) -> Result<f64> + Sync> CallableModel<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self {
            dimension,
            f,
            counter: AtomicU64::new(0),
        }
    }
}

impl<F: Fn(&[f64]) -> Result<f64> + Sync> Model for CallableModel<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(GaddError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        self.counter.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }

    fn evaluation_count(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }
}
