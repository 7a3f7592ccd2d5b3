//! Finite-dimensional real vector spaces with a non-degenerate inner product.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Tolerance on |det gram| below which a Gram matrix counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Signature `(p, q)`: `p` positive and `q` negative directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { p: dim, q: 0 }
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn is_euclidean(&self) -> bool {
        self.q == 0
    }
}

impl From<[usize; 2]> for Signature {
    fn from(pq: [usize; 2]) -> Self {
        Self { p: pq[0], q: pq[1] }
    }
}

impl From<Signature> for [usize; 2] {
    fn from(s: Signature) -> Self {
        [s.p, s.q]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    signature: Signature,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    diagonal: bool,
}

impl MetricSpace {
    /// `R^dim` with the identity Gram matrix.
    pub fn euclidean(dim: usize) -> Self {
        Self::pseudo_euclidean(dim, 0)
    }

    /// `R^{p,q}` with Gram matrix `diag(+1 x p, -1 x q)`.
    pub fn pseudo_euclidean(p: usize, q: usize) -> Self {
        let diag = DVector::from_fn(p + q, |i, _| if i < p { 1.0 } else { -1.0 });
        let gram = DMatrix::from_diagonal(&diag);
        Self {
            signature: Signature::new(p, q),
            gram_inv: gram.clone(),
            gram,
            diagonal: true,
        }
    }

    /// Validates symmetry, non-degeneracy and the declared signature.
    pub fn from_gram(gram: DMatrix<f64>, signature: Signature) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::InvalidArgument("gram matrix must be square".into()));
        }
        check_dim("gram matrix", signature.dim(), gram.nrows())?;
        let n = gram.nrows();
        for i in 0..n {
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * (1.0 + gram[(i, j)].abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "gram matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if gram.determinant().abs() <= DEGENERACY_TOL {
            return Err(Error::InvalidArgument("gram matrix is degenerate".into()));
        }
        let found = counted_signature(&gram);
        if found != signature {
            return Err(Error::InvalidArgument(format!(
                "declared signature ({}, {}) but gram has ({}, {})",
                signature.p, signature.q, found.p, found.q
            )));
        }
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("gram matrix is not invertible".into()))?;
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || gram[(i, j)] == 0.0));
        Ok(Self {
            signature,
            gram,
            gram_inv,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn is_euclidean(&self) -> bool {
        self.signature.is_euclidean()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        if self.diagonal {
            x.iter()
                .zip(y.iter())
                .enumerate()
                .map(|(i, (a, b))| self.gram[(i, i)] * a * b)
                .sum()
        } else {
            x.dot(&(&self.gram * y))
        }
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x)
    }

    /// Index lowering `x ↦ G x`.
    pub fn lower(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gram * x
    }

    /// Index raising `y ↦ G⁻¹ y`.
    pub fn raise(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.gram_inv * y
    }
}

/// Signature of a symmetric matrix counted from the signs of its eigenvalues.
pub fn counted_signature(gram: &DMatrix<f64>) -> Signature {
    let eig = gram.clone().symmetric_eigenvalues();
    let p = eig.iter().filter(|&&l| l > 0.0).count();
    let q = eig.iter().filter(|&&l| l < 0.0).count();
    Signature::new(p, q)
}
