//! Cubic polynomials invariant under the unipotent part of the Vinberg group,
//! and the Hessian metric `−Hess log q` they induce on the level set `q = 1`.
//!
//! Rank 2: `q = a·x₂³ + b·x₂·p₁` (normalized: `b = 1`, `ε = a`).
//! Rank 3: `q = a·d + b·p₂p₃ + c·p₃³` (normalized: `a = 1`, `ε₁ = b`, `ε₂ = c`).

mod hessian;
mod oracle;
mod scan;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::nilalgebra::HermMatrix;

pub use hessian::{minors_and_verdict, HessianReport, Verdict, MINOR_TOL};
pub use oracle::{componentwise_relative_error, finite_difference_gradient, finite_difference_hessian_log, paper_hessian_rank2, paper_hessian_rank3, PolynomialOracle};
pub use scan::{
    admissibility_on_diagonal, find_locally_admissible_point, scan_parameter_plane, write_scan_csv,
    AdmissibilityReport, Classification, DiagonalGrid, LocalSearch, ParamRange, ScanRow,
    SliceWitness,
};

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCubic {
    cone: Cone,
    coeffs: Vec<f64>,
}

/// Flat offsets of the off-diagonal slots.
fn offsets(cone: &Cone) -> Vec<usize> {
    let mut k = cone.rank();
    cone.algebra()
        .slot_dims()
        .into_iter()
        .map(|n| {
            let o = k;
            k += n;
            o
        })
        .collect()
}

impl InvariantCubic {
    /// `coeffs` is `(a, b)` at rank 2 and `(a, b, c)` at rank 3.
    pub fn new(cone: Cone, coeffs: &[f64]) -> Result<Self> {
        let expected = cone.rank();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "cubic coefficients",
                expected,
                got: coeffs.len(),
            });
        }
        if cone.rank() == 3 && !cone.algebra().right_mult_is_onto() {
            return Err(Error::Unsupported(
                "invariant cubics need a polynomial squared G-determinant".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cubic coefficients must be finite".into()));
        }
        Ok(Self {
            cone,
            coeffs: coeffs.to_vec(),
        })
    }

    /// `(x₁x₂ − |w|²)x₂ + ε x₂³`.
    pub fn normalized_rank2(cone: Cone, eps: f64) -> Result<Self> {
        Self::new(cone, &[eps, 1.0])
    }

    /// `d + ε₁ x₃(x₂x₃ − |v|²) + ε₂ x₃³`.
    pub fn normalized_rank3(cone: Cone, eps1: f64, eps2: f64) -> Result<Self> {
        Self::new(cone, &[1.0, eps1, eps2])
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn leading(&self) -> f64 {
        if self.cone.rank() == 2 {
            self.coeffs[1]
        } else {
            self.coeffs[0]
        }
    }

    /// Whether the cubic can be scaled into the normalized family.
    pub fn is_normalizable(&self) -> bool {
        self.leading() != 0.0
    }

    pub fn is_normalized(&self) -> bool {
        self.leading() == 1.0
    }

    /// `ε` (rank 2) or `(ε₁, ε₂)` (rank 3) after normalization.
    pub fn epsilons(&self) -> Option<Vec<f64>> {
        let l = self.leading();
        if l == 0.0 {
            return None;
        }
        Some(match self.cone.rank() {
            2 => vec![self.coeffs[0] / l],
            _ => vec![self.coeffs[1] / l, self.coeffs[2] / l],
        })
    }

    pub fn eval(&self, x: &HermMatrix) -> Result<f64> {
        self.cone.algebra().check_herm(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &HermMatrix) -> f64 {
        let spaces = self.cone.algebra().spaces();
        match self.cone.rank() {
            2 => {
                let (a, b) = (self.coeffs[0], self.coeffs[1]);
                let (x1, x2) = (x.diag[0], x.diag[1]);
                let p1 = x1 * x2 - spaces[0].norm_sq(&x.offdiag[0]);
                a * x2 * x2 * x2 + b * x2 * p1
            }
            _ => {
                let (a, b, c) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
                let (x2, x3) = (x.diag[1], x.diag[2]);
                let d = if a == 0.0 { 0.0 } else { self.cone.d_cubic(x).expect("checked") };
                let p2 = x2 * x3 - spaces[2].norm_sq(&x.offdiag[2]);
                a * d + b * p2 * x3 + c * x3 * x3 * x3
            }
        }
    }

    /// `∇q` in flat coordinates.
    pub fn gradient(&self, x: &HermMatrix) -> Result<DVector<f64>> {
        self.cone.algebra().check_herm(x)?;
        Ok(self.gradient_unchecked(x))
    }

    fn gradient_unchecked(&self, x: &HermMatrix) -> DVector<f64> {
        let alg = self.cone.algebra();
        let spaces = alg.spaces();
        let off = offsets(&self.cone);
        let mut g = DVector::zeros(self.cone.dim_herm());
        match self.cone.rank() {
            2 => {
                let (a, b) = (self.coeffs[0], self.coeffs[1]);
                let (x1, x2) = (x.diag[0], x.diag[1]);
                let w = &x.offdiag[0];
                let nw = spaces[0].norm_sq(w);
                g[0] = b * x2 * x2;
                g[1] = 3.0 * a * x2 * x2 + b * (2.0 * x1 * x2 - nw);
                g.rows_mut(off[0], w.len())
                    .copy_from(&(spaces[0].lower(w) * (-2.0 * b * x2)));
            }
            _ => {
                let (a, b, c) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
                let (x1, x2, x3) = (x.diag[0], x.diag[1], x.diag[2]);
                let (x12, x13, x23) = (&x.offdiag[0], &x.offdiag[1], &x.offdiag[2]);
                let (s12, s13, s23) = (&spaces[0], &spaces[1], &spaces[2]);
                let (n12, n13, n23) = (s12.norm_sq(x12), s13.norm_sq(x13), s23.norm_sq(x23));
                g[0] = a * (x2 * x3 - n23);
                g[1] = a * (x1 * x3 - n13) + b * x3 * x3;
                g[2] = a * (x1 * x2 - n12) + b * (2.0 * x2 * x3 - n23) + 3.0 * c * x3 * x3;
                let r12 = alg.right_flat(x13, x23);
                let p13 = alg.mul(x12, x23);
                let l23 = alg.left_flat(x12, x13);
                let g12 = s12.lower(&(x12 * (-2.0 * a * x3) + r12 * (2.0 * a)));
                let g13 = s13.lower(&(x13 * (-2.0 * a * x2) + p13 * (2.0 * a)));
                let g23 = s23.lower(&(x23 * (-2.0 * a * x1 - 2.0 * b * x3) + l23 * (2.0 * a)));
                g.rows_mut(off[0], g12.len()).copy_from(&g12);
                g.rows_mut(off[1], g13.len()).copy_from(&g13);
                g.rows_mut(off[2], g23.len()).copy_from(&g23);
            }
        }
        g
    }

    /// `Hess q` in flat coordinates.
    pub fn hessian(&self, x: &HermMatrix) -> Result<DMatrix<f64>> {
        self.cone.algebra().check_herm(x)?;
        Ok(self.hessian_unchecked(x))
    }

    fn hessian_unchecked(&self, x: &HermMatrix) -> DMatrix<f64> {
        let alg = self.cone.algebra();
        let spaces = alg.spaces();
        let off = offsets(&self.cone);
        let n = self.cone.dim_herm();
        let mut h = DMatrix::zeros(n, n);
        match self.cone.rank() {
            2 => {
                let (a, b) = (self.coeffs[0], self.coeffs[1]);
                let (x1, x2) = (x.diag[0], x.diag[1]);
                let w = &x.offdiag[0];
                let k = w.len();
                let gram = spaces[0].gram();
                h[(0, 1)] = 2.0 * b * x2;
                h[(1, 1)] = 6.0 * a * x2 + 2.0 * b * x1;
                h.view_mut((1, off[0]), (1, k))
                    .copy_from(&(spaces[0].lower(w) * (-2.0 * b)).transpose());
                h.view_mut((off[0], off[0]), (k, k))
                    .copy_from(&(gram * (-2.0 * b * x2)));
            }
            _ => {
                let (a, b, c) = (self.coeffs[0], self.coeffs[1], self.coeffs[2]);
                let (x1, x2, x3) = (x.diag[0], x.diag[1], x.diag[2]);
                let (x12, x13, x23) = (&x.offdiag[0], &x.offdiag[1], &x.offdiag[2]);
                let (s12, s13, s23) = (&spaces[0], &spaces[1], &spaces[2]);
                let (k12, k13, k23) = (x12.len(), x13.len(), x23.len());
                h[(0, 1)] = a * x3;
                h[(0, 2)] = a * x2;
                h[(1, 2)] = a * x1 + 2.0 * b * x3;
                h[(2, 2)] = 2.0 * b * x2 + 6.0 * c * x3;
                let set_row = |h: &mut DMatrix<f64>, r: usize, o: usize, v: DVector<f64>| {
                    h.view_mut((r, o), (1, v.len())).copy_from(&v.transpose());
                };
                set_row(&mut h, 0, off[2], s23.lower(x23) * (-2.0 * a));
                set_row(&mut h, 1, off[1], s13.lower(x13) * (-2.0 * a));
                set_row(&mut h, 2, off[0], s12.lower(x12) * (-2.0 * a));
                set_row(&mut h, 2, off[2], s23.lower(x23) * (-2.0 * b));
                h.view_mut((off[0], off[0]), (k12, k12))
                    .copy_from(&(s12.gram() * (-2.0 * a * x3)));
                h.view_mut((off[1], off[1]), (k13, k13))
                    .copy_from(&(s13.gram() * (-2.0 * a * x2)));
                h.view_mut((off[2], off[2]), (k23, k23))
                    .copy_from(&(s23.gram() * (-2.0 * a * x1 - 2.0 * b * x3)));
                if a != 0.0 {
                    // Rows x12, columns x13: (G13 M12(x23))ᵀ.
                    let m12 = s13.gram() * alg.right_mult_matrix(x23) * (2.0 * a);
                    h.view_mut((off[0], off[1]), (k12, k13)).copy_from(&m12.transpose());
                    let m23 = s13.gram() * alg.left_mult_matrix(x12) * (2.0 * a);
                    h.view_mut((off[1], off[2]), (k13, k23)).copy_from(&m23);
                    let y = s13.lower(x13) * (2.0 * a);
                    for j in 0..k23 {
                        let mut e = DVector::zeros(k23);
                        e[j] = 1.0;
                        let col = alg.right_mult_matrix(&e).tr_mul(&y);
                        h.view_mut((off[0], off[2] + j), (k12, 1)).copy_from(&col);
                    }
                }
            }
        }
        // Only the upper triangle was filled.
        for i in 0..n {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        h
    }

    /// `−Hess log q = (∇q ∇qᵀ − q Hess q)/q²`.
    pub fn hessian_log(&self, x: &HermMatrix) -> Result<DMatrix<f64>> {
        self.cone.algebra().check_herm(x)?;
        let q = self.eval_unchecked(x);
        if q == 0.0 || !q.is_finite() {
            return Err(Error::Singular(format!("log q is singular at q = {q:e}")));
        }
        let g = self.gradient_unchecked(x);
        let h = self.hessian_unchecked(x);
        Ok((&g * g.transpose() - h * q) / (q * q))
    }

    /// `X / q(X)^{1/3}`, a point with `q = 1`.
    pub fn project_to_level(&self, x: &HermMatrix) -> Result<HermMatrix> {
        let q = self.eval(x)?;
        if !(q > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot project onto q = 1 from q = {q:e}"
            )));
        }
        Ok(x.scaled(q.cbrt().recip()))
    }

    /// `−Hess log q` restricted to `ker dq` at a point with `q = 1`.
    pub fn tangent_restriction(&self, x: &HermMatrix) -> Result<HessianReport> {
        hessian::tangent_restriction(self, x, None)
    }

    /// As [`Self::tangent_restriction`], with the tangent basis rotated by a
    /// seeded random orthogonal matrix.
    pub fn tangent_restriction_rotated(&self, x: &HermMatrix, seed: u64) -> Result<HessianReport> {
        hessian::tangent_restriction(self, x, Some(seed))
    }
}

/// Whether a cubic invariant under the full diagonal-and-unipotent group exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G0CubicReport {
    pub rank: usize,
    /// Degree of the squared G-determinant `π² = Π p_i^{2−i}`.
    pub degree_pi_sq: i64,
    pub exists: bool,
    pub message: String,
}

pub fn no_g0_cubic_check(cone: &Cone) -> G0CubicReport {
    let m = cone.rank() as i64;
    let degree: i64 = (1..=m).map(|i| (2 - i) * (1 << (m - i))).sum();
    let exists = 3 % degree == 0;
    let message = if !exists {
        format!("none exists, deg {degree} does not divide 3")
    } else if degree == 3 {
        "unique up to scale: d".to_string()
    } else {
        format!("unique up to scale: (pi^2)^{}", 3 / degree)
    };
    G0CubicReport {
        rank: cone.rank(),
        degree_pi_sq: degree,
        exists,
        message,
    }
}
