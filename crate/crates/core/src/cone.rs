//! The Vinberg cone of a rank-2 or special rank-3 Nil-algebra.
//!
//! Matrix coordinates of a rank-3 point are `x₁, x₂, x₃` on the diagonal and
//! `x₁₂ = s₀`, `x₁₃ = s₁`, `x₂₃ = v` off it. The invariant polynomials are
//!
//! ```text
//! p₃ = x₃,  p₂ = x₂x₃ − |v|²,  p₁ = x₃ d,
//! d  = x₁x₂x₃ − x₁|v|² − x₃|s₀|² − x₂|s₁|² + 2⟨μ_v(s₀), s₁⟩,
//! ```
//!
//! and `d(A·A*) = (a₁₁a₂₂a₃₃)²`. Over an algebra whose product
//! `u ↦ u·x₂₃` is not onto `𝒩_13` (the anti-transposed special algebras),
//! the squared G-determinant picks up the rational correction
//! `(|x₂₃|²|x₁₃|² − |x₁₃·x₂₃^♭|²)/x₃`.

use std::sync::Arc;

use nalgebra::DVector;
use num_rational::Rational64;
use serde::Serialize;

use crate::clifford::CliffordModule;
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::nilalgebra::{slots, HermMatrix, NilAlgebra, TriangularElement};

/// Radicands below this value make the Cholesky-type decomposition fail.
pub const RADICAND_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    algebra: NilAlgebra,
    exponents: Vec<Rational64>,
}

/// Group coordinates of a cone point together with the reconstruction error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCoordinates {
    pub element: TriangularElement,
    /// Per equation (diagonal entries, then slots): max |(A·A*) − X| divided
    /// by the largest absolute matrix coordinate of X.
    pub residuals: Vec<f64>,
}

impl GroupCoordinates {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

impl Cone {
    pub fn new(algebra: NilAlgebra) -> Self {
        let m = algebra.rank();
        let exponents = (1..=m)
            .map(|i| {
                let dims: usize = (1..=m)
                    .filter(|&s| s != i)
                    .map(|s| algebra.space(i.min(s), i.max(s)).dim())
                    .sum();
                Rational64::new(2 + dims as i64, 2)
            })
            .collect();
        Self { algebra, exponents }
    }

    pub fn rank2(w_space: MetricSpace) -> Self {
        Self::new(NilAlgebra::rank2(w_space))
    }

    pub fn rank3(module: CliffordModule) -> Result<Self> {
        Ok(Self::new(NilAlgebra::rank3_special(Arc::new(module))?))
    }

    /// The cone of the anti-transposed algebra; `anti_transpose` maps the dual
    /// cone `{A*·A}` of `self` onto it.
    pub fn dual(&self) -> Self {
        Self::new(self.algebra.dual())
    }

    pub fn algebra(&self) -> &NilAlgebra {
        &self.algebra
    }

    pub fn rank(&self) -> usize {
        self.algebra.rank()
    }

    pub fn dim_herm(&self) -> usize {
        self.algebra.dim_herm()
    }

    /// `n_i = 1 + ½ Σ_{s≠i} dim 𝒩_is`.
    pub fn exponents(&self) -> &[Rational64] {
        &self.exponents
    }

    /// Exponents of `p_i` in the characteristic function: `n_i − n_{i−1} − … − n_1`.
    pub fn characteristic_exponents(&self) -> Vec<Rational64> {
        (0..self.exponents.len())
            .map(|i| {
                self.exponents[..i]
                    .iter()
                    .fold(self.exponents[i], |acc, n| acc - n)
            })
            .collect()
    }

    /// Degree of `p_i` in the matrix coordinates: `2^{m−i}`.
    pub fn p_degrees(&self) -> Vec<u32> {
        let m = self.rank() as u32;
        (1..=m).map(|i| 1 << (m - i)).collect()
    }

    pub fn is_euclidean(&self) -> bool {
        self.algebra.is_euclidean()
    }

    fn require_euclidean(&self, op: &'static str) -> Result<()> {
        match self.algebra.indefinite_signature() {
            None => Ok(()),
            Some((p, q)) => Err(Error::Indefinite { p, q, op }),
        }
    }

    fn require_rank3(&self, op: &str) -> Result<()> {
        if self.rank() == 3 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{op} is defined for rank-3 cones only")))
        }
    }

    /// `(p₁, …, p_m)` at `x`.
    pub fn p_polynomials(&self, x: &HermMatrix) -> Result<Vec<f64>> {
        self.algebra.check_herm(x)?;
        Ok(self.p_unchecked(x))
    }

    fn p_unchecked(&self, x: &HermMatrix) -> Vec<f64> {
        let alg = &self.algebra;
        match alg.rank() {
            2 => {
                let (x1, x2) = (x.diag[0], x.diag[1]);
                vec![x1 * x2 - alg.spaces()[0].norm_sq(&x.offdiag[0]), x2]
            }
            _ => {
                let x2 = x.diag[1];
                let x3 = x.diag[2];
                let p2 = x2 * x3 - alg.spaces()[2].norm_sq(&x.offdiag[2]);
                vec![x3 * self.determinant3(x), p2, x3]
            }
        }
    }

    /// Squared G-determinant of a rank-3 point in slot notation.
    fn determinant3(&self, x: &HermMatrix) -> f64 {
        let alg = &self.algebra;
        let [s12, s13, s23] = [&alg.spaces()[0], &alg.spaces()[1], &alg.spaces()[2]];
        let (x1, x2, x3) = (x.diag[0], x.diag[1], x.diag[2]);
        let (x12, x13, x23) = (&x.offdiag[0], &x.offdiag[1], &x.offdiag[2]);
        let (n12, n13, n23) = (s12.norm_sq(x12), s13.norm_sq(x13), s23.norm_sq(x23));
        let cross = s13.inner(&alg.mul(x12, x23), x13);
        let cubic = x1 * x2 * x3 - x1 * n23 - x3 * n12 - x2 * n13 + 2.0 * cross;
        if alg.right_mult_is_onto() {
            cubic
        } else {
            let flat = alg.right_flat(x13, x23);
            cubic + (n23 * n13 - s12.norm_sq(&flat)) / x3
        }
    }

    /// The squared G-determinant `d(X)` of a rank-3 cone.
    pub fn d_cubic(&self, x: &HermMatrix) -> Result<f64> {
        self.require_rank3("d")?;
        self.algebra.check_herm(x)?;
        if !self.algebra.right_mult_is_onto() && x.diag[2] == 0.0 {
            return Err(Error::Singular("x3 = 0".into()));
        }
        Ok(self.determinant3(x))
    }

    /// `π²(X)`: `p₁` at rank 2, `d` at rank 3.
    pub fn g_determinant_sq(&self, x: &HermMatrix) -> Result<f64> {
        match self.rank() {
            2 => Ok(self.p_polynomials(x)?[0]),
            _ => self.d_cubic(x),
        }
    }

    /// Strict positivity of every `p_i`.
    pub fn membership(&self, x: &HermMatrix) -> Result<bool> {
        self.require_euclidean("membership")?;
        self.algebra.check_herm(x)?;
        Ok(self.contains_unchecked(x))
    }

    fn contains_unchecked(&self, x: &HermMatrix) -> bool {
        let m = self.rank();
        // p_m first: the higher p_i are only meaningful once x_mm > 0.
        x.diag[m - 1] > 0.0 && self.p_unchecked(x).iter().all(|&p| p > 0.0)
    }

    /// Generalized Cholesky decomposition `X = A·A*`, solved from the bottom
    /// row up with positive diagonal square roots.
    pub fn group_coordinates(&self, x: &HermMatrix) -> Result<GroupCoordinates> {
        let alg = &self.algebra;
        alg.check_herm(x)?;
        let m = alg.rank();
        let mut a = alg.identity_triangular();
        for i in (1..=m).rev() {
            for j in (i + 1..=m).rev() {
                let mut rhs = x.entry(m, i, j).clone();
                for k in j + 1..=m {
                    rhs -= alg.right_flat(a.entry(m, i, k), a.entry(m, j, k));
                }
                let idx = crate::nilalgebra::slot_index(m, i, j).expect("slot");
                a.offdiag[idx] = rhs / a.diag[j - 1];
            }
            let tail: f64 = (i + 1..=m)
                .map(|k| alg.space(i, k).norm_sq(a.entry(m, i, k)))
                .sum();
            let radicand = x.diag[i - 1] - tail;
            if !(radicand >= RADICAND_TOL) {
                return Err(Error::OutsideCone(format!(
                    "radicand {radicand:e} for a_{i}{i} is below {RADICAND_TOL:e}"
                )));
            }
            a.diag[i - 1] = radicand.sqrt();
        }
        let back = alg.outer_unchecked(&a);
        let scale = x.to_flat().amax().max(f64::MIN_POSITIVE);
        let mut residuals: Vec<f64> = x
            .diag
            .iter()
            .zip(&back.diag)
            .map(|(p, q)| (p - q).abs() / scale)
            .collect();
        residuals.extend(
            x.offdiag
                .iter()
                .zip(&back.offdiag)
                .map(|(p, q)| (p - q).amax() / scale),
        );
        Ok(GroupCoordinates {
            element: a,
            residuals,
        })
    }

    /// `log χ(X) = Σ_i (n_i − n_{i−1} − … − n_1) log p_i(X)`.
    pub fn log_characteristic_function(&self, x: &HermMatrix) -> Result<f64> {
        self.algebra.check_herm(x)?;
        let p = self.p_unchecked(x);
        if let Some(i) = p.iter().position(|&v| v <= 0.0) {
            return Err(Error::OutsideCone(format!("p_{} = {:e} is not positive", i + 1, p[i])));
        }
        Ok(self
            .characteristic_exponents()
            .iter()
            .zip(&p)
            .map(|(e, pi)| ratio_to_f64(*e) * pi.ln())
            .sum())
    }

    pub fn characteristic_function(&self, x: &HermMatrix) -> Result<f64> {
        Ok(self.log_characteristic_function(x)?.exp())
    }

    /// Squared G*-determinant of the dual cone `{A*·A}` evaluated directly in
    /// the coordinates of `X`:
    /// `d′ = d + (|s₀|²|s₁|² − |s₁·s₀^♭|²)/x₁` at rank 3, `p₁` at rank 2.
    pub fn d_prime(&self, x: &HermMatrix) -> Result<f64> {
        let alg = &self.algebra;
        alg.check_herm(x)?;
        if alg.rank() == 2 {
            return Ok(self.p_unchecked(x)[0]);
        }
        let x1 = x.diag[0];
        if x1 == 0.0 {
            return Err(Error::Singular("d' is undefined at x1 = 0".into()));
        }
        let [s12, s13, s23] = [&alg.spaces()[0], &alg.spaces()[1], &alg.spaces()[2]];
        let (x2, x3) = (x.diag[1], x.diag[2]);
        let (x12, x13, x23) = (&x.offdiag[0], &x.offdiag[1], &x.offdiag[2]);
        let (n12, n13, n23) = (s12.norm_sq(x12), s13.norm_sq(x13), s23.norm_sq(x23));
        let cross = s13.inner(&alg.mul(x12, x23), x13);
        let flat = alg.left_flat(x12, x13);
        let correction = (n12 * n13 - s23.norm_sq(&flat)) / x1;
        Ok(x1 * x2 * x3 - x1 * n23 - x3 * n12 - x2 * n13 + 2.0 * cross + correction)
    }

    /// `d′` through the anti-transposed algebra: `π²_{𝒩^{t′}}(t′(X))`.
    pub fn d_prime_via_dual(&self, x: &HermMatrix) -> Result<f64> {
        let y = self.algebra.anti_transpose(x)?;
        let dual = self.dual();
        if dual.rank() == 3 && !dual.algebra.right_mult_is_onto() && y.diag[2] == 0.0 {
            return Err(Error::Singular("d' is undefined at x1 = 0".into()));
        }
        dual.g_determinant_sq(&y)
    }

    /// Membership in the dual cone `{A*·A}`: the leading principal
    /// conditions `x₁ > 0`, `x₁x₂ − |x₁₂|² > 0` (rank 3) and `d′ > 0`.
    pub fn dual_membership(&self, x: &HermMatrix) -> Result<bool> {
        self.require_euclidean("dual membership")?;
        self.algebra.check_herm(x)?;
        let x1 = x.diag[0];
        if x1 <= 0.0 {
            return Ok(false);
        }
        if self.rank() == 3 {
            let minor = x1 * x.diag[1] - self.algebra.spaces()[0].norm_sq(&x.offdiag[0]);
            if minor <= 0.0 {
                return Ok(false);
            }
        }
        Ok(self.d_prime(x)? > 0.0)
    }

    /// Trace pairing `⟨X, Y⟩ = Σ x_i y_i + 2 Σ ⟨x_ij, y_ij⟩`.
    pub fn pairing(&self, x: &HermMatrix, y: &HermMatrix) -> Result<f64> {
        self.algebra.herm_inner(x, y)
    }

    pub fn herm_from_triangular(&self, a: &TriangularElement) -> Result<HermMatrix> {
        self.algebra.herm_from_triangular(a)
    }

    pub fn herm_from_triangular_dual(&self, a: &TriangularElement) -> Result<HermMatrix> {
        self.algebra.herm_from_triangular_dual(a)
    }

    /// Descriptor summary used by the CLI.
    pub fn summary(&self) -> ConeSummary {
        ConeSummary {
            rank: self.rank(),
            dim_herm: self.dim_herm(),
            slot_dims: slots(self.rank())
                .iter()
                .zip(self.algebra.slot_dims())
                .map(|(&(i, j), d)| (format!("{i}{j}"), d))
                .collect(),
            exponents: self.exponents.iter().map(|r| ratio_to_f64(*r)).collect(),
            exponents_exact: self.exponents.iter().map(ToString::to_string).collect(),
            characteristic_exponents: self
                .characteristic_exponents()
                .iter()
                .map(ToString::to_string)
                .collect(),
            euclidean: self.is_euclidean(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSummary {
    pub rank: usize,
    pub dim_herm: usize,
    pub slot_dims: std::collections::BTreeMap<String, usize>,
    pub exponents: Vec<f64>,
    pub exponents_exact: Vec<String>,
    pub characteristic_exponents: Vec<String>,
    pub euclidean: bool,
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Convenience for tests and callers: a diagonal-free zero vector of the right size.
pub fn zero_block(dim: usize) -> DVector<f64> {
    DVector::zeros(dim)
}
