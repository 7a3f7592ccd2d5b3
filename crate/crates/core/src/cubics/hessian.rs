use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::InvariantCubic;
use crate::error::{Error, Result};
use crate::nilalgebra::HermMatrix;
use crate::sampling::stream_rng;

/// Margin on the pivots of the equilibrated form.
pub const MINOR_TOL: f64 = 1e-12;

/// Allowed `|q(X) − 1|` for points handed to the restriction, relative to
/// the size of the terms of `q` (at least 1).
pub const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PositiveDefinite,
    Indefinite,
    Degenerate,
}

impl Verdict {
    pub fn is_pd(self) -> bool {
        self == Verdict::PositiveDefinite
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::PositiveDefinite => "positive-definite",
            Verdict::Indefinite => "indefinite",
            Verdict::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    pub point: HermMatrix,
    /// Full `−Hess log q`.
    pub hessian: DMatrix<f64>,
    /// Columns span `ker dq` at the point.
    pub tangent_basis: DMatrix<f64>,
    pub restricted: DMatrix<f64>,
    pub verdict: Verdict,
    /// Leading principal minors of the restricted form after scaling it to
    /// unit diagonal.
    pub leading_minors: Vec<f64>,
    /// Ratios of successive leading minors, i.e. the Cholesky pivots of the
    /// equilibrated form. Shorter than the form when elimination breaks down.
    pub pivots: Vec<f64>,
    /// Worst `|dq(b_k)| / |∇q|` over the basis.
    pub gradient_residual: f64,
    pub symmetry_residual: f64,
}

impl HessianReport {
    /// Smallest pivot, or 0 if elimination broke down.
    pub fn margin(&self) -> f64 {
        if self.pivots.len() < self.restricted.nrows() {
            return self.pivots.iter().copied().fold(0.0, f64::min);
        }
        self.pivots.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        serde_json::json!({
            "point": self.point,
            "hessian": rows(&self.hessian),
            "tangent_basis": rows(&self.tangent_basis.transpose()),
            "restricted": rows(&self.restricted),
            "verdict": self.verdict,
            "leading_minors": self.leading_minors,
            "pivots": self.pivots,
            "margin": self.margin(),
            "gradient_residual": self.gradient_residual,
            "symmetry_residual": self.symmetry_residual,
        })
    }
}

/// Orthonormal basis of the orthogonal complement of `g`, from the Householder
/// reflection carrying `g/|g|` onto a coordinate axis.
pub(crate) fn complement_basis(g: &DVector<f64>) -> DMatrix<f64> {
    let n = g.len();
    let u = g / g.norm();
    let mut w = u.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let reflector = DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / w.norm_squared());
    reflector.columns(1, n - 1).into_owned()
}

/// Equilibrated leading minors, pivots and the verdict of a symmetric form.
///
/// Positive definite means every pivot exceeds [`MINOR_TOL`]. Thresholding the
/// minors themselves would not do: their products decay with the dimension.
pub fn minors_and_verdict(form: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>, Verdict) {
    let n = form.nrows();
    let scale = form.amax();
    if n == 0 || scale == 0.0 {
        return (vec![0.0; n], Vec::new(), Verdict::Degenerate);
    }
    // Congruence by diag(|r_ii|^{-1/2}) keeps the inertia.
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let d = form[(i, i)].abs();
            if d > MINOR_TOL * scale {
                d.sqrt().recip()
            } else {
                scale.sqrt().recip()
            }
        })
        .collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| form[(i, j)] * s[i] * s[j]);

    let mut minors = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    let mut work = normalized.clone();
    let mut product = 1.0;
    let mut k = 0;
    while k < n {
        let pivot = work[(k, k)];
        if pivot.abs() <= f64::EPSILON {
            break;
        }
        product *= pivot;
        pivots.push(pivot);
        minors.push(product);
        for i in k + 1..n {
            let f = work[(i, k)] / pivot;
            if f != 0.0 {
                for j in k + 1..n {
                    work[(i, j)] -= f * work[(k, j)];
                }
            }
        }
        k += 1;
    }
    // A vanishing pivot breaks the elimination; finish with determinants.
    for m in minors.len() + 1..=n {
        minors.push(normalized.view((0, 0), (m, m)).into_owned().determinant());
    }

    if pivots.len() == n && pivots.iter().all(|&p| p > MINOR_TOL) {
        return (minors, pivots, Verdict::PositiveDefinite);
    }
    let eig = normalized.symmetric_eigenvalues();
    let top = eig.amax();
    let verdict = if eig.iter().any(|&l| l < -MINOR_TOL * top) {
        Verdict::Indefinite
    } else {
        Verdict::Degenerate
    };
    (minors, pivots, verdict)
}

pub(crate) fn tangent_restriction(
    q: &InvariantCubic,
    x: &HermMatrix,
    rotation_seed: Option<u64>,
) -> Result<HessianReport> {
    let cone = q.cone();
    if let Some((p, qq)) = cone.algebra().indefinite_signature() {
        return Err(Error::Indefinite {
            p,
            q: qq,
            op: "the tangent restriction",
        });
    }
    let value = q.eval(x)?;
    let terms = q.coeffs().iter().map(|c| c.abs()).sum::<f64>() * x.to_flat().amax().powi(3);
    if (value - 1.0).abs() > LEVEL_TOL * terms.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "point is not on the level set: q = {value}"
        )));
    }
    let hessian = q.hessian_log(x)?;
    let symmetry_residual = (&hessian - hessian.transpose()).amax();
    let g = q.gradient(x)?;
    let n = g.len();
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return Ok(HessianReport {
            point: x.clone(),
            hessian,
            tangent_basis: DMatrix::zeros(n, 0),
            restricted: DMatrix::zeros(0, 0),
            verdict: Verdict::Degenerate,
            leading_minors: Vec::new(),
            pivots: Vec::new(),
            gradient_residual: 0.0,
            symmetry_residual,
        });
    }
    let mut basis = complement_basis(&g);
    if let Some(seed) = rotation_seed {
        basis *= random_orthogonal(n - 1, seed);
    }
    let gradient_residual = basis.tr_mul(&g).amax() / gnorm;
    let mut restricted = basis.tr_mul(&(&hessian * &basis));
    restricted = (&restricted + restricted.transpose()) * 0.5;
    // Entries at rounding level of the full Hessian are structural zeros.
    let floor = 64.0 * f64::EPSILON * hessian.amax();
    restricted.apply(|r| {
        if r.abs() <= floor {
            *r = 0.0;
        }
    });
    let (leading_minors, pivots, verdict) = minors_and_verdict(&restricted);
    Ok(HessianReport {
        point: x.clone(),
        hessian,
        tangent_basis: basis,
        restricted,
        verdict,
        leading_minors,
        pivots,
        gradient_residual,
        symmetry_residual,
    })
}

/// Orthogonal factor of a seeded random square matrix.
fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 0);
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;
    use crate::cubics::tests::rank3;
    use crate::metric::MetricSpace;

    #[test]
    fn verdict_survives_dimension() {
        // Eigenvalues in [0.01, 1]; the equilibrated determinant is still tiny.
        let n = 80;
        let q = random_orthogonal(n, 7);
        let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 0.01 + (i as f64 / n as f64).powi(2)));
        let form = &q * d * q.transpose();
        let (minors, pivots, verdict) = minors_and_verdict(&form);
        assert_eq!(verdict, Verdict::PositiveDefinite);
        assert!(*minors.last().unwrap() < MINOR_TOL);
        assert!(pivots.iter().all(|&p| p > 1e-3));
    }

    #[test]
    fn complement_is_orthonormal() {
        let g = DVector::from_vec(vec![-0.3, 2.0, 0.5, 1.0]);
        let b = complement_basis(&g);
        assert!((b.tr_mul(&b) - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!(b.tr_mul(&g).amax() < 1e-14);
    }

    #[test]
    fn verdicts() {
        let pd = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(minors_and_verdict(&pd).2, Verdict::PositiveDefinite);
        let ind = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(minors_and_verdict(&ind).2, Verdict::Indefinite);
        let psd = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(minors_and_verdict(&psd).2, Verdict::Degenerate);
        let zero_corner = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(minors_and_verdict(&zero_corner).2, Verdict::Indefinite);
        assert_eq!(minors_and_verdict(&DMatrix::zeros(3, 3)).2, Verdict::Degenerate);
    }

    #[test]
    fn rank2_identity_is_pd() {
        let q = InvariantCubic::normalized_rank2(Cone::rank2(MetricSpace::euclidean(3)), 0.0).unwrap();
        let x = q.cone().algebra().identity_herm();
        let h = q.hessian_log(&x).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 2.0, 2.0, 2.0]));
        assert!((&h - expected).amax() < 1e-14);
        let r = q.tangent_restriction(&x).unwrap();
        assert_eq!(r.verdict, Verdict::PositiveDefinite);
        assert!(r.gradient_residual < 1e-14);
    }

    #[test]
    fn determinant_is_admissible_at_identity() {
        for dim_v in [1, 2, 4, 8] {
            let q = InvariantCubic::normalized_rank3(rank3(dim_v), 0.0, 0.0).unwrap();
            let r = q.tangent_restriction(&q.cone().algebra().identity_herm()).unwrap();
            assert!(r.verdict.is_pd(), "dim_v {dim_v}");
        }
    }

    #[test]
    fn degenerate_rank2_cubic() {
        let q = InvariantCubic::new(Cone::rank2(MetricSpace::euclidean(2)), &[1.0, 0.0]).unwrap();
        let x = q.cone().algebra().diagonal_herm(&[1.0, 1.0]).unwrap();
        assert_eq!(q.tangent_restriction(&x).unwrap().verdict, Verdict::Degenerate);
    }

    #[test]
    fn rotated_basis_agrees() {
        let q = InvariantCubic::normalized_rank3(rank3(2), 0.5, 0.0).unwrap();
        let x = q.project_to_level(&q.cone().algebra().diagonal_herm(&[1.0, 2.0, 0.5]).unwrap()).unwrap();
        let a = q.tangent_restriction(&x).unwrap();
        let b = q.tangent_restriction_rotated(&x, 9).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!(b.gradient_residual < 1e-12);
    }

    #[test]
    fn off_level_points_are_rejected() {
        let q = InvariantCubic::normalized_rank3(rank3(1), 0.0, 0.0).unwrap();
        let x = q.cone().algebra().diagonal_herm(&[2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(q.tangent_restriction(&x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn indefinite_algebra_is_refused() {
        let cone = Cone::rank2(MetricSpace::pseudo_euclidean(1, 1));
        let q = InvariantCubic::normalized_rank2(cone, 0.0).unwrap();
        let x = q.cone().algebra().identity_herm();
        assert!(matches!(q.tangent_restriction(&x), Err(Error::Indefinite { .. })));
    }
}
