//! Independent evaluations of `−Hess log q`: a symbolic polynomial assembled
//! from structure constants, finite differences, and the closed forms at
//! diagonal points.

use nalgebra::{DMatrix, DVector};

use super::{offsets, InvariantCubic};
use crate::error::{Error, Result};
use crate::nilalgebra::HermMatrix;
use crate::polynomial::{bilinear_form, Polynomial};

#[derive(Debug, Clone)]
pub struct PolynomialOracle {
    q: Polynomial,
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl PolynomialOracle {
    pub fn new(cubic: &InvariantCubic) -> Self {
        let cone = cubic.cone();
        let alg = cone.algebra();
        let n = cone.dim_herm();
        let off = offsets(cone);
        let dims = alg.slot_dims();
        let block = |s: usize| (off[s]..off[s] + dims[s]).collect::<Vec<_>>();
        let x = |i: usize| Polynomial::var(i);
        let c = |v: f64| Polynomial::constant(v);
        let coeffs = cubic.coeffs();

        let q = match cone.rank() {
            2 => {
                let w = block(0);
                let nw = bilinear_form(alg.spaces()[0].gram(), &w, &w);
                let p1 = &(&x(0) * &x(1)) - &nw;
                let x2_cubed = &(&x(1) * &x(1)) * &x(1);
                &(&c(coeffs[0]) * &x2_cubed) + &(&c(coeffs[1]) * &(&x(1) * &p1))
            }
            _ => {
                let spaces = alg.spaces();
                let (b12, b13, b23) = (block(0), block(1), block(2));
                let n12 = bilinear_form(spaces[0].gram(), &b12, &b12);
                let n13 = bilinear_form(spaces[1].gram(), &b13, &b13);
                let n23 = bilinear_form(spaces[2].gram(), &b23, &b23);
                let mut cross = Polynomial::zero();
                for (i, &vi) in b12.iter().enumerate() {
                    for (j, &vj) in b23.iter().enumerate() {
                        let mut ei = DVector::zeros(dims[0]);
                        ei[i] = 1.0;
                        let mut ej = DVector::zeros(dims[2]);
                        ej[j] = 1.0;
                        let lowered = spaces[1].lower(&alg.mul(&ei, &ej));
                        let xij = &x(vi) * &x(vj);
                        for (k, &vk) in b13.iter().enumerate() {
                            if lowered[k] != 0.0 {
                                cross = &cross + &(&(&xij * &x(vk)) * &c(lowered[k]));
                            }
                        }
                    }
                }
                let d = &(&(&(&(&(&x(0) * &x(1)) * &x(2)) - &(&x(0) * &n23)) - &(&x(2) * &n12))
                    - &(&x(1) * &n13))
                    + &(&cross * &c(2.0));
                let p2p3 = &(&(&x(1) * &x(2)) - &n23) * &x(2);
                let x3_cubed = &(&x(2) * &x(2)) * &x(2);
                &(&(&c(coeffs[0]) * &d) + &(&c(coeffs[1]) * &p2p3)) + &(&c(coeffs[2]) * &x3_cubed)
            }
        };
        let grad: Vec<Polynomial> = (0..n).map(|i| q.derivative(i)).collect();
        let hess = grad
            .iter()
            .map(|g| (0..n).map(|j| g.derivative(j)).collect())
            .collect();
        Self { q, grad, hess }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.q
    }

    pub fn eval(&self, x: &HermMatrix) -> f64 {
        self.q.eval(x.to_flat().as_slice())
    }

    pub fn gradient(&self, x: &HermMatrix) -> DVector<f64> {
        let flat = x.to_flat();
        DVector::from_iterator(self.grad.len(), self.grad.iter().map(|g| g.eval(flat.as_slice())))
    }

    pub fn hessian_log(&self, x: &HermMatrix) -> Result<DMatrix<f64>> {
        let flat = x.to_flat();
        let pt = flat.as_slice();
        let q = self.q.eval(pt);
        if q == 0.0 {
            return Err(Error::Singular("log q is singular at q = 0".into()));
        }
        let n = self.grad.len();
        let g: Vec<f64> = self.grad.iter().map(|p| p.eval(pt)).collect();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            (g[i] * g[j] - q * self.hess[i][j].eval(pt)) / (q * q)
        }))
    }
}

/// Central differences of the gradient of `−log q` with step `h`.
pub fn finite_difference_hessian_log(q: &InvariantCubic, x: &HermMatrix, h: f64) -> Result<DMatrix<f64>> {
    let cone = q.cone();
    let flat = x.to_flat();
    let n = flat.len();
    let dims = cone.algebra().slot_dims();
    let grad_neg_log = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let p = HermMatrix::from_flat(cone.rank(), &dims, y)?;
        let v = q.eval(&p)?;
        if v == 0.0 {
            return Err(Error::Singular("log q is singular at q = 0".into()));
        }
        Ok(q.gradient(&p)? / -v)
    };
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut plus = flat.clone();
        plus[i] += h;
        let mut minus = flat.clone();
        minus[i] -= h;
        let col = (grad_neg_log(&plus)? - grad_neg_log(&minus)?) / (2.0 * h);
        out.set_column(i, &col);
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Central differences of `q` itself; checks the closed-form gradient.
pub fn finite_difference_gradient(q: &InvariantCubic, x: &HermMatrix, h: f64) -> Result<DVector<f64>> {
    let cone = q.cone();
    let flat = x.to_flat();
    let dims = cone.algebra().slot_dims();
    let mut out = DVector::zeros(flat.len());
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += h;
        let mut minus = flat.clone();
        minus[i] -= h;
        let fp = q.eval(&HermMatrix::from_flat(cone.rank(), &dims, &plus)?)?;
        let fm = q.eval(&HermMatrix::from_flat(cone.rank(), &dims, &minus)?)?;
        out[i] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Entrywise `|a − b| / max(|b_ij|, floor·max|b|)`. Entries far below the
/// largest one are compared on the scale of the floor.
pub fn componentwise_relative_error(approx: &DMatrix<f64>, exact: &DMatrix<f64>, floor: f64) -> f64 {
    let scale = floor * exact.amax();
    approx
        .iter()
        .zip(exact.iter())
        .map(|(a, b)| (a - b).abs() / b.abs().max(scale).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// `−Hess log q` at `diag(x₁, x₂)` for `q = (x₁x₂ − |w|²)x₂ + εx₂³` over a
/// Euclidean `W` of dimension `dim_w`.
pub fn paper_hessian_rank2(x1: f64, x2: f64, eps: f64, dim_w: usize) -> DMatrix<f64> {
    let s = x1 + eps * x2;
    let r = x1 / x2;
    let mut h = DMatrix::zeros(2 + dim_w, 2 + dim_w);
    h[(0, 0)] = 1.0 / (s * s);
    h[(0, 1)] = eps / (s * s);
    h[(1, 0)] = eps / (s * s);
    h[(1, 1)] = (2.0 * r * r + 4.0 * eps * r + 3.0 * eps * eps) / (s * s);
    for k in 0..dim_w {
        h[(2 + k, 2 + k)] = 2.0 / (x1 * x2 + eps * x2 * x2);
    }
    h
}

/// `−Hess log q` at `diag(x₁, x₂, x₃)` for `q = d + ε₁x₃(x₂x₃ − |v|²) + ε₂x₃³`
/// over a Euclidean special algebra with slot dimensions `(dim S₀, dim S₁, dim V)`.
pub fn paper_hessian_rank3(x: [f64; 3], eps1: f64, eps2: f64, slot_dims: [usize; 3]) -> DMatrix<f64> {
    let [x1, x2, x3] = x;
    let q = x3 * (x1 * x2 + eps1 * x2 * x3 + eps2 * x3 * x3);
    let a = x2 * x3 * x3 * (eps1 * x2 + 2.0 * eps2 * x3);
    let b = (x3 * (x1 + eps1 * x3)).powi(2);
    let c = eps2 * x3.powi(3) * (2.0 * x1 + eps1 * x3);
    let e = eps1 * x2 + eps2 * x3;
    let d = (x2 * (x1 + eps1 * x3)).powi(2) + (x3 * e).powi(2) + 2.0 * eps2 * x3.powi(3) * e;
    let n = 3 + slot_dims.iter().sum::<usize>();
    let mut h = DMatrix::zeros(n, n);
    let top = [
        [(x2 * x3).powi(2), -eps2 * x3.powi(4), a],
        [-eps2 * x3.powi(4), b, c],
        [a, c, d],
    ];
    for i in 0..3 {
        for j in 0..3 {
            h[(i, j)] = top[i][j];
        }
    }
    let blocks = [2.0 * q * x3, 2.0 * q * x2, 2.0 * q * (x1 + eps1 * x3)];
    let mut k = 3;
    for (dim, val) in slot_dims.iter().zip(blocks) {
        for _ in 0..*dim {
            h[(k, k)] = val;
            k += 1;
        }
    }
    h / (q * q)
}
