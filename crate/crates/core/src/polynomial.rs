//! Sparse multivariate polynomials with exact symbolic differentiation.
//!
//! Used to assemble an invariant cubic term by term from the structure
//! constants of an algebra and to differentiate it independently of the
//! hand-written derivative formulas.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// A monomial is the sorted multiset of its variable indices.
type Monomial = Vec<usize>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![i], 1.0);
        p
    }

    fn add_term(&mut self, mono: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(mono).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree of the highest monomial (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self, degree: usize) -> bool {
        self.terms.keys().all(|m| m.len() == degree)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let k = m.iter().filter(|&&v| v == var).count();
            if k == 0 {
                continue;
            }
            let pos = m.iter().position(|&v| v == var).expect("present");
            let mut reduced = m.clone();
            reduced.remove(pos);
            out.add_term(reduced, c * k as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(*c, |acc, &v| acc * x[v]))
            .sum()
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let diff = self - other;
        diff.terms.values().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = ma.clone();
                m.extend_from_slice(mb);
                m.sort_unstable();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

/// Quadratic form `Σ g_ij x_i y_j` in the given variable indices.
pub fn bilinear_form(gram: &nalgebra::DMatrix<f64>, xs: &[usize], ys: &[usize]) -> Polynomial {
    let mut out = Polynomial::zero();
    for (a, &i) in xs.iter().enumerate() {
        for (b, &j) in ys.iter().enumerate() {
            let g = gram[(a, b)];
            if g != 0.0 {
                let mut m = vec![i, j];
                m.sort_unstable();
                out.add_term(m, g);
            }
        }
    }
    out
}
