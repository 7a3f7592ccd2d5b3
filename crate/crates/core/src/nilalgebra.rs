//! Generalized upper-triangular matrices of rank 2 and 3.
//!
//! Off-diagonal entries live in the metric spaces `𝒩_ij` (`i < j`), stored in
//! slot order `(1,2), (1,3), (2,3)`. The only composable product at rank
//! three is `𝒩_12 × 𝒩_23 → 𝒩_13`, realized by Clifford multiplication. Its two
//! metric adjoints ("flat" products) are the pieces of the non-associative
//! T-algebra that `A·A*` and `A*·A` need; nothing else of it is materialized.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordModule;
use crate::error::{check_dim, Error, Result};
use crate::metric::MetricSpace;

/// Which way the Clifford product is laid out in the triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `𝒩_12 = S₀`, `𝒩_23 = V`: `(s₀, v) ↦ μ_v(s₀)`.
    SpinorVector,
    /// `𝒩_12 = V`, `𝒩_23 = S₀`: `(v, s₀) ↦ μ_v(s₀)`. The dual of `SpinorVector`.
    VectorSpinor,
}

impl Orientation {
    fn flipped(self) -> Self {
        match self {
            Orientation::SpinorVector => Orientation::VectorSpinor,
            Orientation::VectorSpinor => Orientation::SpinorVector,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordProduct {
    pub module: Arc<CliffordModule>,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NilAlgebra {
    rank: usize,
    spaces: Vec<MetricSpace>,
    product: Option<CliffordProduct>,
}

/// Slots `(i, j)`, `i < j`, 1-based, in storage order.
pub fn slots(rank: usize) -> &'static [(usize, usize)] {
    match rank {
        2 => &[(1, 2)],
        3 => &[(1, 2), (1, 3), (2, 3)],
        _ => &[],
    }
}

pub fn slot_index(rank: usize, i: usize, j: usize) -> Option<usize> {
    slots(rank).iter().position(|&s| s == (i, j))
}

fn slot_name(i: usize, j: usize) -> String {
    format!("{i}{j}")
}

impl NilAlgebra {
    /// `𝒩₂(W)`: a single off-diagonal entry in `W`, no products.
    pub fn rank2(w_space: MetricSpace) -> Self {
        Self {
            rank: 2,
            spaces: vec![w_space],
            product: None,
        }
    }

    /// The special rank-3 algebra of a Clifford module:
    /// `𝒩_12 = S₀`, `𝒩_13 = S₁`, `𝒩_23 = V`.
    pub fn rank3_special(module: Arc<CliffordModule>) -> Result<Self> {
        if module.dim_s0() != module.dim_s1() {
            return Err(Error::InvalidArgument(format!(
                "special rank-3 algebra needs dim S0 = dim S1, got {} and {}",
                module.dim_s0(),
                module.dim_s1()
            )));
        }
        Ok(Self {
            rank: 3,
            spaces: vec![
                module.s0_space().clone(),
                module.s1_space().clone(),
                module.v_space().clone(),
            ],
            product: Some(CliffordProduct {
                module,
                orientation: Orientation::SpinorVector,
            }),
        })
    }

    /// The anti-transposed algebra: `𝒩'_ij = 𝒩_{m+1-j, m+1-i}` with the
    /// product order reversed.
    pub fn dual(&self) -> Self {
        let m = self.rank;
        let spaces = slots(m)
            .iter()
            .map(|&(i, j)| {
                let src = slot_index(m, m + 1 - j, m + 1 - i).expect("reflected slot");
                self.spaces[src].clone()
            })
            .collect();
        Self {
            rank: m,
            spaces,
            product: self.product.as_ref().map(|p| CliffordProduct {
                module: Arc::clone(&p.module),
                orientation: p.orientation.flipped(),
            }),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn spaces(&self) -> &[MetricSpace] {
        &self.spaces
    }

    pub fn space(&self, i: usize, j: usize) -> &MetricSpace {
        &self.spaces[slot_index(self.rank, i, j).expect("valid slot")]
    }

    pub fn slot_dims(&self) -> Vec<usize> {
        self.spaces.iter().map(MetricSpace::dim).collect()
    }

    pub fn product(&self) -> Option<&CliffordProduct> {
        self.product.as_ref()
    }

    pub fn module(&self) -> Option<&CliffordModule> {
        self.product.as_ref().map(|p| p.module.as_ref())
    }

    /// Dimension of the Hermitian space: `m + Σ dim 𝒩_ij`.
    pub fn dim_herm(&self) -> usize {
        self.rank + self.spaces.iter().map(MetricSpace::dim).sum::<usize>()
    }

    /// True iff every block space (and the Clifford base space) is Euclidean.
    pub fn is_euclidean(&self) -> bool {
        self.spaces.iter().all(MetricSpace::is_euclidean)
            && self.module().is_none_or(CliffordModule::is_euclidean)
    }

    /// Signature of the first indefinite space, if any.
    pub fn indefinite_signature(&self) -> Option<(usize, usize)> {
        self.spaces
            .iter()
            .map(MetricSpace::signature)
            .chain(self.module().map(|m| m.signature()))
            .find(|s| !s.is_euclidean())
            .map(|s| (s.p, s.q))
    }

    fn clifford(&self) -> &CliffordProduct {
        self.product.as_ref().expect("rank-3 algebra carries a product")
    }

    /// `x₁₂ · x₂₃ ∈ 𝒩_13`.
    pub fn mul(&self, x12: &DVector<f64>, x23: &DVector<f64>) -> DVector<f64> {
        let p = self.clifford();
        match p.orientation {
            Orientation::SpinorVector => p.module.mult_unchecked(x23, x12),
            Orientation::VectorSpinor => p.module.mult_unchecked(x12, x23),
        }
    }

    /// `x₁₃ · x₂₃^♭ ∈ 𝒩_12`, defined by `⟨x₁₃·x₂₃^♭, u⟩ = ⟨x₁₃, u·x₂₃⟩`.
    pub fn right_flat(&self, x13: &DVector<f64>, x23: &DVector<f64>) -> DVector<f64> {
        let p = self.clifford();
        match p.orientation {
            Orientation::SpinorVector => p.module.mult_adjoint_unchecked(x23, x13),
            Orientation::VectorSpinor => p.module.bilinear_unchecked(x13, x23),
        }
    }

    /// `x₁₂^♭ · x₁₃ ∈ 𝒩_23`, defined by `⟨x₁₂^♭·x₁₃, u⟩ = ⟨x₁₃, x₁₂·u⟩`.
    pub fn left_flat(&self, x12: &DVector<f64>, x13: &DVector<f64>) -> DVector<f64> {
        let p = self.clifford();
        match p.orientation {
            Orientation::SpinorVector => p.module.bilinear_unchecked(x13, x12),
            Orientation::VectorSpinor => p.module.mult_adjoint_unchecked(x12, x13),
        }
    }

    /// Matrix of `u ↦ u · x₂₃` (`𝒩_12 → 𝒩_13`).
    pub fn right_mult_matrix(&self, x23: &DVector<f64>) -> DMatrix<f64> {
        let p = self.clifford();
        match p.orientation {
            Orientation::SpinorVector => p.module.action_matrix(x23),
            Orientation::VectorSpinor => columns_gamma_applied(&p.module, x23),
        }
    }

    /// Matrix of `u ↦ x₁₂ · u` (`𝒩_23 → 𝒩_13`).
    pub fn left_mult_matrix(&self, x12: &DVector<f64>) -> DMatrix<f64> {
        let p = self.clifford();
        match p.orientation {
            Orientation::SpinorVector => columns_gamma_applied(&p.module, x12),
            Orientation::VectorSpinor => p.module.action_matrix(x12),
        }
    }

    /// Whether `u ↦ u · x₂₃` is a similarity onto `𝒩_13` for every `x₂₃`,
    /// which makes the squared G-determinant a polynomial.
    pub fn right_mult_is_onto(&self) -> bool {
        self.rank != 3 || self.spaces[0].dim() == self.spaces[1].dim()
    }

    /// Worst `|⟨x·y, x·y⟩ − ⟨x,x⟩⟨y,y⟩|` over seeded samples (0 at rank 2).
    pub fn verify_product_isometry(&self, n_samples: usize, seed: u64) -> f64 {
        if self.rank != 3 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let (s12, s13, s23) = (&self.spaces[0], &self.spaces[1], &self.spaces[2]);
        for _ in 0..n_samples {
            let x = DVector::from_fn(s12.dim(), |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(s23.dim(), |_, _| rng.random_range(-1.0..1.0));
            let xy = self.mul(&x, &y);
            worst = worst.max((s13.norm_sq(&xy) - s12.norm_sq(&x) * s23.norm_sq(&y)).abs());
        }
        worst
    }

    fn check_blocks(&self, rank: usize, offdiag: &[DVector<f64>]) -> Result<()> {
        check_dim("rank", self.rank, rank)?;
        check_dim("off-diagonal blocks", self.spaces.len(), offdiag.len())?;
        for (space, x) in self.spaces.iter().zip(offdiag) {
            check_dim("off-diagonal entry", space.dim(), x.len())?;
        }
        Ok(())
    }

    pub fn check_herm(&self, x: &HermMatrix) -> Result<()> {
        self.check_blocks(x.rank(), &x.offdiag)
    }

    pub fn check_triangular(&self, a: &TriangularElement) -> Result<()> {
        self.check_blocks(a.rank(), &a.offdiag)
    }

    pub fn identity_herm(&self) -> HermMatrix {
        HermMatrix {
            diag: vec![1.0; self.rank],
            offdiag: self.zero_offdiag(),
        }
    }

    pub fn identity_triangular(&self) -> TriangularElement {
        TriangularElement {
            diag: vec![1.0; self.rank],
            offdiag: self.zero_offdiag(),
        }
    }

    pub fn diagonal_herm(&self, diag: &[f64]) -> Result<HermMatrix> {
        check_dim("diagonal", self.rank, diag.len())?;
        Ok(HermMatrix {
            diag: diag.to_vec(),
            offdiag: self.zero_offdiag(),
        })
    }

    fn zero_offdiag(&self) -> Vec<DVector<f64>> {
        self.spaces.iter().map(|s| DVector::zeros(s.dim())).collect()
    }

    /// Associative product in `𝒯(𝒩)`:
    /// `(AB)_ik = A_ii B_ik + A_ik B_kk + Σ_{i<j<k} A_ij · B_jk`.
    pub fn triangular_product(
        &self,
        a: &TriangularElement,
        b: &TriangularElement,
    ) -> Result<TriangularElement> {
        self.check_triangular(a)?;
        self.check_triangular(b)?;
        let m = self.rank;
        let diag = a.diag.iter().zip(&b.diag).map(|(x, y)| x * y).collect();
        let offdiag = slots(m)
            .iter()
            .map(|&(i, k)| {
                let mut out = a.entry(m, i, k) * b.diag[k - 1] + b.entry(m, i, k) * a.diag[i - 1];
                for j in i + 1..k {
                    out += self.mul(a.entry(m, i, j), b.entry(m, j, k));
                }
                out
            })
            .collect();
        Ok(TriangularElement { diag, offdiag })
    }

    fn check_positive(a: &TriangularElement) -> Result<()> {
        match a.diag.iter().position(|&d| d <= 0.0) {
            Some(index) => Err(Error::NonPositiveDiagonal {
                index,
                value: a.diag[index],
            }),
            None => Ok(()),
        }
    }

    /// `X = A · A*`, the orbit point of the identity under `A ∈ G`.
    pub fn herm_from_triangular(&self, a: &TriangularElement) -> Result<HermMatrix> {
        self.check_triangular(a)?;
        Self::check_positive(a)?;
        Ok(self.outer_unchecked(a))
    }

    pub(crate) fn outer_unchecked(&self, a: &TriangularElement) -> HermMatrix {
        let m = self.rank;
        let diag = (1..=m)
            .map(|i| {
                let tail: f64 = (i + 1..=m)
                    .map(|k| self.space(i, k).norm_sq(a.entry(m, i, k)))
                    .sum();
                a.diag[i - 1] * a.diag[i - 1] + tail
            })
            .collect();
        let offdiag = slots(m)
            .iter()
            .map(|&(i, j)| {
                let mut out = a.entry(m, i, j) * a.diag[j - 1];
                for k in j + 1..=m {
                    // (i, j, k) = (1, 2, 3) is the only triple at rank ≤ 3.
                    out += self.right_flat(a.entry(m, i, k), a.entry(m, j, k));
                }
                out
            })
            .collect();
        HermMatrix { diag, offdiag }
    }

    /// `X = A* · A`, a point of the dual cone.
    pub fn herm_from_triangular_dual(&self, a: &TriangularElement) -> Result<HermMatrix> {
        self.check_triangular(a)?;
        Self::check_positive(a)?;
        let m = self.rank;
        let diag = (1..=m)
            .map(|i| {
                let head: f64 = (1..i)
                    .map(|k| self.space(k, i).norm_sq(a.entry(m, k, i)))
                    .sum();
                a.diag[i - 1] * a.diag[i - 1] + head
            })
            .collect();
        let offdiag = slots(m)
            .iter()
            .map(|&(i, j)| {
                let mut out = a.entry(m, i, j) * a.diag[i - 1];
                for k in 1..i {
                    out += self.left_flat(a.entry(m, k, i), a.entry(m, k, j));
                }
                out
            })
            .collect();
        Ok(HermMatrix { diag, offdiag })
    }

    /// Reflection across the anti-diagonal; the result lives over [`Self::dual`].
    pub fn anti_transpose(&self, x: &HermMatrix) -> Result<HermMatrix> {
        self.check_herm(x)?;
        let (diag, offdiag) = reflect(self.rank, &x.diag, &x.offdiag);
        Ok(HermMatrix { diag, offdiag })
    }

    /// Anti-transpose of a triangular element: upper-triangular over the dual algebra.
    pub fn anti_transpose_triangular(&self, a: &TriangularElement) -> Result<TriangularElement> {
        self.check_triangular(a)?;
        let (diag, offdiag) = reflect(self.rank, &a.diag, &a.offdiag);
        Ok(TriangularElement { diag, offdiag })
    }

    /// Trace pairing `Σ_i x_i y_i + 2 Σ_{i<j} ⟨x_ij, y_ij⟩`.
    pub fn herm_inner(&self, x: &HermMatrix, y: &HermMatrix) -> Result<f64> {
        self.check_herm(x)?;
        self.check_herm(y)?;
        let d: f64 = x.diag.iter().zip(&y.diag).map(|(a, b)| a * b).sum();
        let o: f64 = self
            .spaces
            .iter()
            .zip(x.offdiag.iter().zip(&y.offdiag))
            .map(|(s, (a, b))| s.inner(a, b))
            .sum();
        Ok(d + 2.0 * o)
    }

    /// Blockwise inner product `Σ_i x_i y_i + Σ_{i<j} ⟨x_ij, y_ij⟩`.
    pub fn block_inner(&self, x: &HermMatrix, y: &HermMatrix) -> f64 {
        let d: f64 = x.diag.iter().zip(&y.diag).map(|(a, b)| a * b).sum();
        let o: f64 = self
            .spaces
            .iter()
            .zip(x.offdiag.iter().zip(&y.offdiag))
            .map(|(s, (a, b))| s.inner(a, b))
            .sum();
        d + o
    }
}

fn columns_gamma_applied(module: &CliffordModule, s: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(module.dim_s1(), module.dim_v());
    for a in 0..module.dim_v() {
        m.set_column(a, &(module.gamma(a) * s));
    }
    m
}

fn reflect(rank: usize, diag: &[f64], offdiag: &[DVector<f64>]) -> (Vec<f64>, Vec<DVector<f64>>) {
    let d = diag.iter().rev().copied().collect();
    let o = slots(rank)
        .iter()
        .map(|&(i, j)| {
            let src = slot_index(rank, rank + 1 - j, rank + 1 - i).expect("reflected slot");
            offdiag[src].clone()
        })
        .collect();
    (d, o)
}

/// JSON shape shared by Hermitian and triangular matrices:
/// `{rank, diag: [..], offdiag: {"12": [..], "13": [..], "23": [..]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRepr {
    rank: usize,
    diag: Vec<f64>,
    offdiag: BTreeMap<String, Vec<f64>>,
}

fn blocks_from_repr(repr: BlockRepr) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let names = slots(repr.rank);
    if names.is_empty() {
        return Err(Error::Unsupported(format!("rank {} matrices", repr.rank)));
    }
    check_dim("diagonal", repr.rank, repr.diag.len())?;
    let mut offdiag = Vec::with_capacity(names.len());
    let mut map = repr.offdiag;
    for &(i, j) in names {
        let v = map
            .remove(&slot_name(i, j))
            .ok_or_else(|| Error::InvalidArgument(format!("missing off-diagonal entry {i}{j}")))?;
        offdiag.push(DVector::from_vec(v));
    }
    if let Some(extra) = map.keys().next() {
        return Err(Error::InvalidArgument(format!("unknown off-diagonal entry {extra}")));
    }
    Ok((repr.diag, offdiag))
}

fn repr_from_blocks(diag: &[f64], offdiag: &[DVector<f64>]) -> BlockRepr {
    let rank = diag.len();
    BlockRepr {
        rank,
        diag: diag.to_vec(),
        offdiag: slots(rank)
            .iter()
            .zip(offdiag)
            .map(|(&(i, j), v)| (slot_name(i, j), v.iter().copied().collect()))
            .collect(),
    }
}

macro_rules! block_matrix {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "BlockRepr", into = "BlockRepr")]
        pub struct $name {
            pub diag: Vec<f64>,
            pub offdiag: Vec<DVector<f64>>,
        }

        impl $name {
            pub fn new(diag: Vec<f64>, offdiag: Vec<DVector<f64>>) -> Result<Self> {
                let rank = diag.len();
                check_dim("off-diagonal blocks", slots(rank).len(), offdiag.len())?;
                if slots(rank).is_empty() {
                    return Err(Error::Unsupported(format!("rank {rank} matrices")));
                }
                Ok(Self { diag, offdiag })
            }

            pub fn rank(&self) -> usize {
                self.diag.len()
            }

            /// Entry at slot `(i, j)`, 1-based with `i < j`.
            pub fn entry(&self, rank: usize, i: usize, j: usize) -> &DVector<f64> {
                &self.offdiag[slot_index(rank, i, j).expect("valid slot")]
            }

            pub fn scaled(&self, lambda: f64) -> Self {
                Self {
                    diag: self.diag.iter().map(|x| x * lambda).collect(),
                    offdiag: self.offdiag.iter().map(|x| x * lambda).collect(),
                }
            }

            /// Flat coordinates: diagonal first, then slots in storage order.
            pub fn to_flat(&self) -> DVector<f64> {
                let n = self.diag.len() + self.offdiag.iter().map(|v| v.len()).sum::<usize>();
                let mut out = DVector::zeros(n);
                let mut k = 0;
                for &d in &self.diag {
                    out[k] = d;
                    k += 1;
                }
                for v in &self.offdiag {
                    out.rows_mut(k, v.len()).copy_from(v);
                    k += v.len();
                }
                out
            }

            /// Inverse of [`Self::to_flat`] for the given slot dimensions.
            pub fn from_flat(rank: usize, slot_dims: &[usize], flat: &DVector<f64>) -> Result<Self> {
                check_dim("slot dimensions", slots(rank).len(), slot_dims.len())?;
                check_dim("flat coordinates", rank + slot_dims.iter().sum::<usize>(), flat.len())?;
                let diag = flat.rows(0, rank).iter().copied().collect();
                let mut k = rank;
                let offdiag = slot_dims
                    .iter()
                    .map(|&n| {
                        let v = flat.rows(k, n).into_owned();
                        k += n;
                        v
                    })
                    .collect();
                Self::new(diag, offdiag)
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                (self.to_flat() - other.to_flat()).amax()
            }
        }

        impl TryFrom<BlockRepr> for $name {
            type Error = Error;

            fn try_from(repr: BlockRepr) -> Result<Self> {
                let (diag, offdiag) = blocks_from_repr(repr)?;
                Ok(Self { diag, offdiag })
            }
        }

        impl From<$name> for BlockRepr {
            fn from(x: $name) -> Self {
                repr_from_blocks(&x.diag, &x.offdiag)
            }
        }
    };
}

block_matrix!(
    /// A point of `𝓗 = Herm(𝒩)`. Only the diagonal and upper entries are
    /// stored; the lower entries are their flats.
    HermMatrix
);

block_matrix!(
    /// An element of `𝒯(𝒩)`; it belongs to the group `G` when the diagonal is
    /// positive.
    TriangularElement
);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Signature;

    fn rank3(dim_v: usize) -> NilAlgebra {
        let m = CliffordModule::build(dim_v, Signature::euclidean(dim_v), 1).unwrap();
        NilAlgebra::rank3_special(Arc::new(m)).unwrap()
    }

    fn random_triangular(alg: &NilAlgebra, rng: &mut ChaCha8Rng) -> TriangularElement {
        TriangularElement {
            diag: (0..alg.rank()).map(|_| rng.random_range(0.5..2.0)).collect(),
            offdiag: alg
                .spaces()
                .iter()
                .map(|s| DVector::from_fn(s.dim(), |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        }
    }

    #[test]
    fn rank2_dimensions() {
        let alg = NilAlgebra::rank2(MetricSpace::euclidean(1));
        assert_eq!(alg.slot_dims(), vec![1]);
        assert_eq!(NilAlgebra::rank2(MetricSpace::euclidean(7)).dim_herm(), 9);
        let ind = NilAlgebra::rank2(MetricSpace::pseudo_euclidean(1, 1));
        assert!(!ind.is_euclidean());
        assert_eq!(ind.indefinite_signature(), Some((1, 1)));
    }

    #[test]
    fn rank3_dimensions() {
        assert_eq!(rank3(1).dim_herm(), 6);
        assert_eq!(rank3(8).dim_herm(), 27);
        assert!(rank3(8).verify_product_isometry(100, 1) < 1e-12);
    }

    #[test]
    fn unbalanced_descriptor_is_rejected() {
        let m = CliffordModule::build(2, Signature::euclidean(2), 1).unwrap();
        let mut desc = m.descriptor();
        for g in &mut desc.gammas {
            g.pop();
        }
        assert!(CliffordModule::from_descriptor(&desc).is_err());
    }

    #[test]
    fn identity_is_a_unit() {
        let alg = rank3(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_triangular(&alg, &mut rng);
        let id = alg.identity_triangular();
        assert!(alg.triangular_product(&a, &id).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(alg.triangular_product(&id, &a).unwrap().max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn rank2_product_with_identity() {
        let alg = NilAlgebra::rank2(MetricSpace::euclidean(1));
        let a = TriangularElement::new(vec![1.0, 2.0], vec![DVector::from_element(1, 0.5)]).unwrap();
        let prod = alg.triangular_product(&a, &alg.identity_triangular()).unwrap();
        assert_eq!(prod, a);
    }

    #[test]
    fn triangular_product_is_associative() {
        for dim_v in [1, 2, 4, 8] {
            let alg = rank3(dim_v);
            let mut rng = ChaCha8Rng::seed_from_u64(dim_v as u64);
            for _ in 0..20 {
                let (a, b, c) = (
                    random_triangular(&alg, &mut rng),
                    random_triangular(&alg, &mut rng),
                    random_triangular(&alg, &mut rng),
                );
                let left = alg
                    .triangular_product(&alg.triangular_product(&a, &b).unwrap(), &c)
                    .unwrap();
                let right = alg
                    .triangular_product(&a, &alg.triangular_product(&b, &c).unwrap())
                    .unwrap();
                assert!(left.max_abs_diff(&right) < 1e-12);
            }
        }
    }

    #[test]
    fn rank2_outer_product_example() {
        let alg = NilAlgebra::rank2(MetricSpace::euclidean(1));
        let a = TriangularElement::new(vec![1.0, 2.0], vec![DVector::from_element(1, 1.0)]).unwrap();
        let x = alg.herm_from_triangular(&a).unwrap();
        assert_eq!(x.diag, vec![2.0, 4.0]);
        assert_eq!(x.offdiag[0][0], 2.0);
    }

    #[test]
    fn identity_maps_to_identity() {
        for alg in [rank3(1), rank3(4), NilAlgebra::rank2(MetricSpace::euclidean(3))] {
            let x = alg.herm_from_triangular(&alg.identity_triangular()).unwrap();
            assert_eq!(x, alg.identity_herm());
        }
    }

    #[test]
    fn outer_product_matches_dense_matrix_for_scalars() {
        // dim V = dim S0 = dim S1 = 1: the algebra is ordinary 3x3 real matrices.
        let alg = rank3(1);
        let a = TriangularElement::new(
            vec![1.3, 0.7, 1.9],
            vec![
                DVector::from_element(1, 0.4),
                DVector::from_element(1, -0.6),
                DVector::from_element(1, 0.9),
            ],
        )
        .unwrap();
        let dense = DMatrix::from_row_slice(3, 3, &[1.3, 0.4, -0.6, 0.0, 0.7, 0.9, 0.0, 0.0, 1.9]);
        let aat = &dense * dense.transpose();
        let ata = dense.transpose() * &dense;
        let x = alg.herm_from_triangular(&a).unwrap();
        let y = alg.herm_from_triangular_dual(&a).unwrap();
        for (m, h) in [(aat, x), (ata, y)] {
            for i in 0..3 {
                assert!((m[(i, i)] - h.diag[i]).abs() < 1e-14);
            }
            assert!((m[(0, 1)] - h.offdiag[0][0]).abs() < 1e-14);
            assert!((m[(0, 2)] - h.offdiag[1][0]).abs() < 1e-14);
            assert!((m[(1, 2)] - h.offdiag[2][0]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_positive_diagonal() {
        let alg = rank3(1);
        let mut a = alg.identity_triangular();
        a.diag[1] = 0.0;
        assert!(matches!(
            alg.herm_from_triangular(&a),
            Err(Error::NonPositiveDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn dual_algebra_bookkeeping() {
        let r2 = NilAlgebra::rank2(MetricSpace::euclidean(5));
        assert_eq!(r2.dual().slot_dims(), r2.slot_dims());
        let m = CliffordModule::build(1, Signature::euclidean(1), 2).unwrap();
        let alg = NilAlgebra::rank3_special(Arc::new(m)).unwrap();
        assert_eq!(alg.slot_dims(), vec![2, 2, 1]);
        assert_eq!(alg.dual().slot_dims(), vec![1, 2, 2]);
        assert_eq!(alg.dual().dual(), alg);
    }

    #[test]
    fn anti_transpose_is_an_involution() {
        let alg = rank3(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = alg.herm_from_triangular(&random_triangular(&alg, &mut rng)).unwrap();
        let dual = alg.dual();
        let y = alg.anti_transpose(&x).unwrap();
        assert!(dual.check_herm(&y).is_ok());
        assert_eq!(y.diag, x.diag.iter().rev().copied().collect::<Vec<_>>());
        assert_eq!(dual.anti_transpose(&y).unwrap(), x);
        assert!((dual.block_inner(&y, &y) - alg.block_inner(&x, &x)).abs() < 1e-12);
        let r2 = NilAlgebra::rank2(MetricSpace::euclidean(1));
        let d = r2.diagonal_herm(&[2.0, 5.0]).unwrap();
        assert_eq!(r2.anti_transpose(&d).unwrap().diag, vec![5.0, 2.0]);
        assert_eq!(r2.anti_transpose(&r2.identity_herm()).unwrap(), r2.identity_herm());
    }

    #[test]
    fn anti_transpose_reverses_products() {
        let alg = rank3(4);
        let dual = alg.dual();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_triangular(&alg, &mut rng);
        let b = random_triangular(&alg, &mut rng);
        let ab = alg.triangular_product(&a, &b).unwrap();
        let lhs = alg.anti_transpose_triangular(&ab).unwrap();
        let rhs = dual
            .triangular_product(
                &alg.anti_transpose_triangular(&b).unwrap(),
                &alg.anti_transpose_triangular(&a).unwrap(),
            )
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn flat_products_are_adjoints() {
        for alg in [rank3(3), rank3(3).dual()] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let d = alg.slot_dims();
            let x12 = DVector::from_fn(d[0], |_, _| rng.random_range(-1.0..1.0));
            let x13 = DVector::from_fn(d[1], |_, _| rng.random_range(-1.0..1.0));
            let x23 = DVector::from_fn(d[2], |_, _| rng.random_range(-1.0..1.0));
            let u12 = DVector::from_fn(d[0], |_, _| rng.random_range(-1.0..1.0));
            let u23 = DVector::from_fn(d[2], |_, _| rng.random_range(-1.0..1.0));
            let r = alg.right_flat(&x13, &x23);
            let lhs = alg.space(1, 2).inner(&r, &u12);
            let rhs = alg.space(1, 3).inner(&x13, &alg.mul(&u12, &x23));
            assert!((lhs - rhs).abs() < 1e-12);
            let l = alg.left_flat(&x12, &x13);
            let lhs = alg.space(2, 3).inner(&l, &u23);
            let rhs = alg.space(1, 3).inner(&x13, &alg.mul(&x12, &u23));
            assert!((lhs - rhs).abs() < 1e-12);
            assert!((alg.right_mult_matrix(&x23) * &u12 - alg.mul(&u12, &x23)).amax() < 1e-14);
            assert!((alg.left_mult_matrix(&x12) * &u23 - alg.mul(&x12, &u23)).amax() < 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let alg = rank3(1);
        let x = alg.identity_herm();
        let json = serde_json::to_value(&x).unwrap();
        assert_eq!(json["rank"], 3);
        assert_eq!(json["offdiag"]["23"], serde_json::json!([0.0]));
        let back: HermMatrix = serde_json::from_value(json).unwrap();
        assert_eq!(back, x);
        let bad = serde_json::json!({"rank": 3, "diag": [1, 1, 1], "offdiag": {"12": [0]}});
        assert!(serde_json::from_value::<HermMatrix>(bad).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let alg = rank3(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_triangular(&alg, &mut rng);
        let flat = a.to_flat();
        assert_eq!(flat.len(), alg.dim_herm());
        assert_eq!(TriangularElement::from_flat(3, &alg.slot_dims(), &flat).unwrap(), a);
    }
}
