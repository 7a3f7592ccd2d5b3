//! Z₂-graded Clifford modules `S = S₀ ⊕ S₁` over `Cl(V, g_V)`.
//!
//! A module is stored through its gamma maps `Γ_a : S₀ → S₁`, one per
//! canonical basis vector `e_a` of `V`, so that the Clifford multiplication
//! is `μ_v(s) = Σ_a v^a Γ_a s`. The maps satisfy
//!
//! ```text
//! Γ_aᵀ G₁ Γ_b + Γ_bᵀ G₁ Γ_a = 2 g_V(e_a, e_b) G₀
//! ```
//!
//! which polarizes the isometry `⟨μ_v s, μ_v s⟩ = ⟨v, v⟩⟨s, s⟩`.
//!
//! Euclidean modules come from anticommuting complex structures
//! `J_1, …, J_{p-1}` (a real representation of `Cl_{0,p-1}`): `Γ_1 = I` and
//! `Γ_{a+1} = J_a`. The complex structures are left multiplications by
//! imaginary units of the Cayley–Dickson algebras (ℂ, ℍ, 𝕆) for up to seven
//! generators and the period-8 tensor step `Cl_{0,k+8} = Cl_{0,k} ⊗ M₁₆(ℝ)`
//! beyond. All entries are integers in `{-1, 0, 1}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::metric::{MetricSpace, Signature};

pub type IntMatrix = DMatrix<i32>;

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordModule {
    signature: Signature,
    multiplicity: usize,
    v_space: MetricSpace,
    s0_space: MetricSpace,
    s1_space: MetricSpace,
    gammas: Vec<IntMatrix>,
    gammas_f: Vec<DMatrix<f64>>,
}

/// JSON shape of a module: `{dim_v, signature: [p, q], multiplicity, gammas}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliffordDescriptor {
    pub dim_v: usize,
    pub signature: Signature,
    pub multiplicity: usize,
    /// One row-major integer matrix per basis vector of `V`.
    pub gammas: Vec<Vec<Vec<i32>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryReport {
    pub samples: usize,
    pub max_abs_deviation: f64,
}

/// Dimension of an irreducible real module of `Cl_{0,k}` (generators square to -1).
pub fn complex_structure_dim(k: usize) -> usize {
    const BASE: [usize; 8] = [1, 2, 4, 4, 8, 8, 8, 8];
    BASE[k % 8] * 16usize.pow((k / 8) as u32)
}

/// Dimension of `S₀` (= `S₁`) for the irreducible Euclidean module over `Cl(ℝ^p)`.
pub fn euclidean_spinor_dim(p: usize) -> usize {
    if p == 0 {
        1
    } else {
        complex_structure_dim(p - 1)
    }
}

/// Base (multiplicity one) dimension of `S₀` for a signature.
pub fn base_spinor_dim(signature: Signature) -> usize {
    if signature.q == 0 {
        euclidean_spinor_dim(signature.p)
    } else {
        2 * euclidean_spinor_dim(signature.dim())
    }
}

impl CliffordModule {
    pub fn build(dim_v: usize, signature: Signature, multiplicity: usize) -> Result<Self> {
        if dim_v == 0 {
            return Err(Error::InvalidArgument("dim_v must be at least 1".into()));
        }
        if multiplicity == 0 {
            return Err(Error::InvalidArgument("multiplicity must be at least 1".into()));
        }
        check_dim("signature", dim_v, signature.dim())?;

        let euclid: Vec<IntMatrix> = euclidean_gammas(dim_v)
            .into_iter()
            .map(|g| IntMatrix::identity(multiplicity, multiplicity).kronecker(&g))
            .collect();

        let (gammas, spinor_space) = if signature.q == 0 {
            let n = euclid[0].nrows();
            (euclid, MetricSpace::euclidean(n))
        } else {
            let n = euclid[0].nrows();
            let doubled = euclid
                .iter()
                .enumerate()
                .map(|(a, g)| {
                    let mut m = IntMatrix::zeros(2 * n, 2 * n);
                    if a < signature.p {
                        m.view_mut((0, 0), (n, n)).copy_from(g);
                        m.view_mut((n, n), (n, n)).copy_from(g);
                    } else {
                        m.view_mut((0, n), (n, n)).copy_from(g);
                        m.view_mut((n, 0), (n, n)).copy_from(&(-g));
                    }
                    m
                })
                .collect();
            (doubled, MetricSpace::pseudo_euclidean(n, n))
        };

        Self::assemble(
            signature,
            multiplicity,
            MetricSpace::pseudo_euclidean(signature.p, signature.q),
            spinor_space.clone(),
            spinor_space,
            gammas,
        )
    }

    fn assemble(
        signature: Signature,
        multiplicity: usize,
        v_space: MetricSpace,
        s0_space: MetricSpace,
        s1_space: MetricSpace,
        gammas: Vec<IntMatrix>,
    ) -> Result<Self> {
        check_dim("gamma count", v_space.dim(), gammas.len())?;
        for g in &gammas {
            check_dim("gamma rows", s1_space.dim(), g.nrows())?;
            check_dim("gamma columns", s0_space.dim(), g.ncols())?;
        }
        let gammas_f = gammas.iter().map(|g| g.map(f64::from)).collect();
        Ok(Self {
            signature,
            multiplicity,
            v_space,
            s0_space,
            s1_space,
            gammas,
            gammas_f,
        })
    }

    /// Rebuilds a module from its JSON descriptor. The spinor metrics follow
    /// the construction convention (identity, or `diag(I, -I)` when `q > 0`);
    /// the Clifford relation is checked in exact integer arithmetic.
    pub fn from_descriptor(desc: &CliffordDescriptor) -> Result<Self> {
        check_dim("signature", desc.dim_v, desc.signature.dim())?;
        if desc.multiplicity == 0 {
            return Err(Error::InvalidArgument("multiplicity must be at least 1".into()));
        }
        let gammas = desc
            .gammas
            .iter()
            .map(|rows| {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::InvalidArgument("ragged gamma matrix".into()));
                }
                Ok(IntMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = gammas.first().map_or(0, |g| g.ncols());
        let spinor_space = if desc.signature.q == 0 {
            MetricSpace::euclidean(n)
        } else {
            if n % 2 != 0 {
                return Err(Error::InvalidArgument(
                    "indefinite module needs an even spinor dimension".into(),
                ));
            }
            MetricSpace::pseudo_euclidean(n / 2, n / 2)
        };
        let module = Self::assemble(
            desc.signature,
            desc.multiplicity,
            MetricSpace::pseudo_euclidean(desc.signature.p, desc.signature.q),
            spinor_space.clone(),
            spinor_space,
            gammas,
        )?;
        if !module.satisfies_clifford_relation_exactly() {
            return Err(Error::InvalidArgument(
                "gamma matrices violate the Clifford relation".into(),
            ));
        }
        Ok(module)
    }

    pub fn descriptor(&self) -> CliffordDescriptor {
        CliffordDescriptor {
            dim_v: self.dim_v(),
            signature: self.signature,
            multiplicity: self.multiplicity,
            gammas: self
                .gammas
                .iter()
                .map(|g| {
                    (0..g.nrows())
                        .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn is_euclidean(&self) -> bool {
        self.signature.is_euclidean()
    }

    pub fn dim_v(&self) -> usize {
        self.v_space.dim()
    }

    pub fn dim_s0(&self) -> usize {
        self.s0_space.dim()
    }

    pub fn dim_s1(&self) -> usize {
        self.s1_space.dim()
    }

    pub fn v_space(&self) -> &MetricSpace {
        &self.v_space
    }

    pub fn s0_space(&self) -> &MetricSpace {
        &self.s0_space
    }

    pub fn s1_space(&self) -> &MetricSpace {
        &self.s1_space
    }

    pub fn gammas(&self) -> &[IntMatrix] {
        &self.gammas
    }

    pub fn gamma(&self, a: usize) -> &DMatrix<f64> {
        &self.gammas_f[a]
    }

    /// The matrix of `μ_v : S₀ → S₁`.
    pub fn action_matrix(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim_s1(), self.dim_s0());
        for (a, g) in self.gammas_f.iter().enumerate() {
            if v[a] != 0.0 {
                m += g * v[a];
            }
        }
        m
    }

    /// Clifford multiplication `μ_v(s₀) = Σ_a v^a Γ_a s₀`.
    pub fn mult(&self, v: &DVector<f64>, s0: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("vector in V", self.dim_v(), v.len())?;
        check_dim("vector in S0", self.dim_s0(), s0.len())?;
        Ok(self.mult_unchecked(v, s0))
    }

    pub(crate) fn mult_unchecked(&self, v: &DVector<f64>, s0: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim_s1());
        for (a, g) in self.gammas_f.iter().enumerate() {
            if v[a] != 0.0 {
                out.gemv(v[a], g, s0, 1.0);
            }
        }
        out
    }

    /// The unique `b ∈ V` with `⟨b, v⟩_V = ⟨s₁, μ_v(s₀)⟩_{S₁}` for all `v`.
    pub fn bilinear(&self, s1: &DVector<f64>, s0: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("vector in S1", self.dim_s1(), s1.len())?;
        check_dim("vector in S0", self.dim_s0(), s0.len())?;
        Ok(self.bilinear_unchecked(s1, s0))
    }

    pub(crate) fn bilinear_unchecked(&self, s1: &DVector<f64>, s0: &DVector<f64>) -> DVector<f64> {
        let lowered = self.s1_space.lower(s1);
        let pairings =
            DVector::from_iterator(self.dim_v(), self.gammas_f.iter().map(|g| lowered.dot(&(g * s0))));
        self.v_space.raise(&pairings)
    }

    /// Metric adjoint of `μ_v`: the `u ∈ S₀` with `⟨u, s⟩ = ⟨s₁, μ_v(s)⟩` for all `s ∈ S₀`.
    pub fn mult_adjoint(&self, v: &DVector<f64>, s1: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("vector in V", self.dim_v(), v.len())?;
        check_dim("vector in S1", self.dim_s1(), s1.len())?;
        Ok(self.mult_adjoint_unchecked(v, s1))
    }

    pub(crate) fn mult_adjoint_unchecked(&self, v: &DVector<f64>, s1: &DVector<f64>) -> DVector<f64> {
        let lowered = self.s1_space.lower(s1);
        let mut out = DVector::zeros(self.dim_s0());
        for (a, g) in self.gammas_f.iter().enumerate() {
            if v[a] != 0.0 {
                out.gemv_tr(v[a], g, &lowered, 1.0);
            }
        }
        self.s0_space.raise(&out)
    }

    /// Worst violation of the isometry identity over seeded random samples
    /// with coordinates uniform in `[-1, 1]`.
    pub fn verify_isometry(&self, n_samples: usize, seed: u64) -> IsometryReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_samples {
            let v = DVector::from_fn(self.dim_v(), |_, _| rng.random_range(-1.0..1.0));
            let s = DVector::from_fn(self.dim_s0(), |_, _| rng.random_range(-1.0..1.0));
            let out = self.mult_unchecked(&v, &s);
            let lhs = self.s1_space.norm_sq(&out);
            let rhs = self.v_space.norm_sq(&v) * self.s0_space.norm_sq(&s);
            worst = worst.max((lhs - rhs).abs());
        }
        IsometryReport {
            samples: n_samples,
            max_abs_deviation: worst,
        }
    }

    /// Max entrywise residual of `μ*_a μ_b + μ*_b μ_a − 2 g_ab Id` over all basis pairs.
    pub fn clifford_relation_residual(&self) -> f64 {
        let g1 = self.s1_space.gram();
        let g0 = self.s0_space.gram();
        let g0_inv = g0.clone().try_inverse().expect("non-degenerate metric");
        let gv = self.v_space.gram();
        let id = DMatrix::<f64>::identity(self.dim_s0(), self.dim_s0());
        let mut worst: f64 = 0.0;
        for a in 0..self.dim_v() {
            for b in a..self.dim_v() {
                let ga = &self.gammas_f[a];
                let gb = &self.gammas_f[b];
                let sym = &g0_inv * (ga.transpose() * g1 * gb + gb.transpose() * g1 * ga);
                let target = &id * (2.0 * gv[(a, b)]);
                worst = worst.max((sym - target).amax());
            }
        }
        worst
    }

    /// Max residual of `⟨bilinear(s₁, s₀), e_a⟩ = ⟨s₁, Γ_a s₀⟩` over seeded samples.
    pub fn adjunction_residual(&self, n_samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_samples {
            let s0 = DVector::from_fn(self.dim_s0(), |_, _| rng.random_range(-1.0..1.0));
            let s1 = DVector::from_fn(self.dim_s1(), |_, _| rng.random_range(-1.0..1.0));
            let b = self.bilinear_unchecked(&s1, &s0);
            for a in 0..self.dim_v() {
                let e = DVector::from_fn(self.dim_v(), |i, _| if i == a { 1.0 } else { 0.0 });
                let lhs = self.v_space.inner(&b, &e);
                let rhs = self.s1_space.inner(&s1, &(self.gamma(a) * &s0));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    fn satisfies_clifford_relation_exactly(&self) -> bool {
        let to_int = |m: &DMatrix<f64>| m.map(|x| x.round() as i32);
        let g1 = to_int(self.s1_space.gram());
        let g0 = to_int(self.s0_space.gram());
        let gv = to_int(self.v_space.gram());
        for a in 0..self.dim_v() {
            for b in a..self.dim_v() {
                let ga = &self.gammas[a];
                let gb = &self.gammas[b];
                let sym = ga.transpose() * &g1 * gb + gb.transpose() * &g1 * ga;
                if sym != &g0 * (2 * gv[(a, b)]) {
                    return false;
                }
            }
        }
        true
    }

    /// A copy with `Γ_a[row, col]` shifted by `delta`. Used as a negative control.
    pub fn corrupted(&self, a: usize, row: usize, col: usize, delta: i32) -> Self {
        let mut gammas = self.gammas.clone();
        gammas[a][(row, col)] += delta;
        Self::assemble(
            self.signature,
            self.multiplicity,
            self.v_space.clone(),
            self.s0_space.clone(),
            self.s1_space.clone(),
            gammas,
        )
        .expect("shape unchanged")
    }
}

/// `p` Euclidean gamma maps of the irreducible module: `I` followed by `p - 1`
/// anticommuting complex structures.
fn euclidean_gammas(p: usize) -> Vec<IntMatrix> {
    let js = complex_structures(p - 1);
    let n = complex_structure_dim(p - 1);
    std::iter::once(IntMatrix::identity(n, n)).chain(js).collect()
}

/// `k` pairwise anticommuting skew-symmetric signed permutation matrices
/// squaring to `-I`, of the minimal dimension `complex_structure_dim(k)`.
pub fn complex_structures(k: usize) -> Vec<IntMatrix> {
    if k == 0 {
        return Vec::new();
    }
    if k <= 7 {
        let n = complex_structure_dim(k);
        return (1..=k).map(|i| cayley_dickson_left(i, n)).collect();
    }
    // Cl_{0,k} = Cl_{0,8} ⊗ Cl_{0,k-8}: K_i ⊗ I and ω ⊗ J_j with ω = K_1⋯K_8.
    let eight = eight_structures();
    let omega = eight
        .iter()
        .fold(IntMatrix::identity(16, 16), |acc, k| acc * k);
    let rest = complex_structures(k - 8);
    let n = complex_structure_dim(k - 8);
    let id = IntMatrix::identity(n, n);
    eight
        .iter()
        .map(|ki| ki.kronecker(&id))
        .chain(rest.iter().map(|j| omega.kronecker(j)))
        .collect()
}

/// Eight anticommuting complex structures on ℝ¹⁶, from the seven octonionic
/// ones by the doubling step `J_i ⊗ Z`, `I ⊗ E`.
fn eight_structures() -> Vec<IntMatrix> {
    let z = IntMatrix::from_row_slice(2, 2, &[1, 0, 0, -1]);
    let e = IntMatrix::from_row_slice(2, 2, &[0, -1, 1, 0]);
    let oct: Vec<IntMatrix> = (1..=7).map(|i| cayley_dickson_left(i, 8)).collect();
    oct.iter()
        .map(|j| j.kronecker(&z))
        .chain(std::iter::once(IntMatrix::identity(8, 8).kronecker(&e)))
        .collect()
}

/// Matrix of left multiplication by the basis unit `e_i` in the Cayley–Dickson
/// algebra of dimension `n` (1, 2, 4 or 8).
fn cayley_dickson_left(i: usize, n: usize) -> IntMatrix {
    let unit = |k: usize| -> Vec<i32> { (0..n).map(|j| i32::from(j == k)).collect() };
    let ei = unit(i);
    let mut m = IntMatrix::zeros(n, n);
    for col in 0..n {
        let prod = cd_mul(&ei, &unit(col));
        for (row, &x) in prod.iter().enumerate() {
            m[(row, col)] = x;
        }
    }
    m
}

fn cd_conj(x: &[i32]) -> Vec<i32> {
    if x.len() == 1 {
        return x.to_vec();
    }
    let h = x.len() / 2;
    let mut out = cd_conj(&x[..h]);
    out.extend(x[h..].iter().map(|v| -v));
    out
}

/// `(a, b)(c, d) = (ac − d̄b, da + bc̄)`.
fn cd_mul(x: &[i32], y: &[i32]) -> Vec<i32> {
    if x.len() == 1 {
        return vec![x[0] * y[0]];
    }
    let h = x.len() / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let dbar_b = cd_mul(&cd_conj(d), b);
    let da = cd_mul(d, a);
    let b_cbar = cd_mul(b, &cd_conj(c));
    let mut out: Vec<i32> = ac.iter().zip(&dbar_b).map(|(p, q)| p - q).collect();
    out.extend(da.iter().zip(&b_cbar).map(|(p, q)| p + q));
    out
}
