//! The invariant suite behind `vinberg selftest`.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::clifford::CliffordModule;
use crate::cone::{ratio_to_f64, Cone};
use crate::cubics::{
    componentwise_relative_error, finite_difference_hessian_log, no_g0_cubic_check,
    paper_hessian_rank2, paper_hessian_rank3, InvariantCubic, PolynomialOracle, Verdict,
};
use crate::error::Result;
use crate::exec::{map_indexed, Execution};
use crate::nilalgebra::{HermMatrix, NilAlgebra};
use crate::sampling::{group_element, random_unipotent, stream_rng};

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    pub samples: usize,
    /// Shift one gamma-matrix entry before running (negative control).
    pub corrupt_gamma: bool,
    pub exec: Execution,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            seed: crate::config::DEFAULT_SEED,
            samples: 200,
            corrupt_gamma: false,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub results: Vec<InvariantResult>,
    pub seconds: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

struct Suite {
    results: Vec<InvariantResult>,
}

impl Suite {
    fn check(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.results.push(InvariantResult {
            name: name.to_string(),
            max_residual: residual,
            tolerance,
            passed: residual <= tolerance,
            skipped: false,
        });
    }

    fn skip(&mut self, name: &str) {
        self.results.push(InvariantResult {
            name: name.to_string(),
            max_residual: 0.0,
            tolerance: 0.0,
            passed: true,
            skipped: true,
        });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Maximum that propagates NaN, so a failed evaluation cannot pass.
fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |acc, v| if acc.is_nan() || v.is_nan() { f64::NAN } else { acc.max(v) })
}

/// Replaces the cone's module by one with a corrupted gamma matrix.
fn corrupt(cone: &Cone) -> Cone {
    match cone.algebra().module() {
        Some(m) => {
            let bad = m.corrupted(0, 0, 0, 1);
            Cone::new(NilAlgebra::rank3_special(Arc::new(bad)).expect("same shape"))
        }
        None => cone.clone(),
    }
}

pub fn run_selftest(cone: &Cone, opts: &SelftestOptions) -> Result<SelftestReport> {
    let start = Instant::now();
    let cone = if opts.corrupt_gamma { corrupt(cone) } else { cone.clone() };
    let mut s = Suite { results: Vec::new() };

    if let Some(module) = cone.algebra().module() {
        clifford_checks(&mut s, module, opts.samples, opts.seed);
    }
    if let Err(e) = orbit_checks(&mut s, &cone, opts) {
        s.results.push(InvariantResult {
            name: format!("evaluation error: {e}"),
            max_residual: f64::INFINITY,
            tolerance: 0.0,
            passed: false,
            skipped: false,
        });
    }

    Ok(SelftestReport {
        results: s.results,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn orbit_checks(s: &mut Suite, cone: &Cone, opts: &SelftestOptions) -> Result<()> {
    let alg = cone.algebra();
    let n = opts.samples;
    let seed = opts.seed;
    let exec = opts.exec;
    s.check("product isometry |x·y|² = |x|²|y|²", alg.verify_product_isometry(n, seed), 1e-12);

    let samples: Vec<_> = map_indexed(exec, n, |k| {
        let a = group_element(alg, seed, k as u64);
        let x = cone.herm_from_triangular(&a).expect("shape");
        (a, x)
    });

    // Decomposition, polynomial identities and the determinant.
    let rows = map_indexed(exec, n, |k| -> Result<[f64; 4]> {
        let (a, x) = &samples[k];
        let g = cone.group_coordinates(x)?;
        let scale = a.to_flat().amax();
        let roundtrip = g.element.max_abs_diff(a) / scale;
        let p = cone.p_polynomials(x)?;
        let m = p.len();
        let eq31 = max_of((0..m).map(|i| {
            let tail: f64 = p[i + 1..].iter().product();
            rel(g.element.diag[i].powi(2) * tail, p[i])
        }));
        let det: f64 = a.diag.iter().map(|d| d * d).product();
        let pi2 = rel(cone.g_determinant_sq(x)?, det);
        Ok([roundtrip, eq31, pi2, g.max_residual()])
    });
    let rows: Vec<[f64; 4]> = rows.into_iter().collect::<Result<_>>()?;
    s.check("decomposition roundtrip (relative)", max_of(rows.iter().map(|r| r[0])), 1e-9);
    s.check("a_ii² Π_{s>i} p_s = p_i", max_of(rows.iter().map(|r| r[1])), 1e-10);
    s.check("π²(A·A*) = Π a_ii²", max_of(rows.iter().map(|r| r[2])), 1e-10);
    s.check("reconstruction residual", max_of(rows.iter().map(|r| r[3])), 1e-9);

    // Invariance under the unipotent subgroup, homogeneity, cone property.
    let inv = map_indexed(exec, n, |k| -> Result<[f64; 3]> {
        let (b, x) = &samples[k];
        let mut rng = stream_rng(seed ^ 0x5eed, k as u64);
        let u = random_unipotent(alg, &mut rng);
        let ub = alg.triangular_product(&u, b)?;
        let y = cone.herm_from_triangular(&ub)?;
        let (px, py) = (cone.p_polynomials(x)?, cone.p_polynomials(&y)?);
        let p_inv = max_of(px.iter().zip(&py).map(|(a, b)| rel(*b, *a)));
        let chi = rel(cone.characteristic_function(&y)?, cone.characteristic_function(x)?);
        let lambda = 1.7;
        let p_scaled = cone.p_polynomials(&x.scaled(lambda))?;
        let hom = max_of(
            p_scaled
                .iter()
                .zip(&px)
                .zip(cone.p_degrees())
                .map(|((ps, p), d)| rel(*ps, p * lambda.powi(d as i32))),
        );
        Ok([p_inv, chi, hom])
    });
    let inv: Vec<[f64; 3]> = inv.into_iter().collect::<Result<_>>()?;
    s.check("p_i invariant under unipotent elements", max_of(inv.iter().map(|r| r[0])), 1e-9);
    s.check("χ invariant under unipotent elements", max_of(inv.iter().map(|r| r[1])), 1e-9);
    s.check("p_i(λX) = λ^deg p_i(X)", max_of(inv.iter().map(|r| r[2])), 1e-10);

    let degree: f64 = cone
        .characteristic_exponents()
        .iter()
        .zip(cone.p_degrees())
        .map(|(e, d)| ratio_to_f64(*e) * f64::from(d))
        .sum();
    let chi_hom = max_of(samples.iter().take(20).map(|(_, x)| {
        let d = cone.log_characteristic_function(&x.scaled(2.0)).unwrap_or(f64::NAN)
            - cone.log_characteristic_function(x).unwrap_or(f64::NAN);
        (d - degree * 2f64.ln()).abs()
    }));
    s.check("log χ(2X) − log χ(X) = deg χ · log 2", chi_hom, 1e-10);

    if cone.is_euclidean() {
        euclidean_checks(s, cone, &samples, opts)?;
    } else {
        for name in ["membership", "dual cone", "pairing positivity", "cubic Hessians"] {
            s.skip(name);
        }
    }

    Ok(())
}

fn clifford_checks(s: &mut Suite, module: &CliffordModule, n: usize, seed: u64) {
    s.check("Clifford relations", module.clifford_relation_residual(), 1e-12);
    s.check("Clifford isometry", module.verify_isometry(n, seed).max_abs_deviation, 1e-12);
    s.check("Clifford bilinear adjunction", module.adjunction_residual(n, seed), 1e-12);
}

fn euclidean_checks(
    s: &mut Suite,
    cone: &Cone,
    samples: &[(crate::nilalgebra::TriangularElement, HermMatrix)],
    opts: &SelftestOptions,
) -> Result<()> {
    let alg = cone.algebra();
    let n = samples.len();
    let exec = opts.exec;

    let outside = samples
        .iter()
        .filter(|(_, x)| {
            !(cone.membership(x).unwrap_or(false) && cone.membership(&x.scaled(0.3)).unwrap_or(false))
        })
        .count();
    s.check("orbit points and their multiples are members", outside as f64, 0.0);

    // Dual cone: d′ two ways, d′(A*·A) = Π a_ii², membership and pairing.
    let dual = map_indexed(exec, n, |k| -> Result<[f64; 4]> {
        let (a, x) = &samples[k];
        let y = cone.herm_from_triangular_dual(a)?;
        let det: f64 = a.diag.iter().map(|d| d * d).product();
        let direct = cone.d_prime(&y)?;
        let via = cone.d_prime_via_dual(&y)?;
        let member = if cone.dual_membership(&y)? { 0.0 } else { 1.0 };
        let (b, _) = &samples[(k + 1) % n];
        let other = cone.herm_from_triangular_dual(b)?;
        let pairing = if cone.pairing(x, &other)? > 0.0 { 0.0 } else { 1.0 };
        Ok([rel(direct, via), rel(direct, det), member, pairing])
    });
    let dual: Vec<[f64; 4]> = dual.into_iter().collect::<Result<_>>()?;
    s.check("d′ direct = d′ through anti-transposition", max_of(dual.iter().map(|r| r[0])), 1e-10);
    s.check("d′(A*·A) = Π a_ii²", max_of(dual.iter().map(|r| r[1])), 1e-10);
    s.check("A*·A in the dual cone (failures)", dual.iter().map(|r| r[2]).sum(), 0.0);
    s.check("⟨X, Y⟩ > 0 for X in V, Y in V′ (failures)", dual.iter().map(|r| r[3]).sum(), 0.0);
    if cone.rank() == 3 && alg.slot_dims().iter().all(|&d| d == 1) {
        let worst = max_of(samples.iter().map(|(_, x)| {
            (cone.d_cubic(x).unwrap_or(f64::NAN) - cone.d_prime(x).unwrap_or(f64::NAN)).abs()
        }));
        s.check("d = d′ for the self-adjoint cone", worst, 1e-12);
    }

    let g0 = no_g0_cubic_check(cone);
    let expected = if cone.rank() == 2 { !g0.exists && g0.degree_pi_sq == 2 } else { g0.exists };
    s.check("G₀-invariant cubic bookkeeping", if expected { 0.0 } else { 1.0 }, 0.0);

    cubic_checks(s, cone, samples, opts)
}

fn cubic_checks(
    s: &mut Suite,
    cone: &Cone,
    samples: &[(crate::nilalgebra::TriangularElement, HermMatrix)],
    opts: &SelftestOptions,
) -> Result<()> {
    let params: Vec<Vec<f64>> = match cone.rank() {
        2 => vec![vec![-1.0, 1.0], vec![0.5, 1.0], vec![0.0, 1.0]],
        _ => vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.5, -0.25], vec![1.0, -0.7, 0.3]],
    };
    let n_points = samples.len().min(20);
    let (mut poly, mut fd, mut scaling, mut paper, mut tangent) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut rotation_disagreements = 0.0;
    for c in &params {
        let q = InvariantCubic::new(cone.clone(), c)?;
        let oracle = PolynomialOracle::new(&q);
        for (_, x) in samples.iter().take(n_points) {
            if q.eval(x)? <= 0.0 {
                continue;
            }
            let h = q.hessian_log(x)?;
            poly = poly.max(componentwise_relative_error(&oracle.hessian_log(x)?, &h, 1e-4));
            fd = fd.max(componentwise_relative_error(&finite_difference_hessian_log(&q, x, 1e-5)?, &h, 1e-4));
            let h2 = q.hessian_log(&x.scaled(2.0))? * 4.0;
            scaling = scaling.max((h2 - &h).amax() / h.amax());
            let on_level = q.project_to_level(x)?;
            let r = q.tangent_restriction(&on_level)?;
            let rr = q.tangent_restriction_rotated(&on_level, opts.seed)?;
            tangent = tangent.max(r.gradient_residual).max(rr.gradient_residual);
            if r.verdict != rr.verdict {
                rotation_disagreements += 1.0;
            }
        }
        // Closed forms at diagonal points.
        let eps = q.epsilons().expect("normalized family");
        for k in 0..n_points {
            let t = 0.5 + k as f64 / n_points as f64;
            let h = match cone.rank() {
                2 => {
                    let x = alg_diag(cone, &[1.0 + t, 0.5 + t * t])?;
                    let ours = q.hessian_log(&x)?;
                    componentwise_relative_error(&ours, &paper_hessian_rank2(1.0 + t, 0.5 + t * t, eps[0], cone.algebra().slot_dims()[0]), 1e-4)
                }
                _ => {
                    let d = [1.0 + t, 0.5 + t * t, 2.0 - t];
                    let x = alg_diag(cone, &d)?;
                    let dims = cone.algebra().slot_dims();
                    let ours = q.hessian_log(&x)?;
                    componentwise_relative_error(&ours, &paper_hessian_rank3(d, eps[0], eps[1], [dims[0], dims[1], dims[2]]), 1e-4)
                }
            };
            paper = paper.max(h);
        }
    }
    s.check("−Hess log q: closed form = polynomial oracle", poly, 1e-10);
    s.check("−Hess log q: closed form = finite differences", fd, 1e-5);
    s.check("−Hess log q at 2X = ¼ · at X", scaling, 1e-10);
    s.check("−Hess log q = displayed closed forms at diagonal points", paper, 1e-10);
    s.check("tangent basis annihilates dq", tangent, 1e-10);
    s.check("verdict independent of tangent basis (disagreements)", rotation_disagreements, 0.0);

    let identity = cone.algebra().identity_herm();
    let base = if cone.rank() == 2 { vec![0.0, 1.0] } else { vec![1.0, 0.0, 0.0] };
    let pd_at_identity = InvariantCubic::new(cone.clone(), &base)?
        .tangent_restriction(&identity)?
        .verdict
        .is_pd();
    s.check("base cubic positive definite at I", if pd_at_identity { 0.0 } else { 1.0 }, 0.0);

    let degenerate = if cone.rank() == 2 { vec![1.0, 0.0] } else { vec![0.0, 1.0, 1.0] };
    let q = InvariantCubic::new(cone.clone(), &degenerate)?;
    let mut pd_points = 0.0;
    for (_, x) in samples.iter().take(n_points) {
        if q.eval(x)? > 0.0 {
            let r = q.tangent_restriction(&q.project_to_level(x)?)?;
            if r.verdict == Verdict::PositiveDefinite {
                pd_points += 1.0;
            }
        }
    }
    s.check("degenerate cubic never positive definite", pd_points, 0.0);

    if cone.rank() == 2 {
        let worst = max_of((0..n_points).map(|k| {
            let (x1, x2, eps) = (0.7 + 0.1 * k as f64, 1.3 - 0.03 * k as f64, -0.5 + 0.1 * k as f64);
            let x = alg_diag(cone, &[x1, x2]).expect("shape");
            let q = InvariantCubic::normalized_rank2(cone.clone(), eps).expect("valid");
            let h = q.hessian_log(&x).expect("q ≠ 0");
            let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
            rel(det, 2.0 / (x2 * x2 * (x1 + eps * x2).powi(2)))
        }));
        s.check("leading 2×2 minor = 2/(x₂²(x₁+εx₂)²)", worst, 1e-10);
    }
    Ok(())
}

fn alg_diag(cone: &Cone, d: &[f64]) -> Result<HermMatrix> {
    cone.algebra().diagonal_herm(d)
}
