//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any of them fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use vinberg::cubics::{
    admissibility_on_diagonal, componentwise_relative_error, find_locally_admissible_point,
    finite_difference_hessian_log, paper_hessian_rank2, paper_hessian_rank3, DiagonalGrid,
    InvariantCubic, LocalSearch, Verdict,
};
use vinberg::exec::map_indexed;
use vinberg::sampling::group_element;
use vinberg::{Cone, ConeSpec, Execution, Signature};

const SEED: u64 = 20_240_601;

const ROUNDTRIP_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-10;
const ISOMETRY_TOL: f64 = 1e-12;
const FD_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;
const CLOSED_FORM_TOL: f64 = 1e-10;
const MARGIN: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-10;
const SELF_ADJOINT_TOL: f64 = 1e-12;
/// Relative-error floor for structurally zero Hessian entries.
const ENTRY_FLOOR: f64 = 1e-4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rank2(n: usize) -> Cone {
    ConeSpec::rank2(n).build().unwrap()
}

fn rank3(n: usize) -> Cone {
    ConeSpec::rank3(n).build().unwrap()
}

fn decomposition_cones() -> Vec<(String, Cone)> {
    let mut out: Vec<_> = [1, 4, 9].iter().map(|&n| (format!("dim_w={n}"), rank2(n))).collect();
    out.extend([1, 2, 4, 8].iter().map(|&n| (format!("dim_v={n}"), rank3(n))));
    out
}

/// Per-sample `(roundtrip, identity, determinant)` errors over 1000 samples.
fn decomposition_errors(cone: &Cone) -> Vec<[f64; 3]> {
    map_indexed(Execution::Parallel, 1000, |i| {
        let a = group_element(cone.algebra(), SEED, i as u64);
        let x = cone.herm_from_triangular(&a).unwrap();
        let g = cone.group_coordinates(&x).unwrap();
        let roundtrip = g.element.max_abs_diff(&a) / a.to_flat().amax();
        let p = cone.p_polynomials(&x).unwrap();
        let identity = (0..p.len())
            .map(|k| rel(g.element.diag[k].powi(2) * p[k + 1..].iter().product::<f64>(), p[k]))
            .fold(0.0, f64::max);
        let prod: f64 = a.diag.iter().product();
        let det = match cone.rank() {
            2 => rel(cone.g_determinant_sq(&x).unwrap(), prod * prod),
            _ => rel(cone.d_cubic(&x).unwrap(), prod * prod).max(rel(cone.g_determinant_sq(&x).unwrap(), prod * prod)),
        };
        [roundtrip, identity, det]
    })
}

fn worst(rows: &[[f64; 3]], k: usize) -> f64 {
    rows.iter().map(|r| r[k]).fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn criteria_1_to_3() -> [Outcome; 3] {
    let start = Instant::now();
    let (mut rt, mut id, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for (_, cone) in decomposition_cones() {
        let rows = decomposition_errors(&cone);
        rt = rt.max(worst(&rows, 0));
        id = id.max(worst(&rows, 1));
        det = det.max(worst(&rows, 2));
    }
    let secs = start.elapsed().as_secs_f64();
    [
        outcome(
            rt <= ROUNDTRIP_TOL && secs < 30.0,
            format!("max relative error {rt:.2e} (tol {ROUNDTRIP_TOL:.0e}), {secs:.2} s for 7 cones x 1000"),
        ),
        outcome(id <= IDENTITY_TOL, format!("max relative error {id:.2e} (tol {IDENTITY_TOL:.0e})")),
        outcome(det <= IDENTITY_TOL, format!("max relative error {det:.2e} (tol {IDENTITY_TOL:.0e})")),
    ]
}

fn criterion_4() -> Outcome {
    let mut dev = 0.0f64;
    for dim in 1..=8 {
        let m = vinberg::CliffordModule::build(dim, Signature::euclidean(dim), 1).unwrap();
        dev = dev.max(m.verify_isometry(1000, SEED).max_abs_deviation);
    }
    outcome(dev <= ISOMETRY_TOL, format!("max deviation {dev:.2e} over dim_v 1..8 (tol {ISOMETRY_TOL:.0e})"))
}

fn cubic_configurations() -> Vec<InvariantCubic> {
    let mut out = Vec::new();
    for n in [1, 4, 9] {
        for eps in [-1.0, 0.5, 2.0] {
            out.push(InvariantCubic::normalized_rank2(rank2(n), eps).unwrap());
        }
    }
    for n in [1, 4, 8] {
        for (e1, e2) in [(0.0, 0.0), (0.5, -0.25), (-0.7, 0.3)] {
            out.push(InvariantCubic::normalized_rank3(rank3(n), e1, e2).unwrap());
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let (mut fd, mut closed) = (0.0f64, 0.0f64);
    let mut short = 0;
    for q in cubic_configurations() {
        let cone = q.cone();
        let mut points = Vec::new();
        let mut i = 0u64;
        while points.len() < 50 && i < 10_000 {
            let x = cone.herm_from_triangular(&group_element(cone.algebra(), SEED ^ 0x5, i)).unwrap();
            if q.eval(&x).unwrap() > 0.0 {
                points.push(x);
            }
            i += 1;
        }
        if points.len() < 50 {
            short += 1;
        }
        for x in &points {
            let exact = q.hessian_log(x).unwrap();
            fd = fd.max(componentwise_relative_error(&finite_difference_hessian_log(&q, x, FD_STEP).unwrap(), &exact, ENTRY_FLOOR));
        }
        let dims = cone.algebra().slot_dims();
        let eps = q.epsilons().unwrap();
        let mut n = 0;
        for k in 0..200 {
            if n == 50 {
                break;
            }
            let t = k as f64 / 50.0;
            let diag = match cone.rank() {
                2 => vec![0.5 + t, 0.3 + 0.7 * t * t],
                _ => vec![0.5 + t, 0.3 + 0.7 * t * t, 1.5 - 0.5 * t.sin()],
            };
            let x = cone.algebra().diagonal_herm(&diag).unwrap();
            if q.eval(&x).unwrap() <= 0.0 {
                continue;
            }
            n += 1;
            let ours = q.hessian_log(&x).unwrap();
            let theirs = match cone.rank() {
                2 => paper_hessian_rank2(diag[0], diag[1], eps[0], dims[0]),
                _ => paper_hessian_rank3([diag[0], diag[1], diag[2]], eps[0], eps[1], [dims[0], dims[1], dims[2]]),
            };
            closed = closed.max(componentwise_relative_error(&ours, &theirs, ENTRY_FLOOR));
        }
        if n < 50 {
            short += 1;
        }
    }
    outcome(
        fd <= FD_TOL && closed <= CLOSED_FORM_TOL && short == 0,
        format!(
            "finite differences {fd:.2e} (tol {FD_TOL:.0e}), closed forms {closed:.2e} (tol {CLOSED_FORM_TOL:.0e}), 50+50 points x 18 configurations"
        ),
    )
}

fn criterion_6() -> Outcome {
    let grid = DiagonalGrid::with_points(100);
    let mut weakest = f64::INFINITY;
    let mut failures = Vec::new();
    for n in [1, 4, 9] {
        for eps in [-1.0, -0.1, 0.0, 0.5, 2.0] {
            let q = InvariantCubic::normalized_rank2(rank2(n), eps).unwrap();
            let r = admissibility_on_diagonal(&q, &grid, Execution::Parallel).unwrap();
            let margin = r.weakest.as_ref().map_or(f64::NEG_INFINITY, |w| w.margin);
            weakest = weakest.min(margin);
            if !r.all_pd || r.n_points != 100 || margin <= MARGIN {
                failures.push(format!("dim_w={n} eps={eps}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("15 families x 100 points all PD, weakest margin {weakest:.2e} (need > {MARGIN:.0e}){}", fail_list(&failures)),
    )
}

fn fail_list(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", f.join(", "))
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let grid = DiagonalGrid::with_points(30);
    let search = LocalSearch { seed: SEED, ..LocalSearch::default() };
    let mut failures = Vec::new();
    let (mut fewest, mut checked) = (usize::MAX, 0);
    for n in [1, 4, 8] {
        let cone = rank3(n);
        for e1 in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            let q = InvariantCubic::normalized_rank3(cone.clone(), e1, 0.0).unwrap();
            let r = admissibility_on_diagonal(&q, &grid, Execution::Parallel).unwrap();
            fewest = fewest.min(r.n_points);
            checked += r.n_points;
            // Rows of x₃ whose whole x₂ window leaves the cone are dropped.
            if !r.all_pd || r.n_points < 900 / 2 {
                failures.push(format!("(a) dim_v={n} eps1={e1}"));
            }
        }
        for e2 in [0.1, 1.0] {
            for e1 in [-2.0, 0.0, 2.0] {
                let q = InvariantCubic::normalized_rank3(cone.clone(), e1, e2).unwrap();
                let r = admissibility_on_diagonal(&q, &grid, Execution::Parallel).unwrap();
                let ok = r.first_failure.is_some_and(|w| {
                    w.diag[2] <= 1e3 && (w.constraint.is_some_and(|c| c <= 0.0) || w.verdict == Verdict::Indefinite)
                });
                if !ok {
                    failures.push(format!("(b) dim_v={n} eps1={e1} eps2={e2}"));
                }
            }
        }
        for e2 in [-0.25, -1.0] {
            let q = InvariantCubic::normalized_rank3(cone.clone(), -e2, e2).unwrap();
            if find_locally_admissible_point(&q, &search, Execution::Parallel).unwrap().is_none() {
                failures.push(format!("(c) dim_v={n} eps2={e2}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 120.0,
        format!(
            "(a) all-PD on 30x30 ({checked} points, fewest feasible {fewest}), (b) violating witness, (c) PD witness; dim_v 1,4,8; {secs:.2} s{}",
            fail_list(&failures)
        ),
    )
}

fn criterion_8() -> Outcome {
    let (mut routes, mut pairing_failures, mut self_adjoint) = (0.0f64, 0usize, 0.0f64);
    for (_, cone) in decomposition_cones() {
        let alg = cone.algebra();
        let rows = map_indexed(Execution::Parallel, 1000, |i| {
            let a = group_element(alg, SEED ^ 0x8, i as u64);
            let b = group_element(alg, SEED ^ 0x9, i as u64);
            let y = cone.herm_from_triangular_dual(&a).unwrap();
            let x = cone.herm_from_triangular(&b).unwrap();
            let route = if i < 500 {
                rel(cone.d_prime(&y).unwrap(), cone.d_prime_via_dual(&y).unwrap())
            } else {
                0.0
            };
            (route, cone.pairing(&x, &y).unwrap() > 0.0)
        });
        routes = rows.iter().fold(routes, |m, r| m.max(r.0));
        pairing_failures += rows.iter().filter(|r| !r.1).count();
    }
    let cone = rank3(1);
    for i in 0..500 {
        let x = cone.herm_from_triangular(&group_element(cone.algebra(), SEED ^ 0xa, i)).unwrap();
        self_adjoint = self_adjoint.max((cone.d_cubic(&x).unwrap() - cone.d_prime(&x).unwrap()).abs());
    }
    outcome(
        routes <= DUAL_TOL && pairing_failures == 0 && self_adjoint <= SELF_ADJOINT_TOL,
        format!(
            "d' routes {routes:.2e} (tol {DUAL_TOL:.0e}), pairing failures {pairing_failures}/7000, |d - d'| at dim 1 {self_adjoint:.2e} (tol {SELF_ADJOINT_TOL:.0e})"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pd = 0;
    let mut checked = 0;
    let mut cubics: Vec<InvariantCubic> =
        [1, 4, 9].iter().map(|&n| InvariantCubic::new(rank2(n), &[1.0, 0.0]).unwrap()).collect();
    for n in [1, 4, 8] {
        for (b, c) in [(1.0, 0.0), (1.0, 1.0), (-0.5, 1.0)] {
            cubics.push(InvariantCubic::new(rank3(n), &[0.0, b, c]).unwrap());
        }
    }
    for q in &cubics {
        let cone = q.cone();
        if let Ok(r) = admissibility_on_diagonal(q, &DiagonalGrid::with_points(20), Execution::Parallel) {
            checked += r.n_points;
            pd += r.n_pd;
        }
        for i in 0..100 {
            let x = cone.herm_from_triangular(&group_element(cone.algebra(), SEED ^ 0xb, i)).unwrap();
            if q.eval(&x).unwrap() <= 0.0 {
                continue;
            }
            let r = q.tangent_restriction(&q.project_to_level(&x).unwrap()).unwrap();
            checked += 1;
            if r.verdict.is_pd() {
                pd += 1;
            }
        }
    }
    outcome(pd == 0 && checked > 0, format!("{pd} positive-definite points out of {checked} on 12 degenerate cubics"))
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("vinberg-acceptance-{}-{name}", std::process::id()))
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_vinberg");
    let spec = scratch("rank3.json");
    std::fs::write(&spec, r#"{"rank": 3, "dim_v": 4}"#).unwrap();
    let scan = |out: &PathBuf, extra: &[&str]| {
        let status = Command::new(bin)
            .args(["scan", "--spec"])
            .arg(&spec)
            .args(["--eps1", "-2:2:0.5", "--eps2", "-1:1:0.25", "--grid", "30", "--out"])
            .arg(out)
            .args(extra)
            .output()
            .unwrap()
            .status;
        (status.success(), std::fs::read(out).unwrap_or_default())
    };
    let (a_ok, a) = scan(&scratch("a.csv"), &[]);
    let (b_ok, b) = scan(&scratch("b.csv"), &[]);
    let (c_ok, c) = scan(&scratch("c.csv"), &["--sequential"]);
    let identical = a_ok && b_ok && c_ok && !a.is_empty() && a == b && a == c;

    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, s) in [
        r#"{"rank": 2, "dim_w": 1}"#,
        r#"{"rank": 2, "dim_w": 4}"#,
        r#"{"rank": 2, "dim_w": 9}"#,
        r#"{"rank": 3, "dim_v": 1}"#,
        r#"{"rank": 3, "dim_v": 2}"#,
        r#"{"rank": 3, "dim_v": 4}"#,
        r#"{"rank": 3, "dim_v": 8}"#,
    ]
    .iter()
    .enumerate()
    {
        let path = scratch(&format!("selftest-{i}.json"));
        std::fs::write(&path, s).unwrap();
        let status = Command::new(bin).arg("selftest").arg("--spec").arg(&path).output().unwrap().status;
        if !status.success() {
            failed.push(s.to_string());
        }
        let _ = std::fs::remove_file(path);
    }
    let elapsed = start.elapsed();
    for f in ["rank3.json", "a.csv", "b.csv", "c.csv"] {
        let _ = std::fs::remove_file(scratch(f));
    }
    outcome(
        identical && failed.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "scan byte-identical across reruns and --sequential: {identical}; selftest on 7 cones {:.2} s{}",
            elapsed.as_secs_f64(),
            fail_list(&failed)
        ),
    )
}

fn main() {
    let start = Instant::now();
    let [c1, c2, c3] = criteria_1_to_3();
    let results = [
        ("roundtrip decomposition", c1),
        ("recovered diagonal identity", c2),
        ("determinant factorization", c3),
        ("Clifford isometry", criterion_4()),
        ("Hessian checks", criterion_5()),
        ("rank-2 positivity", criterion_6()),
        ("rank-3 classification", criterion_7()),
        ("duality", criterion_8()),
        ("degenerate cubics", criterion_9()),
        ("determinism and self-test", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {:<28} {}  {}", i + 1, name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
