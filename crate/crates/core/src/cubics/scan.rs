//! Sweeps over the diagonal slice of the level set `q = 1` and over the
//! `(ε₁, ε₂)` parameter plane.

use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::{HessianReport, InvariantCubic, Verdict};
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::nilalgebra::HermMatrix;
use crate::sampling::stream_rng;

/// Minimum equilibrated minor for a point to certify local admissibility.
pub const WITNESS_MARGIN: f64 = 1e-10;

/// Log-uniform sampling of the free diagonal coordinates. At rank 3 the
/// `x₃` axis is fixed and the `x₂` axis of each row is restricted to the
/// points with `x₁ > 0`; rows without such points are dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Extra `x₃` values in `(hi, probe_hi]`, used when `ε₂ > 0`.
    pub probe_hi: f64,
    pub probe_points: usize,
}

impl Default for DiagonalGrid {
    fn default() -> Self {
        Self {
            lo: 1e-2,
            hi: 1e2,
            points: 100,
            probe_hi: 1e3,
            probe_points: 20,
        }
    }
}

impl DiagonalGrid {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn axis(&self) -> Vec<f64> {
        log_space(self.lo, self.hi, self.points)
    }

    fn probes(&self) -> Vec<f64> {
        if self.probe_points == 0 || self.probe_hi <= self.hi {
            return Vec::new();
        }
        let mut v = log_space(self.hi, self.probe_hi, self.probe_points + 1);
        v.remove(0);
        v
    }
}

/// `n` log-uniform points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// A diagonal point of the level set with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceWitness {
    pub diag: Vec<f64>,
    pub verdict: Verdict,
    pub margin: f64,
    /// `1 − ε₂x₃³` for normalized rank-3 cubics.
    pub constraint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub all_pd: bool,
    pub n_points: usize,
    pub n_pd: usize,
    /// First non-positive-definite point in grid order.
    pub first_failure: Option<SliceWitness>,
    /// Positive-definite point with the smallest minor.
    pub weakest: Option<SliceWitness>,
}

/// Feasible part of `[lo, hi]` for a coordinate `t > 0` subject to
/// `alpha − beta·t > 0`, pulled slightly inside any constraint bound.
fn feasible_interval(lo: f64, hi: f64, alpha: f64, beta: f64) -> Option<(f64, f64)> {
    let (mut l, mut u) = (lo, hi);
    if beta > 0.0 {
        if alpha <= 0.0 {
            return None;
        }
        u = u.min(0.999 * alpha / beta);
    } else if beta < 0.0 {
        if alpha < 0.0 {
            l = l.max(1.001 * alpha / beta);
        }
    } else if alpha <= 0.0 {
        return None;
    }
    (l < u).then_some((l, u))
}

/// Diagonal points of `q = 1` over the grid, in grid order. `x₁` is solved
/// from the linear equation `q(diag(x₁, …)) = 1`, with the free axis spread
/// over the part of `[lo, hi]` where `x₁ > 0`; if `q` does not involve `x₁`
/// the point `diag(1, …)` is rescaled instead.
fn slice_points(q: &InvariantCubic, grid: &DiagonalGrid) -> Vec<Vec<f64>> {
    let c = q.coeffs();
    let axis = grid.axis();
    let mut out = Vec::new();
    let mut push = |mut diag: Vec<f64>| {
        if diag.iter().all(|v| v.is_finite() && *v > 0.0) {
            let x = HermMatrix::new(diag.clone(), zero_blocks(q)).expect("shape");
            match q.eval(&x) {
                Ok(v) if (v - 1.0).abs() <= 1e-12 => out.push(diag),
                Ok(v) if v > 0.0 => {
                    let s = v.cbrt();
                    diag.iter_mut().for_each(|d| *d /= s);
                    out.push(diag);
                }
                _ => {}
            }
        }
    };
    match q.cone().rank() {
        2 => {
            let (a, b) = (c[0], c[1]);
            if b == 0.0 {
                axis.iter().for_each(|&x2| push(vec![1.0, x2]));
                return out;
            }
            // x₁ > 0 iff sign(b)(1 − a·x₂³) > 0, linear in t = x₂³.
            let sb = b.signum();
            let cube = |v: f64| v * v * v;
            if let Some((l, u)) = feasible_interval(cube(grid.lo), cube(grid.hi), sb, sb * a) {
                for x2 in log_space(l.cbrt(), u.cbrt(), grid.points) {
                    push(vec![(1.0 - a * x2 * x2 * x2) / (b * x2 * x2), x2]);
                }
            }
        }
        _ => {
            let (a, b, cc) = (c[0], c[1], c[2]);
            let mut x3s = axis.clone();
            if a != 0.0 && cc / a > 0.0 {
                x3s.extend(grid.probes());
            }
            for &x3 in &x3s {
                if a == 0.0 {
                    axis.iter().for_each(|&x2| push(vec![1.0, x2, x3]));
                    continue;
                }
                // x₁ > 0 iff sign(a)(1 − c·x₃³ − b·x₃²·x₂) > 0.
                let sa = a.signum();
                let alpha = sa * (1.0 - cc * x3 * x3 * x3);
                let beta = sa * b * x3 * x3;
                let Some((l, u)) = feasible_interval(grid.lo, grid.hi, alpha, beta) else {
                    continue;
                };
                for x2 in log_space(l, u, grid.points) {
                    let rest = b * x2 * x3 * x3 + cc * x3 * x3 * x3;
                    push(vec![(1.0 - rest) / (a * x2 * x3), x2, x3]);
                }
            }
        }
    }
    out
}

fn zero_blocks(q: &InvariantCubic) -> Vec<nalgebra::DVector<f64>> {
    q.cone()
        .algebra()
        .slot_dims()
        .into_iter()
        .map(nalgebra::DVector::zeros)
        .collect()
}

fn witness(q: &InvariantCubic, report: &HessianReport) -> SliceWitness {
    let constraint = match (q.cone().rank(), q.epsilons()) {
        (3, Some(e)) => Some(1.0 - e[1] * report.point.diag[2].powi(3)),
        _ => None,
    };
    SliceWitness {
        diag: report.point.diag.clone(),
        verdict: report.verdict,
        margin: report.margin(),
        constraint,
    }
}

fn restrict_at(q: &InvariantCubic, diag: &[f64]) -> Result<HessianReport> {
    let x = HermMatrix::new(diag.to_vec(), zero_blocks(q))?;
    q.tangent_restriction(&x)
}

/// Runs the tangent restriction at every feasible point of the diagonal slice.
pub fn admissibility_on_diagonal(
    q: &InvariantCubic,
    grid: &DiagonalGrid,
    exec: Execution,
) -> Result<AdmissibilityReport> {
    let points = slice_points(q, grid);
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty feasible grid".into()));
    }
    let reports = map_indexed(exec, points.len(), |i| restrict_at(q, &points[i]));
    let mut first_failure = None;
    let mut weakest: Option<SliceWitness> = None;
    let mut n_pd = 0;
    for r in reports {
        let r = r?;
        let w = witness(q, &r);
        if r.verdict.is_pd() {
            n_pd += 1;
            if weakest.as_ref().is_none_or(|b| w.margin < b.margin) {
                weakest = Some(w);
            }
        } else if first_failure.is_none() {
            first_failure = Some(w);
        }
    }
    Ok(AdmissibilityReport {
        all_pd: n_pd == points.len(),
        n_points: points.len(),
        n_pd,
        first_failure,
        weakest,
    })
}

/// Search region for a positive-definite point of the diagonal slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSearch {
    /// `(x₂, x₃)` grid over `[lo, hi]²`, scanned first.
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Seeded random starts, log-uniform over `[start_lo, start_hi]²`.
    pub starts: usize,
    pub start_lo: f64,
    pub start_hi: f64,
    pub seed: u64,
}

impl Default for LocalSearch {
    fn default() -> Self {
        Self {
            lo: 0.1,
            hi: 10.0,
            points: 40,
            starts: 200,
            start_lo: 1e-2,
            start_hi: 1e2,
            seed: 0,
        }
    }
}

/// First point of the diagonal slice whose restricted form is positive
/// definite with minors above [`WITNESS_MARGIN`].
pub fn find_locally_admissible_point(
    q: &InvariantCubic,
    search: &LocalSearch,
    exec: Execution,
) -> Result<Option<SliceWitness>> {
    if q.cone().rank() != 3 {
        return Err(Error::Unsupported("the local search needs a rank-3 cone".into()));
    }
    let axis = log_space(search.lo, search.hi, search.points);
    let mut candidates: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&x2| axis.iter().map(move |&x3| (x2, x3)))
        .collect();
    let (a, b) = (search.start_lo.ln(), search.start_hi.ln());
    for k in 0..search.starts {
        let mut rng = stream_rng(search.seed, k as u64);
        candidates.push((rng.random_range(a..b).exp(), rng.random_range(a..b).exp()));
    }
    let found = map_indexed(exec, candidates.len(), |i| {
        let (x2, x3) = candidates[i];
        let pts = slice_points_at(q, x2, x3)?;
        let r = restrict_at(q, &pts).ok()?;
        (r.verdict.is_pd() && r.margin() > WITNESS_MARGIN).then(|| witness(q, &r))
    });
    Ok(found.into_iter().flatten().next())
}

fn slice_points_at(q: &InvariantCubic, x2: f64, x3: f64) -> Option<Vec<f64>> {
    let c = q.coeffs();
    let lin = c[0] * x2 * x3;
    if lin == 0.0 {
        return None;
    }
    let x1 = (1.0 - c[1] * x2 * x3 * x3 - c[2] * x3 * x3 * x3) / lin;
    (x1 > 0.0).then(|| vec![x1, x2, x3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    AdmissibleOnSample,
    LocallyAdmissible,
    NotAdmissible,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::AdmissibleOnSample => "admissible-on-sample",
            Classification::LocallyAdmissible => "locally-admissible",
            Classification::NotAdmissible => "not-admissible",
        })
    }
}

/// Inclusive arithmetic range `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::InvalidArgument("range bounds must be finite".into()));
        }
        if hi < lo {
            return Err(Error::InvalidArgument(format!("empty range {lo}:{hi}")));
        }
        if !(step > 0.0) && hi > lo {
            return Err(Error::InvalidArgument("range step must be positive".into()));
        }
        Ok(Self { lo, hi, step })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.hi == self.lo {
            return vec![self.lo];
        }
        let n = ((self.hi - self.lo) / self.step).round() as usize + 1;
        (0..n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl FromStr for ParamRange {
    type Err = Error;

    /// `LO:HI:STEP`, or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in range {s:?}")))
        };
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Self::new(v, v, 1.0)
            }
            [lo, hi, step] => Self::new(num(lo)?, num(hi)?, num(step)?),
            _ => Err(Error::InvalidArgument(format!(
                "range {s:?} is not of the form LO:HI:STEP"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub eps1: f64,
    pub eps2: f64,
    pub classification: Classification,
    pub witness: Option<SliceWitness>,
}

fn classify_cell(
    cone: &Cone,
    eps1: f64,
    eps2: f64,
    grid: &DiagonalGrid,
    search: &LocalSearch,
) -> Result<ScanRow> {
    let q = InvariantCubic::normalized_rank3(cone.clone(), eps1, eps2)?;
    let report = admissibility_on_diagonal(&q, grid, Execution::Sequential)?;
    let (classification, witness) = if report.all_pd {
        (Classification::AdmissibleOnSample, report.weakest)
    } else if eps2 < 0.0 {
        match find_locally_admissible_point(&q, search, Execution::Sequential)? {
            Some(w) => (Classification::LocallyAdmissible, Some(w)),
            None => (Classification::NotAdmissible, report.first_failure),
        }
    } else {
        (Classification::NotAdmissible, report.first_failure)
    };
    Ok(ScanRow {
        eps1,
        eps2,
        classification,
        witness,
    })
}

/// Classifies every `(ε₁, ε₂)` cell, `ε₁` outer. Rows come back in grid order.
pub fn scan_parameter_plane(
    cone: &Cone,
    eps1: &ParamRange,
    eps2: &ParamRange,
    grid: &DiagonalGrid,
    search: &LocalSearch,
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    if cone.rank() != 3 {
        return Err(Error::Unsupported("parameter scans need a rank-3 cone".into()));
    }
    if let Some((p, q)) = cone.algebra().indefinite_signature() {
        return Err(Error::Indefinite {
            p,
            q,
            op: "the parameter scan",
        });
    }
    let e1 = eps1.values();
    let e2 = eps2.values();
    let cells: Vec<(f64, f64)> = e1
        .iter()
        .flat_map(|&a| e2.iter().map(move |&b| (a, b)))
        .collect();
    map_indexed(exec, cells.len(), |i| {
        classify_cell(cone, cells[i].0, cells[i].1, grid, search)
    })
    .into_iter()
    .collect()
}

pub const CSV_HEADER: &str = "eps1,eps2,classification,witness_x2,witness_x3,min_minor";

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let (x2, x3, m) = match &r.witness {
            Some(w) => (fmt_f(w.diag[1]), fmt_f(w.diag[2]), fmt_f(w.margin)),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{x2},{x3},{m}",
            fmt_f(r.eps1),
            fmt_f(r.eps2),
            r.classification
        )?;
    }
    Ok(())
}

/// 17 significant digits.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}
