mod json;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use vinberg::cubics::{
    scan_parameter_plane, write_scan_csv, DiagonalGrid, LocalSearch, ParamRange,
};
use vinberg::sampling::group_element;
use vinberg::selftest::{run_selftest, SelftestOptions};
use vinberg::{Cone, ConeSpec, Error, Execution, HermMatrix};

#[derive(Parser)]
#[command(name = "vinberg", version, about = "Vinberg cones, duality and admissible cubics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Cone specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cone descriptor.
    Build {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an operation at a point of the Hermitian space.
    Eval {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// The point X (JSON with rank, diag and offdiag).
        #[arg(long = "x")]
        x: Option<PathBuf>,
        /// p, d, pi2, dprime, chi, membership, dual_membership or decompose.
        #[arg(long)]
        op: Option<String>,
        /// A request {"cone": spec, "X": point, "op": name} instead of the three flags.
        #[arg(long, conflicts_with_all = ["spec", "x", "op"])]
        request: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a seeded group element A and print A with A·A* and A*·A.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify normalized rank-3 cubics over a grid of (eps1, eps2).
    Scan {
        #[command(flatten)]
        spec: SpecArgs,
        /// LO:HI:STEP
        #[arg(long, allow_hyphen_values = true)]
        eps1: String,
        /// LO:HI:STEP
        #[arg(long, allow_hyphen_values = true)]
        eps2: String,
        /// Diagonal-slice points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Run the sweep on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the invariant suite.
    Selftest {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Shift one gamma-matrix entry first; the suite must then fail.
        #[arg(long)]
        corrupt_gamma: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => 2,
            Error::Unsupported(_) | Error::Indefinite { .. } => 3,
            Error::OutsideCone(_) | Error::NonPositiveDiagonal { .. } | Error::Singular(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_spec(args: &SpecArgs) -> CliResult<(ConeSpec, Cone, u64)> {
    let spec = ConeSpec::from_json(&read(&args.spec)?)?;
    let cone = spec.build()?;
    let seed = args.seed.unwrap_or(spec.seed());
    Ok((spec, cone, seed))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn evaluate(cone: &Cone, x: &HermMatrix, op: &str) -> CliResult<Value> {
    let result = match op {
        "p" => json!({ "p": cone.p_polynomials(x)? }),
        "d" => json!({ "d": cone.d_cubic(x)? }),
        "pi2" => json!({ "pi2": cone.g_determinant_sq(x)? }),
        "dprime" => {
            let direct = cone.d_prime(x)?;
            let via = cone.d_prime_via_dual(x)?;
            json!({
                "dprime": direct,
                "dprime_dual_route": via,
                "residual": (direct - via).abs() / direct.abs().max(f64::MIN_POSITIVE),
            })
        }
        "chi" => json!({
            "chi": cone.characteristic_function(x)?,
            "log_chi": cone.log_characteristic_function(x)?,
        }),
        "membership" => json!({ "membership": cone.membership(x)? }),
        "dual_membership" => json!({ "dual_membership": cone.dual_membership(x)? }),
        "decompose" => {
            let g = cone.group_coordinates(x)?;
            json!({
                "element": g.element,
                "residuals": g.residuals,
                "max_residual": g.max_residual(),
            })
        }
        other => return Err(usage(format!("unknown op {other:?}"))),
    };
    Ok(json!({ "op": op, "result": result }))
}

fn cmd_eval(
    spec: Option<PathBuf>,
    x: Option<PathBuf>,
    op: Option<String>,
    request: Option<PathBuf>,
) -> CliResult<Value> {
    let (spec, x, op): (ConeSpec, Value, String) = match request {
        Some(path) => {
            let req: Value = serde_json::from_str(&read(&path)?)
                .map_err(|e| usage(format!("request: {e}")))?;
            let obj = req.as_object().ok_or_else(|| usage("request must be an object"))?;
            if let Some(k) = obj.keys().find(|k| !["cone", "X", "op"].contains(&k.as_str())) {
                return Err(usage(format!("unknown request field {k:?}")));
            }
            let field = |k: &str| obj.get(k).cloned().ok_or_else(|| usage(format!("request needs {k:?}")));
            let spec = serde_json::from_value(field("cone")?)
                .map_err(|e| usage(format!("cone spec: {e}")))?;
            let op = field("op")?
                .as_str()
                .ok_or_else(|| usage("op must be a string"))?
                .to_string();
            (spec, field("X")?, op)
        }
        None => {
            let (Some(spec), Some(x), Some(op)) = (spec, x, op) else {
                return Err(usage("eval needs --spec, --x and --op, or --request"));
            };
            let spec = ConeSpec::from_json(&read(&spec)?)?;
            let x = serde_json::from_str(&read(&x)?).map_err(|e| usage(format!("X: {e}")))?;
            (spec, x, op)
        }
    };
    let cone = spec.build()?;
    let x: HermMatrix = serde_json::from_value(x).map_err(|e| usage(format!("X: {e}")))?;
    cone.algebra().check_herm(&x)?;
    evaluate(&cone, &x, &op)
}

fn cmd_scan(
    spec: &SpecArgs,
    eps1: &str,
    eps2: &str,
    grid: usize,
    out: &Path,
    sequential: bool,
) -> CliResult<()> {
    let (_, cone, seed) = load_spec(spec)?;
    let e1: ParamRange = eps1.parse()?;
    let e2: ParamRange = eps2.parse()?;
    if grid < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    let search = LocalSearch {
        seed,
        ..LocalSearch::default()
    };
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let rows = scan_parameter_plane(&cone, &e1, &e2, &DiagonalGrid::with_points(grid), &search, exec)?;
    let mut buf = Vec::new();
    write_scan_csv(&rows, &mut buf).expect("writing to memory");
    fs::write(out, buf).map_err(|e| usage(format!("{}: {e}", out.display())))?;
    let count = |c: &str| rows.iter().filter(|r| r.classification.to_string() == c).count();
    eprintln!(
        "{} cells: {} admissible-on-sample, {} locally-admissible, {} not-admissible",
        rows.len(),
        count("admissible-on-sample"),
        count("locally-admissible"),
        count("not-admissible")
    );
    Ok(())
}

fn cmd_selftest(spec: &SpecArgs, samples: usize, corrupt_gamma: bool, out: Option<&Path>) -> CliResult<bool> {
    let (_, cone, seed) = load_spec(spec)?;
    let opts = SelftestOptions {
        seed,
        samples,
        corrupt_gamma,
        ..SelftestOptions::default()
    };
    let report = run_selftest(&cone, &opts)?;
    for r in &report.results {
        let status = if r.skipped {
            "skip"
        } else if r.passed {
            "pass"
        } else {
            "FAIL"
        };
        println!("{status:<4}  {:<11.3e}  (tol {:.0e})  {}", r.max_residual, r.tolerance, r.name);
    }
    let n_fail = report.failures().count();
    println!(
        "{} invariants, {} failed, {:.2} s",
        report.results.len(),
        n_fail,
        report.seconds
    );
    if let Some(p) = out {
        emit(&json::to_string(&to_value(&report)), Some(p))?;
    }
    Ok(report.passed())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Build { spec, out } => {
            let (parsed, cone, seed) = load_spec(&spec)?;
            let mut v = to_value(&cone.summary());
            v["spec"] = to_value(&parsed);
            v["seed"] = json!(seed);
            if let Some(m) = cone.algebra().module() {
                v["clifford"] = to_value(&m.descriptor());
            }
            emit(&json::to_string(&v), out.as_deref())?;
        }
        Command::Eval {
            spec,
            x,
            op,
            request,
            out,
        } => {
            let v = cmd_eval(spec, x, op, request)?;
            emit(&json::to_string(&v), out.as_deref())?;
        }
        Command::Sample { spec, index, out } => {
            let (_, cone, seed) = load_spec(&spec)?;
            let a = group_element(cone.algebra(), seed, index);
            let v = json!({
                "A": a,
                "X": cone.herm_from_triangular(&a)?,
                "X_dual": cone.herm_from_triangular_dual(&a)?,
            });
            emit(&json::to_string(&v), out.as_deref())?;
        }
        Command::Scan {
            spec,
            eps1,
            eps2,
            grid,
            out,
            sequential,
        } => cmd_scan(&spec, &eps1, &eps2, grid, &out, sequential)?,
        Command::Selftest {
            spec,
            samples,
            corrupt_gamma,
            out,
        } => {
            if !cmd_selftest(&spec, samples, corrupt_gamma, out.as_deref())? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
