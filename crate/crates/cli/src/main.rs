use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use abflow::accel::{modified_ab_run, AccelConfig};
use abflow::lab::{
    run_experiment, write_trace_json, ConvergenceTrace, ExperimentKind, ProblemSpec, Similarity,
    SolverParams, SpectrumEntry,
};
use abflow::msqrt::{sqrtm_ab, SqrtError, SqrtProblem};
use abflow::pencil::{ab_run, PencilError};
use abflow::{ComplexMatrix, Pencil, Status};
use abflow_cli::{parse_matrix_file, parse_spectrum, write_atomic, MatrixDoc, MatrixFormat};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Overrides the default directory for result files.
const OUT_DIR_ENV: &str = "ABFLOW_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "abflow",
    version,
    about = "AB-algorithm solvers for stable subspaces and matrix square roots"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Principal square root of a matrix.
    Sqrt(SqrtArgs),
    /// Stable deflating subspace of a pencil A - λB.
    Pencil(PencilArgs),
    /// Convergence traces on generated problems, one file per order.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SqrtArgs {
    #[arg(long)]
    input: PathBuf,
    /// json or txt; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<MatrixFormat>,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    kmax: usize,
    /// Result matrix (json). Defaults to sqrt.json in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PencilArgs {
    #[arg(long)]
    a: PathBuf,
    /// Defaults to the identity.
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    format: Option<MatrixFormat>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    kmax: usize,
    /// Dimension of the stable subspace, when known.
    #[arg(long)]
    dim: Option<usize>,
    /// Run the accelerated iteration of this order.
    #[arg(long)]
    order: Option<usize>,
    /// Defaults to pencil.json in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sqrt,
    Pencil,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Comma-separated eigenvalues, e.g. "2,3" or "0.5+0.2i,1.5".
    #[arg(long)]
    spectrum: String,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition number of the random similarity; 1 keeps it unitary.
    #[arg(long, default_value_t = 10.0)]
    cond: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    kmax: usize,
    /// Also record the unaccelerated chain.
    #[arg(long)]
    plain: bool,
    /// Mix B from the left (pencil problems).
    #[arg(long)]
    mix: bool,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    trace_format: TraceFormat,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn default_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn exit_for(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::Breakdown => 2,
        Status::MaxIterations => 3,
    }
}

fn load(path: &Path, format: Option<MatrixFormat>) -> anyhow::Result<ComplexMatrix> {
    let fmt = format.unwrap_or_else(|| MatrixFormat::from_path(path));
    parse_matrix_file(path, fmt).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct SqrtOut<'a> {
    #[serde(flatten)]
    x: MatrixDoc,
    residual: f64,
    iterations: usize,
    status: &'a Status,
}

fn run_sqrt(args: &SqrtArgs) -> anyhow::Result<u8> {
    let s = load(&args.input, args.format)?;
    let prob = SqrtProblem::new(s)
        .gamma(args.gamma)
        .order(args.order)
        .tol(args.tol)
        .kmax(args.kmax);
    let mut res = match sqrtm_ab(&prob) {
        Ok(r) => r,
        Err(
            e @ (SqrtError::Breakdown { .. }
            | SqrtError::SingularSum
            | SqrtError::SingularDenominator),
        ) => {
            eprintln!("abflow: {e}");
            return Ok(exit_for(Status::Breakdown));
        }
        Err(e) => bail!(e),
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_dir().join("sqrt.json"));
    let doc = SqrtOut {
        x: MatrixDoc::from(&res.x),
        residual: res.residual,
        iterations: res.iterations,
        status: &res.status,
    };
    write_atomic(&out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    if let Some(path) = &args.trace {
        res.trace.fill_orders(1e2 * f64::EPSILON);
        let mut buf = Vec::new();
        res.trace.write_csv(&mut buf)?;
        write_atomic(path, &buf)?;
    }
    Ok(exit_for(res.status))
}

#[derive(Serialize)]
struct PencilOut {
    u: MatrixDoc,
    lambda: MatrixDoc,
    residual: f64,
    iterations: usize,
    flow_index: usize,
    status: Status,
}

fn run_pencil(args: &PencilArgs) -> anyhow::Result<u8> {
    let a = load(&args.a, args.format)?;
    let b = match &args.b {
        Some(p) => load(p, args.format)?,
        None => ComplexMatrix::identity(a.rows()),
    };
    let pencil = Pencil::new(a, b)?;
    let outcome = match args.order {
        Some(r) => {
            let cfg = AccelConfig::new(r, args.tol, args.kmax)?.with_expected_dim(args.dim);
            modified_ab_run(&pencil, &cfg)
        }
        None => ab_run(&pencil, args.tol, args.kmax, args.dim),
    };
    let res = match outcome {
        Ok(r) => r,
        Err(e @ (PencilError::Breakdown { .. } | PencilError::AccelBreakdown { .. })) => {
            eprintln!("abflow: {e}");
            return Ok(exit_for(Status::Breakdown));
        }
        Err(e) => bail!(e),
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_dir().join("pencil.json"));
    let doc = PencilOut {
        u: MatrixDoc::from(res.u.matrix()),
        lambda: MatrixDoc::from(&res.lambda),
        residual: res.residual,
        iterations: res.iterations,
        flow_index: res.flow_index,
        status: res.status,
    };
    write_atomic(&out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    Ok(exit_for(res.status))
}

fn write_trace(
    path: &Path,
    fmt: TraceFormat,
    kind: ExperimentKind,
    spec: &ProblemSpec,
    params: &SolverParams,
    trace: &ConvergenceTrace,
) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    match fmt {
        TraceFormat::Csv => trace.write_csv(&mut buf)?,
        TraceFormat::Json => write_trace_json(&mut buf, kind, spec, params, trace)?,
    }
    write_atomic(path, &buf)?;
    Ok(())
}

fn run_bench(args: &BenchArgs) -> anyhow::Result<u8> {
    let kind = match args.kind {
        Kind::Sqrt => ExperimentKind::Sqrt,
        Kind::Pencil => ExperimentKind::Pencil,
    };
    let spectrum = parse_spectrum(&args.spectrum)?
        .into_iter()
        .map(SpectrumEntry::simple)
        .collect();
    let similarity = if args.cond == 1.0 {
        Similarity::Identity
    } else {
        Similarity::Random {
            condition: args.cond,
        }
    };
    let spec = ProblemSpec::new(spectrum, args.seed)
        .with_similarity(similarity)
        .with_mixing(args.mix);
    let dir = args.out_dir.clone().unwrap_or_else(default_dir);
    let ext = match args.trace_format {
        TraceFormat::Csv => "csv",
        TraceFormat::Json => "json",
    };
    let prefix = match kind {
        ExperimentKind::Sqrt => "sqrt",
        ExperimentKind::Pencil => "pencil",
    };

    let mut jobs: Vec<(String, SolverParams)> = args
        .orders
        .iter()
        .map(|&order| {
            let p = SolverParams {
                order,
                gamma: args.gamma,
                tol: args.tol,
                kmax: args.kmax,
                plain: false,
            };
            (format!("{prefix}_r{order}.{ext}"), p)
        })
        .collect();
    if args.plain {
        let p = SolverParams {
            gamma: args.gamma,
            tol: args.tol,
            kmax: args.kmax,
            plain: true,
            ..SolverParams::default()
        };
        jobs.push((format!("{prefix}_plain.{ext}"), p));
    }

    let results: Vec<anyhow::Result<Option<Status>>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, params)| {
                let path = dir.join(name);
                let spec = &spec;
                let fmt = args.trace_format;
                scope.spawn(move || -> anyhow::Result<Option<Status>> {
                    let trace = run_experiment(kind, spec, params)?;
                    write_trace(&path, fmt, kind, spec, params, &trace)?;
                    Ok(trace.status)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(anyhow::anyhow!("worker panicked")))
            })
            .collect()
    });

    let mut code = 0;
    for r in results {
        // worst outcome wins: breakdown, then max iterations
        let c = r?.map_or(0, exit_for);
        if c == 2 || (c == 3 && code == 0) {
            code = c;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Sqrt(a) => run_sqrt(a),
        Cmd::Pencil(a) => run_pencil(a),
        Cmd::Bench(a) => run_bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("abflow: {e:#}");
            ExitCode::from(1)
        }
    }
}
