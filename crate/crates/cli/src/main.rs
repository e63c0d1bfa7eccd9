use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use signum_core::apps::{are_solve, sqrt_via_sign, AreProblem};
use signum_core::bench::{self, BenchRun};
use signum_core::io::{
    read_matrix_market, write_matrix_market, write_matrix_market_with, write_trace_csv_file, RunSummary, Symmetry,
};
use signum_core::matgen::{self, AlphaPolicy, GenSpec};
use signum_core::{Error, IterationConfig, Method, NormKind, SparseMatrix};

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;

#[derive(Parser)]
#[command(name = "signum", version, about = "Sparse matrix sign function and its applications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute sign(A) for a Matrix Market file.
    Sign {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write sign(A) here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compute B^(1/2) and B^(-1/2).
    Sqrt {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out_sqrt: Option<PathBuf>,
        #[arg(long)]
        out_inv_sqrt: Option<PathBuf>,
    },
    /// Solve U·C + Cᵀ·U + Q − U·B·D⁻¹·Bᵀ·U = 0.
    Are {
        #[arg(long, required_unless_present = "gen_are", requires_all = ["c", "d", "q"])]
        b: Option<PathBuf>,
        #[arg(long)]
        c: Option<PathBuf>,
        #[arg(long)]
        d: Option<PathBuf>,
        #[arg(long)]
        q: Option<PathBuf>,
        /// Generate the banded test problem of size N with the given seed.
        #[arg(long, num_args = 2, value_names = ["N", "SEED"], conflicts_with = "b")]
        gen_are: Option<Vec<u64>>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write U here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a test matrix.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
        /// Output file; Matrix Market on stdout when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and print CSV.
    Bench {
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        nmax: usize,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Nmf)]
    method: MethodArg,
    #[arg(long, default_value_t = IterationConfig::DEFAULT_EPS_TOL)]
    tol: f64,
    #[arg(long, default_value_t = IterationConfig::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Fro)]
    norm: NormArg,
    /// Start from A/‖A‖_∞.
    #[arg(long)]
    prescale: bool,
    /// Print a JSON summary on stdout.
    #[arg(long)]
    json: bool,
}

impl SolverArgs {
    fn config(&self) -> IterationConfig {
        IterationConfig::new(self.method.into())
            .with_eps_tol(self.tol)
            .with_max_iter(self.max_iter)
            .with_norm(self.norm.into())
            .with_prescale(self.prescale)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Nm,
    Ns,
    Nmf,
    Nsf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nm => Method::Nm,
            MethodArg::Ns => Method::Ns,
            MethodArg::Nmf => Method::Nmf,
            MethodArg::Nsf => Method::Nsf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Fro,
    One,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Fro => NormKind::Frobenius,
            NormArg::One => NormKind::One,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Table421,
    Table431,
}

#[derive(Subcommand)]
enum GenFamily {
    /// Random sparse matrix with a stabilizing diagonal shift.
    RandSparse {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the diagonal shift.
        #[arg(long)]
        raw: bool,
    },
    /// Random sparse symmetric positive definite matrix.
    RandSpd {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Toeplitz band matrix.
    Banded {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        stencil: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        offsets: Vec<isize>,
    },
    /// [[0, B], [I, 0]] with B the dispersion matrix.
    Dispersion {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 16.0)]
        lambda: f64,
    },
    /// I − αH for a seeded core–periphery graph.
    Network {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A number, or `auto` for 0.9/ρ(H).
        #[arg(long, default_value = "auto")]
        alpha: String,
    },
    /// B, C, D, Q of the banded Riccati problem, written as <out>/{b,c,d,q}.mtx.
    AreProblem {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Any family described by a JSON job file.
    Job { path: PathBuf },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_USAGE };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(f) = check_threads() {
        eprintln!("signum: {}", f.message);
        return ExitCode::from(f.code);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("signum: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `SIGNUM_THREADS` is reserved; only the single-threaded path exists.
fn check_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SIGNUM_THREADS") else {
        return Ok(());
    };
    match v.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(usage(format!("SIGNUM_THREADS must be a positive integer, got `{v}`"))),
        Ok(1) => Ok(()),
        Ok(t) => {
            eprintln!("signum: SIGNUM_THREADS={t} ignored, running single-threaded");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Sign {
            input,
            solver,
            out,
            trace,
        } => cmd_sign(&input, &solver, out.as_deref(), trace.as_deref()),
        Command::Sqrt {
            input,
            solver,
            out_sqrt,
            out_inv_sqrt,
        } => cmd_sqrt(&input, &solver, out_sqrt.as_deref(), out_inv_sqrt.as_deref()),
        Command::Are {
            b,
            c,
            d,
            q,
            gen_are,
            solver,
            out,
        } => {
            let problem = match gen_are {
                Some(v) => matgen::gen_are_pair(v[0] as usize, v[1])?,
                None => {
                    let load = |p: Option<PathBuf>| read_matrix_market(p.expect("required by clap"));
                    AreProblem::new(load(b)?, load(c)?, load(d)?, load(q)?)?
                }
            };
            cmd_are(&problem, &solver, out.as_deref())
        }
        Command::Gen { family, out } => cmd_gen(family, out.as_deref()),
        Command::Bench { suite, nmax, out } => cmd_bench(suite, nmax, out.as_deref()),
    }
}

fn cmd_sign(input: &Path, solver: &SolverArgs, out: Option<&Path>, trace: Option<&Path>) -> Result<u8, Failure> {
    let a = read_matrix_market(input)?;
    let cfg = solver.config();
    let started = Instant::now();
    match signum_core::sign::run(&a, &cfg) {
        Ok(r) => {
            if let Some(path) = out {
                write_matrix_market(&r.sign, path)?;
            }
            if let Some(path) = trace {
                write_trace_csv_file(&r.trace, path)?;
            }
            if solver.json {
                println!("{}", RunSummary::from_result(cfg.method, a.nrows(), &r).to_json());
            } else {
                println!(
                    "{}: converged in {} iterations, residual {:e}",
                    cfg.method,
                    r.iterations,
                    r.trace.final_residual()
                );
            }
            Ok(0)
        }
        Err(e) => {
            if solver.json {
                let s = RunSummary::from_error(cfg.method, a.nrows(), &e, started.elapsed().as_secs_f64());
                println!("{}", s.to_json());
            }
            Err(e.into())
        }
    }
}

fn cmd_sqrt(input: &Path, solver: &SolverArgs, out_sqrt: Option<&Path>, out_inv: Option<&Path>) -> Result<u8, Failure> {
    let b = read_matrix_market(input)?;
    let r = sqrt_via_sign(&b, &solver.config())?;
    if let Some(path) = out_sqrt {
        write_matrix_market(&r.sqrt, path)?;
    }
    if let Some(path) = out_inv {
        write_matrix_market(&r.inv_sqrt, path)?;
    }
    let root_sq = r.sqrt.matmul(&r.sqrt)?.add(&b, 1.0, -1.0)?.norm(NormKind::Frobenius);
    let rel = root_sq / b.norm(NormKind::Frobenius).max(f64::MIN_POSITIVE);
    if solver.json {
        let v = json!({
            "method": solver.config().method,
            "n": b.nrows(),
            "iterations": r.trace.steps.len(),
            "final_residual": r.trace.final_residual(),
            "wall_seconds": r.trace.wall_seconds(),
            "relative_square_error": rel,
        });
        println!("{v}");
    } else {
        println!(
            "square root after {} iterations, ‖(B^(1/2))² − B‖_F/‖B‖_F = {rel:e}",
            r.trace.steps.len()
        );
    }
    Ok(0)
}

fn cmd_are(p: &AreProblem, solver: &SolverArgs, out: Option<&Path>) -> Result<u8, Failure> {
    let cfg = solver.config();
    let s = are_solve(p, &cfg)?;
    if let Some(path) = out {
        write_matrix_market(&s.u, path)?;
    }
    if solver.json {
        let v = json!({
            "method": cfg.method,
            "n": p.dim(),
            "converged": s.sign_converged,
            "iterations": s.sign_trace.steps.len(),
            "final_residual": s.sign_trace.final_residual(),
            "wall_seconds": s.sign_trace.wall_seconds(),
            "equation_error": s.equation_error,
        });
        println!("{v}");
    } else {
        println!(
            "{}: {} iterations, sign residual {:e}{}, equation error {:e}",
            cfg.method,
            s.sign_trace.steps.len(),
            s.sign_trace.final_residual(),
            if s.sign_converged { "" } else { " (rounding floor)" },
            s.equation_error
        );
    }
    Ok(0)
}

fn emit(a: &SparseMatrix, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_matrix_market(a, path)?,
        None => {
            let mut buf = Vec::new();
            signum_core::io::write_matrix_market_to(a, &mut buf, Symmetry::General)?;
            to_stdout(&buf)?;
        }
    }
    Ok(())
}

/// A closed pipe (`signum gen ... | head`) is not an error.
fn to_stdout(bytes: &[u8]) -> io::Result<()> {
    let mut w = io::stdout().lock();
    match w.write_all(bytes).and_then(|_| w.flush()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn cmd_gen(family: GenFamily, out: Option<&Path>) -> Result<u8, Failure> {
    let spec = match family {
        GenFamily::RandSparse { n, density, seed, raw } => GenSpec::RandSparse {
            n,
            density,
            seed,
            shift: !raw,
        },
        GenFamily::RandSpd { n, density, seed } => GenSpec::RandSpd { n, density, seed },
        GenFamily::Banded { n, stencil, offsets } => GenSpec::Banded { n, stencil, offsets },
        GenFamily::Dispersion { n, lambda } => GenSpec::DispersionEmbedding { n, lambda },
        GenFamily::Network { n, seed, alpha } => {
            let alpha = if alpha == "auto" {
                AlphaPolicy::Auto
            } else {
                AlphaPolicy::Explicit(
                    alpha
                        .parse()
                        .map_err(|_| usage(format!("--alpha must be a number or `auto`, got `{alpha}`")))?,
                )
            };
            GenSpec::Network { n, seed, alpha }
        }
        GenFamily::AreProblem { n, seed } => {
            let dir = out.ok_or_else(|| usage("are-problem needs --out <directory>"))?;
            fs::create_dir_all(dir)?;
            let p = matgen::gen_are_pair(n, seed)?;
            write_matrix_market(&p.b, dir.join("b.mtx"))?;
            write_matrix_market_with(&p.c, dir.join("c.mtx"), Symmetry::Symmetric)?;
            write_matrix_market_with(&p.d, dir.join("d.mtx"), Symmetry::Symmetric)?;
            write_matrix_market_with(&p.q, dir.join("q.mtx"), Symmetry::Symmetric)?;
            return Ok(0);
        }
        GenFamily::Job { path } => {
            let text = fs::read_to_string(&path)?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
    };
    emit(&spec.generate()?, out)?;
    Ok(0)
}

fn cmd_bench(suite: Suite, nmax: usize, out: Option<&Path>) -> Result<u8, Failure> {
    let runs: Vec<BenchRun> = match suite {
        Suite::Table421 => bench::bench_table421(nmax)?,
        Suite::Table431 => bench::bench_table431(nmax)?,
    };
    match out {
        Some(path) => {
            let mut w = io::BufWriter::new(fs::File::create(path)?);
            bench::write_bench_csv(&runs, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut buf = Vec::new();
            bench::write_bench_csv(&runs, &mut buf)?;
            to_stdout(&buf)?;
        }
    }
    Ok(0)
}
