//! Benchmark harness: the dispersion-matrix sign suite and the Riccati
//! suite, each run with all four methods.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::apps::{are_solve, AreProblem};
use crate::error::{Error, Result};
use crate::matgen::{dispersion_stencil, gen_are_pair, gen_banded, sign_embedding};
use crate::sign::{self, IterationConfig, IterationTrace, Method};
use crate::sparse::{NormKind, SparseMatrix};

pub const TABLE421_SIZES: [usize; 3] = [500, 1000, 3000];
pub const TABLE421_EPS: f64 = 1e-12;
pub const TABLE421_LAMBDA: f64 = 1.0 / 16.0;
pub const TABLE431_SIZES: [usize; 3] = [500, 600, 700];
pub const TABLE431_EPS: f64 = 1e-14;
/// Seed of the random `D` block for a Riccati row of size `n` is
/// `TABLE431_SEED_BASE + n`.
pub const TABLE431_SEED_BASE: u64 = 4310;

/// Order in which each suite runs the methods.
pub const METHOD_ORDER: [Method; 4] = [Method::Nm, Method::Nmf, Method::Ns, Method::Nsf];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub et_seconds: f64,
    /// `‖X_f − X̂_f‖_F` against the unfiltered twin; filtered methods only.
    pub ae: Option<f64>,
    pub final_residual: f64,
    /// `‖P(U)‖_∞`; Riccati rows only.
    pub ee: Option<f64>,
}

/// A row together with the full sign iteration trace behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub row: BenchRow,
    pub trace: IterationTrace,
    /// `‖X_f‖_F` of the final iterate.
    pub sign_norm: f64,
    /// Seed of the random data, when the row has any.
    pub seed: Option<u64>,
}

pub fn table421_matrix(n: usize) -> Result<SparseMatrix> {
    let (stencil, offsets) = dispersion_stencil(TABLE421_LAMBDA);
    sign_embedding(&gen_banded(n, &stencil, &offsets)?)
}

/// Sign of the embedded dispersion matrix for every size up to `nmax`.
pub fn bench_table421(nmax: usize) -> Result<Vec<BenchRun>> {
    if nmax < TABLE421_SIZES[0] {
        return Err(Error::InvalidParameter(format!("nmax must be at least {}", TABLE421_SIZES[0])));
    }
    let mut runs = Vec::new();
    for n in TABLE421_SIZES.into_iter().filter(|&n| n <= nmax) {
        runs.extend(table421_row(n)?);
    }
    Ok(runs)
}

/// The four runs at one size, in [`METHOD_ORDER`].
pub fn table421_row(n: usize) -> Result<Vec<BenchRun>> {
    let a = table421_matrix(n)?;
    let mut out = Vec::new();
    let mut twin: Option<SparseMatrix> = None;
    for method in METHOD_ORDER {
        let cfg = IterationConfig::new(method).with_eps_tol(TABLE421_EPS);
        let started = Instant::now();
        let r = sign::run(&a, &cfg)?;
        let et_seconds = started.elapsed().as_secs_f64();
        let ae = match (&twin, method.is_filtered()) {
            (Some(x), true) => Some(r.sign.add(x, 1.0, -1.0)?.norm(NormKind::Frobenius)),
            _ => None,
        };
        out.push(BenchRun {
            row: BenchRow {
                method,
                n,
                et_seconds,
                ae,
                final_residual: r.trace.final_residual(),
                ee: None,
            },
            trace: r.trace,
            sign_norm: r.sign.norm(NormKind::Frobenius),
            seed: None,
        });
        twin = if method.is_filtered() { None } else { Some(r.sign) };
    }
    Ok(out)
}

pub fn table431_problem(n: usize) -> Result<(AreProblem, u64)> {
    let seed = TABLE431_SEED_BASE + n as u64;
    Ok((gen_are_pair(n, seed)?, seed))
}

/// Riccati solves for every size in `5..=nmax`.
pub fn bench_table431(nmax: usize) -> Result<Vec<BenchRun>> {
    let mut runs = Vec::new();
    for n in TABLE431_SIZES.into_iter().filter(|&n| (5..=nmax).contains(&n)) {
        runs.extend(table431_row(n)?);
    }
    Ok(runs)
}

pub fn table431_row(n: usize) -> Result<Vec<BenchRun>> {
    let (p, seed) = table431_problem(n)?;
    let mut out = Vec::new();
    for method in METHOD_ORDER {
        let cfg = IterationConfig::new(method).with_eps_tol(TABLE431_EPS);
        let started = Instant::now();
        let s = are_solve(&p, &cfg)?;
        let et_seconds = started.elapsed().as_secs_f64();
        out.push(BenchRun {
            row: BenchRow {
                method,
                n,
                et_seconds,
                ae: None,
                final_residual: s.sign_trace.final_residual(),
                ee: Some(s.equation_error),
            },
            trace: s.sign_trace,
            sign_norm: s.sign_norm,
            seed: Some(seed),
        });
    }
    Ok(out)
}

pub const BENCH_CSV_HEADER: &str = "method,n,et_seconds,ae,final_residual,ee";

/// CSV with one line per row; seeds are listed in leading `#` comments.
pub fn write_bench_csv<W: Write>(runs: &[BenchRun], w: &mut W) -> Result<()> {
    for r in runs {
        if let Some(seed) = r.seed {
            writeln!(w, "# {} n={} seed={}", r.row.method, r.row.n, seed)?;
        }
    }
    writeln!(w, "{BENCH_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in runs {
        let row = &r.row;
        writeln!(
            w,
            "{},{},{:.6},{},{:e},{}",
            row.method,
            row.n,
            row.et_seconds,
            opt(row.ae),
            row.final_residual,
            opt(row.ee)
        )?;
    }
    Ok(())
}
