//! Matrix sign function solvers.
//!
//! * `Nm`: Newton, `X ← ½(X + X⁻¹)`
//! * `Ns`: Newton–Schulz, `X ← ½X(3I − X²)`
//! * `Nmf`, `Nsf`: the same loops with a filter event after every step.
//!
//! Every loop stops on the exact residual `‖I − X̂²‖ <= eps_tol`.

mod oracle;

pub use oracle::dense_sign_oracle;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::{budget_for_step, filter_to_budget, FilterReport, FilterSchedule, StepNorms};
use crate::sparse::{lu_invert, NormKind, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nm,
    Ns,
    Nmf,
    Nsf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Nm, Method::Nmf, Method::Ns, Method::Nsf];

    pub fn is_filtered(self) -> bool {
        matches!(self, Method::Nmf | Method::Nsf)
    }

    pub fn is_newton_schulz(self) -> bool {
        matches!(self, Method::Ns | Method::Nsf)
    }

    /// The unfiltered method running the same recurrence.
    pub fn unfiltered(self) -> Method {
        match self {
            Method::Nmf => Method::Nm,
            Method::Nsf => Method::Ns,
            m => m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Nm => "nm",
            Method::Ns => "ns",
            Method::Nmf => "nmf",
            Method::Nsf => "nsf",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nm" => Ok(Method::Nm),
            "ns" => Ok(Method::Ns),
            "nmf" => Ok(Method::Nmf),
            "nsf" => Ok(Method::Nsf),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub method: Method,
    pub eps_tol: f64,
    pub max_iter: usize,
    /// Used by `Nmf`/`Nsf`; its `eps_tol` and `norm_kind` follow the
    /// enclosing config.
    pub schedule: FilterSchedule,
    pub norm_kind: NormKind,
    /// Start from `A / ‖A‖_∞` instead of `A`. `sign(cA) = sign(A)` for
    /// `c > 0`; this pulls the spectrum into the unit disk, which is what
    /// Newton–Schulz needs when `A` has large eigenvalues.
    pub prescale: bool,
    /// When the residual stalls at the floating-point floor above
    /// `eps_tol`, return the current iterate with `converged = false`
    /// instead of [`Error::Stagnated`].
    #[serde(default)]
    pub accept_floor: bool,
}

impl IterationConfig {
    pub const DEFAULT_EPS_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_ITER: usize = 100;

    pub fn new(method: Method) -> Self {
        Self {
            method,
            eps_tol: Self::DEFAULT_EPS_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            schedule: FilterSchedule::new(Self::DEFAULT_EPS_TOL),
            norm_kind: NormKind::Frobenius,
            prescale: false,
            accept_floor: false,
        }
    }

    pub fn with_eps_tol(mut self, eps_tol: f64) -> Self {
        self.eps_tol = eps_tol;
        self.schedule.eps_tol = eps_tol;
        self
    }

    pub fn with_norm(mut self, norm_kind: NormKind) -> Self {
        self.norm_kind = norm_kind;
        self.schedule.norm_kind = norm_kind;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_prescale(mut self, prescale: bool) -> Self {
        self.prescale = prescale;
        self
    }

    pub fn with_accept_floor(mut self, accept_floor: bool) -> Self {
        self.accept_floor = accept_floor;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_tol.is_nan() || self.eps_tol <= 0.0 {
            return Err(Error::NonPositive {
                name: "eps_tol",
                value: self.eps_tol,
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.method.is_filtered() {
            self.schedule.validate()?;
        }
        Ok(())
    }
}

/// One completed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// 1-based step number.
    pub k: usize,
    /// `‖I − X̂_k²‖` after this step.
    pub residual: f64,
    pub nnz: usize,
    pub filter: Option<FilterReport>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Residual of the starting matrix.
    pub initial_residual: f64,
    pub initial_nnz: usize,
    pub steps: Vec<TraceStep>,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        self.steps.last().map_or(self.initial_residual, |s| s.residual)
    }

    /// All residuals, starting with the initial one.
    pub fn residuals(&self) -> Vec<f64> {
        std::iter::once(self.initial_residual)
            .chain(self.steps.iter().map(|s| s.residual))
            .collect()
    }

    pub fn filter_reports(&self) -> impl Iterator<Item = &FilterReport> {
        self.steps.iter().filter_map(|s| s.filter.as_ref())
    }

    pub fn wall_seconds(&self) -> f64 {
        self.steps.iter().fold(0.0, |acc, s| acc + s.seconds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolverWarning {
    /// Newton–Schulz is only locally convergent; `‖I − A²‖ >= 1` voids the
    /// guarantee.
    NsPrecondition { initial_residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignResult {
    pub sign: SparseMatrix,
    pub trace: IterationTrace,
    /// `‖I − X̂²‖ <= eps_tol`; false only for a floor-limited result under
    /// `accept_floor`.
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<SolverWarning>,
}

/// What an observer sees after every iterate is formed (step 0 is the
/// starting matrix).
pub struct StepView<'a> {
    pub k: usize,
    /// `X̂_k`, the iterate after filtering.
    pub iterate: &'a SparseMatrix,
    /// `X̄_k`, the iterate before filtering (same as `iterate` for unfiltered
    /// methods and for step 0).
    pub pre_filter: &'a SparseMatrix,
    /// `X̂_k²`.
    pub square: &'a SparseMatrix,
    pub residual: f64,
}

/// `½(X + X⁻¹)`.
pub fn newton_step(x: &SparseMatrix) -> Result<SparseMatrix> {
    let inv = lu_invert(x)?;
    x.add(&inv, 0.5, 0.5)
}

/// `½X(3I − X²)`.
pub fn newton_schulz_step(x: &SparseMatrix) -> Result<SparseMatrix> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            op: "newton_schulz_step",
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let x2 = x.matmul(x)?;
    newton_schulz_from_square(x, &x2)
}

fn newton_schulz_from_square(x: &SparseMatrix, x2: &SparseMatrix) -> Result<SparseMatrix> {
    let x3 = x.matmul(x2)?;
    x.add(&x3, 1.5, -0.5)
}

/// `‖I − X²‖`.
pub fn residual(x: &SparseMatrix, norm_kind: NormKind) -> Result<f64> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            op: "residual",
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(identity_minus_norm(&x.matmul(x)?, norm_kind))
}

/// `‖I − S‖` without materializing the difference.
pub fn identity_minus_norm(s: &SparseMatrix, kind: NormKind) -> f64 {
    let n = s.nrows();
    match kind {
        NormKind::Frobenius => {
            let mut sum = 0.0;
            for i in 0..n {
                let (cols, vals) = s.row(i);
                let mut saw_diag = false;
                for (&j, &v) in cols.iter().zip(vals) {
                    let d = if j == i {
                        saw_diag = true;
                        1.0 - v
                    } else {
                        v
                    };
                    sum += d * d;
                }
                if !saw_diag {
                    sum += 1.0;
                }
            }
            sum.sqrt()
        }
        NormKind::Inf | NormKind::One => {
            let r = SparseMatrix::identity(n)
                .add(s, 1.0, -1.0)
                .expect("square by construction");
            r.norm(kind)
        }
    }
}

/// Runs the configured method from `a`.
pub fn run(a: &SparseMatrix, cfg: &IterationConfig) -> Result<SignResult> {
    run_observed(a, cfg, |_| {})
}

/// As [`run`], calling `observer` with every iterate (including the start).
pub fn run_observed<F>(a: &SparseMatrix, cfg: &IterationConfig, mut observer: F) -> Result<SignResult>
where
    F: FnMut(&StepView<'_>),
{
    if !a.is_square() {
        return Err(Error::NotSquare {
            op: "sign",
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let mut cfg = *cfg;
    cfg.schedule.eps_tol = cfg.eps_tol;
    cfg.schedule.norm_kind = cfg.norm_kind;
    cfg.validate()?;
    let norm = cfg.norm_kind;
    let method = cfg.method;

    let mut x = if cfg.prescale {
        let s = a.norm(NormKind::Inf);
        if s > 0.0 {
            a.scale(1.0 / s)
        } else {
            a.clone()
        }
    } else {
        a.clone()
    };
    let mut x2 = x.matmul(&x)?;
    let mut e = identity_minus_norm(&x2, norm);
    observer(&StepView {
        k: 0,
        iterate: &x,
        pre_filter: &x,
        square: &x2,
        residual: e,
    });

    let mut warnings = Vec::new();
    if method.is_newton_schulz() && e >= 1.0 {
        warnings.push(SolverWarning::NsPrecondition { initial_residual: e });
    }

    let mut trace = IterationTrace {
        initial_residual: e,
        initial_nnz: x.nnz(),
        steps: Vec::new(),
    };
    let mut history = vec![e];
    // ‖X̄_k‖ of the current iterate before it was filtered.
    let mut prev_pre_filter_norm = x.norm(norm);

    let mut k = 0;
    while e > cfg.eps_tol {
        if k == cfg.max_iter {
            return Err(Error::MaxIterExceeded {
                iterations: k,
                residual: e,
            });
        }
        let started = Instant::now();
        let (x_bar, step_norms) = match method {
            Method::Nm | Method::Nmf => {
                let inv = lu_invert(&x).map_err(|err| match err {
                    Error::SingularMatrix { .. } => Error::SingularIterate { iteration: k + 1 },
                    other => other,
                })?;
                let norms = StepNorms::Newton {
                    residual: e,
                    x_norm: x.norm(norm),
                    xinv_norm: inv.norm(norm),
                };
                (x.add(&inv, 0.5, 0.5)?, norms)
            }
            Method::Ns | Method::Nsf => {
                let norms = StepNorms::NewtonSchulz {
                    residual: e,
                    x_prev_norm: prev_pre_filter_norm,
                };
                (newton_schulz_from_square(&x, &x2)?, norms)
            }
        };

        let (x_hat, report) = if method.is_filtered() {
            let (budget, phase) = budget_for_step(&cfg.schedule, &step_norms)?;
            let (kept, report) = filter_to_budget(&x_bar, budget, norm, phase);
            (kept, Some(report))
        } else {
            (x_bar.clone(), None)
        };
        prev_pre_filter_norm = x_bar.norm(norm);

        x = x_hat;
        x2 = x.matmul(&x)?;
        e = identity_minus_norm(&x2, norm);
        k += 1;
        trace.steps.push(TraceStep {
            k,
            residual: e,
            nnz: x.nnz(),
            filter: report,
            seconds: started.elapsed().as_secs_f64(),
        });
        observer(&StepView {
            k,
            iterate: &x,
            pre_filter: &x_bar,
            square: &x2,
            residual: e,
        });
        drop(x_bar);

        history.push(e);
        if !e.is_finite() || diverging(&history) {
            return Err(Error::Diverged {
                iteration: k,
                residual: e,
            });
        }
        if stagnated(&history, cfg.eps_tol) {
            if cfg.accept_floor {
                break;
            }
            return Err(Error::Stagnated {
                iterations: k,
                residual: e,
                eps_tol: cfg.eps_tol,
            });
        }
    }

    Ok(SignResult {
        sign: x,
        trace,
        converged: e <= cfg.eps_tol,
        iterations: k,
        warnings,
    })
}

/// Three consecutive increases amounting to more than a factor of 10.
fn diverging(history: &[f64]) -> bool {
    let n = history.len();
    if n < 4 {
        return false;
    }
    let w = &history[n - 4..];
    w[0] < w[1] && w[1] < w[2] && w[2] < w[3] && w[3] > 10.0 * w[0]
}

/// Inside the quadratic regime (residual below `STAGNATION_REGIME`), three
/// steps without halving the best residual seen so far means rounding error
/// has taken over and `eps_tol` is out of reach.
fn stagnated(history: &[f64], eps_tol: f64) -> bool {
    const STAGNATION_REGIME: f64 = 1e-6;
    const WINDOW: usize = 3;
    let n = history.len();
    if n <= WINDOW {
        return false;
    }
    let last = history[n - 1];
    if last <= eps_tol || last > STAGNATION_REGIME {
        return false;
    }
    let best_before = history[..n - WINDOW].iter().copied().fold(f64::INFINITY, f64::min);
    history[n - WINDOW..].iter().all(|&r| r > 0.5 * best_before)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::DenseMatrix;

    fn m(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&DenseMatrix::from_rows(rows), 0.0)
    }

    #[test]
    fn newton_step_examples() {
        assert_eq!(newton_step(&m(&[&[2.0]])).unwrap(), m(&[&[1.25]]));
        let i = SparseMatrix::identity(3);
        assert_eq!(newton_step(&i).unwrap(), i);
        let x = newton_step(&SparseMatrix::from_diagonal(&[2.0, -3.0])).unwrap();
        assert_eq!(x.get(0, 0), 1.25);
        assert!((x.get(1, 1) + 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn newton_step_singular() {
        let z = SparseMatrix::zeros(2, 2);
        assert!(matches!(newton_step(&z), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn newton_schulz_step_examples() {
        assert_eq!(newton_schulz_step(&m(&[&[0.5]])).unwrap(), m(&[&[0.6875]]));
        let i = SparseMatrix::identity(3);
        assert_eq!(newton_schulz_step(&i).unwrap(), i);
        let s = SparseMatrix::from_diagonal(&[1.0, -1.0]);
        assert_eq!(newton_schulz_step(&s).unwrap(), s);
        assert!(newton_schulz_step(&SparseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn residual_examples() {
        assert_eq!(residual(&SparseMatrix::identity(4), NormKind::Frobenius).unwrap(), 0.0);
        assert_eq!(residual(&m(&[&[2.0]]), NormKind::Frobenius).unwrap(), 3.0);
        assert_eq!(residual(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), NormKind::Frobenius).unwrap(), 0.0);
        assert_eq!(residual(&SparseMatrix::zeros(3, 3), NormKind::Frobenius).unwrap(), 3f64.sqrt());
        assert_eq!(residual(&m(&[&[2.0]]), NormKind::One).unwrap(), 3.0);
    }

    #[test]
    fn run_diagonal_all_methods() {
        let a = SparseMatrix::from_diagonal(&[5.0, -2.0, 0.3, -0.4]);
        for method in [Method::Nm, Method::Nmf] {
            let r = run(&a, &IterationConfig::new(method)).unwrap();
            assert!(r.converged);
            assert_eq!(r.sign.diagonal(), vec![1.0, -1.0, 1.0, -1.0]);
            assert!(r.trace.final_residual() <= 1e-12);
        }
        // Newton–Schulz needs the spectrum inside its basin.
        let a = SparseMatrix::from_diagonal(&[1.2, -0.9, 0.3, -0.4]);
        for method in [Method::Ns, Method::Nsf] {
            let r = run(&a, &IterationConfig::new(method)).unwrap();
            assert_eq!(r.sign.diagonal(), vec![1.0, -1.0, 1.0, -1.0]);
        }
    }

    #[test]
    fn run_fixed_point_takes_no_steps() {
        let i = SparseMatrix::identity(3);
        for method in Method::ALL {
            let r = run(&i, &IterationConfig::new(method)).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
            assert!(r.trace.steps.is_empty());
            assert!(r.warnings.is_empty());
        }
    }

    #[test]
    fn run_singular_input() {
        let z = SparseMatrix::zeros(3, 3);
        let err = run(&z, &IterationConfig::new(Method::Nm)).unwrap_err();
        assert_eq!(err, Error::SingularIterate { iteration: 1 });
    }

    #[test]
    fn ns_divergence_detected() {
        let a = SparseMatrix::from_diagonal(&[2.5, 1.0]);
        let r = run(&a, &IterationConfig::new(Method::Ns));
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }

    #[test]
    fn ns_warning_is_attached_but_not_fatal() {
        let a = SparseMatrix::from_diagonal(&[1.6, 0.5]);
        let r = run(&a, &IterationConfig::new(Method::Ns)).unwrap();
        assert!(r.converged);
        assert!(matches!(r.warnings[0], SolverWarning::NsPrecondition { .. }));
    }

    #[test]
    fn prescale_brings_large_spectrum_into_ns_basin() {
        let a = SparseMatrix::from_diagonal(&[50.0, -3.0, 0.5]);
        let cfg = IterationConfig::new(Method::Ns).with_prescale(true);
        let r = run(&a, &cfg).unwrap();
        for (got, want) in r.sign.diagonal().into_iter().zip([1.0, -1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn max_iter_exceeded() {
        let a = SparseMatrix::from_diagonal(&[1e6, -3.0]);
        let cfg = IterationConfig::new(Method::Nm).with_max_iter(2);
        assert!(matches!(run(&a, &cfg), Err(Error::MaxIterExceeded { iterations: 2, .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let a = SparseMatrix::identity(2);
        let cfg = IterationConfig::new(Method::Nm).with_eps_tol(0.0);
        assert!(run(&a, &cfg).is_err());
        let cfg = IterationConfig::new(Method::Nm).with_max_iter(0);
        assert!(run(&a, &cfg).is_err());
        assert!(run(&SparseMatrix::zeros(2, 3), &IterationConfig::new(Method::Nm)).is_err());
    }

    #[test]
    fn stagnation_detector() {
        assert!(!stagnated(&[1.0, 0.1, 0.01], 1e-12));
        assert!(stagnated(&[1e-3, 1e-7, 3e-12, 2e-12, 4e-12, 3e-12], 1e-12));
        assert!(!stagnated(&[1e-3, 1e-7, 3e-12, 2e-12, 4e-12, 1e-12], 1e-12));
        assert!(!stagnated(&[1.0, 1.0, 1.0, 1.0, 1.0], 1e-12));
    }

    #[test]
    fn observer_sees_every_iterate() {
        let a = SparseMatrix::from_diagonal(&[3.0, -2.0]);
        let mut seen = Vec::new();
        let r = run_observed(&a, &IterationConfig::new(Method::Nm), |v| seen.push((v.k, v.residual))).unwrap();
        assert_eq!(seen.len(), r.iterations + 1);
        assert_eq!(seen.last().unwrap().1, r.trace.final_residual());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("NSF".parse::<Method>().unwrap(), Method::Nsf);
        assert!("newton".parse::<Method>().is_err());
        assert_eq!(Method::Nmf.unfiltered(), Method::Nm);
    }
}
