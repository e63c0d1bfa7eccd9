//! Norm-budgeted dropping of small entries.
//!
//! A filter event removes every off-diagonal entry with `|v| <= ε`. The
//! threshold `ε` is picked so that the matrix `F` of removed entries has
//! `‖F‖ <= budget`; the guarantee is checked exactly on every event.
//!
//! Budgets follow a two-phase schedule: a fixed `c·eps_tol` while the
//! residual is large, then the error-propagation bounds once the residual
//! drops strictly below `switch_residual`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{NormKind, SparseMatrix};

/// Number of logarithmic magnitude buckets used to search for `ε`.
pub const HISTOGRAM_BUCKETS: usize = 64;
/// The histogram spans `[HISTOGRAM_SPAN·max|a|, max|a|]`.
pub const HISTOGRAM_SPAN: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSchedule {
    pub eps_tol: f64,
    pub fixed_coeff: f64,
    pub switch_residual: f64,
    pub norm_kind: NormKind,
}

impl FilterSchedule {
    pub const DEFAULT_FIXED_COEFF: f64 = 1e-4;
    pub const DEFAULT_SWITCH_RESIDUAL: f64 = 1e-6;

    pub fn new(eps_tol: f64) -> Self {
        Self {
            eps_tol,
            fixed_coeff: Self::DEFAULT_FIXED_COEFF,
            switch_residual: Self::DEFAULT_SWITCH_RESIDUAL,
            norm_kind: NormKind::Frobenius,
        }
    }

    pub fn with_norm(mut self, norm_kind: NormKind) -> Self {
        self.norm_kind = norm_kind;
        self
    }

    /// Checks `0 < fixed_coeff·eps_tol < switch_residual < 1`.
    pub fn validate(&self) -> Result<()> {
        let fixed = self.fixed_coeff * self.eps_tol;
        if !(fixed > 0.0 && fixed < self.switch_residual && self.switch_residual < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "filter schedule needs 0 < fixed_coeff*eps_tol ({fixed:e}) < switch_residual ({:e}) < 1",
                self.switch_residual
            )));
        }
        if self.norm_kind == NormKind::Inf {
            return Err(Error::InvalidParameter(
                "filter budgets support frobenius or one norm".into(),
            ));
        }
        Ok(())
    }

    /// Budget of the fixed phase.
    pub fn fixed_budget(&self) -> f64 {
        self.fixed_coeff * self.eps_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterPhase {
    Fixed,
    Adaptive,
}

/// Audit record of one filter event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub budget: f64,
    pub scalar_threshold: f64,
    pub dropped_count: usize,
    /// Norm of the removed matrix `F`.
    pub dropped_norm: f64,
    pub phase: FilterPhase,
}

/// Norms of the current iterate that feed the adaptive budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepNorms {
    /// Newton: `‖R̂_k‖`, `‖X̂_k‖`, `‖X̂_k⁻¹‖`.
    Newton {
        residual: f64,
        x_norm: f64,
        xinv_norm: f64,
    },
    /// Newton–Schulz: `‖R̂_k‖` and the pre-filter norm `‖X̄_k‖`.
    NewtonSchulz { residual: f64, x_prev_norm: f64 },
}

impl StepNorms {
    pub fn residual(&self) -> f64 {
        match *self {
            StepNorms::Newton { residual, .. } | StepNorms::NewtonSchulz { residual, .. } => residual,
        }
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// `‖R‖² / (‖X̂‖ + ‖X̂⁻¹‖)`: the Newton filter bound that keeps
/// `‖R̂ − R‖ <= 4‖R‖`.
pub fn budget_nmf(r_norm: f64, x_norm: f64, xinv_norm: f64) -> Result<f64> {
    require_positive("r_norm", r_norm)?;
    require_positive("x_norm", x_norm)?;
    require_positive("xinv_norm", xinv_norm)?;
    Ok(r_norm * r_norm / (x_norm + xinv_norm))
}

/// `(3/4)‖R‖² / (3‖X̄‖ + ‖X̄‖³)`: the Newton–Schulz filter bound that keeps
/// `‖R̂ − R‖ <= 3‖R‖`.
pub fn budget_nsf(r_prev_norm: f64, x_prev_norm: f64) -> Result<f64> {
    require_positive("r_prev_norm", r_prev_norm)?;
    require_positive("x_prev_norm", x_prev_norm)?;
    let x = x_prev_norm;
    Ok(0.75 * r_prev_norm * r_prev_norm / (3.0 * x + x * x * x))
}

/// Fixed budget while `residual >= switch_residual`, the adaptive bound once
/// the residual is strictly below it.
pub fn budget_for_step(schedule: &FilterSchedule, norms: &StepNorms) -> Result<(f64, FilterPhase)> {
    if norms.residual() >= schedule.switch_residual {
        return Ok((schedule.fixed_budget(), FilterPhase::Fixed));
    }
    let budget = match *norms {
        StepNorms::Newton {
            residual,
            x_norm,
            xinv_norm,
        } => budget_nmf(residual, x_norm, xinv_norm)?,
        StepNorms::NewtonSchulz {
            residual,
            x_prev_norm,
        } => budget_nsf(residual, x_prev_norm)?,
    };
    Ok((budget, FilterPhase::Adaptive))
}

/// Off-diagonal entries are the only drop candidates.
fn candidates(a: &SparseMatrix) -> impl Iterator<Item = (usize, f64)> + '_ {
    a.iter().filter(|&(i, j, _)| i != j).map(|(_, j, v)| (j, v.abs()))
}

/// Norm of the set `{off-diagonal entries with |v| <= threshold}`.
pub fn dropped_norm(a: &SparseMatrix, threshold: f64, norm_kind: NormKind) -> f64 {
    if threshold <= 0.0 {
        return 0.0;
    }
    match norm_kind {
        NormKind::Frobenius => candidates(a)
            .filter(|&(_, v)| v <= threshold)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt(),
        NormKind::One | NormKind::Inf => {
            let transpose = norm_kind == NormKind::Inf;
            let mut sums = vec![0.0; if transpose { a.nrows() } else { a.ncols() }];
            for (i, j, v) in a.iter() {
                if i != j && v.abs() <= threshold {
                    sums[if transpose { i } else { j }] += v.abs();
                }
            }
            sums.into_iter().fold(0.0, f64::max)
        }
    }
}

/// Chooses the largest threshold on a 64-bucket logarithmic grid whose
/// dropped set stays within `budget`, then tightens it to the largest
/// magnitude actually dropped. Never exceeds the budget; `budget <= 0`
/// gives 0.
pub fn select_threshold(a: &SparseMatrix, budget: f64, norm_kind: NormKind) -> f64 {
    if budget.is_nan() || budget <= 0.0 {
        return 0.0;
    }
    let max = candidates(a).map(|(_, v)| v).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let edges = bucket_edges(max);

    // Index into `edges` of the largest admissible edge; None means no edge
    // (not even the bottom of the grid) fits the budget.
    let best = match norm_kind {
        NormKind::Frobenius => frobenius_grid_search(a, budget, max, &edges),
        _ => bisect_grid(a, budget, norm_kind, &edges),
    };
    let Some(idx) = best else {
        return 0.0;
    };
    let edge = edges[idx];
    // Same dropped set, tightest threshold.
    candidates(a)
        .map(|(_, v)| v)
        .filter(|&v| v <= edge)
        .fold(0.0, f64::max)
}

/// `edges[0] = span·max`, `edges[64] = max`, log-uniform in between.
fn bucket_edges(max: f64) -> Vec<f64> {
    let lo = HISTOGRAM_SPAN * max;
    let ratio = (max / lo).ln() / HISTOGRAM_BUCKETS as f64;
    let mut edges: Vec<f64> = (0..=HISTOGRAM_BUCKETS)
        .map(|b| lo * (ratio * b as f64).exp())
        .collect();
    edges[HISTOGRAM_BUCKETS] = max;
    edges
}

/// Accumulates squared mass per bucket, walks upward while the running sum
/// stays within budget, then confirms the candidate edge with an exact pass
/// (stepping down if bucket rounding misplaced an entry).
fn frobenius_grid_search(a: &SparseMatrix, budget: f64, max: f64, edges: &[f64]) -> Option<usize> {
    let lo = edges[0];
    let log_span = (max / lo).ln();
    // mass[0] holds entries below the grid; mass[b + 1] holds bucket b.
    let mut mass = vec![0.0f64; HISTOGRAM_BUCKETS + 1];
    for (_, v) in candidates(a) {
        let slot = if v <= lo {
            0
        } else {
            let b = ((v / lo).ln() / log_span * HISTOGRAM_BUCKETS as f64).ceil() as usize;
            b.clamp(1, HISTOGRAM_BUCKETS)
        };
        mass[slot] += v * v;
    }
    // Slot s covers (edges[s-1], edges[s]]; absorbing slot s admits edges[s].
    let budget_sq = budget * budget;
    let mut total = 0.0;
    let mut best = None;
    for (s, &m) in mass.iter().enumerate() {
        total += m;
        if total > budget_sq {
            break;
        }
        best = Some(s);
    }
    let mut idx = best?;
    loop {
        if dropped_norm(a, edges[idx], NormKind::Frobenius) <= budget {
            return Some(idx);
        }
        if idx == 0 {
            return None;
        }
        idx -= 1;
    }
}

/// Binary search over grid edges with an exact norm evaluation per probe;
/// used for norms that do not decompose over buckets.
fn bisect_grid(a: &SparseMatrix, budget: f64, norm_kind: NormKind, edges: &[f64]) -> Option<usize> {
    if dropped_norm(a, edges[0], norm_kind) > budget {
        return None;
    }
    let (mut good, mut bad) = (0usize, edges.len());
    while bad - good > 1 {
        let mid = (good + bad) / 2;
        if dropped_norm(a, edges[mid], norm_kind) <= budget {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Statistics of one threshold application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropStats {
    pub threshold: f64,
    pub dropped_count: usize,
    pub dropped_norm: f64,
}

/// Removes every off-diagonal entry with `|v| <= threshold`. The diagonal is
/// never dropped.
pub fn apply_filter(a: &SparseMatrix, threshold: f64, norm_kind: NormKind) -> (SparseMatrix, DropStats) {
    if threshold <= 0.0 {
        let stats = DropStats {
            threshold: threshold.max(0.0),
            dropped_count: 0,
            dropped_norm: 0.0,
        };
        return (a.clone(), stats);
    }
    let (kept, dropped) = partition(a, threshold);
    let stats = DropStats {
        threshold,
        dropped_count: dropped.nnz(),
        dropped_norm: dropped.norm(norm_kind),
    };
    (kept, stats)
}

/// Splits `a` into `(kept, dropped)` with `kept + dropped == a` exactly.
pub fn partition(a: &SparseMatrix, threshold: f64) -> (SparseMatrix, SparseMatrix) {
    let n = a.nrows();
    let mut k_starts = Vec::with_capacity(n + 1);
    let mut k_cols = Vec::with_capacity(a.nnz());
    let mut k_vals = Vec::with_capacity(a.nnz());
    let mut d_starts = Vec::with_capacity(n + 1);
    let mut d_cols = Vec::new();
    let mut d_vals = Vec::new();
    k_starts.push(0);
    d_starts.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if i != j && v.abs() <= threshold {
                d_cols.push(j);
                d_vals.push(v);
            } else {
                k_cols.push(j);
                k_vals.push(v);
            }
        }
        k_starts.push(k_cols.len());
        d_starts.push(d_cols.len());
    }
    (
        SparseMatrix::from_csr_unchecked(n, a.ncols(), k_starts, k_cols, k_vals),
        SparseMatrix::from_csr_unchecked(n, a.ncols(), d_starts, d_cols, d_vals),
    )
}

/// One full filter event: pick the threshold for `budget` and apply it.
pub fn filter_to_budget(
    a: &SparseMatrix,
    budget: f64,
    norm_kind: NormKind,
    phase: FilterPhase,
) -> (SparseMatrix, FilterReport) {
    let threshold = select_threshold(a, budget, norm_kind);
    let (kept, stats) = apply_filter(a, threshold, norm_kind);
    debug_assert!(stats.dropped_norm <= budget || stats.dropped_count == 0);
    let report = FilterReport {
        budget,
        scalar_threshold: stats.threshold,
        dropped_count: stats.dropped_count,
        dropped_norm: stats.dropped_norm,
        phase,
    };
    (kept, report)
}
