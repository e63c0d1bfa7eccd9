//! Solvers built on the sign function: matrix square roots and the
//! continuous-time algebraic Riccati equation.

use crate::error::{Error, Result};
use crate::matgen::{sign_embedding, symmetrize};
use crate::sign::{self, IterationConfig, IterationTrace};
use crate::sparse::{lu_invert, LuFactors, NormKind, SparseMatrix};

/// Tolerance of the `B^{1/2}·B^{-1/2} = I` consistency check.
pub const SQRT_CONSISTENCY_TOL: f64 = 1e-6;

/// Square root pair read off `sign([[0, B], [I, 0]])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtResult {
    pub sqrt: SparseMatrix,
    pub inv_sqrt: SparseMatrix,
    pub trace: IterationTrace,
    /// Frobenius norm of the diagonal blocks of the computed sign, which
    /// vanish exactly in exact arithmetic.
    pub diagonal_block_norm: f64,
}

/// `(B^{1/2}, B^{-1/2})` via the block embedding. Fails with
/// [`Error::Consistency`] when `‖B^{1/2}·B^{-1/2} − I‖_F` exceeds 1e-6.
pub fn sqrt_via_sign(b: &SparseMatrix, cfg: &IterationConfig) -> Result<SqrtResult> {
    let n = b.nrows();
    let a = sign_embedding(b)?;
    let result = sign::run(&a, cfg)?;
    let s = &result.sign;
    let sqrt = s.submatrix(0..n, n..2 * n);
    let inv_sqrt = s.submatrix(n..2 * n, 0..n);
    let diagonal_block_norm = s
        .submatrix(0..n, 0..n)
        .norm(NormKind::Frobenius)
        .hypot(s.submatrix(n..2 * n, n..2 * n).norm(NormKind::Frobenius));

    let defect = sqrt
        .matmul(&inv_sqrt)?
        .add(&SparseMatrix::identity(n), 1.0, -1.0)?
        .norm(NormKind::Frobenius);
    if defect > SQRT_CONSISTENCY_TOL {
        return Err(Error::Consistency(format!(
            "‖B^(1/2)·B^(-1/2) − I‖_F = {defect:e}"
        )));
    }
    Ok(SqrtResult {
        sqrt,
        inv_sqrt,
        trace: result.trace,
        diagonal_block_norm,
    })
}

/// Riccati data for `P(U) = U·C + Cᵀ·U + Q − U·B·D⁻¹·Bᵀ·U = 0`; all blocks
/// `n × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AreProblem {
    pub b: SparseMatrix,
    pub c: SparseMatrix,
    pub d: SparseMatrix,
    pub q: SparseMatrix,
}

impl AreProblem {
    pub fn new(b: SparseMatrix, c: SparseMatrix, d: SparseMatrix, q: SparseMatrix) -> Result<Self> {
        let n = b.nrows();
        for (name, m) in [("B", &b), ("C", &c), ("D", &d), ("Q", &q)] {
            if m.shape() != (n, n) {
                return Err(Error::InvalidParameter(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if !d.is_symmetric() {
            return Err(Error::InvalidParameter("D must be symmetric".into()));
        }
        if !q.is_symmetric() {
            return Err(Error::InvalidParameter("Q must be symmetric".into()));
        }
        Ok(Self { b, c, d, q })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// `G = B·D⁻¹·Bᵀ`, symmetrized.
    pub fn gain(&self) -> Result<SparseMatrix> {
        let d_inv = lu_invert(&self.d)?;
        symmetrize(&self.b.matmul(&d_inv)?.matmul(&self.b.transpose())?)
    }

    /// `[[C, G], [Q, −Cᵀ]]`.
    pub fn sign_input(&self) -> Result<SparseMatrix> {
        let g = self.gain()?;
        let neg_ct = self.c.transpose().scale(-1.0);
        SparseMatrix::from_blocks(self.dim(), [[Some(&self.c), Some(&g)], [Some(&self.q), Some(&neg_ct)]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreSolution {
    pub u: SparseMatrix,
    /// `‖P(U)‖_∞`.
    pub equation_error: f64,
    pub sign_trace: IterationTrace,
    pub sign_converged: bool,
    /// `‖S‖_F` of the computed sign.
    pub sign_norm: f64,
}

/// Solves the Riccati equation from `S = sign([[C, G], [Q, −Cᵀ]])`
/// partitioned into `W11..W22`: `U` solves `W12·U = W11 + I`.
///
/// For Newton–Schulz the block matrix is divided by its ∞-norm first; the
/// sign is unchanged and the iteration then starts inside its basin.
/// A sign iteration that stalls at the rounding floor above `eps_tol` is
/// accepted; `sign_converged` reports whether the tolerance was met.
pub fn are_solve(p: &AreProblem, cfg: &IterationConfig) -> Result<AreSolution> {
    let n = p.dim();
    let h = p.sign_input()?;
    let cfg = cfg
        .with_prescale(cfg.prescale || cfg.method.is_newton_schulz())
        .with_accept_floor(true);
    let result = sign::run(&h, &cfg)?;
    let s = &result.sign;
    let w11 = s.submatrix(0..n, 0..n);
    let w12 = s.submatrix(0..n, n..2 * n);
    let rhs = w11.shift_diagonal(1.0)?;
    let lu = LuFactors::factor(&w12).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularW12,
        other => other,
    })?;
    let u = lu.solve(&rhs)?;
    let equation_error = are_residual(p, &u)?;
    Ok(AreSolution {
        u,
        equation_error,
        sign_trace: result.trace,
        sign_converged: result.converged,
        sign_norm: s.norm(NormKind::Frobenius),
    })
}

/// `‖U·C + Cᵀ·U + Q − U·G·U‖_∞` with `G = B·D⁻¹·Bᵀ`, recomputed from the
/// problem data.
pub fn are_residual(p: &AreProblem, u: &SparseMatrix) -> Result<f64> {
    if u.shape() != (p.dim(), p.dim()) {
        return Err(Error::ShapeMismatch {
            op: "are_residual",
            left: (p.dim(), p.dim()),
            right: u.shape(),
        });
    }
    let g = p.gain()?;
    let uc = u.matmul(&p.c)?;
    let ctu = p.c.transpose().matmul(u)?;
    let ugu = u.matmul(&g)?.matmul(u)?;
    let r = uc.add(&ctu, 1.0, 1.0)?.add(&p.q, 1.0, 1.0)?.add(&ugu, 1.0, -1.0)?;
    Ok(r.norm(NormKind::Inf))
}
