//! Left-looking sparse LU with partial pivoting (Gilbert–Peierls).
//!
//! Column `k` of `L` and `U` is obtained from a sparse triangular solve
//! against the columns already factored; the nonzero pattern of that solve
//! is found by a depth-first search over the graph of `L`, so the work is
//! proportional to the flops actually performed.

use super::SparseMatrix;
use crate::error::{Error, Result};

/// Pivots with magnitude below this are treated as structural singularity.
pub const SINGULARITY_FLOOR: f64 = 1e-30;

const UNSET: usize = usize::MAX;

/// `P·A = L·U` in compressed-column form. `L` is unit lower triangular with
/// the unit diagonal stored first in each column; `U` stores its diagonal last
/// in each column.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// `pinv[i]` is the pivot step at which original row `i` was chosen.
    pinv: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                op: "lu",
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let n = a.nrows();
        // CSR of Aᵀ is CSC of A.
        let at = a.transpose();
        let (a_ptr, a_idx, a_val) = (at.row_starts(), at.col_indices(), at.values());

        let cap = a.nnz() * 2 + n;
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx = Vec::with_capacity(cap);
        let mut l_val = Vec::with_capacity(cap);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx = Vec::with_capacity(cap);
        let mut u_val = Vec::with_capacity(cap);
        let mut pinv = vec![UNSET; n];

        let mut x = vec![0.0f64; n];
        let mut xi = vec![0usize; n];
        let mut marked = vec![false; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());

            let rows = &a_idx[a_ptr[k]..a_ptr[k + 1]];
            let top = reach(
                n, &l_ptr, &l_idx, &pinv, rows, &mut xi, &mut marked, &mut stack, &mut pstack,
            );
            for &i in &xi[top..] {
                x[i] = 0.0;
            }
            for p in a_ptr[k]..a_ptr[k + 1] {
                x[a_idx[p]] = a_val[p];
            }
            // x = L \ A(:,k) over the reach, in topological order.
            for &j in &xi[top..n] {
                let col = pinv[j];
                if col == UNSET {
                    continue;
                }
                let xj = x[j];
                if xj == 0.0 {
                    continue;
                }
                let end = if col + 1 < l_ptr.len() { l_ptr[col + 1] } else { l_idx.len() };
                for p in l_ptr[col] + 1..end {
                    x[l_idx[p]] -= l_val[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut best = -1.0f64;
            for &i in &xi[top..] {
                if pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else if x[i] != 0.0 {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            // Prefer the natural diagonal on ties.
            if pinv[k] == UNSET && x[k] != 0.0 && x[k].abs() >= best {
                ipiv = k;
            }
            if ipiv == UNSET || best < SINGULARITY_FLOOR {
                return Err(Error::SingularMatrix {
                    column: k,
                    magnitude: best.max(0.0),
                });
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in &xi[top..] {
                if pinv[i] == UNSET {
                    let v = x[i] / pivot;
                    if v != 0.0 {
                        l_idx.push(i);
                        l_val.push(v);
                    }
                }
                x[i] = 0.0;
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
        for i in l_idx.iter_mut() {
            *i = pinv[*i];
        }
        Ok(Self {
            n,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            pinv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in `L` and `U` together.
    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    /// Solves `A·X = B` column by column and returns `X` in CSR form. Only
    /// exact zeros are omitted from `X`.
    pub fn solve(&self, b: &SparseMatrix) -> Result<SparseMatrix> {
        let n = self.n;
        if b.nrows() != n {
            return Err(Error::ShapeMismatch {
                op: "lu_solve",
                left: (n, n),
                right: b.shape(),
            });
        }
        let bt = b.transpose();
        let mut y = vec![0.0f64; n];
        let mut col_ptr = Vec::with_capacity(b.ncols() + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);

        for j in 0..b.ncols() {
            let (rows, bv) = bt.row(j);
            if rows.is_empty() {
                col_ptr.push(row_idx.len());
                continue;
            }
            let mut lo = n;
            let mut hi = 0;
            for (&i, &v) in rows.iter().zip(bv) {
                let r = self.pinv[i];
                y[r] = v;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            // Forward substitution with unit L; updates only reach higher rows.
            let mut c = lo;
            while c <= hi {
                let yc = y[c];
                if yc != 0.0 {
                    for p in self.l_ptr[c] + 1..self.l_ptr[c + 1] {
                        let t = self.l_val[p] * yc;
                        if t != 0.0 {
                            let r = self.l_idx[p];
                            y[r] -= t;
                            if r > hi {
                                hi = r;
                            }
                        }
                    }
                }
                c += 1;
            }
            // Back substitution with U; updates only reach lower rows.
            let mut c = hi as isize;
            while c >= lo as isize {
                let cu = c as usize;
                if y[cu] != 0.0 {
                    let (s, e) = (self.u_ptr[cu], self.u_ptr[cu + 1]);
                    let yc = y[cu] / self.u_val[e - 1];
                    y[cu] = yc;
                    if yc != 0.0 {
                        for p in s..e - 1 {
                            let t = self.u_val[p] * yc;
                            if t != 0.0 {
                                let r = self.u_idx[p];
                                y[r] -= t;
                                if r < lo {
                                    lo = r;
                                }
                            }
                        }
                    }
                }
                c -= 1;
            }
            for (r, yr) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                if *yr != 0.0 {
                    row_idx.push(r);
                    vals.push(*yr);
                    *yr = 0.0;
                }
            }
            col_ptr.push(row_idx.len());
        }
        // The columns of X form the CSR of Xᵀ.
        let xt = SparseMatrix::from_csr_unchecked(b.ncols(), n, col_ptr, row_idx, vals);
        Ok(xt.transpose())
    }
}

/// Nonzero pattern of `L \ b` for the rows in `b`, written to `xi[top..n]` in
/// topological order. `marked` is left all-false on return.
#[allow(clippy::too_many_arguments)]
fn reach(
    n: usize,
    l_ptr: &[usize],
    l_idx: &[usize],
    pinv: &[usize],
    b_rows: &[usize],
    xi: &mut [usize],
    marked: &mut [bool],
    stack: &mut [usize],
    pstack: &mut [usize],
) -> usize {
    let mut top = n;
    let col_end = |col: usize| if col + 1 < l_ptr.len() { l_ptr[col + 1] } else { l_idx.len() };
    for &start in b_rows {
        if marked[start] {
            continue;
        }
        let mut head = 0usize;
        stack[0] = start;
        loop {
            let j = stack[head];
            let col = pinv[j];
            if !marked[j] {
                marked[j] = true;
                pstack[head] = if col == UNSET { 0 } else { l_ptr[col] };
            }
            let end = if col == UNSET { 0 } else { col_end(col) };
            let mut descended = false;
            let mut p = pstack[head];
            while p < end {
                let i = l_idx[p];
                p += 1;
                if marked[i] {
                    continue;
                }
                pstack[head] = p;
                head += 1;
                stack[head] = i;
                descended = true;
                break;
            }
            if !descended {
                top -= 1;
                xi[top] = j;
                if head == 0 {
                    break;
                }
                head -= 1;
            }
        }
    }
    for &i in &xi[top..n] {
        marked[i] = false;
    }
    top
}

/// `A⁻¹` via LU with partial pivoting and column-by-column solves against the
/// identity. The result keeps every entry that is not exactly zero.
pub fn lu_invert(a: &SparseMatrix) -> Result<SparseMatrix> {
    let lu = LuFactors::factor(a)?;
    lu.solve(&SparseMatrix::identity(a.nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::DenseMatrix;

    fn m(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&DenseMatrix::from_rows(rows), 0.0)
    }

    fn residual(a: &SparseMatrix, inv: &SparseMatrix) -> f64 {
        let p = a.matmul(inv).unwrap();
        p.add(&SparseMatrix::identity(a.nrows()), 1.0, -1.0)
            .unwrap()
            .norm(crate::NormKind::Frobenius)
    }

    #[test]
    fn invert_diagonal_and_identity() {
        let d = SparseMatrix::from_diagonal(&[2.0, 4.0]);
        assert_eq!(lu_invert(&d).unwrap(), SparseMatrix::from_diagonal(&[0.5, 0.25]));
        let i = SparseMatrix::identity(5);
        assert_eq!(lu_invert(&i).unwrap(), i);
    }

    #[test]
    fn invert_two_by_two() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let inv = lu_invert(&a).unwrap().to_dense();
        let expected = DenseMatrix::from_rows(&[&[2.0 / 3.0, -1.0 / 3.0], &[-1.0 / 3.0, 2.0 / 3.0]]);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn invert_requires_pivoting() {
        // Zero leading entry forces a row swap.
        let a = m(&[&[0.0, 1.0, 0.0], &[2.0, 0.0, 1.0], &[0.0, 3.0, 4.0]]);
        let inv = lu_invert(&a).unwrap();
        assert!(residual(&a, &inv) < 1e-14);
    }

    #[test]
    fn invert_block_antidiagonal() {
        let b = m(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let i = SparseMatrix::identity(2);
        let a = SparseMatrix::from_blocks(2, [[None, Some(&b)], [Some(&i), None]]).unwrap();
        let inv = lu_invert(&a).unwrap();
        assert!(residual(&a, &inv) < 1e-14);
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let z = SparseMatrix::zeros(3, 3);
        assert!(matches!(lu_invert(&z), Err(Error::SingularMatrix { .. })));
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(lu_invert(&a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            lu_invert(&SparseMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn solve_multiple_right_hand_sides() {
        let a = m(&[&[4.0, 1.0, 0.0], &[1.0, 4.0, 1.0], &[0.0, 1.0, 4.0]]);
        let b = m(&[&[1.0, 0.0], &[2.0, 1.0], &[3.0, 0.0]]);
        let x = LuFactors::factor(&a).unwrap().solve(&b).unwrap();
        let ax = a.matmul(&x).unwrap().to_dense();
        assert!(ax.max_abs_diff(&b.to_dense()) < 1e-14);
    }

    #[test]
    fn tridiagonal_factor_has_no_excess_fill() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let lu = LuFactors::factor(&a).unwrap();
        assert!(lu.fill() <= 4 * n);
    }
}
