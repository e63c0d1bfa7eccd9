//! Compressed sparse row matrices and the arithmetic the sign iterations need.
//!
//! Every operation returns a fresh value. Arithmetic prunes only entries that
//! come out exactly zero; all inexact dropping lives in [`crate::filtering`].

mod dense;
mod lu;

pub use dense::DenseMatrix;
pub use lu::{lu_invert, LuFactors, SINGULARITY_FLOOR};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which norm to use wherever a bare `‖·‖` appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Frobenius,
    /// Maximum absolute column sum.
    One,
    /// Maximum absolute row sum.
    Inf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_starts: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_starts.len() != nrows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_starts has length {}, expected {}",
                row_starts.len(),
                nrows + 1
            )));
        }
        if row_starts[0] != 0 || row_starts[nrows] != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_starts must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidStructure(
                "col_indices and values differ in length".into(),
            ));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_starts[i], row_starts[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_starts decreases at row {i}"
                )));
            }
            for p in lo..hi {
                if col_indices[p] >= ncols {
                    return Err(Error::InvalidStructure(format!(
                        "column {} out of range in row {i}",
                        col_indices[p]
                    )));
                }
                if p > lo && col_indices[p] <= col_indices[p - 1] {
                    return Err(Error::InvalidStructure(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
                if values[p] == 0.0 {
                    return Err(Error::InvalidStructure(format!(
                        "explicit zero stored at ({i}, {})",
                        col_indices[p]
                    )));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_starts,
            col_indices,
            values,
        })
    }

    /// Trusted constructor for internal kernels that already maintain the
    /// invariants.
    pub(crate) fn from_csr_unchecked(
        nrows: usize,
        ncols: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_starts.len(), nrows + 1);
        debug_assert_eq!(*row_starts.last().unwrap(), values.len());
        debug_assert!(values.iter().all(|&v| v != 0.0));
        Self {
            nrows,
            ncols,
            row_starts,
            col_indices,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are rejected; zero values are skipped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut row_starts = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_starts.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_unstable_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidStructure(format!(
                        "duplicate entry ({i}, {})",
                        w[0].0
                    )));
                }
            }
            for &(j, v) in &row {
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_starts.push(col_indices.len());
        }
        Ok(Self::from_csr_unchecked(nrows, ncols, row_starts, col_indices, values))
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_csr_unchecked(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut row_starts = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_starts.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                col_indices.push(i);
                values.push(d);
            }
            row_starts.push(col_indices.len());
        }
        Self::from_csr_unchecked(n, n, row_starts, col_indices, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_starts
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_starts[i], self.row_starts[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_indices[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self::from_csr_unchecked(self.ncols, self.nrows, counts, col_indices, values)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        // Underflow can turn tiny entries into exact zeros.
        if out.values.contains(&0.0) {
            out.prune_zeros();
        }
        out
    }

    fn prune_zeros(&mut self) {
        let mut w = 0;
        let mut start = 0;
        for i in 0..self.nrows {
            let end = self.row_starts[i + 1];
            for p in start..end {
                if self.values[p] != 0.0 {
                    self.col_indices[w] = self.col_indices[p];
                    self.values[w] = self.values[p];
                    w += 1;
                }
            }
            start = end;
            self.row_starts[i + 1] = w;
        }
        self.col_indices.truncate(w);
        self.values.truncate(w);
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// Copies the block `rows × cols` (half-open ranges) into a new matrix.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        assert!(rows.end <= self.nrows && cols.end <= self.ncols);
        let mut row_starts = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_starts.push(0);
        for i in rows.clone() {
            let (c, v) = self.row(i);
            let lo = c.partition_point(|&j| j < cols.start);
            let hi = c.partition_point(|&j| j < cols.end);
            col_indices.extend(c[lo..hi].iter().map(|&j| j - cols.start));
            values.extend_from_slice(&v[lo..hi]);
            row_starts.push(col_indices.len());
        }
        Self::from_csr_unchecked(rows.len(), cols.len(), row_starts, col_indices, values)
    }

    /// Assembles the 2×2 block matrix `[[a11, a12], [a21, a22]]`; `None`
    /// blocks are zero. All blocks must be `n × n`.
    pub fn from_blocks(n: usize, blocks: [[Option<&SparseMatrix>; 2]; 2]) -> Result<Self> {
        for b in blocks.iter().flatten().flatten() {
            if b.shape() != (n, n) {
                return Err(Error::ShapeMismatch {
                    op: "from_blocks",
                    left: (n, n),
                    right: b.shape(),
                });
            }
        }
        let nnz: usize = blocks.iter().flatten().flatten().map(|b| b.nnz()).sum();
        let mut row_starts = Vec::with_capacity(2 * n + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_starts.push(0);
        for block_row in &blocks {
            for i in 0..n {
                for (bj, block) in block_row.iter().enumerate() {
                    if let Some(b) = block {
                        let (c, v) = b.row(i);
                        col_indices.extend(c.iter().map(|&j| j + bj * n));
                        values.extend_from_slice(v);
                    }
                }
                row_starts.push(col_indices.len());
            }
        }
        Ok(Self::from_csr_unchecked(2 * n, 2 * n, row_starts, col_indices, values))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    /// Converts a dense matrix, dropping entries with `|v| <= drop_tol`
    /// (with `drop_tol = 0` only exact zeros are dropped).
    pub fn from_dense(d: &DenseMatrix, drop_tol: f64) -> Self {
        let mut row_starts = Vec::with_capacity(d.nrows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_starts.push(0);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != 0.0 && v.abs() > drop_tol {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_starts.push(col_indices.len());
        }
        Self::from_csr_unchecked(d.nrows(), d.ncols(), row_starts, col_indices, values)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.values.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::Inf => (0..self.nrows)
                .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            NormKind::One => {
                let mut sums = vec![0.0; self.ncols];
                for (&j, &v) in self.col_indices.iter().zip(&self.values) {
                    sums[j] += v.abs();
                }
                sums.into_iter().fold(0.0, f64::max)
            }
        }
    }

    /// `alpha·self + beta·other`.
    pub fn add(&self, other: &SparseMatrix, alpha: f64, beta: f64) -> Result<Self> {
        add(self, other, alpha, beta)
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Result<Self> {
        matmul(self, other)
    }

    /// `self + shift·I` for square matrices.
    pub fn shift_diagonal(&self, shift: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "shift_diagonal",
                rows: self.nrows,
                cols: self.ncols,
            });
        }
        add(self, &Self::identity(self.nrows), 1.0, shift)
    }

    /// `y = self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }
}

fn check_same_shape(op: &'static str, a: &SparseMatrix, b: &SparseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// `alpha·a + beta·b`, merging sorted rows. Only exact cancellations are
/// pruned.
pub fn add(a: &SparseMatrix, b: &SparseMatrix, alpha: f64, beta: f64) -> Result<SparseMatrix> {
    check_same_shape("add", a, b)?;
    let mut row_starts = Vec::with_capacity(a.nrows + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz());
    let mut values = Vec::with_capacity(a.nnz() + b.nnz());
    row_starts.push(0);
    fn push(cols: &mut Vec<usize>, vals: &mut Vec<f64>, j: usize, v: f64) {
        if v != 0.0 {
            cols.push(j);
            vals.push(v);
        }
    }
    for i in 0..a.nrows {
        let (ac, av) = a.row(i);
        let (bc, bv) = b.row(i);
        let (mut p, mut q) = (0, 0);
        while p < ac.len() && q < bc.len() {
            match ac[p].cmp(&bc[q]) {
                std::cmp::Ordering::Less => {
                    push(&mut col_indices, &mut values, ac[p], alpha * av[p]);
                    p += 1;
                }
                std::cmp::Ordering::Greater => {
                    push(&mut col_indices, &mut values, bc[q], beta * bv[q]);
                    q += 1;
                }
                std::cmp::Ordering::Equal => {
                    push(&mut col_indices, &mut values, ac[p], alpha * av[p] + beta * bv[q]);
                    p += 1;
                    q += 1;
                }
            }
        }
        for k in p..ac.len() {
            push(&mut col_indices, &mut values, ac[k], alpha * av[k]);
        }
        for k in q..bc.len() {
            push(&mut col_indices, &mut values, bc[k], beta * bv[k]);
        }
        row_starts.push(col_indices.len());
    }
    Ok(SparseMatrix::from_csr_unchecked(
        a.nrows,
        a.ncols,
        row_starts,
        col_indices,
        values,
    ))
}

/// Row-by-row Gustavson product with a dense accumulator.
pub fn matmul(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.ncols != b.nrows {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, n) = (a.nrows, b.ncols);
    let mut acc = vec![0.0f64; n];
    let mut touched_flag = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();

    let mut row_starts = Vec::with_capacity(m + 1);
    let mut col_indices = Vec::with_capacity(a.nnz().max(b.nnz()));
    let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
    row_starts.push(0);

    for i in 0..m {
        let (ac, av) = a.row(i);
        // Columns in `covered` are all flagged already.
        let mut covered = 0..0;
        for (&k, &aik) in ac.iter().zip(av) {
            let (bc, bv) = b.row(k);
            let (Some(&lo), Some(&hi)) = (bc.first(), bc.last()) else {
                continue;
            };
            if hi - lo + 1 == bc.len() {
                // Contiguous row: plain axpy over `lo..=hi`.
                if lo < covered.start || hi >= covered.end {
                    for (j, flag) in touched_flag.iter_mut().enumerate().take(hi + 1).skip(lo) {
                        if !*flag {
                            *flag = true;
                            touched.push(j);
                        }
                    }
                    if covered.is_empty() || hi + 1 < covered.start || lo > covered.end {
                        covered = lo..hi + 1;
                    } else {
                        covered = covered.start.min(lo)..covered.end.max(hi + 1);
                    }
                }
                for (a, &b) in acc[lo..=hi].iter_mut().zip(bv) {
                    *a += aik * b;
                }
            } else {
                for (&j, &bkj) in bc.iter().zip(bv) {
                    if !touched_flag[j] {
                        touched_flag[j] = true;
                        touched.push(j);
                    }
                    acc[j] += aik * bkj;
                }
            }
        }
        // Sorting the touched list costs t·log t; past ~n/16 a linear sweep
        // over the accumulator is cheaper.
        if touched.len() > n / 16 {
            for j in 0..n {
                if touched_flag[j] {
                    let v = acc[j];
                    if v != 0.0 {
                        col_indices.push(j);
                        values.push(v);
                    }
                    acc[j] = 0.0;
                    touched_flag[j] = false;
                }
            }
        } else {
            touched.sort_unstable();
            for &j in &touched {
                let v = acc[j];
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
                acc[j] = 0.0;
                touched_flag[j] = false;
            }
        }
        touched.clear();
        row_starts.push(col_indices.len());
    }
    Ok(SparseMatrix::from_csr_unchecked(m, n, row_starts, col_indices, values))
}

/// Estimates the spectral radius by normalized power iteration from a seeded
/// random start vector; returns `‖A v‖₂` for the final unit vector `v`.
pub fn power_iteration_radius(a: &SparseMatrix, iters: usize, seed: u64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            op: "power_iteration_radius",
            rows: a.nrows,
            cols: a.ncols,
        });
    }
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..a.nrows).map(|_| rng.gen::<f64>() + 0.5).collect();
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let mut w = a.mul_vec(&v);
        estimate = normalize(&mut w);
        if estimate == 0.0 {
            return Ok(0.0);
        }
        v = w;
    }
    Ok(estimate)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&DenseMatrix::from_rows(rows), 0.0)
    }

    #[test]
    fn add_exact_cancellation_stores_nothing() {
        let i2 = SparseMatrix::identity(2);
        let z = add(&i2, &i2, 1.0, -1.0).unwrap();
        assert_eq!(z.nnz(), 0);
        assert_eq!(z.shape(), (2, 2));
    }

    #[test]
    fn add_diagonals() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0]);
        let b = SparseMatrix::identity(2);
        assert_eq!(add(&a, &b, 0.5, 0.5).unwrap(), SparseMatrix::from_diagonal(&[1.5, 2.0]));
    }

    #[test]
    fn add_self() {
        let a = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(add(&a, &a, 1.0, 1.0).unwrap(), m(&[&[0.0, 2.0], &[0.0, 0.0]]));
    }

    #[test]
    fn add_shape_mismatch() {
        let err = add(&SparseMatrix::identity(2), &SparseMatrix::identity(3), 1.0, 1.0);
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matmul_examples() {
        let a = m(&[&[1.0, 2.0], &[0.0, 3.0]]);
        assert_eq!(matmul(&SparseMatrix::identity(2), &a).unwrap(), a);

        let p = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(matmul(&p, &p).unwrap(), SparseMatrix::identity(2));

        let aat = matmul(&a, &a.transpose()).unwrap();
        assert_eq!(aat, m(&[&[5.0, 6.0], &[6.0, 9.0]]));
        assert_eq!(aat.to_dense(), a.to_dense().matmul(&a.transpose().to_dense()));
    }

    #[test]
    fn matmul_shape_mismatch() {
        let a = SparseMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matmul_prunes_exact_cancellation() {
        let a = m(&[&[1.0, 1.0]]);
        let b = m(&[&[1.0], &[-1.0]]);
        assert_eq!(matmul(&a, &b).unwrap().nnz(), 0);
    }

    #[test]
    fn norms() {
        assert_eq!(SparseMatrix::identity(3).norm(NormKind::Frobenius), 3f64.sqrt());
        let a = m(&[&[1.0, -2.0], &[0.0, 3.0]]);
        assert_eq!(a.norm(NormKind::Inf), 3.0);
        assert_eq!(a.norm(NormKind::One), 5.0);
    }

    #[test]
    fn dense_round_trip() {
        let i3 = SparseMatrix::identity(3);
        assert_eq!(SparseMatrix::from_dense(&i3.to_dense(), 0.0), i3);
        let d = DenseMatrix::from_rows(&[&[0.05, 1.0], &[0.0, 1.0]]);
        assert_eq!(SparseMatrix::from_dense(&d, 0.1), m(&[&[0.0, 1.0], &[0.0, 1.0]]));
    }

    #[test]
    fn from_triplets_rejects_duplicates() {
        let err = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]);
        assert!(matches!(err, Err(Error::InvalidStructure(_))));
    }

    #[test]
    fn from_csr_validates() {
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![0], vec![0.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![0], vec![2.0]).is_ok());
    }

    #[test]
    fn blocks_and_submatrix() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let i = SparseMatrix::identity(2);
        let a = SparseMatrix::from_blocks(2, [[None, Some(&b)], [Some(&i), None]]).unwrap();
        assert_eq!(a.get(0, 2), 1.0);
        assert_eq!(a.get(1, 3), 4.0);
        assert_eq!(a.get(2, 0), 1.0);
        assert_eq!(a.submatrix(0..2, 2..4), b);
        assert_eq!(a.submatrix(2..4, 0..2), i);
        assert_eq!(a.submatrix(0..2, 0..2).nnz(), 0);
    }

    #[test]
    fn power_iteration_examples() {
        let d = SparseMatrix::from_diagonal(&[3.0, 1.0]);
        assert!((power_iteration_radius(&d, 50, 1).unwrap() - 3.0).abs() < 1e-6);
        let i = SparseMatrix::identity(4);
        assert!((power_iteration_radius(&i, 3, 9).unwrap() - 1.0).abs() < 1e-14);
        let s = m(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert!((power_iteration_radius(&s, 100, 5).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(power_iteration_radius(&SparseMatrix::zeros(3, 3), 10, 0).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_is_deterministic() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let x = power_iteration_radius(&a, 7, 42).unwrap();
        let y = power_iteration_radius(&a, 7, 42).unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
