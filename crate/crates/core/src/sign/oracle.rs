use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

const MAX_ORACLE_DIM: usize = 200;

/// Reference `sign(A)` for small dense matrices.
///
/// Symmetric inputs go through an eigendecomposition `A = V Λ Vᵀ`,
/// `sign(A) = V sign(Λ) Vᵀ`; anything else through dense Newton with
/// LU inverses. Shares no code with the sparse solvers.
pub fn dense_sign_oracle(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare {
            op: "dense_sign_oracle",
            rows: n,
            cols: a.ncols(),
        });
    }
    if n > MAX_ORACLE_DIM {
        return Err(Error::OracleFailure(format!("dimension {n} exceeds {MAX_ORACLE_DIM}")));
    }
    let m = DMatrix::from_row_slice(n, n, a.values());
    let s = if m == m.transpose() {
        symmetric_sign(m)?
    } else {
        newton_sign(m)?
    };
    Ok(DenseMatrix::from_row_major(
        n,
        n,
        s.transpose().as_slice().to_vec(),
    ))
}

fn symmetric_sign(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.amax();
    let mut signs = Vec::with_capacity(n);
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::OracleFailure(format!("eigenvalue {l:e} on the imaginary axis")));
        }
        signs.push(l.signum());
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, s) in signs.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    Ok(&scaled * v.transpose())
}

fn newton_sign(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut x = m;
    for _ in 0..100 {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::OracleFailure("singular Newton iterate".into()))?;
        x = (&x + inv) * 0.5;
        let r = (&eye - &x * &x).norm();
        if !r.is_finite() {
            break;
        }
        if r <= 1e-13 * (n as f64).sqrt() {
            return Ok(x);
        }
    }
    Err(Error::OracleFailure("dense Newton did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let d = DenseMatrix::from_rows(&[&[4.0, 0.0], &[0.0, -9.0]]);
        let s = dense_sign_oracle(&d).unwrap();
        assert!(s.max_abs_diff(&DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])) < 1e-15);
    }

    #[test]
    fn symmetric_off_diagonal() {
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let s = dense_sign_oracle(&a).unwrap();
        assert!(s.max_abs_diff(&DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])) < 1e-14);
    }

    #[test]
    fn identity() {
        let s = dense_sign_oracle(&DenseMatrix::identity(3)).unwrap();
        assert!(s.max_abs_diff(&DenseMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn nonsymmetric_goes_through_newton() {
        // Upper triangular with eigenvalues 2, -1: sign = [[1, 2/3], [0, -1]].
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, -1.0]]);
        let s = dense_sign_oracle(&a).unwrap();
        let expected = DenseMatrix::from_rows(&[&[1.0, 2.0 / 3.0], &[0.0, -1.0]]);
        assert!(s.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn singular_symmetric_fails() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(dense_sign_oracle(&a), Err(Error::OracleFailure(_))));
    }
}
