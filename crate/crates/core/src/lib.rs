//! Sparse matrix sign function by Newton and Newton–Schulz iterations with
//! norm-budgeted filtering, plus the square-root and Riccati solvers built on
//! top of it.
//!
//! ```
//! use signum_core::{sign, SparseMatrix, IterationConfig, Method};
//!
//! let a = SparseMatrix::from_diagonal(&[5.0, -2.0, 0.3]);
//! let result = sign::run(&a, &IterationConfig::new(Method::Nmf)).unwrap();
//! assert!(result.converged);
//! assert_eq!(result.sign.diagonal(), vec![1.0, -1.0, 1.0]);
//! ```

pub mod apps;
pub mod bench;
pub mod error;
pub mod filtering;
pub mod io;
pub mod matgen;
pub mod sign;
pub mod sparse;

pub use error::{Error, Result};
pub use filtering::{FilterPhase, FilterReport, FilterSchedule};
pub use sign::{IterationConfig, IterationTrace, Method, SignResult};
pub use sparse::{DenseMatrix, NormKind, SparseMatrix};
