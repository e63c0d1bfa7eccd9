//! Matrix Market files, iteration trace CSV and JSON run summaries.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign::{IterationTrace, Method, SignResult};
use crate::sparse::SparseMatrix;

pub const TRACE_HEADER: &str = "k,residual,nnz,threshold,dropped_norm,dropped_count,step_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = File::open(path)?;
    read_matrix_market_from(BufReader::new(file))
}

/// Parses coordinate `real`/`integer` data; symmetric files are expanded to
/// full storage. Explicit zeros are dropped.
pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad header `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format `{}`", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field `{}`", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut seen = HashSet::new();
    let mut entries = 0usize;
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let Some((nrows, ncols, nnz)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "expected `rows cols entries`".into()));
            }
            let p = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad integer `{s}`")))
            };
            let dims = (p(fields[0])?, p(fields[1])?, p(fields[2])?);
            if symmetry == Symmetry::Symmetric && dims.0 != dims.1 {
                return Err(parse_err(lineno, "symmetric matrix must be square".into()));
            }
            size = Some(dims);
            continue;
        };
        if fields.len() != 3 {
            return Err(parse_err(lineno, "expected `row col value`".into()));
        }
        if entries == nnz {
            return Err(parse_err(lineno, format!("more than {nnz} entries")));
        }
        entries += 1;
        let idx = |s: &str, bound: usize| -> Result<usize> {
            let v = s
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("bad index `{s}`")))?;
            if v == 0 || v > bound {
                return Err(parse_err(lineno, format!("index {v} out of range 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = idx(fields[0], nrows)?;
        let j = idx(fields[1], ncols)?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad value `{}`", fields[2])))?;
        if !v.is_finite() {
            return Err(parse_err(lineno, format!("non-finite value `{}`", fields[2])));
        }
        // Symmetric files may store either triangle, but not both halves
        // of the same pair.
        let key = match symmetry {
            Symmetry::General => (i, j),
            Symmetry::Symmetric => (i.max(j), i.min(j)),
        };
        if !seen.insert(key) {
            return Err(parse_err(lineno, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        if v == 0.0 {
            continue;
        }
        triplets.push((i, j, v));
        if symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j, i, v));
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| parse_err(1, "missing size line".into()))?;
    if entries != nnz {
        return Err(parse_err(0, format!("expected {nnz} entries, found {entries}")));
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
}

pub fn write_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market_with(a, path, Symmetry::General)
}

pub fn write_matrix_market_with(a: &SparseMatrix, path: impl AsRef<Path>, symmetry: Symmetry) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(a, &mut w, symmetry)?;
    w.flush()?;
    Ok(())
}

/// Writes 1-based coordinates with 17 significant digits, enough for an
/// exact round trip. `Symmetric` stores the lower triangle and requires an
/// exactly symmetric matrix.
pub fn write_matrix_market_to<W: Write>(a: &SparseMatrix, w: &mut W, symmetry: Symmetry) -> Result<()> {
    let lower = |i: usize, j: usize| j <= i;
    let (label, count) = match symmetry {
        Symmetry::General => ("general", a.nnz()),
        Symmetry::Symmetric => {
            if !a.is_symmetric() {
                return Err(Error::InvalidParameter("matrix is not symmetric".into()));
            }
            ("symmetric", a.iter().filter(|&(i, j, _)| lower(i, j)).count())
        }
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {label}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), count)?;
    for (i, j, v) in a.iter() {
        if symmetry == Symmetry::Symmetric && !lower(i, j) {
            continue;
        }
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// One CSV line per iteration; filter columns are empty for unfiltered
/// methods.
pub fn write_trace_csv<W: Write>(trace: &IterationTrace, w: &mut W) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for s in &trace.steps {
        match &s.filter {
            Some(f) => writeln!(
                w,
                "{},{:e},{},{:e},{:e},{},{:e}",
                s.k, s.residual, s.nnz, f.scalar_threshold, f.dropped_norm, f.dropped_count, s.seconds
            )?,
            None => writeln!(w, "{},{:e},{},,,,{:e}", s.k, s.residual, s.nnz, s.seconds)?,
        }
    }
    Ok(())
}

pub fn write_trace_csv_file(trace: &IterationTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trace_csv(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorSummary {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorSummary>,
}

impl RunSummary {
    pub fn from_result(method: Method, n: usize, r: &SignResult) -> Self {
        Self {
            method,
            n,
            converged: r.converged,
            iterations: r.iterations,
            final_residual: r.trace.final_residual(),
            wall_seconds: r.trace.wall_seconds(),
            error: None,
        }
    }

    pub fn from_error(method: Method, n: usize, e: &Error, wall_seconds: f64) -> Self {
        let (iterations, residual) = match *e {
            Error::SingularIterate { iteration } => (iteration.saturating_sub(1), f64::NAN),
            Error::MaxIterExceeded { iterations, residual } => (iterations, residual),
            Error::Diverged { iteration, residual } => (iteration, residual),
            Error::Stagnated { iterations, residual, .. } => (iterations, residual),
            _ => (0, f64::NAN),
        };
        Self {
            method,
            n,
            converged: false,
            iterations,
            // JSON has no NaN; unknown residuals serialize as null.
            final_residual: residual,
            wall_seconds,
            error: Some(e.into()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign::IterationConfig;

    fn parse(s: &str) -> Result<SparseMatrix> {
        read_matrix_market_from(s.as_bytes())
    }

    fn roundtrip(a: &SparseMatrix, sym: Symmetry) -> SparseMatrix {
        let mut buf = Vec::new();
        write_matrix_market_to(a, &mut buf, sym).unwrap();
        read_matrix_market_from(buf.as_slice()).unwrap()
    }

    #[test]
    fn identity_roundtrip() {
        let i = SparseMatrix::identity(3);
        assert_eq!(roundtrip(&i, Symmetry::General), i);
        assert_eq!(roundtrip(&i, Symmetry::Symmetric), i);
    }

    #[test]
    fn awkward_values_roundtrip() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            &[(0, 0, 0.1), (0, 2, -1.0 / 3.0), (1, 1, 1e-300), (1, 2, f64::MAX)],
        )
        .unwrap();
        assert_eq!(roundtrip(&a, Symmetry::General), a);
    }

    #[test]
    fn symmetric_lower_triangle_expands() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2\n3 1 -1\n2 2 4\n").unwrap();
        assert_eq!(a.get(0, 2), -1.0);
        assert_eq!(a.get(2, 0), -1.0);
        assert_eq!(a.get(1, 1), 4.0);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn rejects_duplicates() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
        let e = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1\n1 2 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn rejects_malformed() {
        let bad = [
            "",
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n",
            "not a header\n1 1 1\n1 1 1\n",
        ];
        for s in bad {
            assert!(matches!(parse(s), Err(Error::Parse { .. })), "{s:?}");
        }
    }

    #[test]
    fn symmetric_write_requires_symmetry() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        let mut buf = Vec::new();
        assert!(write_matrix_market_to(&a, &mut buf, Symmetry::Symmetric).is_err());
    }

    #[test]
    fn trace_csv_rows_match_iterations() {
        let a = SparseMatrix::from_diagonal(&[3.0, -0.5, 2.0]);
        for method in Method::ALL {
            let r = crate::sign::run(&a, &IterationConfig::new(method).with_prescale(true)).unwrap();
            let mut buf = Vec::new();
            write_trace_csv(&r.trace, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines[0], TRACE_HEADER);
            assert_eq!(lines.len() - 1, r.iterations);
            for l in &lines[1..] {
                assert_eq!(l.split(',').count(), 7);
            }
        }
    }

    #[test]
    fn summary_residual_is_exact() {
        let a = SparseMatrix::from_diagonal(&[3.0, -0.5]);
        let r = crate::sign::run(&a, &IterationConfig::new(Method::Nm)).unwrap();
        let s = RunSummary::from_result(Method::Nm, 2, &r);
        let back: RunSummary = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back.final_residual, r.trace.final_residual());
        assert_eq!(back.method, Method::Nm);
    }

    #[test]
    fn failure_summary_names_error() {
        let s = RunSummary::from_error(Method::Nm, 2, &Error::SingularIterate { iteration: 1 }, 0.0);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "SingularIterate");
        assert_eq!(v["converged"], false);
        assert!(v["final_residual"].is_null());
    }
}
