//! Plain-text sparse triplet format.
//!
//! ```text
//! rows cols nnz
//! i j value          (real)
//! i j re im          (complex)
//! ```
//! Indices are 0-based; lines starting with `#` are ignored.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

pub fn write_triplets<T: Scalar>(m: &CsrMatrix<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        if T::IS_COMPLEX {
            let z = v.to_c64();
            let _ = writeln!(out, "{i} {j} {:e} {:e}", z.re, z.im);
        } else {
            let _ = writeln!(out, "{i} {j} {:e}", v.re());
        }
    }
    out
}

pub fn read_triplets<T: Scalar>(text: &str) -> Result<CsrMatrix<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let h: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { line: hl, msg: format!("header: {e}") })?;
    if h.len() != 3 {
        return Err(Error::Parse { line: hl, msg: "header must be `rows cols nnz`".into() });
    }
    let (rows, cols, nnz) = (h[0], h[1], h[2]);
    let mut trips = Vec::with_capacity(nnz);
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        let want = if T::IS_COMPLEX { 4 } else { 3 };
        if tok.len() != want {
            return Err(Error::Parse { line: ln, msg: format!("expected {want} fields, found {}", tok.len()) });
        }
        let perr = |e: String| Error::Parse { line: ln, msg: e };
        let i: usize = tok[0].parse().map_err(|e| perr(format!("row index: {e}")))?;
        let j: usize = tok[1].parse().map_err(|e| perr(format!("column index: {e}")))?;
        if i >= rows || j >= cols {
            return Err(perr(format!("entry ({i},{j}) outside {rows}x{cols}")));
        }
        let re: f64 = tok[2].parse().map_err(|e| perr(format!("value: {e}")))?;
        let im: f64 = if T::IS_COMPLEX { tok[3].parse().map_err(|e| perr(format!("value: {e}")))? } else { 0.0 };
        trips.push((i, j, T::from_c64(Complex64::new(re, im))));
    }
    if trips.len() != nnz {
        return Err(Error::Parse { line: hl, msg: format!("header announces {nnz} entries, found {}", trips.len()) });
    }
    Ok(CsrMatrix::from_triplets(rows, cols, trips))
}
