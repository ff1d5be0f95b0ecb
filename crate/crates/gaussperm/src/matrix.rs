//! Dense row-major real matrices.
//!
//! The storage is deliberately plain: `entries[i * cols + j]` holds `A[i, j]`
//! as an `f64`. Entries are checked to be finite on every construction path,
//! so downstream numerics never have to re-validate. Values are immutable
//! after construction and safe to share across threads.

use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, validating the length and
    /// rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "entry count {} does not match {}x{}",
                entries.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry {} at flat index {}",
                entries[pos], pos
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from explicit rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    ncols
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::new(nrows, ncols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut entries = vec![0.0; self.entries.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Frobenius norm: square root of the sum of squared entries. An upper
    /// bound on the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Certified upper bound on the operator norm. No iterative spectral
    /// computation is shipped; the Frobenius norm is the bound.
    pub fn operator_norm_upper(&self) -> f64 {
        self.frobenius_norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// Largest absolute asymmetry `|A[i,j] - A[j,i]|`; 0 for non-square.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    /// Parses the shared text format: one row per line, entries separated by
    /// commas or whitespace, lines starting with `#` ignored, blank lines
    /// ignored, scientific notation accepted. All rows must have equal length.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("cannot parse entry {:?}", tok),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("non-finite entry {:?}", tok),
                    });
                }
                row.push(v);
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("row has {} entries, expected {}", row.len(), w),
                    });
                }
                _ => {}
            }
            rows.push(row);
        }
        DenseMatrix::from_rows(&rows)
    }

    /// Serializes in the same text format. Entries are printed with the
    /// shortest representation that round-trips, so
    /// `from_text(to_text(a)) == a` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| format!("{}", e)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_known_values() {
        let a = DenseMatrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(a.frobenius_norm(), 5.0);

        let eye = DenseMatrix::identity(9);
        assert!((eye.frobenius_norm() - 3.0).abs() < 1e-15);

        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!((b.frobenius_norm() - 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_upper_cases() {
        let d = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        // Frobenius sqrt(5) dominates the true operator norm 2.
        assert!((d.operator_norm_upper() - 5f64.sqrt()).abs() < 1e-15);
        assert!(d.operator_norm_upper() >= 2.0);

        let one = DenseMatrix::from_rows(&[[2.0]]).unwrap();
        assert_eq!(one.operator_norm_upper(), 2.0);

        assert_eq!(DenseMatrix::zeros(3, 3).operator_norm_upper(), 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let err = DenseMatrix::new(1, 2, vec![1.0, f64::NAN]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = DenseMatrix::new(1, 1, vec![f64::INFINITY]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_length() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn parses_commas_whitespace_comments() {
        let text = "# adjacency\n1, 2\n3 4\n\n# trailing comment line\n";
        let a = DenseMatrix::from_text(text).unwrap();
        assert_eq!(a.rows(), 2);
        assert_eq!(a.entries(), &[1.0, 2.0, 3.0, 4.0]);

        let sci = DenseMatrix::from_text("1e3 -2.5E-2\n0.0 4\n").unwrap();
        assert_eq!(sci.get(0, 0), 1000.0);
        assert_eq!(sci.get(0, 1), -0.025);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match DenseMatrix::from_text("1 2\n3 oops\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other),
        }
        match DenseMatrix::from_text("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged-row error, got {:?}", other),
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let a = DenseMatrix::from_rows(&[
            [0.1, -2.5e-17, 3.0],
            [1.0 / 3.0, 4.0, 5e300],
        ])
        .unwrap();
        let b = DenseMatrix::from_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_matrix_is_allowed() {
        let a = DenseMatrix::new(0, 0, vec![]).unwrap();
        assert!(a.is_square());
        assert_eq!(a.frobenius_norm(), 0.0);
    }
}
