//! Dense complex matrices, row-major storage, desk scale (n up to a few
//! hundred). The JSON form is `{"rows": r, "cols": c, "data": [[re, im], ...]}`
//! with entries listed row by row.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub type C64 = Complex64;

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Rows given as slices of (re, im) pairs; panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let as_c: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&as_c)
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vector(v: &[C64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// (M + M*)/2, defined for square matrices.
    pub fn hermitized(&self) -> CMatrix {
        assert!(self.is_square());
        CMatrix::from_fn(self.rows, self.cols, |r, c| {
            0.5 * (self[(r, c)] + self[(c, r)].conj())
        })
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).fold(C64::new(0.0, 0.0), |acc, c| acc + self[(r, c)] * v[c]))
            .collect()
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for r in 0..self.rows {
            self[(r, c)] = v[r];
        }
    }

    /// Copy the block with the given half-open row/column ranges.
    pub fn submatrix(&self, rs: std::ops::Range<usize>, cs: std::ops::Range<usize>) -> CMatrix {
        CMatrix::from_fn(rs.len(), cs.len(), |r, c| self[(rs.start + r, cs.start + c)])
    }

    /// Assemble [[a, b], [c, d]]; shapes must be consistent.
    pub fn from_blocks(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        let mut out = CMatrix::zeros(a.rows + c.rows, a.cols + b.cols);
        for r in 0..a.rows {
            for cc in 0..a.cols {
                out[(r, cc)] = a[(r, cc)];
            }
            for cc in 0..b.cols {
                out[(r, a.cols + cc)] = b[(r, cc)];
            }
        }
        for r in 0..c.rows {
            for cc in 0..c.cols {
                out[(a.rows + r, cc)] = c[(r, cc)];
            }
            for cc in 0..d.cols {
                out[(a.rows + r, a.cols + cc)] = d[(r, cc)];
            }
        }
        out
    }

    /// Largest entry magnitude.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum (induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    pub fn validate_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{context}: matrix has non-finite entries"
            )))
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(12) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        let pairs: Vec<[f64; 2]> = self.data.iter().map(|z| [z.re, z.im]).collect();
        st.serialize_field("data", &pairs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            data: Vec<[f64; 2]>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.data.len() != raw.rows * raw.cols {
            return Err(de::Error::custom(format!(
                "data length {} does not match {}x{}",
                raw.data.len(),
                raw.rows,
                raw.cols
            )));
        }
        let data: Vec<C64> = raw.data.iter().map(|p| C64::new(p[0], p[1])).collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(de::Error::custom("matrix entries must be finite"));
        }
        Ok(CMatrix {
            rows: raw.rows,
            cols: raw.cols,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_assembly_round_trips() {
        let a = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = CMatrix::zeros(2, 1);
        let c = CMatrix::from_real_rows(&[vec![5.0, 6.0]]);
        let d = CMatrix::from_real_rows(&[vec![7.0]]);
        let m = CMatrix::from_blocks(&a, &b, &c, &d);
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.submatrix(0..2, 0..2), a);
        assert_eq!(m.submatrix(2..3, 2..3), d);
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let m = CMatrix::from_rows(&[vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0)]]);
        let a = m.adjoint();
        assert_eq!(a.rows(), 2);
        assert_eq!(a[(0, 0)], C64::new(1.0, -2.0));
        assert_eq!(a[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn json_format_matches_contract() {
        let m = CMatrix::from_rows(&[vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"rows":1,"cols":2,"data":[[1.0,0.0],[0.0,2.0]]}"#);
        let back: CMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_bad_length_and_nonfinite() {
        let bad: std::result::Result<CMatrix, _> =
            serde_json::from_str(r#"{"rows":2,"cols":2,"data":[[1.0,0.0]]}"#);
        assert!(bad.is_err());
        let nan: std::result::Result<CMatrix, _> =
            serde_json::from_str(r#"{"rows":1,"cols":1,"data":[[null,0.0]]}"#);
        assert!(nan.is_err());
    }
}
