//! Dense row-major matrices and the small amount of linear algebra the
//! rest of the crate is built on: arithmetic, LU solves with partial
//! pivoting, and the repo-wide CSV interchange format.

use std::fmt::Write as _;

use thiserror::Error;

use crate::rng::Prng;

/// Threshold (in multiply-adds) below which matmul stays sequential.
#[cfg(feature = "parallel")]
const PAR_FLOP_THRESHOLD: usize = 64 * 1024;

/// Dense real matrix, row-major storage.
///
/// Entries are finite by construction. Zero-sized dimensions are allowed
/// so that edge blocks (e.g. an empty Cayley `Y` block when q = r) work
/// without special cases.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        assert!(
            data.iter().all(|x| x.is_finite()),
            "matrix entries must be finite"
        );
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::new(rows, cols, data)
    }

    /// Entries drawn i.i.d. from `draw`, in row-major order.
    pub fn from_stream(rows: usize, cols: usize, rng: &mut Prng, draw: impl Fn(&mut Prng) -> f64) -> Self {
        let data = (0..rows * cols).map(|_| draw(rng)).collect();
        Matrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    fn matmul_seq_into(&self, other: &Matrix, out: &mut [f64]) {
        let (n, k, p) = (self.rows, self.cols, other.cols);
        for i in 0..n {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * p..(i + 1) * p];
            orow.iter_mut().for_each(|x| *x = 0.0);
            for (l, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[l * p..(l + 1) * p];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
    }

    /// Matrix product. Row blocks are computed independently, so the
    /// parallel and sequential paths produce bit-identical results.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        #[cfg(feature = "parallel")]
        {
            if self.rows * self.cols * other.cols >= PAR_FLOP_THRESHOLD && self.rows > 1 {
                use rayon::prelude::*;
                let p = other.cols;
                let k = self.cols;
                out.data
                    .par_chunks_mut(p)
                    .enumerate()
                    .for_each(|(i, orow)| {
                        let arow = &self.data[i * k..(i + 1) * k];
                        for (l, &a) in arow.iter().enumerate() {
                            if a == 0.0 {
                                continue;
                            }
                            let brow = &other.data[l * p..(l + 1) * p];
                            for (o, &b) in orow.iter_mut().zip(brow) {
                                *o += a * b;
                            }
                        }
                    });
                return out;
            }
        }
        let mut buf = std::mem::take(&mut out.data);
        self.matmul_seq_into(other, &mut buf);
        out.data = buf;
        out
    }

    /// Strictly sequential product; exposed for the benchmark suite.
    pub fn matmul_sequential(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        let mut buf = std::mem::take(&mut out.data);
        self.matmul_seq_into(other, &mut buf);
        out.data = buf;
        out
    }

    /// Scale column `j` by `c[j]`, i.e. `self * diag(c)`.
    pub fn mul_diag(&self, c: &[f64]) -> Matrix {
        assert_eq!(self.cols, c.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= c[j];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|x| x * c).collect())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Vertical stack: `[self; bottom]`.
    pub fn vstack(&self, bottom: &Matrix) -> Matrix {
        assert_eq!(self.cols, bottom.cols);
        let mut data = Vec::with_capacity((self.rows + bottom.rows) * self.cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&bottom.data);
        Matrix::new(self.rows + bottom.rows, self.cols, data)
    }

    /// Copy of the row band [r0, r1).
    pub fn row_block(&self, r0: usize, r1: usize) -> Matrix {
        assert!(r0 <= r1 && r1 <= self.rows);
        Matrix::new(
            r1 - r0,
            self.cols,
            self.data[r0 * self.cols..r1 * self.cols].to_vec(),
        )
    }

    /// Copy of the column band [c0, c1).
    pub fn col_block(&self, c0: usize, c1: usize) -> Matrix {
        assert!(c0 <= c1 && c1 <= self.cols);
        Matrix::from_fn(self.rows, c1 - c0, |i, j| self.get(i, c0 + j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    // ── CSV interchange format ───────────────────────────────────────
    //
    // First line `rows,cols`; one comma-separated line per matrix row,
    // entries printed with 17 significant digits so reads round-trip
    // writes bit-exactly.

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{},{}", self.rows, self.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut line = String::new();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{:.16e}", v);
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Matrix, CsvError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(CsvError::Empty)?;
        let mut dims = header.split(',');
        let rows: usize = dims
            .next()
            .ok_or_else(|| CsvError::Header(header.to_string()))?
            .trim()
            .parse()
            .map_err(|_| CsvError::Header(header.to_string()))?;
        let cols: usize = dims
            .next()
            .ok_or_else(|| CsvError::Header(header.to_string()))?
            .trim()
            .parse()
            .map_err(|_| CsvError::Header(header.to_string()))?;
        if dims.next().is_some() {
            return Err(CsvError::Header(header.to_string()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (k, line) in lines.enumerate() {
            if k >= rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(CsvError::RowCount { expected: rows });
            }
            let mut count = 0;
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| CsvError::Value { line: k + 2 })?;
                if !v.is_finite() {
                    return Err(CsvError::Value { line: k + 2 });
                }
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(CsvError::RowLength {
                    line: k + 2,
                    expected: cols,
                    got: count,
                });
            }
        }
        if data.len() != rows * cols {
            return Err(CsvError::RowCount { expected: rows });
        }
        Ok(Matrix::new(rows, cols, data))
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("empty matrix csv")]
    Empty,
    #[error("bad header line: {0:?} (expected `rows,cols`)")]
    Header(String),
    #[error("unparseable or non-finite value on line {line}")]
    Value { line: usize },
    #[error("row on line {line} has {got} entries, expected {expected}")]
    RowLength {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("wrong number of rows, expected {expected}")]
    RowCount { expected: usize },
}

// ── LU with partial pivoting ─────────────────────────────────────────

/// Packed LU factors of a square matrix.
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor `a` with partial pivoting. Panics if a pivot collapses to
    /// zero; all call sites in this crate solve with matrices that are
    /// provably invertible.
    pub fn factor(a: &Matrix) -> Lu {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..n {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            assert!(best > 0.0, "singular matrix in LU factorization");
            if piv != k {
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(piv, j));
                    lu.set(piv, j, tmp);
                }
                perm.swap(k, piv);
            }
            let pivot = lu.get(k, k);
            for i in k + 1..n {
                let factor = lu.get(i, k) / pivot;
                lu.set(i, k, factor);
                for j in k + 1..n {
                    let v = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Lu { lu, perm }
    }

    /// Solve `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows;
        assert_eq!(b.rows, n, "rhs row mismatch");
        let p = b.cols;
        let mut x = Matrix::zeros(n, p);
        for j in 0..p {
            // forward substitution on permuted rhs
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut s = b.get(self.perm[i], j);
                for k in 0..i {
                    s -= self.lu.get(i, k) * y[k];
                }
                y[i] = s;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= self.lu.get(i, k) * x.get(k, j);
                }
                x.set(i, j, s / self.lu.get(i, i));
            }
        }
        x
    }
}

/// Solve `A X = B` (one-shot convenience).
pub fn solve(a: &Matrix, b: &Matrix) -> Matrix {
    Lu::factor(a).solve(b)
}

/// Solve `X A = B`, i.e. X = B A^{-1}.
pub fn solve_right(b: &Matrix, a: &Matrix) -> Matrix {
    Lu::factor(&a.transpose()).solve(&b.transpose()).transpose()
}
