use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix over `Complex64`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation; panics on size mismatch.
    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.offsets[r]..self.offsets[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets = (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v.conj())))
            .collect();
        Self::from_triplets(self.cols, self.rows, triplets)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let triplets = (0..self.rows)
            .flat_map(|r| self.row(r).chain(other.row(r)).map(move |(c, v)| (r, c, v)))
            .collect();
        Ok(Self::from_triplets(self.rows, self.cols, triplets))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Largest row sum of absolute values, an upper bound for the operator norm of a
    /// Hermitian matrix.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij − conj A_ji|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let adj = self.adjoint();
        let mut defect = 0.0_f64;
        for r in 0..self.rows {
            let mut a: Vec<_> = self.row(r).collect();
            let mut b: Vec<_> = adj.row(r).collect();
            a.sort_by_key(|x| x.0);
            b.sort_by_key(|x| x.0);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let ci = a.get(i).map_or(usize::MAX, |x| x.0);
                let cj = b.get(j).map_or(usize::MAX, |x| x.0);
                let d = if ci == cj {
                    let d = (a[i].1 - b[j].1).norm();
                    i += 1;
                    j += 1;
                    d
                } else if ci < cj {
                    i += 1;
                    a[i - 1].1.norm()
                } else {
                    j += 1;
                    b[j - 1].1.norm()
                };
                defect = defect.max(d);
            }
        }
        defect
    }
}
