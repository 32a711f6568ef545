//! Compressed sparse row storage for complex superoperators.

use rayon::prelude::*;

use crate::scalar::{czero, Cx, Real};

/// Rows at or above this count are multiplied in parallel.
const PAR_ROWS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Cx<T>>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a square matrix from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros are not stored.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Cx<T>)>) -> Self {
        triplets.par_sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Cx<T>> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v.re != T::zero() || v.im != T::zero() {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Cx<T>)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Cx<T>)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => czero(),
        }
    }

    pub fn matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut y = vec![czero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Cx<T>], y: &mut [Cx<T>]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row_dot = |i: usize| {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            self.col_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .fold(czero(), |acc, (&j, v)| acc + v * x[j])
        };
        if self.dim >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        }
    }

    /// `y = A† x`.
    pub fn adjoint_matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![czero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v.conj() * xi;
            }
        }
        y
    }

    pub fn map_values(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let triplets = self.triplets().chain(rhs.triplets()).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, triplets)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut cols = vec![T::zero(); self.dim];
        for (&j, v) in self.col_idx.iter().zip(&self.values) {
            cols[j] += v.norm();
        }
        cols.into_iter().fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![
                (0, 1, c(1.0, 0.0)),
                (2, 0, c(0.0, 2.0)),
                (0, 1, c(2.0, 1.0)),
                (1, 1, c(1.0, 0.0)),
                (1, 1, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
        assert_eq!(m.matvec(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]), vec![
            c(3.0, 1.0),
            c(0.0, 0.0),
            c(0.0, 2.0)
        ]);
    }

    #[test]
    fn adjoint_matvec_agrees_with_adjoint_matrix() {
        let m = CsrMatrix::from_triplets(
            2,
            vec![(0, 1, c(1.0, 2.0)), (1, 0, c(-3.0, 0.5)), (1, 1, c(0.0, 1.0))],
        );
        let x = [c(0.3, -1.0), c(2.0, 0.1)];
        assert_eq!(m.adjoint_matvec(&x), m.adjoint().matvec(&x));
    }
}
