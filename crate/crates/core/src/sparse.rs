//! Compressed sparse row storage shared by the real assembled matrices and the
//! complex fiber pencils.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Field element usable in CSR storage.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + Send
    + Sync
    + std::fmt::Debug
    + nalgebra::Scalar
    + 'static
{
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn from_real(x: f64) -> Self;
    fn scale(self, x: f64) -> Self;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
}

/// Square or rectangular CSR matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Build from unordered `(row, col, value)` triplets; duplicates are summed.
    /// The result does not depend on the order of the triplets up to the
    /// floating-point summation order of duplicates, which follows a stable sort.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::default(),
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::default();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᴴ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        let ax = self.mul_vec(x);
        x.iter()
            .zip(&ax)
            .fold(T::default(), |acc, (&xi, &yi)| acc + xi.conj() * yi)
    }

    /// Same sparsity pattern with values mapped.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_pattern(&self, other: &CsrMatrix<T>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `self + s · other` on a shared pattern.
    pub fn add_scaled(&self, other: &CsrMatrix<T>, s: f64) -> CsrMatrix<T> {
        assert!(self.same_pattern(other), "patterns differ");
        let mut out = self.clone();
        for (v, &w) in out.values.iter_mut().zip(&other.values) {
            *v += w.scale(s);
        }
        out
    }

    /// `max |a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm_sqr().sqrt());
            }
        }
        worst
    }

    /// Overwrite the strictly lower triangle with the conjugate of the upper
    /// one and drop imaginary parts on the diagonal. The pattern must be
    /// structurally symmetric.
    pub fn hermitize_from_upper(&mut self) {
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j < i {
                    self.values[k] = self.get(j, i).conj();
                } else if j == i {
                    self.values[k] = T::from_real(self.values[k].re());
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm_sqr().sqrt()))
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::from_element(self.nrows, self.ncols, T::default());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::default(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
