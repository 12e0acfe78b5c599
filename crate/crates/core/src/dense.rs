//! Small row-major dense matrix with the handful of kernels the condition
//! formulas need.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.to_f64().is_finite()) {
            return Err(Error::InvalidParams("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
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
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn convert<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        self.convert()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(|x| x.abs())
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.to_f64().abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64() * x.to_f64()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(DenseMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(DenseMatrix { rows: self.rows, cols: self.cols, data })
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let brow = &other.data[k * oc..(k + 1) * oc];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for (a, &b) in self.row(i).iter().zip(x) {
                    s += *a * b;
                }
                s
            })
            .collect())
    }

    /// Copy of the block `rows r0..r1`, `cols c0..c1` placed in a zero matrix
    /// of the same shape.
    pub fn masked_block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            if i >= r0 && i < r1 && j >= c0 && j < c1 {
                self[(i, j)]
            } else {
                T::zero()
            }
        })
    }

    /// Strictly lower, diagonal and strictly upper parts.
    pub fn split_lower_diag_upper(&self) -> Result<(Self, Self, Self)> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("split of non-square {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let pick = |keep: fn(usize, usize) -> bool| {
            Self::from_fn(n, n, |i, j| if keep(i, j) { self[(i, j)] } else { T::zero() })
        };
        Ok((pick(|i, j| i > j), pick(|i, j| i == j), pick(|i, j| i < j)))
    }
}

impl DenseMatrix<f64> {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Fails with [`Error::Singular`] only on an exactly zero or non-finite
    /// pivot. Graded matrices legitimately carry pivots many orders below
    /// `||A||_max`, so reliability is judged afterwards from the backward error.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU of non-square {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best.to_f64() > 0.0 && best.to_f64().is_finite()) {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)].quot(piv);
                lu[(i, k)] = l;
                if l.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - l * u;
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::Dimension(format!("rhs has {} rows, matrix order {n}", b.rows)));
        }
        let m = b.cols;
        let mut x = DenseMatrix::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        for c in 0..m {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s.quot(self.lu[(i, i)]);
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        self.solve(&DenseMatrix::identity(self.n)).expect("square identity")
    }
}

pub fn solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Lu::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use twofloat::TwoFloat;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_rows(&[vec![4.0, 1.0, 0.5], vec![2.0, -3.0, 1.0], vec![0.0, 1.0, 5.0]]).unwrap()
    }

    #[test]
    fn split_reassembles() {
        let a = sample();
        let (l, d, u) = a.split_lower_diag_upper().unwrap();
        assert_eq!(l.add(&d).unwrap().add(&u).unwrap(), a);
        assert_eq!(l[(0, 1)], 0.0);
        assert_eq!(u[(1, 0)], 0.0);
        assert_eq!(d[(1, 1)], -3.0);
    }

    #[test]
    fn split_rejects_rectangular() {
        assert!(DenseMatrix::<f64>::zeros(2, 3).split_lower_diag_upper().is_err());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = sample();
        let inv = Lu::factor(&a).unwrap().inverse();
        let id = a.matmul(&inv).unwrap();
        assert!(id.sub(&DenseMatrix::identity(3)).unwrap().max_norm() < 1e-14);
    }

    #[test]
    fn singular_is_flagged() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(Lu::factor(&a).unwrap_err(), Error::Singular);
    }

    #[test]
    fn extended_solve_beats_double_when_nearly_singular() {
        let eps = 2f64.powi(-40);
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + eps]]).unwrap();
        // b = A [1, 1]^T, exact in binary
        let b = DenseMatrix::from_rows(&[vec![2.0], vec![2.0 + eps]]).unwrap();
        let xe = solve(&a.convert::<TwoFloat>(), &b.convert()).unwrap().to_f64();
        assert!((xe[(0, 0)] - 1.0).abs() < 1e-15 && (xe[(1, 0)] - 1.0).abs() < 1e-15);
        let xd = solve(&a, &b).unwrap();
        assert!(xd.sub(&xe).unwrap().max_norm() < 1e-3);
    }

    #[test]
    fn rejects_nonfinite() {
        assert!(DenseMatrix::from_vec(1, 1, vec![f64::NAN]).is_err());
    }
}
