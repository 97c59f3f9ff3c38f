//! Small dense `m × d` matrices (`m, d ≤ 3`) for gradients `Λ`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

pub const MAX_DIM: usize = 3;

/// Row-major `rows × cols` matrix with inline storage.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&rows) && (1..=MAX_DIM).contains(&cols));
        Mat {
            rows,
            cols,
            data: [0.0; MAX_DIM * MAX_DIM],
        }
    }

    pub fn from_slice(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols, "matrix entry count");
        let mut m = Mat::zeros(rows, cols);
        m.data[..rows * cols].copy_from_slice(values);
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// `Λ = s · e_0 ⊗ e_0`, a convenient test direction.
    pub fn scalar(value: f64) -> Self {
        Mat::from_slice(1, 1, &[value])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.rows * self.cols]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let n = self.rows * self.cols;
        &mut self.data[..n]
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn norm_sq(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Frobenius inner product `A : B`.
    pub fn dot(&self, other: &Mat) -> f64 {
        debug_assert!(self.same_shape(other));
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn det(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let a = |i: usize, j: usize| self[(i, j)];
        match self.rows {
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            _ => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
        }
    }

    /// Cofactor matrix, i.e. `∂ det / ∂Λ`.
    pub fn cofactor(&self) -> Mat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut c = Mat::zeros(n, n);
        match n {
            1 => c[(0, 0)] = 1.0,
            2 => {
                c[(0, 0)] = self[(1, 1)];
                c[(0, 1)] = -self[(1, 0)];
                c[(1, 0)] = -self[(0, 1)];
                c[(1, 1)] = self[(0, 0)];
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                        c[(i, j)] = self[(i1, j1)] * self[(i2, j2)] - self[(i1, j2)] * self[(i2, j1)];
                    }
                }
            }
        }
        c
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        self += rhs;
        self
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        debug_assert!(self.same_shape(&rhs));
        let n = self.len();
        for i in 0..n {
            self.data[i] += rhs.data[i];
        }
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        debug_assert!(self.same_shape(&rhs));
        let n = self.len();
        for i in 0..n {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, rhs: f64) -> Mat {
        self.scale(rhs)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}{:?}", self.rows, self.cols, self.as_slice())
    }
}
