//! Dense matrices over an exact coefficient ring.
//!
//! Blocks at desk scale are small, so storage is a plain row-major vector.

use crate::ring::{Ring, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, ring: &Ring) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![ring.zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, ring: &Ring) -> Matrix {
        let mut m = Matrix::zeros(n, n, ring);
        for i in 0..n {
            m.set(i, i, ring.one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self.get(i, j);
                if i == j && !e.is_one() {
                    return false;
                }
                if i != j && !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn mul(&self, rhs: &Matrix, ring: &Ring) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols, ring);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j);
                    out.set(i, j, ring.add(cur, &ring.mul(a, b)));
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix, ring: &Ring) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            ring.add(self.get(i, j), rhs.get(i, j))
        })
    }

    pub fn sub(&self, rhs: &Matrix, ring: &Ring) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            ring.sub(self.get(i, j), rhs.get(i, j))
        })
    }

    pub fn neg(&self, ring: &Ring) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| ring.neg(self.get(i, j)))
    }

    pub fn scale(&self, c: &Scalar, ring: &Ring) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| ring.mul(c, self.get(i, j)))
    }

    /// Rank over a field, by Gaussian elimination. Panics over the integers.
    pub fn rank_field(&self, ring: &Ring) -> usize {
        assert!(ring.is_field(), "rank_field requires a field");
        let mut m = self.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..m.cols {
            let pivot = (row..m.rows).find(|&i| !m.get(i, col).is_zero());
            let Some(p) = pivot else { continue };
            if p != row {
                for j in 0..m.cols {
                    let a = m.get(row, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(row, j, b);
                    m.set(p, j, a);
                }
            }
            let inv = ring.inv(m.get(row, col)).expect("nonzero field element");
            for i in (row + 1)..m.rows {
                let factor = ring.mul(m.get(i, col), &inv);
                if factor.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = ring.sub(m.get(i, j), &ring.mul(&factor, m.get(row, j)));
                    m.set(i, j, v);
                }
            }
            rank += 1;
            row += 1;
            if row == m.rows {
                break;
            }
        }
        rank
    }
}
