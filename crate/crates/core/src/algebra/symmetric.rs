//! Small dense real matrices and a cyclic Jacobi eigensolver for the
//! symmetric Gram matrices that appear in the linear constraint sets.

use crate::scalar::Real;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// `Aᵀ·y`.
    pub fn tmatvec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(self.rows, y.len());
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `A·Aᵀ`.
    pub fn gram_rows(&self) -> Self {
        self.matmul(&self.transpose())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for RealMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition `S = V·diag(λ)·Vᵀ` of a symmetric matrix. Column `k` of
/// `vectors` pairs with `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: RealMatrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
    pub fn new(s: &RealMatrix<T>) -> Self {
        assert_eq!(s.rows, s.cols, "matrix must be square");
        let n = s.rows;
        let mut a = s.clone();
        let mut v = RealMatrix::identity(n);
        let scale = a.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        let eps = T::epsilon() * T::lit(1e-2);
        for _sweep in 0..100 {
            let off = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .fold(T::zero(), |acc, (i, j)| acc + a[(i, j)] * a[(i, j)])
                .sqrt();
            if off <= eps * scale || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s_ = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s_ * akq;
                        a[(k, q)] = s_ * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s_ * aqk;
                        a[(q, k)] = s_ * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s_ * vkq;
                        v[(k, q)] = s_ * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..n).map(|i| a[(i, i)]).collect();
        Self { values, vectors: v }
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &x| m.max(x))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &x| m.min(x))
    }

    /// Coordinates of `x` in the eigenbasis: `Vᵀ·x`.
    pub fn to_basis(&self, x: &[T]) -> Vec<T> {
        self.vectors.tmatvec(x)
    }

    /// Inverse of [`Self::to_basis`]: `V·z`.
    pub fn from_basis(&self, z: &[T]) -> Vec<T> {
        self.vectors.matvec(z)
    }

    /// Solves `S·x = b` assuming `S` is nonsingular.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let z: Vec<T> = self.to_basis(b).iter().zip(&self.values).map(|(&zi, &l)| zi / l).collect();
        self.from_basis(&z)
    }
}
