//! Small dense/sparse linear-algebra helpers sized for desk-scale problems
//! (a few hundred unknowns). Deterministic: no pivoting ties are broken by
//! anything but index order, and all accumulations run in index order.

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn scaled_eye(n: usize, s: F) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    /// y = A x
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![F::zero(); self.rows];
        for r in 0..self.rows {
            let mut acc = F::zero();
            for c in 0..self.cols {
                acc += self[(r, c)] * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// Symmetric rank-one accumulation A += s * v v'.
    pub fn add_outer(&mut self, s: F, v: &[F]) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(self.rows, self.cols);
        for r in 0..self.rows {
            let vr = s * v[r];
            if vr == F::zero() {
                continue;
            }
            for c in 0..self.cols {
                self[(r, c)] += vr * v[c];
            }
        }
    }
}

impl<F: Scalar> std::ops::Index<(usize, usize)> for Mat<F> {
    type Output = F;
    fn index(&self, (r, c): (usize, usize)) -> &F {
        &self.data[r * self.cols + c]
    }
}

impl<F: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<F> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut F {
        &mut self.data[r * self.cols + c]
    }
}

/// Sparse matrix in triplet form; duplicate entries sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplets<F> {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, F)>,
}

impl<F: Scalar> Triplets<F> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Triplets { rows, cols, entries: Vec::new() }
    }

    pub fn push(&mut self, r: usize, c: usize, v: F) {
        debug_assert!(r < self.rows && c < self.cols);
        self.entries.push((r, c, v));
    }

    pub fn to_dense(&self) -> Mat<F> {
        let mut m = Mat::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Row-compressed view: per row, (col, value) pairs sorted by column,
    /// duplicates summed.
    pub fn to_row_lists(&self) -> Vec<Vec<(usize, F)>> {
        let mut rows: Vec<Vec<(usize, F)>> = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, F)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        rows
    }

    /// y = A' x  (transpose-vector product).
    pub fn tr_vec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![F::zero(); self.cols];
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
        y
    }

    /// y = A x
    pub fn vec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![F::zero(); self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }
}

/// Solves A x = b by LU with partial pivoting, consuming A and b.
/// Returns None when a pivot falls below `tiny` (numerically singular).
pub fn lu_solve<F: Scalar>(mut a: Mat<F>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let tiny = real::<F>(1e-300);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[(k, k)].abs();
        for r in (k + 1)..n {
            let mag = a[(r, k)].abs();
            if mag > best {
                best = mag;
                piv = r;
            }
        }
        if !(best > tiny) || !best.is_finite() {
            return None;
        }
        if piv != k {
            for c in 0..n {
                let t = a[(k, c)];
                a[(k, c)] = a[(piv, c)];
                a[(piv, c)] = t;
            }
            b.swap(k, piv);
        }
        let pivot = a[(k, k)];
        for r in (k + 1)..n {
            let factor = a[(r, k)] / pivot;
            if factor == F::zero() {
                continue;
            }
            a[(r, k)] = F::zero();
            for c in (k + 1)..n {
                let akc = a[(k, c)];
                a[(r, c)] -= factor * akc;
            }
            let bk = b[k];
            b[r] -= factor * bk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in (k + 1)..n {
            acc -= a[(k, c)] * b[c];
        }
        b[k] = acc / a[(k, k)];
    }
    if b.iter().all(|v| v.is_finite()) {
        Some(b)
    } else {
        None
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm_inf<F: Scalar>(a: &[F]) -> F {
    let mut m = F::zero();
    for &v in a {
        let mag = v.abs();
        if mag > m {
            m = mag;
        }
    }
    m
}

pub fn norm2<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

use crate::scalar::real;
