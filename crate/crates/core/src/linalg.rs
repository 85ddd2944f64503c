//! Matrix storage and the handful of kernels the solver needs.
//!
//! Instances are stored dense up to [`DENSE_LIMIT`] columns and in compressed
//! sparse column form above it. Everything downstream works through
//! [`MatrixStore`] so the solve path does not care which representation is
//! active.

use nalgebra::{DMatrix, DVector};

/// Column count above which instance matrices switch to CSC storage.
pub const DENSE_LIMIT: usize = 512;

/// Compressed sparse column matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from triplets; duplicate entries are summed, exact zeros kept out.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            cols[j].push((i, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|&(i, _)| i);
            let mut k = 0;
            while k < col.len() {
                let row = col[k].0;
                let mut sum = 0.0;
                while k < col.len() && col[k].0 == row {
                    sum += col[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    row_idx.push(row);
                    values.push(sum);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets)
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

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    /// Value at `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
        y
    }

    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            let mut acc = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                acc += v * x[i];
            }
            y[j] = acc;
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &v| a.max(v.abs()))
    }

    /// True when no stored entry sits off the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(i, j, _)| i == j)
    }

    pub fn diagonal(&self) -> DVector<f64> {
        let k = self.nrows.min(self.ncols);
        DVector::from_fn(k, |i, _| self.get(i, i))
    }
}

/// Dense-or-sparse storage behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixStore {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix),
}

impl MatrixStore {
    /// Picks the representation from the column count of `m`.
    pub fn from_dense_auto(m: DMatrix<f64>) -> Self {
        if m.ncols() <= DENSE_LIMIT {
            MatrixStore::Dense(m)
        } else {
            MatrixStore::Sparse(CscMatrix::from_dense(&m))
        }
    }

    pub fn from_triplets_auto(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let csc = CscMatrix::from_triplets(nrows, ncols, triplets);
        if ncols <= DENSE_LIMIT {
            MatrixStore::Dense(csc.to_dense())
        } else {
            MatrixStore::Sparse(csc)
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            MatrixStore::Dense(m) => m.nrows(),
            MatrixStore::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixStore::Dense(m) => m.ncols(),
            MatrixStore::Sparse(m) => m.ncols(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixStore::Dense(m) => m.clone(),
            MatrixStore::Sparse(m) => m.to_dense(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            MatrixStore::Dense(m) => m * x,
            MatrixStore::Sparse(m) => m.mul_vec(x),
        }
    }

    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            MatrixStore::Dense(m) => m.transpose() * x,
            MatrixStore::Sparse(m) => m.tr_mul_vec(x),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            MatrixStore::Dense(m) => m.iter().fold(0.0, |a: f64, &v| a.max(v.abs())),
            MatrixStore::Sparse(m) => m.max_abs(),
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        match self {
            MatrixStore::Dense(m) => DVector::from_fn(m.nrows().min(m.ncols()), |i, _| m[(i, i)]),
            MatrixStore::Sparse(m) => m.diagonal(),
        }
    }

    /// True when every (stored) off-diagonal entry is zero.
    pub fn is_diagonal(&self) -> bool {
        match self {
            MatrixStore::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if i != j && m[(i, j)] != 0.0 {
                            return false;
                        }
                    }
                }
                true
            }
            MatrixStore::Sparse(m) => m.is_diagonal(),
        }
    }

    /// Largest `|m_ij − m_ji|` together with its index pair.
    pub fn symmetry_deviation(&self) -> (f64, (usize, usize)) {
        let mut worst = 0.0;
        let mut at = (0, 0);
        match self {
            MatrixStore::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in (j + 1)..m.nrows() {
                        let d = (m[(i, j)] - m[(j, i)]).abs();
                        if d > worst {
                            worst = d;
                            at = (i, j);
                        }
                    }
                }
            }
            MatrixStore::Sparse(m) => {
                for (i, j, v) in m.iter() {
                    if i == j {
                        continue;
                    }
                    let d = (v - m.get(j, i)).abs();
                    if d > worst {
                        worst = d;
                        at = (i, j);
                    }
                }
            }
        }
        (worst, at)
    }

    /// Accumulates `out += Σ_j w_j · a_j a_jᵀ` over the columns `a_j` of the
    /// matrix. This is `A · diag(w) · Aᵀ`, the kernel behind both the Schur
    /// complement and the weighted projection.
    pub fn add_weighted_gram(&self, weights: &DVector<f64>, out: &mut DMatrix<f64>) {
        let m = self.nrows();
        assert_eq!(weights.len(), self.ncols());
        assert_eq!(out.nrows(), m);
        assert_eq!(out.ncols(), m);
        match self {
            MatrixStore::Dense(a) => {
                for j in 0..a.ncols() {
                    let wj = weights[j];
                    if wj == 0.0 {
                        continue;
                    }
                    let col = a.column(j);
                    for k in 0..m {
                        let wk = wj * col[k];
                        if wk == 0.0 {
                            continue;
                        }
                        for i in k..m {
                            out[(i, k)] += wk * col[i];
                        }
                    }
                }
            }
            MatrixStore::Sparse(a) => {
                for j in 0..a.ncols() {
                    let wj = weights[j];
                    if wj == 0.0 {
                        continue;
                    }
                    let (rows, vals) = a.col(j);
                    for (p, (&k, &vk)) in rows.iter().zip(vals).enumerate() {
                        let wk = wj * vk;
                        for (&i, &vi) in rows[p..].iter().zip(&vals[p..]) {
                            out[(i, k)] += wk * vi;
                        }
                    }
                }
            }
        }
        // Mirror the lower triangle.
        for k in 0..m {
            for i in (k + 1)..m {
                out[(k, i)] = out[(i, k)];
            }
        }
    }
}

/// `‖v‖_p` for the two norms the neighbourhoods use.
pub fn norm_p(v: &DVector<f64>, p: crate::newton::NormTag) -> f64 {
    match p {
        crate::newton::NormTag::Two => v.norm(),
        crate::newton::NormTag::Inf => v.amax(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, -3.0, 4.0, 0.0])
    }

    #[test]
    fn csc_round_trip_and_products() {
        let d = small();
        let s = CscMatrix::from_dense(&d);
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.to_dense(), d);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(s.mul_vec(&x), &d * &x);
        let y = DVector::from_vec(vec![-1.0, 0.5]);
        assert_relative_eq!(s.tr_mul_vec(&y), d.transpose() * &y);
    }

    #[test]
    fn weighted_gram_matches_explicit_product() {
        let d = small();
        let w = DVector::from_vec(vec![0.5, 2.0, 1.5]);
        let expect = &d * DMatrix::from_diagonal(&w) * d.transpose();
        for store in [
            MatrixStore::Dense(d.clone()),
            MatrixStore::Sparse(CscMatrix::from_dense(&d)),
        ] {
            let mut out = DMatrix::zeros(2, 2);
            store.add_weighted_gram(&w, &mut out);
            assert_relative_eq!(out, expect.clone(), epsilon = 1e-14);
        }
    }

    #[test]
    fn diagonal_detection() {
        let q = DMatrix::from_partial_diagonal(3, 3, &[1.0, 0.0, 2.0]);
        assert!(MatrixStore::Dense(q.clone()).is_diagonal());
        assert!(MatrixStore::Sparse(CscMatrix::from_dense(&q)).is_diagonal());
        let mut q2 = q;
        q2[(0, 2)] = 1e-30;
        assert!(!MatrixStore::Dense(q2.clone()).is_diagonal());
        assert!(!MatrixStore::Sparse(CscMatrix::from_dense(&q2)).is_diagonal());
    }

    #[test]
    fn symmetry_deviation_reports_offender() {
        let mut q = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        q[(1, 0)] = 2.5;
        let (dev, at) = MatrixStore::Dense(q.clone()).symmetry_deviation();
        assert_relative_eq!(dev, 0.5);
        assert_eq!(at, (1, 0));
        let (dev_s, _) = MatrixStore::Sparse(CscMatrix::from_dense(&q)).symmetry_deviation();
        assert_relative_eq!(dev_s, 0.5);
    }
}
