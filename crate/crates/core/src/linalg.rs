//! Small sparse-matrix layer: triplet assembly, CSR storage, and an SPD
//! direct solver backed by faer's sparse Cholesky.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Square sparse matrix being assembled from `(row, col, value)` triplets.
/// Duplicate entries are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

/// Compressed sparse row matrix (square).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        TripletBuilder::new(n).build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `|A| |x|` entrywise, a bound for rounding errors in `A x`.
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| (v * x[j]).abs()).sum()).collect()
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::new(self.n);
        for (i, j, v) in self.triplets() {
            b.push(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, s * v);
        }
        b.build()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Coordinate text export: one `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:?}");
        }
        s
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trip: Vec<Triplet<usize, usize, f64>> =
            self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::LinearSolveFailure(format!("matrix conversion: {e:?}")))
    }
}

/// Cholesky factorization of a symmetric positive definite sparse matrix.
pub struct SpdSolver {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdSolver {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.n == 0 {
            return Err(Error::LinearSolveFailure("empty system".into()));
        }
        let llt = a
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::LinearSolveFailure(format!("cholesky: {e:?}")))?;
        Ok(SpdSolver { n: a.n, llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        x
    }

    /// Solves for several right-hand sides at once (columns of `b`).
    pub fn solve_many(&self, mut b: Mat<f64>) -> Mat<f64> {
        self.llt.solve_in_place(b.as_mut());
        b
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 0, -1.0);
        let m = b.build();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![3.0, -1.0]);
    }

    #[test]
    fn cholesky_solves_spd_and_rejects_indefinite() {
        let mut b = TripletBuilder::new(3);
        for (i, j, v) in [(0, 0, 4.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 4.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 4.0)] {
            b.push(i, j, v);
        }
        let a = b.build();
        let x = SpdSolver::factor(&a).unwrap().solve(&[1.0, 2.0, 3.0]);
        let r = sub(&a.mul_vec(&x), &[1.0, 2.0, 3.0]);
        assert!(norm2(&r) < 1e-14);

        let mut b = TripletBuilder::new(2);
        b.push(0, 0, -1.0);
        b.push(1, 1, 1.0);
        assert!(matches!(SpdSolver::factor(&b.build()), Err(Error::LinearSolveFailure(_))));
    }

    #[test]
    fn coordinate_export_is_zero_based() {
        let mut b = TripletBuilder::new(2);
        b.push(1, 0, 0.5);
        assert_eq!(b.build().to_coordinate_text(), "1 0 0.5\n");
    }
}
