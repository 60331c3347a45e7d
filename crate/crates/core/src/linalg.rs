//! Exact dense linear algebra over the Gaussian rationals.
//!
//! Rank, kernel, solving and reduced row echelon forms are all computed by
//! fraction-exact Gaussian elimination; pivots are chosen greedily in column
//! order so reduced forms are canonical and subspace comparison is equality
//! of RREFs.

use alloc::vec::Vec;

use core::ops::Neg;
use num_traits::{Signed, Zero};

use crate::scalar::{GaussianRational, Rational};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<GaussianRational>,
}

impl core::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: alloc::vec![GaussianRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, GaussianRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &GaussianRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: GaussianRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[GaussianRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// In-place reduction to reduced row echelon form. Returns the pivot
    /// column indices in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self.get(r, c).inv();
            for j in c..self.cols {
                let v = self.get(r, j) * &inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && !self.get(i, c).is_zero() {
                    let f = self.get(i, c).clone();
                    for j in c..self.cols {
                        let v = self.get(i, j).clone() - (&f * self.get(r, j));
                        self.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel `{x : A x = 0}`, canonical from the RREF:
    /// one vector per free column, with unit entry at that column.
    pub fn kernel(&self) -> Vec<Vec<GaussianRational>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut basis = Vec::new();
        let mut piv_iter = pivots.iter().copied().enumerate().collect::<Vec<_>>();
        piv_iter.sort_by_key(|&(_, c)| c);
        for fc in 0..self.cols {
            if pivots.contains(&fc) {
                continue;
            }
            let mut v = alloc::vec![GaussianRational::zero(); self.cols];
            v[fc] = GaussianRational::one();
            for (ri, pc) in piv_iter.iter().copied() {
                v[pc] = m.get(ri, fc).clone().neg();
            }
            basis.push(v);
        }
        basis
    }

    /// Solve `A x = b`; `None` when inconsistent. Free variables are set to 0.
    pub fn solve(&self, b: &[GaussianRational]) -> Option<Vec<GaussianRational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // pivot in the augmented column
        }
        let mut x = alloc::vec![GaussianRational::zero(); self.cols];
        for (ri, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(ri, self.cols).clone();
        }
        Some(x)
    }

    /// Exact inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, GaussianRational::one());
        }
        let pivots = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return None;
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    pub fn mul_vec(&self, x: &[GaussianRational]) -> Vec<GaussianRational> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = GaussianRational::zero();
                for j in 0..self.cols {
                    acc += &(self.get(i, j) * &x[j]);
                }
                acc
            })
            .collect()
    }
}

/// A growable row space with incremental RREF reduction; used by closure
/// loops that keep adding vectors and need fast membership tests.
#[derive(Clone, Debug)]
pub struct RowSpace {
    cols: usize,
    /// Rows in RREF (each with a recorded pivot column).
    rows: Vec<(usize, Vec<GaussianRational>)>,
}

impl RowSpace {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the space; the remainder has zeros in every pivot
    /// column of the space.
    pub fn reduce(&self, mut v: Vec<GaussianRational>) -> Vec<GaussianRational> {
        assert_eq!(v.len(), self.cols);
        for (pc, row) in &self.rows {
            if v[*pc].is_zero() {
                continue;
            }
            let f = v[*pc].clone();
            for j in 0..self.cols {
                let delta = &f * &row[j];
                v[j] -= &delta;
            }
        }
        v
    }

    pub fn contains(&self, v: &[GaussianRational]) -> bool {
        self.reduce(v.to_vec()).iter().all(|c| c.is_zero())
    }

    /// Insert a vector; returns true when it enlarged the space.
    pub fn insert(&mut self, v: Vec<GaussianRational>) -> bool {
        let mut v = self.reduce(v);
        let Some(pc) = v.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let inv = v[pc].inv();
        for c in v.iter_mut() {
            *c = &*c * &inv;
        }
        // Back-substitute into existing rows to keep the RREF reduced.
        for (_, row) in self.rows.iter_mut() {
            if !row[pc].is_zero() {
                let f = row[pc].clone();
                for j in 0..self.cols {
                    let delta = &f * &v[j];
                    row[j] -= &delta;
                }
            }
        }
        self.rows.push((pc, v));
        self.rows.sort_by_key(|(pc, _)| *pc);
        true
    }

    /// The canonical (RREF) basis rows, sorted by pivot column.
    pub fn basis(&self) -> Vec<Vec<GaussianRational>> {
        self.rows.iter().map(|(_, r)| r.clone()).collect()
    }
}

/// Exact positive semidefiniteness of a hermitian matrix, by recursive
/// pivoting on the Schur complement. Diagonal entries must be real.
pub fn hermitian_is_psd(m: &Matrix) -> bool {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    let mut a: Vec<Vec<GaussianRational>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // Find a strictly positive diagonal pivot.
        let mut pivot = None;
        for (k, &i) in active.iter().enumerate() {
            let d = &a[i][i];
            assert!(d.is_real(), "hermitian matrix needs a real diagonal");
            if d.re.is_negative() {
                return false;
            }
            if d.re.is_positive() {
                pivot = Some(k);
                break;
            }
        }
        match pivot {
            None => {
                // All active diagonal entries are zero: PSD requires the
                // active block to vanish entirely.
                return active
                    .iter()
                    .all(|&i| active.iter().all(|&j| a[i][j].is_zero()));
            }
            Some(k) => {
                let i = active.remove(k);
                let d = a[i][i].clone();
                let d_inv = d.inv();
                for &p in &active {
                    for &q in &active {
                        let delta = &(&a[p][i] * &a[i][q]) * &d_inv;
                        let v = a[p][q].clone() - delta;
                        a[p][q] = v;
                    }
                }
            }
        }
    }
    true
}

/// Convenience: rational vector as Gaussian-rational vector.
pub fn real_vec(v: &[Rational]) -> Vec<GaussianRational> {
    v.iter().map(|r| GaussianRational::new(r.clone(), Rational::zero())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn gr(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    #[test]
    fn rank_and_kernel() {
        let m = Matrix::from_rows(alloc::vec![
            alloc::vec![gr(1), gr(2), gr(3)],
            alloc::vec![gr(2), gr(4), gr(6)],
        ]);
        assert_eq!(m.rank(), 1);
        let k = m.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            let prod = m.mul_vec(v);
            assert!(prod.iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(alloc::vec![
            alloc::vec![gr(2), gr(1)],
            alloc::vec![gr(1), gr(1)],
        ]);
        let inv = m.inverse().unwrap();
        let mut prod = Matrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = GaussianRational::zero();
                for k in 0..2 {
                    acc += &(m.get(i, k) * inv.get(k, j));
                }
                prod.set(i, j, acc);
            }
        }
        assert_eq!(prod, Matrix::identity(2));
        let sing = Matrix::from_rows(alloc::vec![
            alloc::vec![gr(1), gr(2)],
            alloc::vec![gr(2), gr(4)],
        ]);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn row_space_insert_and_contain() {
        let mut rs = RowSpace::new(3);
        assert!(rs.insert(alloc::vec![gr(1), gr(1), gr(0)]));
        assert!(rs.insert(alloc::vec![gr(0), gr(1), gr(1)]));
        assert!(!rs.insert(alloc::vec![gr(1), gr(2), gr(1)]));
        assert_eq!(rs.dim(), 2);
        assert!(rs.contains(&[gr(2), gr(3), gr(1)]));
        assert!(!rs.contains(&[gr(0), gr(0), gr(1)]));
    }

    #[test]
    fn psd_checks() {
        // Identity is PSD.
        assert!(hermitian_is_psd(&Matrix::identity(3)));
        // diag(1, -1) is not.
        let mut m = Matrix::identity(2);
        m.set(1, 1, gr(-1));
        assert!(!hermitian_is_psd(&m));
        // Zero diagonal with off-diagonal entries is not: [[0,1],[1,0]].
        let mut z = Matrix::zeros(2, 2);
        z.set(0, 1, gr(1));
        z.set(1, 0, gr(1));
        assert!(!hermitian_is_psd(&z));
        // Rank-one hermitian with complex entry: [[1, i],[-i, 1]] has
        // eigenvalues 0 and 2.
        let m2 = Matrix::from_rows(alloc::vec![
            alloc::vec![gr(1), GaussianRational::i()],
            alloc::vec![GaussianRational::i().neg(), gr(1)],
        ]);
        assert!(hermitian_is_psd(&m2));
        let _ = BigInt::from(0);
    }
}
