//! Compressed sparse row storage and a profile (envelope) Cholesky
//! factorization.
//!
//! Grid operators assembled in lexicographic node order have a narrow
//! envelope, so the envelope factor stays within `n * bandwidth` entries
//! without any fill-reducing reordering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Shape(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut iter = row.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_diagonal(diag: &DVector<T>) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.iter().copied().collect(),
        }
    }

    /// Converts a dense matrix, dropping exact zeros.
    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != T::zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: m.nrows(),
            ncols: m.ncols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> DVector<T> {
        DVector::from_iterator(
            self.nrows.min(self.ncols),
            (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)),
        )
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in sparse product");
        DVector::from_iterator(
            self.nrows,
            (0..self.nrows).map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j])),
        )
    }

    /// Row-wise `sum_j |a_ij x_j|`, the floating-point magnitude scale of `A x`.
    pub fn abs_mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.nrows,
            (0..self.nrows).map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + (v * x[j]).abs())),
        )
    }

    pub fn mul_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = self.mul_vec(&x.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        (0..self.nrows).fold(T::zero(), |acc, i| {
            acc + x[i] * self.row(i).fold(T::zero(), |s, (j, v)| s + v * y[j])
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> T {
        self.triplets()
            .fold(T::zero(), |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `D A D` for a diagonal `D = diag(d)`.
    pub fn scale_symmetric(&self, d: &DVector<T>) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] = self.values[k] * d[i] * d[self.col_idx[k]];
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let t: Vec<_> = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn add_diagonal(&self, d: &DVector<T>) -> Result<Self> {
        self.add(&Self::from_diagonal(d))
    }

    /// Principal submatrix on the (sorted, distinct) index list `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in keep {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: keep.len(),
            ncols: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Symmetric permutation `P A Pᵀ` with `new[i] = old[perm[i]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (inv[i], inv[j], v)).collect();
        Self::from_triplets(self.nrows, self.ncols, &t).expect("permutation preserves shape")
    }

    /// Plain-text coordinate dump: one `row col value` line per entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("% {} {} {}\n", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            s.push_str(&format!("{i} {j} {:.17e}\n", v.as_f64()));
        }
        s
    }

    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("empty coordinate text".into()))?;
        let dims: Vec<usize> = header
            .trim_start_matches('%')
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Validation(format!("bad header `{header}`: {e}")))?;
        if dims.len() < 2 {
            return Err(Error::Validation(format!("bad header `{header}`")));
        }
        let mut t = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Validation(format!("bad triplet line `{line}`")));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Validation(format!("bad triplet `{line}`: {e}"));
            let i: usize = parts[0].parse().map_err(|e| bad(&e))?;
            let j: usize = parts[1].parse().map_err(|e| bad(&e))?;
            let v: f64 = parts[2].parse().map_err(|e| bad(&e))?;
            t.push((i, j, T::lit(v)));
        }
        Self::from_triplets(dims[0], dims[1], &t)
    }
}

/// Cholesky factor `A = L Lᵀ` stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky<T> {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> EnvelopeCholesky<T> {
    /// Factors a symmetric positive definite matrix; only the lower
    /// triangle is read.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_shifted(a, T::zero())
    }

    /// Factors `A + shift·I`.
    pub fn factor_shifted(a: &CsrMatrix<T>, shift: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("cholesky of a {}x{} matrix", n, a.ncols())));
        }
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut data = vec![T::zero(); offset[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[offset[i] + (j - first[i])] += v;
                }
            }
            data[offset[i] + (i - first[i])] += shift;
        }
        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..i {
                let fj = first[j];
                let oj = offset[j];
                let k0 = fi.max(fj);
                let mut s = data[oi + (j - fi)];
                for k in k0..j {
                    s -= data[oi + (k - fi)] * data[oj + (k - fj)];
                }
                data[oi + (j - fi)] = s / data[oj + (j - fj)];
            }
            let mut d = data[oi + (i - fi)];
            for k in fi..i {
                let l = data[oi + (k - fi)];
                d -= l * l;
            }
            if !(d > T::zero()) || !d.is_finite_value() {
                return Err(Error::solver(
                    format!("matrix is not positive definite (pivot {i})"),
                    d.as_f64(),
                ));
            }
            data[oi + (i - fi)] = d.sqrt();
        }
        Ok(Self { n, first, offset, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        assert_eq!(b.len(), self.n, "dimension mismatch in cholesky solve");
        let mut x = b.clone();
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offset[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.data[oi + (k - fi)] * x[k];
            }
            x[i] = s / self.data[oi + (i - fi)];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            x[i] /= self.data[oi + (i - fi)];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.data[oi + (k - fi)] * xi;
            }
        }
        x
    }

    pub fn solve_dense(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            out.set_column(c, &self.solve(&b.column(c).into_owned()));
        }
        out
    }
}

/// Jacobi-preconditioned conjugate gradients for an SPD matrix.
///
/// Independent of the factorization path; used to cross-check solves.
pub fn conjugate_gradient<T: Real>(
    a: &CsrMatrix<T>,
    b: &DVector<T>,
    rel_tol: T,
    max_iter: usize,
) -> Result<DVector<T>> {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let bnorm = b.norm();
    if bnorm == T::zero() {
        return Ok(x);
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > T::zero())) {
        return Err(Error::solver("non-positive diagonal in CG", 0.0));
    }
    let precond = |r: &DVector<T>| r.component_div(&diag);
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap = p.dot(&ap);
        if !(pap > T::zero()) {
            return Err(Error::solver(
                "CG breakdown: matrix not positive definite",
                pap.as_f64(),
            ));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, T::one());
        r.axpy(-alpha, &ap, T::one());
        if r.norm() <= rel_tol * bnorm {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &p * beta;
    }
    let res = (r.norm() / bnorm).as_f64();
    Err(Error::solver("CG did not converge", res))
}
