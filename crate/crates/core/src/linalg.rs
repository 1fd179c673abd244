//! Sparse and dense linear algebra used by the forward and inverse solvers.

use crate::{Error, Real, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in their order of appearance after a stable
    /// sort, so the result only depends on the triplet sequence.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::InvalidParameter(format!(
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
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

    /// `(columns, values)` of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    #[inline]
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    /// `y = A^T x`.
    pub fn transpose_mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (r, &xr) in x.iter().enumerate() {
            if xr == T::zero() {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.ncols];
        self.transpose_mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<T> {
        let mut sq = vec![T::zero(); self.ncols];
        for (_, c, v) in self.triplets() {
            sq[c] += v * v;
        }
        sq.into_iter().map(T::sqrt).collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().copied().sum())
            .collect()
    }

    /// Multiplies row `r` by `scale[r]`.
    pub fn scale_rows(&mut self, scale: &[T]) {
        for (r, &s) in scale.iter().enumerate().take(self.nrows) {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            self.values[a..b].iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        CsrMatrix {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Adds `weight * A^T A` into the dense row-major `out` (`ncols x ncols`).
    pub fn add_gram_into(&self, weight: T, out: &mut DenseMatrix<T>) {
        debug_assert_eq!(out.n, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&ci, &vi) in cols.iter().zip(vals) {
                let wv = weight * vi;
                let row = &mut out.data[ci * out.n..(ci + 1) * out.n];
                for (&cj, &vj) in cols.iter().zip(vals) {
                    row[cj] += wv * vj;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

/// Square dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] += v;
    }
}

/// Dense Cholesky factor `A = L L^T`, lower triangle stored row-major.
#[derive(Debug, Clone)]
pub struct DenseCholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> DenseCholesky<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.n;
        let mut l = a.data.clone();
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = if i == j {
                    let r = &l[i * n..i * n + j];
                    (r, r)
                } else {
                    let (lo, hi) = l.split_at(i * n);
                    (&hi[..j], &lo[j * n..j * n + j])
                };
                let v = l[i * n + j] - dot(row_i, row_j);
                if i == j {
                    if !(v > T::zero()) {
                        return Err(Error::SolverFailure(format!(
                            "matrix not positive definite at pivot {i}"
                        )));
                    }
                    l[i * n + i] = v.sqrt();
                } else {
                    l[i * n + j] = v / l[j * n + j];
                }
            }
        }
        Ok(DenseCholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let bi = b[i];
            let row = &self.l[i * n..i * n + i];
            for (bj, &lij) in b[..i].iter_mut().zip(row) {
                *bj -= lij * bi;
            }
        }
    }
}

/// Envelope (skyline) Cholesky factor of a sparse symmetric positive definite
/// matrix. Row `i` stores `L[i][first[i]..=i]` contiguously.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SkylineCholesky<T> {
    /// Factors the symmetric matrix whose lower triangle is read from `a`.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.first().copied().unwrap_or(i).min(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut values = vec![T::zero(); start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    values[start[i] + c - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let dot: T = if k0 < j {
                    let ri = &values[start[i] + k0 - fi..start[i] + j - fi];
                    let rj = &values[start[j] + k0 - fj..start[j] + j - fj];
                    ri.iter().zip(rj).map(|(&x, &y)| x * y).sum()
                } else {
                    T::zero()
                };
                let idx = start[i] + j - fi;
                let v = values[idx] - dot;
                if i == j {
                    if !(v > T::zero()) {
                        return Err(Error::SolverFailure(format!(
                            "matrix not positive definite at pivot {i}"
                        )));
                    }
                    values[idx] = v.sqrt();
                } else {
                    values[idx] = v / values[start[j] + j - fj];
                }
            }
        }
        Ok(SkylineCholesky {
            first,
            start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let dot: T = row[..i - fi]
                .iter()
                .zip(&x[fi..i])
                .map(|(&l, &v)| l * v)
                .sum();
            x[i] = (x[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for (xj, &l) in x[fi..i].iter_mut().zip(&row[..i - fi]) {
                *xj -= l * xi;
            }
        }
    }
}

/// Reverse Cuthill-McKee ordering of a graph given by adjacency lists.
///
/// Returns `perm` with `perm[new] = old`. Each connected component starts
/// from its lowest-degree node; ties resolve by index.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (adj[i].len(), i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut head = order.len();
        order.push(seed);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Symmetric permutation `P A P^T` with `perm[new] = old`.
pub fn permute_symmetric<T: Real>(a: &CsrMatrix<T>, perm: &[usize]) -> Result<CsrMatrix<T>> {
    let n = a.nrows();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let triplets = a.triplets().map(|(r, c, v)| (inv[r], inv[c], v)).collect();
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Dot product with eight independent partial sums.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm1<T: Real>(a: &[T]) -> T {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd_tridiag(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        // long-range coupling to exercise the envelope
        t.push((n - 1, 0, 0.5));
        t.push((0, n - 1, 0.5));
        CsrMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m =
            CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert!(CsrMatrix::<f64>::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_product_matches_dense() {
        let m = CsrMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 0, -1.0), (2, 1, 3.0)],
        )
        .unwrap();
        let y = m.transpose_mul_vec(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(y, vec![-1.0, 8.0]);
        assert!(matches!(
            m.mul_vec(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn skyline_solves() {
        let a = spd_tridiag(40);
        let chol = SkylineCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true).unwrap();
        let x = chol.solve(&b);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_solves() {
        let a = spd_tridiag(25);
        let mut d = DenseMatrix::zeros(25);
        for (r, c, v) in a.triplets() {
            d.add(r, c, v);
        }
        let chol = DenseCholesky::factor(&d).unwrap();
        let x_true: Vec<f64> = (0..25).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let mut b = a.mul_vec(&x_true).unwrap();
        chol.solve_in_place(&mut b);
        for (p, q) in b.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn rcm_is_a_permutation_and_preserves_solution() {
        let a = spd_tridiag(30);
        let adj: Vec<Vec<usize>> = (0..30)
            .map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect())
            .collect();
        let perm = reverse_cuthill_mckee(&adj);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..30).collect::<Vec<_>>());
        let pa = permute_symmetric(&a, &perm).unwrap();
        let chol = SkylineCholesky::factor(&pa).unwrap();
        let b: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let pb: Vec<f64> = perm.iter().map(|&o| b[o]).collect();
        let py = chol.solve(&pb);
        let mut x = vec![0.0; 30];
        for (new, &old) in perm.iter().enumerate() {
            x[old] = py[new];
        }
        let back = a.mul_vec(&x).unwrap();
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::SolverFailure(_))
        ));
    }

    #[test]
    fn gram_accumulation() {
        let m =
            CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]).unwrap();
        let mut g = DenseMatrix::zeros(2);
        m.add_gram_into(2.0, &mut g);
        assert_eq!(g.get(0, 0), 2.0);
        assert_eq!(g.get(0, 1), 4.0);
        assert_eq!(g.get(1, 0), 4.0);
        assert_eq!(g.get(1, 1), 2.0 * (4.0 + 9.0));
    }
}
