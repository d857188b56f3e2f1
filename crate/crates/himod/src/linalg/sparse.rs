//! Compressed sparse row storage built from triplets, plus a direct solver:
//! reverse Cuthill-McKee reordering followed by banded LU with partial pivoting.
//!
//! HiMod matrices are block-coupled along a 1D axis, so after RCM they are narrow bands
//! and a band factorization is both simple and close to optimal.

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row pointers and sorted column indices, shared between matrices with identical structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn from_entries<I>(n_rows: usize, n_cols: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for (i, j) in entries {
            assert!(i < n_rows && j < n_cols, "entry ({i},{j}) outside {n_rows}x{n_cols}");
            rows[i].push(j);
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern { n_rows, n_cols, row_ptr, col_idx }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Position of (i, j) in the value array, if structurally present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|p| start + p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }
}

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        TripletBuilder { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.entries.push((i, j, v));
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|&(i, j, _)| (i, j))
    }

    pub fn retain<F: FnMut(usize, usize) -> bool>(&mut self, mut keep: F) {
        self.entries.retain(|&(i, j, _)| keep(i, j));
    }

    pub fn build(&self) -> CsrMatrix {
        let pattern = Arc::new(SparsityPattern::from_entries(self.n_rows, self.n_cols, self.positions()));
        self.build_on(&pattern)
    }

    /// Scatter into an existing (super)pattern. Panics on an entry the pattern lacks.
    pub fn build_on(&self, pattern: &Arc<SparsityPattern>) -> CsrMatrix {
        assert_eq!((pattern.n_rows, pattern.n_cols), (self.n_rows, self.n_cols));
        let mut values = vec![0.0; pattern.nnz()];
        for &(i, j, v) in &self.entries {
            let p = pattern
                .position(i, j)
                .unwrap_or_else(|| panic!("entry ({i},{j}) not in pattern"));
            values[p] += v;
        }
        CsrMatrix { pattern: Arc::clone(pattern), values }
    }
}

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(SparsityPattern::from_entries(n, n, (0..n).map(|i| (i, i))));
        CsrMatrix { pattern, values: vec![1.0; n] }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = TripletBuilder::new(a.nrows(), a.ncols());
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                if a[(i, j)] != 0.0 {
                    t.push(i, j, a[(i, j)]);
                }
            }
        }
        t.build()
    }

    pub fn with_values(pattern: Arc<SparsityPattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        CsrMatrix { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pattern.iter().zip(&self.values).map(|((i, j), &v)| (i, j, v))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols());
        assert_eq!(y.len(), self.n_rows());
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// y = Aᵀ x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows());
        let p = &*self.pattern;
        let mut y = vec![0.0; self.n_cols()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                y[p.col_idx[k]] += self.values[k] * xi;
            }
        }
        y
    }

    /// xᵀ A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = &*self.pattern;
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let mut r = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                r += self.values[k] * y[p.col_idx[k]];
            }
            s += xi * r;
        }
        s
    }

    /// Σ c_k A_k over matrices sharing one pattern (checked by pointer, then by value).
    pub fn linear_combination(coeffs: &[f64], mats: &[&CsrMatrix]) -> CsrMatrix {
        assert_eq!(coeffs.len(), mats.len());
        assert!(!mats.is_empty());
        let pattern = &mats[0].pattern;
        let mut values = vec![0.0; pattern.nnz()];
        for (&c, m) in coeffs.iter().zip(mats) {
            assert!(Arc::ptr_eq(pattern, &m.pattern) || **pattern == *m.pattern, "pattern mismatch");
            if c == 0.0 {
                continue;
            }
            for (v, &a) in values.iter_mut().zip(&m.values) {
                *v += c * a;
            }
        }
        CsrMatrix { pattern: Arc::clone(pattern), values }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows(), self.n_cols());
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// max |a_ij − a_ji| / max |a_ij|.
    pub fn relative_asymmetry(&self) -> f64 {
        if self.n_rows() != self.n_cols() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Symmetric permutation with the resulting lower/upper bandwidths.
#[derive(Clone, Debug)]
pub struct Ordering {
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `inv[old] = new`
    inv: Vec<usize>,
    lower: usize,
    upper: usize,
}

impl Ordering {
    pub fn natural(pattern: &SparsityPattern) -> Self {
        let n = pattern.n_rows;
        Self::from_perm(pattern, (0..n).collect())
    }

    fn from_perm(pattern: &SparsityPattern, perm: Vec<usize>) -> Self {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut lower, mut upper) = (0, 0);
        for (i, j) in pattern.iter() {
            let (ni, nj) = (inv[i], inv[j]);
            if ni > nj {
                lower = lower.max(ni - nj);
            } else {
                upper = upper.max(nj - ni);
            }
        }
        Ordering { perm, inv, lower, upper }
    }

    /// Reverse Cuthill-McKee on the symmetrized pattern, one pseudo-peripheral start per component.
    pub fn rcm(pattern: &SparsityPattern) -> Self {
        let n = pattern.n_rows;
        assert_eq!(n, pattern.n_cols, "RCM needs a square pattern");
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in pattern.iter() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        for a in &mut adj {
            a.sort_by_key(|&v| (degree[v], v));
        }

        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut by_degree: Vec<usize> = (0..n).collect();
        by_degree.sort_by_key(|&v| (degree[v], v));
        for &seed in &by_degree {
            if placed[seed] {
                continue;
            }
            let start = pseudo_peripheral(&adj, &degree, seed);
            let mut queue = VecDeque::from([start]);
            placed[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &w in &adj[v] {
                    if !placed[w] {
                        placed[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        order.reverse();
        Self::from_perm(pattern, order)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let mut depth = bfs_levels(adj, root).len();
    loop {
        let levels = bfs_levels(adj, root);
        let candidate = *levels
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .unwrap();
        let d = bfs_levels(adj, candidate).len();
        if d > depth {
            root = candidate;
            depth = d;
        } else {
            return root;
        }
    }
}

/// Banded LU factors of P·A·Pᵀ, with row interchanges recorded LAPACK-style.
///
/// Row `i` of the band stores columns `i − kl ..= i + ku + kl`; the extra `kl` columns
/// hold fill created by pivoting.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let ordering = Ordering::rcm(a.pattern());
        Self::factor_with(a, &ordering)
    }

    pub fn factor_with(a: &CsrMatrix, ordering: &Ordering) -> Result<Self> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::Dimension(format!("cannot factor a {}x{} matrix", n, a.n_cols())));
        }
        if ordering.len() != n {
            return Err(Error::Dimension(format!("ordering of size {} for matrix of size {n}", ordering.len())));
        }
        let (kl, ku) = ordering.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for (i, j, v) in a.iter() {
            let (ni, nj) = (ordering.inv[i], ordering.inv[j]);
            assert!(nj + kl >= ni && nj <= ni + ku, "ordering bandwidth does not cover the matrix");
            band[ni * width + (nj + kl - ni)] += v;
        }
        let anorm = a.max_abs();
        let tiny = anorm * f64::EPSILON * 1e-3;
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut p = k;
            let mut best = band[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = band[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular(format!(
                    "zero pivot at step {k} of {n} (|pivot| = {best:e}, max|a| = {anorm:e})"
                )));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    band.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = band[idx(k, k)];
            for i in k + 1..=last_row {
                let l = band[idx(i, k)] / pivot;
                band[idx(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        band[idx(i, j)] -= l * band[idx(k, j)];
                    }
                }
            }
        }
        Ok(SparseLu {
            n,
            kl,
            ku,
            width,
            band,
            pivots,
            perm: ordering.perm.clone(),
            inv: ordering.inv.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    y[i] -= self.band[idx(i, k)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..=(k + ku + kl).min(n - 1) {
                s -= self.band[idx(k, j)] * y[j];
            }
            y[k] = s / self.band[idx(k, k)];
        }
        (0..n).map(|old| y[self.inv[old]]).collect()
    }
}

/// A square sparse matrix with a lazily computed, cached factorization.
///
/// The factorization is computed at most once, even under concurrent `solve` calls.
#[derive(Debug)]
pub struct SparseMatrixHandle {
    matrix: CsrMatrix,
    symmetric: bool,
    factor: OnceLock<std::result::Result<SparseLu, String>>,
}

impl SparseMatrixHandle {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        if matrix.n_rows() != matrix.n_cols() {
            return Err(Error::Dimension(format!(
                "handle needs a square matrix, got {}x{}",
                matrix.n_rows(),
                matrix.n_cols()
            )));
        }
        Ok(SparseMatrixHandle { matrix, symmetric: false, factor: OnceLock::new() })
    }

    /// Flag the matrix symmetric after checking it to `1e-12` relative.
    pub fn mark_symmetric(mut self) -> Result<Self> {
        let asym = self.matrix.relative_asymmetry();
        if asym > 1e-12 {
            return Err(Error::Dimension(format!("matrix flagged symmetric has relative asymmetry {asym:e}")));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn factorization(&self) -> Result<&SparseLu> {
        self.factor
            .get_or_init(|| SparseLu::factor(&self.matrix).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Singular(e.clone()))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factorization()?.solve(rhs))
    }
}

/// ‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞), a scale-free backward error.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let mut row_norm = 0.0_f64;
    for i in 0..a.n_rows() {
        let p = a.pattern();
        let s: f64 = (p.row_ptr[i]..p.row_ptr[i + 1]).map(|k| a.values[k].abs()).sum();
        row_norm = row_norm.max(s);
    }
    let xn = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bn = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let denom = row_norm * xn + bn;
    if denom == 0.0 { 0.0 } else { r / denom }
}
