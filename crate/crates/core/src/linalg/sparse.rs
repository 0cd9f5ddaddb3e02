use crate::error::{invalid, Error, Result};

/// Compressed sparse row matrix of `f64`.
///
/// Column indices are strictly increasing within each row. The `symmetric`
/// flag is only ever set after a numerical check.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Relative tolerance behind [`SparseMatrix::mark_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Builds a CSR matrix, summing duplicate entries.
pub fn csr_from_triplets(
    n_rows: usize,
    n_cols: usize,
    triplets: &[(usize, usize, f64)],
) -> Result<SparseMatrix> {
    let mut counts = vec![0usize; n_rows + 1];
    for &(r, c, _) in triplets {
        if r >= n_rows || c >= n_cols {
            return Err(invalid(format!(
                "entry ({r}, {c}) outside {n_rows}x{n_cols} matrix"
            )));
        }
        counts[r + 1] += 1;
    }
    for i in 0..n_rows {
        counts[i + 1] += counts[i];
    }
    let mut next = counts.clone();
    let mut cols = vec![0usize; triplets.len()];
    let mut vals = vec![0.0; triplets.len()];
    for &(r, c, v) in triplets {
        let k = next[r];
        cols[k] = c;
        vals[k] = v;
        next[r] += 1;
    }

    let mut row_ptr = Vec::with_capacity(n_rows + 1);
    let mut col_idx = Vec::with_capacity(triplets.len());
    let mut values = Vec::with_capacity(triplets.len());
    row_ptr.push(0);
    let mut order: Vec<usize> = Vec::new();
    for i in 0..n_rows {
        let (lo, hi) = (counts[i], counts[i + 1]);
        order.clear();
        order.extend(lo..hi);
        // stable sort keeps the summation order of duplicates fixed
        order.sort_by_key(|&k| cols[k]);
        let mut last = usize::MAX;
        for &k in &order {
            if cols[k] == last {
                *values.last_mut().unwrap() += vals[k];
            } else {
                col_idx.push(cols[k]);
                values.push(vals[k]);
                last = cols[k];
            }
        }
        row_ptr.push(col_idx.len());
    }

    Ok(SparseMatrix {
        n_rows,
        n_cols,
        row_ptr,
        col_idx,
        values,
        symmetric: false,
    })
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: n_rows == n_cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        csr_from_triplets(rows.len(), n_cols, &t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn is_marked_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `‖A − Aᵀ‖_max / ‖A‖_max` (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let mut a = self.row(i).peekable();
            let mut b = t.row(i).peekable();
            loop {
                let d = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(ja, va)), Some(&(jb, vb))) if ja == jb => {
                        a.next();
                        b.next();
                        va - vb
                    }
                    (Some(&(ja, va)), Some(&(jb, _))) if ja < jb => {
                        a.next();
                        va
                    }
                    (Some(&(_, va)), None) => {
                        a.next();
                        va
                    }
                    (_, Some(&(_, vb))) => {
                        b.next();
                        vb
                    }
                };
                worst = worst.max(d.abs());
            }
        }
        worst / scale
    }

    /// Sets the symmetry flag after verifying it numerically.
    pub fn mark_symmetric(mut self) -> Result<Self> {
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(invalid(format!(
                "matrix is not symmetric (relative asymmetry {asym:.3e})"
            )));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let t = self.transpose();
        t.row_ptr == self.row_ptr && t.col_idx == self.col_idx
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: counts,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "mul_vec: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "mul_vec: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y += alpha * A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += alpha * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>();
        }
    }

    /// `y += alpha * Aᵀ x`.
    pub fn mul_transpose_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(y.len(), self.n_cols);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (j, v) in self.row(i) {
                    y[j] += alpha * v * xi;
                }
            }
        }
    }

    /// Extracts `A[rows, cols]`. Index lists may be in any order; entries
    /// keep the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut t = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                let jj = col_map[j];
                if jj != usize::MAX {
                    t.push((k, jj, v));
                }
            }
        }
        let sub = csr_from_triplets(rows.len(), cols.len(), &t)
            .expect("submatrix indices are in range by construction");
        SparseMatrix {
            symmetric: self.symmetric && rows == cols,
            ..sub
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Drops explicitly stored zeros.
    pub fn pruned(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().filter(|&(_, _, v)| v != 0.0).collect();
        let m = csr_from_triplets(self.n_rows, self.n_cols, &t).expect("in range");
        SparseMatrix {
            symmetric: self.symmetric,
            ..m
        }
    }
}
