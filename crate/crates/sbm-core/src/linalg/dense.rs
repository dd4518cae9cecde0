use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CsrMatrix;
use super::LinalgError;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    /// Keep only the first `cols` columns (copying; used to truncate a basis).
    pub fn left_columns(&self, cols: usize) -> DenseMat {
        assert!(cols <= self.cols);
        DenseMat::from_fn(self.rows, cols, |i, j| self.at(i, j))
    }

    /// y = self * x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// y = self^T * x
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        self.transpose_matvec_prefix(x, self.cols)
    }

    /// y = self[:, :cols]^T * x
    pub fn transpose_matvec_prefix(&self, x: &[f64], cols: usize) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        assert!(cols <= self.cols);
        let mut y = vec![0.0; cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (yj, &a) in y.iter_mut().zip(&self.row(i)[..cols]) {
                *yj += a * xi;
            }
        }
        y
    }

    /// y = self[:, :cols] * x
    pub fn matvec_prefix(&self, x: &[f64], cols: usize) -> Vec<f64> {
        assert_eq!(x.len(), cols);
        assert!(cols <= self.cols);
        (0..self.rows)
            .map(|i| self.row(i)[..cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                m = m.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        m
    }
}

/// C = A[:, :a_cols]^T B where both operands share the same row count.
/// The shared dimension is blocked eight rows at a time and two output rows
/// are accumulated per sweep; the inner loop works on explicit 4-wide
/// chunks, which vectorizes cleanly for a column count only known at
/// runtime.
pub fn transpose_prefix_times(a: &DenseMat, a_cols: usize, b: &DenseMat) -> DenseMat {
    assert_eq!(a.rows, b.rows);
    assert!(a_cols <= a.cols);
    let n = a.rows;
    let m = b.cols;
    let mut c = DenseMat::zeros(a_cols, m);
    let quads = m / 4 * 4;
    let blocks = n / 8 * 8;
    let mut r = 0;
    while r < blocks {
        let ab: [&[f64]; 8] = core::array::from_fn(|k| a.row(r + k));
        let bb: [&[f64]; 8] = core::array::from_fn(|k| &b.row(r + k)[..m]);
        let mut i = 0;
        while i + 2 <= a_cols {
            let x0: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
            let x1: [f64; 8] = core::array::from_fn(|k| ab[k][i + 1]);
            let (head, tail) = c.data.split_at_mut((i + 1) * m);
            let c0 = &mut head[i * m..i * m + m];
            let c1 = &mut tail[..m];
            let mut j = 0;
            while j < quads {
                let mut acc0: [f64; 4] = c0[j..j + 4].try_into().unwrap();
                let mut acc1: [f64; 4] = c1[j..j + 4].try_into().unwrap();
                for k in 0..8 {
                    let bk: [f64; 4] = bb[k][j..j + 4].try_into().unwrap();
                    for l in 0..4 {
                        acc0[l] += x0[k] * bk[l];
                        acc1[l] += x1[k] * bk[l];
                    }
                }
                c0[j..j + 4].copy_from_slice(&acc0);
                c1[j..j + 4].copy_from_slice(&acc1);
                j += 4;
            }
            while j < m {
                let mut s0 = c0[j];
                let mut s1 = c1[j];
                for k in 0..8 {
                    s0 += x0[k] * bb[k][j];
                    s1 += x1[k] * bb[k][j];
                }
                c0[j] = s0;
                c1[j] = s1;
                j += 1;
            }
            i += 2;
        }
        if i < a_cols {
            let x: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
            let crow = &mut c.row_mut(i)[..m];
            for (j, cj) in crow.iter_mut().enumerate() {
                let mut s = *cj;
                for k in 0..8 {
                    s += x[k] * bb[k][j];
                }
                *cj = s;
            }
        }
        r += 8;
    }
    for r in blocks..n {
        let arow = a.row(r);
        let brow = &b.row(r)[..m];
        for (i, &ai) in arow.iter().take(a_cols).enumerate() {
            if ai == 0.0 {
                continue;
            }
            let crow = &mut c.row_mut(i)[..m];
            for (cij, &bj) in crow.iter_mut().zip(brow) {
                *cij += ai * bj;
            }
        }
    }
    c
}

/// C = A^T B for same-height operands.
pub fn transpose_times(a: &DenseMat, b: &DenseMat) -> DenseMat {
    transpose_prefix_times(a, a.cols, b)
}

/// C = A[:, :a_cols]^T B for a product known to be symmetric (SYRK-style):
/// only entries with j >= i are accumulated, the strict lower triangle is
/// mirrored afterwards. Each stored entry is still the exact product sum;
/// callers are responsible for the symmetry of the underlying operator.
/// The output columns are tiled so the accumulator slab stays cache
/// resident across the whole pass over the shared dimension.
pub fn transpose_prefix_times_symmetric(a: &DenseMat, a_cols: usize, b: &DenseMat) -> DenseMat {
    assert_eq!(a.rows, b.rows);
    assert!(a_cols <= a.cols);
    assert_eq!(b.cols, a_cols);
    let n = a.rows;
    let m = a_cols;
    let mut c = DenseMat::zeros(m, m);
    const TILE: usize = 32;
    let blocks = n / 8 * 8;
    let mut jt = 0;
    while jt < m {
        let tile_end = (jt + TILE).min(m);
        let mut r = 0;
        while r < blocks {
            let ab: [&[f64]; 8] = core::array::from_fn(|k| a.row(r + k));
            let bb: [&[f64]; 8] = core::array::from_fn(|k| &b.row(r + k)[..tile_end]);
            let mut i = 0;
            while i + 2 <= tile_end {
                // Upper triangle only: both rows of the pair start at the
                // tile boundary or at the diagonal; the one subdiagonal
                // entry this produces is recomputed by the mirror pass.
                let start = i.max(jt);
                let x0: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
                let x1: [f64; 8] = core::array::from_fn(|k| ab[k][i + 1]);
                let bi: [&[f64]; 8] = core::array::from_fn(|k| &bb[k][start..]);
                let (head, tail) = c.data.split_at_mut((i + 1) * m);
                let c0 = &mut head[i * m + start..i * m + tile_end];
                let c1 = &mut tail[start..tile_end];
                let len = tile_end - start;
                let quads = len / 4 * 4;
                let mut j = 0;
                while j < quads {
                    let mut acc0: [f64; 4] = c0[j..j + 4].try_into().unwrap();
                    let mut acc1: [f64; 4] = c1[j..j + 4].try_into().unwrap();
                    for k in 0..8 {
                        let bk: [f64; 4] = bi[k][j..j + 4].try_into().unwrap();
                        for l in 0..4 {
                            acc0[l] += x0[k] * bk[l];
                            acc1[l] += x1[k] * bk[l];
                        }
                    }
                    c0[j..j + 4].copy_from_slice(&acc0);
                    c1[j..j + 4].copy_from_slice(&acc1);
                    j += 4;
                }
                while j < len {
                    let mut s0 = c0[j];
                    let mut s1 = c1[j];
                    for k in 0..8 {
                        s0 += x0[k] * bi[k][j];
                        s1 += x1[k] * bi[k][j];
                    }
                    c0[j] = s0;
                    c1[j] = s1;
                    j += 1;
                }
                i += 2;
            }
            if i < tile_end {
                let start = i.max(jt);
                let x: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
                let bi: [&[f64]; 8] = core::array::from_fn(|k| &bb[k][start..]);
                let crow = &mut c.row_mut(i)[start..tile_end];
                for (j, cj) in crow.iter_mut().enumerate() {
                    let mut s = *cj;
                    for k in 0..8 {
                        s += x[k] * bi[k][j];
                    }
                    *cj = s;
                }
            }
            r += 8;
        }
        for r in blocks..n {
            let arow = a.row(r);
            let brow = &b.row(r)[..tile_end];
            for (i, &ai) in arow.iter().take(tile_end).enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let start = i.max(jt);
                let crow = &mut c.row_mut(i)[start..tile_end];
                for (cij, &bj) in crow.iter_mut().zip(&brow[start..]) {
                    *cij += ai * bj;
                }
            }
        }
        jt = tile_end;
    }
    for i in 0..m {
        for j in 0..i {
            let upper = c.at(j, i);
            *c.at_mut(i, j) = upper;
        }
    }
    c
}

/// C = L[:, :m]^T A L[:, :m] for a sparse A whose congruence product is
/// known to be symmetric. The product rows of A L are formed eight at a
/// time in a small workspace and consumed immediately by upper-triangle
/// rank-8 updates, so the intermediate never round-trips through memory.
/// Entry values are identical to the two-step product.
pub fn csr_congruence_symmetric(a: &CsrMatrix, l: &DenseMat, m: usize) -> DenseMat {
    assert_eq!(a.n_rows, a.n_cols);
    assert_eq!(a.n_rows, l.rows);
    assert!(m <= l.cols);
    let n = a.n_rows;
    let mut c = DenseMat::zeros(m, m);
    let mut workspace = vec![0.0f64; 8 * m];
    let blocks = n / 8 * 8;
    let mut r = 0;
    while r < blocks {
        for k in 0..8 {
            let yrow = &mut workspace[k * m..(k + 1) * m];
            yrow.fill(0.0);
            let (cols, vals) = a.row(r + k);
            for (&col, &v) in cols.iter().zip(vals) {
                let lrow = &l.row(col as usize)[..m];
                for (yj, &lj) in yrow.iter_mut().zip(lrow) {
                    *yj += v * lj;
                }
            }
        }
        let ab: [&[f64]; 8] = core::array::from_fn(|k| l.row(r + k));
        let bb: [&[f64]; 8] = core::array::from_fn(|k| &workspace[k * m..(k + 1) * m]);
        upper_rank8_update(&mut c, m, &ab, &bb);
        r += 8;
    }
    let mut yrow = vec![0.0f64; m];
    for r in blocks..n {
        yrow.fill(0.0);
        let (cols, vals) = a.row(r);
        for (&col, &v) in cols.iter().zip(vals) {
            let lrow = &l.row(col as usize)[..m];
            for (yj, &lj) in yrow.iter_mut().zip(lrow) {
                *yj += v * lj;
            }
        }
        let lrow = l.row(r);
        for (i, &li) in lrow.iter().take(m).enumerate() {
            if li == 0.0 {
                continue;
            }
            let crow = &mut c.row_mut(i)[i..m];
            for (cij, &yj) in crow.iter_mut().zip(&yrow[i..]) {
                *cij += li * yj;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            let upper = c.at(j, i);
            *c.at_mut(i, j) = upper;
        }
    }
    c
}

/// Upper-triangle rank-8 update C[i, i..m] += sum_k ab[k][i] * bb[k][i..m],
/// two output rows per sweep.
fn upper_rank8_update(c: &mut DenseMat, m: usize, ab: &[&[f64]; 8], bb: &[&[f64]; 8]) {
    let mut i = 0;
    while i + 2 <= m {
        // Row i and row i+1 both start at column i; the single subdiagonal
        // entry is recomputed by the caller's mirror pass.
        let x0: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
        let x1: [f64; 8] = core::array::from_fn(|k| ab[k][i + 1]);
        let bi: [&[f64]; 8] = core::array::from_fn(|k| &bb[k][i..m]);
        let (head, tail) = c.data.split_at_mut((i + 1) * m);
        let c0 = &mut head[i * m + i..i * m + m];
        let c1 = &mut tail[i..m];
        let len = m - i;
        let quads = len / 4 * 4;
        let mut j = 0;
        while j < quads {
            let mut acc0: [f64; 4] = c0[j..j + 4].try_into().unwrap();
            let mut acc1: [f64; 4] = c1[j..j + 4].try_into().unwrap();
            for k in 0..8 {
                let bk: [f64; 4] = bi[k][j..j + 4].try_into().unwrap();
                for l in 0..4 {
                    acc0[l] += x0[k] * bk[l];
                    acc1[l] += x1[k] * bk[l];
                }
            }
            c0[j..j + 4].copy_from_slice(&acc0);
            c1[j..j + 4].copy_from_slice(&acc1);
            j += 4;
        }
        while j < len {
            let mut s0 = c0[j];
            let mut s1 = c1[j];
            for k in 0..8 {
                s0 += x0[k] * bi[k][j];
                s1 += x1[k] * bi[k][j];
            }
            c0[j] = s0;
            c1[j] = s1;
            j += 1;
        }
        i += 2;
    }
    if i < m {
        let x: [f64; 8] = core::array::from_fn(|k| ab[k][i]);
        let bi: [&[f64]; 8] = core::array::from_fn(|k| &bb[k][i..m]);
        let crow = &mut c.row_mut(i)[i..m];
        for (j, cj) in crow.iter_mut().enumerate() {
            let mut s = *cj;
            for k in 0..8 {
                s += x[k] * bi[k][j];
            }
            *cj = s;
        }
    }
}

/// Y = A * B[:, :cols] with sparse A and dense row-major B.
pub fn csr_times_dense_prefix(a: &CsrMatrix, b: &DenseMat, cols: usize) -> DenseMat {
    assert_eq!(a.n_cols, b.rows);
    assert!(cols <= b.cols);
    let mut y = DenseMat::zeros(a.n_rows, cols);
    for i in 0..a.n_rows {
        let (idx, vals) = a.row(i);
        let yrow = y.row_mut(i);
        for (&c, &v) in idx.iter().zip(vals) {
            let brow = &b.row(c as usize)[..cols];
            for (yj, &bj) in yrow.iter_mut().zip(brow) {
                *yj += v * bj;
            }
        }
    }
    y
}

/// Y = A * B with sparse A and dense row-major B.
pub fn csr_times_dense(a: &CsrMatrix, b: &DenseMat) -> DenseMat {
    csr_times_dense_prefix(a, b, b.cols)
}

/// Solve a dense system by LU with partial pivoting. Consumes the matrix.
pub fn lu_solve(mut a: DenseMat, mut b: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    for k in 0..n {
        let mut piv = k;
        let mut best = a.at(k, k).abs();
        for i in k + 1..n {
            let v = a.at(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(LinalgError::Singular { index: k });
        }
        if piv != k {
            for j in 0..n {
                let tmp = a.at(k, j);
                *a.at_mut(k, j) = a.at(piv, j);
                *a.at_mut(piv, j) = tmp;
            }
            b.swap(k, piv);
        }
        let akk = a.at(k, k);
        let (pivot_rows, rest) = a.data.split_at_mut((k + 1) * n);
        let pivot_row = &pivot_rows[k * n + k + 1..(k + 1) * n];
        for (offset, row) in rest.chunks_exact_mut(n).enumerate() {
            let f = row[k] / akk;
            row[k] = 0.0;
            if f != 0.0 {
                let target = &mut row[k + 1..n];
                for (t, &p) in target.iter_mut().zip(pivot_row) {
                    *t -= f * p;
                }
                b[k + 1 + offset] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        for j in k + 1..n {
            b[k] -= a.at(k, j) * b[j];
        }
        b[k] /= a.at(k, k);
    }
    Ok(b)
}
