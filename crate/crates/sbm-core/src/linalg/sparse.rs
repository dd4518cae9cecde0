use alloc::vec;
use alloc::vec::Vec;

/// Coordinate-format accumulator for assembly. Duplicate entries are summed
/// when compressing to CSR.
#[derive(Clone, Debug)]
pub struct Triplets {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Triplets {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row as u32, col as u32, value));
    }

    pub fn into_csr(self) -> CsrMatrix {
        let n_rows = self.n_rows;
        // Bucket by row, keeping insertion order within each row so that the
        // duplicate summation order is reproducible.
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, _, _) in &self.entries {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut bucketed = vec![(0u32, 0.0f64); self.entries.len()];
        for &(r, c, v) in &self.entries {
            let slot = cursor[r as usize];
            bucketed[slot] = (c, v);
            cursor[r as usize] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        row_ptr.push(0usize);
        for i in 0..n_rows {
            let row = &mut bucketed[counts[i]..counts[i + 1]];
            // Stable in-place insertion sort; rows are short and nearly
            // sorted, and equal columns keep insertion order so duplicate
            // summation stays reproducible.
            for k in 1..row.len() {
                let mut p = k;
                while p > 0 && row[p - 1].0 > row[p].0 {
                    row.swap(p - 1, p);
                    p -= 1;
                }
            }
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == col {
                    sum += row[k].1;
                    k += 1;
                }
                col_idx.push(col);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }

        CsrMatrix {
            n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry lookup by binary search; zero where no stored entry exists.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    /// Weighted inner product x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                row_acc += v * y[c as usize];
            }
            acc += x[i] * row_acc;
        }
        acc
    }
}
