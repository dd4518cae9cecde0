//! Sparse LDL^T factorization (up-looking, natural ordering) for symmetric
//! positive definite systems. A non-positive pivot is reported as an error,
//! which doubles as the runtime coercivity check for the assembled forms.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CsrMatrix;
use super::LinalgError;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct LdlFactorization {
    n: usize,
    l_colptr: Vec<usize>,
    l_rowidx: Vec<u32>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactorization {
    /// Factor a symmetric positive definite matrix given in full CSR storage.
    /// Only the upper triangle is read.
    pub fn new(a: &CsrMatrix) -> Result<Self, LinalgError> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;

        // Upper triangle in CSC form: column k holds rows i <= k, ascending.
        let mut up_colptr = vec![0usize; n + 1];
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &c in cols {
                if c as usize >= i {
                    up_colptr[c as usize + 1] += 1;
                }
            }
        }
        for k in 0..n {
            up_colptr[k + 1] += up_colptr[k];
        }
        let upper_nnz = up_colptr[n];
        let mut up_rowidx = vec![0u32; upper_nnz];
        let mut up_values = vec![0.0f64; upper_nnz];
        let mut cursor = up_colptr.clone();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let c = c as usize;
                if c >= i {
                    up_rowidx[cursor[c]] = i as u32;
                    up_values[cursor[c]] = v;
                    cursor[c] += 1;
                }
            }
        }

        // Symbolic pass: elimination tree and per-column counts of L.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in up_colptr[k]..up_colptr[k + 1] {
                let mut i = up_rowidx[p] as usize;
                while i != k && flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }

        let mut l_colptr = vec![0usize; n + 1];
        for i in 0..n {
            l_colptr[i + 1] = l_colptr[i] + lnz[i];
        }
        let l_nnz = l_colptr[n];
        let mut l_rowidx = vec![0u32; l_nnz];
        let mut l_values = vec![0.0f64; l_nnz];
        let mut l_next = l_colptr.clone();

        // Numeric pass: one sparse triangular solve per column.
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut path = vec![0usize; n];
        for f in flag.iter_mut() {
            *f = NONE;
        }
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in up_colptr[k]..up_colptr[k + 1] {
                let i = up_rowidx[p] as usize;
                y[i] += up_values[p];
                let mut len = 0;
                let mut ii = i;
                while ii != k && flag[ii] != k {
                    path[len] = ii;
                    len += 1;
                    flag[ii] = k;
                    ii = parent[ii];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = path[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in l_colptr[i]..l_next[i] {
                    y[l_rowidx[p] as usize] -= l_values[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_rowidx[l_next[i]] = k as u32;
                l_values[l_next[i]] = l_ki;
                l_next[i] += 1;
            }
            if !(d[k] > 0.0) || !d[k].is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    index: k,
                    pivot: d[k],
                });
            }
        }

        Ok(LdlFactorization {
            n,
            l_colptr,
            l_rowidx,
            l_values,
            d,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        // L z = b (unit lower triangular, stored strictly lower by columns)
        for j in 0..self.n {
            let xj = x[j];
            for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                x[self.l_rowidx[p] as usize] -= self.l_values[p] * xj;
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        // L^T x = z
        for j in (0..self.n).rev() {
            let mut xj = x[j];
            for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                xj -= self.l_values[p] * x[self.l_rowidx[p] as usize];
            }
            x[j] = xj;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            for j in k + 1..n {
                b[k] -= a[k][j] * b[j];
            }
            b[k] /= a[k][k];
        }
        b
    }

    fn random_spd(n: usize, seed: &mut u64) -> (Vec<Vec<f64>>, CsrMatrix) {
        let mut rand = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rand()).collect()).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b[k][i] * b[k][j];
                }
                dense[i][j] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            for j in 0..n {
                t.push(i, j, dense[i][j]);
            }
        }
        (dense, t.into_csr())
    }

    #[test]
    fn solves_random_spd_system() {
        let mut seed = 42u64;
        for &n in &[1usize, 2, 5, 17, 40] {
            let (dense, sparse) = random_spd(n, &mut seed);
            let b: Vec<f64> = (0..n).map(|i| (i as f64) - 1.5).collect();
            let ldl = LdlFactorization::new(&sparse).unwrap();
            let x = ldl.solve(&b);
            let x_ref = dense_solve(dense, b.clone());
            for i in 0..n {
                assert!((x[i] - x_ref[i]).abs() < 1e-10, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 0, 2.0);
        t.push(1, 1, 1.0); // eigenvalues 3 and -1
        let err = LdlFactorization::new(&t.into_csr()).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { index: 1, .. }));
    }

    #[test]
    fn factors_truly_sparse_matrix() {
        // 1D Laplacian, tridiagonal SPD.
        let n = 50;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
                t.push(i - 1, i, -1.0);
            }
        }
        let a = t.into_csr();
        let b = vec![1.0; n];
        let x = LdlFactorization::new(&a).unwrap().solve(&b);
        let mut r = a.matvec_alloc(&x);
        for i in 0..n {
            r[i] -= b[i];
        }
        let res: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res < 1e-10);
    }
}
