//! Cyclic Jacobi eigensolver for dense symmetric matrices. Chosen for the
//! near machine precision orthogonality of the accumulated rotations, which
//! the basis orthonormality contract depends on.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::dense::DenseMat;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix: returns eigenvalues (unordered)
/// and the orthogonal matrix with eigenvectors as columns.
pub fn symmetric_eigen(a: &DenseMat) -> (Vec<f64>, DenseMat) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMat::identity(n);
    if n <= 1 {
        return (m.data.clone(), v);
    }

    let scale = m.max_abs();
    let tol = 1e-15 * scale;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m.at(p, q).abs());
            }
        }
        if off <= tol || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.at(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r != p && r != q {
                        let mrp = m.at(r, p);
                        let mrq = m.at(r, q);
                        *m.at_mut(r, p) = c * mrp - s * mrq;
                        *m.at_mut(p, r) = c * mrp - s * mrq;
                        *m.at_mut(r, q) = s * mrp + c * mrq;
                        *m.at_mut(q, r) = s * mrp + c * mrq;
                    }
                }
                let mpp = m.at(p, p);
                let mqq = m.at(q, q);
                *m.at_mut(p, p) = mpp - t * apq;
                *m.at_mut(q, q) = mqq + t * apq;
                *m.at_mut(p, q) = 0.0;
                *m.at_mut(q, p) = 0.0;

                for r in 0..n {
                    let vrp = v.at(r, p);
                    let vrq = v.at(r, q);
                    *v.at_mut(r, p) = c * vrp - s * vrq;
                    *v.at_mut(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    let eig = (0..n).map(|i| m.at(i, i)).collect();
    (eig, v)
}
