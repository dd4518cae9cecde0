use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::sparse::CsrMatrix;
use super::LinalgError;

/// Unpreconditioned conjugate gradients for symmetric positive definite
/// systems, converging on the relative residual ||b - Ax|| / ||b||.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), LinalgError> {
    let n = b.len();
    let norm_b = l2(b);
    let mut x = vec![0.0; n];
    if norm_b == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rho = dot(&r, &r);
    let target = rel_tol * norm_b;
    for iter in 0..max_iters {
        if rho.sqrt() <= target {
            return Ok((x, iter));
        }
        a.matvec(&p, &mut ap);
        let alpha = rho / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rho_next = dot(&r, &r);
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rho.sqrt() <= target {
        Ok((x, max_iters))
    } else {
        Err(LinalgError::NoConvergence {
            iterations: max_iters,
            residual: rho.sqrt() / norm_b,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
