use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng64;

/// Householder QR of a square matrix, returning (Q, R) with A = Q·R.
pub fn qr(a: &Matrix) -> Result<(Matrix, Matrix)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        let alpha = math::norm2(&x);
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let vnorm = math::norm2(&v);
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        // R <- (I - 2vvᵀ) R on rows k..n
        for j in 0..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= 2.0 * v[i - k] * s;
            }
        }
        // Q <- Q (I - 2vvᵀ) on columns k..n
        for i in 0..n {
            let s: f64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..n {
                q[(i, j)] -= 2.0 * s * v[j - k];
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            r[(i, j)] = 0.0;
        }
    }
    Ok((q, r))
}

/// Orthogonal factor of a seeded standard-Gaussian d×d matrix, with signs
/// fixed so that R has a nonnegative diagonal.
pub fn qr_orthogonal(seed: u64, d: usize) -> Matrix {
    qr_orthogonal_with(&mut Rng64::new(seed), d)
}

/// As [`qr_orthogonal`] but drawing from an existing stream.
pub fn qr_orthogonal_with(rng: &mut Rng64, d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.normal());
    let (mut q, r) = qr(&g).expect("square by construction");
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Determinant by LU with partial pivoting.
pub fn determinant(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .expect("nonempty range");
        if m[(pivot, k)] == 0.0 {
            return Ok(0.0);
        }
        if pivot != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(pivot, j)];
                m[(pivot, j)] = t;
            }
            det = -det;
        }
        det *= m[(k, k)];
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    Ok(det)
}
