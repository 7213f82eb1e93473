//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math;

/// Sweep limit for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 50;

const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Full eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as (H + Hᵀ)/2 after checking
/// ‖H − Hᵀ‖_F ≤ 1e-9·‖H‖_F. Rotations continue until the off-diagonal
/// norm drops below 1e-12·‖H‖_F or [`MAX_SWEEPS`] sweeps have run.
pub fn sym_eig(h: &Matrix) -> Result<EigenDecomposition> {
    let (a, n) = prepare(h)?;
    let (diag, vt) = jacobi(a, n, true);
    let vt = vt.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    // vt rows are eigenvectors
    let eigenvectors = Matrix::from_fn(n, n, |i, k| vt[order[k] * n + i]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending. Skips the eigenvector accumulation.
pub fn sym_eigvals(h: &Matrix) -> Result<Vec<f64>> {
    let (a, n) = prepare(h)?;
    let (mut diag, _) = jacobi(a, n, false);
    diag.sort_by(|a, b| a.total_cmp(b));
    Ok(diag)
}

fn prepare(h: &Matrix) -> Result<(Vec<f64>, usize)> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("eigensolver input"));
    }
    let norm = h.frobenius_norm();
    let asym = h.asymmetry();
    let tolerance = SYMMETRY_TOL * norm;
    if asym > tolerance {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance,
        });
    }
    Ok((h.symmetrized()?.into_vec(), h.rows()))
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[p * n + q] * a[p * n + q];
        }
    }
    math::sqrt(2.0 * s)
}

/// Round-robin pairing: in round `r` of `slots − 1`, slot `slots − 1` meets
/// `r` and the remaining slots pair up around it. `slots` is even; pairs
/// touching an index `≥ n` are dropped.
fn round_pairs(n: usize, slots: usize, round: usize, out: &mut Vec<(usize, usize)>) {
    out.clear();
    let ring = slots - 1;
    let mut push = |a: usize, b: usize| {
        if a < n && b < n {
            out.push((a.min(b), a.max(b)));
        }
    };
    push(slots - 1, round);
    for k in 1..slots / 2 {
        push((round + k) % ring, (round + ring - k) % ring);
    }
}

struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    t: f64,
}

/// Returns the diagonal after convergence and, if requested, the rotated
/// basis stored row-wise (row k is the k-th eigenvector).
///
/// Each sweep visits every pair once in round-robin order. The pairs of a
/// round are disjoint, so their rotations commute and are applied in one
/// row pass and one column pass.
fn jacobi(mut a: Vec<f64>, n: usize, want_vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut vt = if want_vectors {
        let mut v = alloc::vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Some(v)
    } else {
        None
    };
    let norm = math::norm2(&a);
    let target = OFF_DIAGONAL_TOL * norm;
    // rotations this small cannot move the off-diagonal norm above target
    let skip = 1e-3 * target / (n.max(1) as f64);
    let slots = n + n % 2;
    let mut pairs = Vec::with_capacity(slots / 2);
    let mut rotations: Vec<Rotation> = Vec::with_capacity(slots / 2);

    for _sweep in 0..MAX_SWEEPS {
        if n < 2 || off_diagonal_norm(&a, n) <= target {
            break;
        }
        for round in 0..slots - 1 {
            round_pairs(n, slots, round, &mut pairs);
            rotations.clear();
            for &(p, q) in &pairs {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + math::hypot(theta, 1.0));
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / math::hypot(t, 1.0);
                rotations.push(Rotation { p, q, c, s: t * c, t });
            }
            if rotations.is_empty() {
                continue;
            }
            let corners: Vec<(f64, f64, f64)> = rotations
                .iter()
                .map(|r| (a[r.p * n + r.p], a[r.q * n + r.q], a[r.p * n + r.q]))
                .collect();
            for r in &rotations {
                rotate_rows(&mut a, n, r);
                if let Some(v) = vt.as_mut() {
                    rotate_rows(v, n, r);
                }
            }
            for row in a.chunks_exact_mut(n) {
                for r in &rotations {
                    let (x, y) = (row[r.p], row[r.q]);
                    row[r.p] = r.c * x - r.s * y;
                    row[r.q] = r.s * x + r.c * y;
                }
            }
            for (r, (app, aqq, apq)) in rotations.iter().zip(corners) {
                a[r.p * n + r.p] = app - r.t * apq;
                a[r.q * n + r.q] = aqq + r.t * apq;
                a[r.p * n + r.q] = 0.0;
                a[r.q * n + r.p] = 0.0;
            }
        }
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, vt)
}

/// Rows p, q ← (c·row_p − s·row_q, s·row_p + c·row_q).
#[inline]
fn rotate_rows(a: &mut [f64], n: usize, r: &Rotation) {
    let (head, tail) = a.split_at_mut(r.q * n);
    let rp = &mut head[r.p * n..(r.p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = r.c * xp - r.s * xq;
        *y = r.s * xp + r.c * xq;
    }
}
