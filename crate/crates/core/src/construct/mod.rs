//! Constructive small-norm solution for the biased two-layer residual
//! network: residual units that each move one column of the working matrix
//! a short step along an obstacle-free path on the unit sphere.

mod build;
mod sphere;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math;

pub use build::{
    build_small_norm_network, step_cap_for_units, verify_construction, Construction, ConstructionReport,
    FIT_TOLERANCE,
};
pub use sphere::{plan_sphere_path, PathViolation, SpherePath, DETOUR_MARGIN};

const UNIT_NORM_TOL: f64 = 1e-9;

/// Smallest pairwise Euclidean distance.
pub fn min_distance<V: AsRef<[f64]>>(vectors: &[V]) -> Result<f64> {
    if vectors.len() < 2 {
        return Err(invalid("minimum distance needs at least two vectors"));
    }
    let mut best = f64::INFINITY;
    for (a, va) in vectors.iter().enumerate() {
        for vb in &vectors[a + 1..] {
            best = best.min(math::dist2(va.as_ref(), vb.as_ref()));
        }
    }
    Ok(best)
}

/// Minimum distance among the columns of `a`.
pub fn min_column_distance(a: &Matrix) -> Result<f64> {
    let cols: Vec<Vec<f64>> = (0..a.cols()).map(|j| a.column(j)).collect();
    min_distance(&cols)
}

/// A residual unit `x ↦ W2 relu(W1 x + b) + x` that replaces one column
/// of a matrix of unit vectors and leaves every other column unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMoverUnit {
    pub w1: Matrix,
    pub w2: Matrix,
    pub bias: Vec<f64>,
    /// ‖a_i' − a_i‖₂
    pub step: f64,
}

impl ColumnMoverUnit {
    /// `W2 relu(W1 A + b 1ᵀ) + A`.
    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        let mut z = self.w1.matmul(a)?;
        let cols = z.cols();
        for (i, b) in self.bias.iter().enumerate() {
            for v in &mut z.as_mut_slice()[i * cols..(i + 1) * cols] {
                *v = (*v + b).max(0.0);
            }
        }
        self.w2.matmul(&z)?.add(a)
    }
}

/// Builds the unit that moves column `i` of `a` to `target`.
///
/// With `c = √(8δ)/ρ`: row 1 of `W1` is `c·a_iᵀ`, column 1 of `W2` is
/// `(√(8/δ)/ρ)(target − a_i)` and `b = c(ρ²/8 − 1)e₁`. Every other column
/// `a_j` keeps `a_iᵀa_j ≤ 1 − ρ²/8` and is zeroed by the ReLU.
pub fn make_column_mover(a: &Matrix, i: usize, target: &[f64], rho: f64) -> Result<ColumnMoverUnit> {
    let (d, m) = a.shape();
    if d < 3 {
        return Err(invalid(format!("column movers need width d >= 3, got {d}")));
    }
    if i >= m || target.len() != d {
        return Err(invalid("column index or target length out of range"));
    }
    if !(rho > 0.0) {
        return Err(invalid("rho must be positive"));
    }
    for j in 0..m {
        let norm = math::norm2(&a.column(j));
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Assumption {
                name: "unit-norm columns",
                detail: format!("column {j} has norm {norm}"),
            });
        }
    }
    if (math::norm2(target) - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Assumption {
            name: "unit-norm columns",
            detail: "target is not a unit vector".into(),
        });
    }
    let current = a.column(i);
    let step = math::dist2(&current, target);
    if step == 0.0 {
        return Err(invalid("target equals the current column (step 0)"));
    }
    let half = 0.5 * rho;
    for j in (0..m).filter(|&j| j != i) {
        let other = a.column(j);
        let before = math::dist2(&current, &other);
        let after = math::dist2(target, &other);
        if before < half || after < half {
            return Err(Error::Assumption {
                name: "minimum distance rho/2",
                detail: format!(
                    "column {j} is {:.6} from the moving column (before) and {:.6} (after); need >= {half:.6}",
                    before, after
                ),
            });
        }
    }

    let scale = math::sqrt(8.0 * step) / rho;
    let mut w1 = Matrix::zeros(d, d);
    w1.row_mut(0).iter_mut().zip(&current).for_each(|(w, v)| *w = scale * v);
    let mut w2 = Matrix::zeros(d, d);
    let out_scale = math::sqrt(8.0 / step) / rho;
    for r in 0..d {
        w2[(r, 0)] = out_scale * (target[r] - current[r]);
    }
    let mut bias = alloc::vec![0.0; d];
    bias[0] = scale * (rho * rho / 8.0 - 1.0);
    Ok(ColumnMoverUnit { w1, w2, bias, step })
}
