use alloc::format;

use crate::error::{invalid, Result};
use crate::linalg::{permutation_matrix, Matrix};
use crate::network::{Activation, ActivationTriple, Dataset, NetworkShape};

/// Which pair of sample vectors a [`SigmaMatrix`] correlates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaTag {
    /// x with x
    XX,
    /// y with x
    YX,
    /// x with σ_pre(x)
    XpreX,
    /// y with σ_pre(x)
    YpreX,
}

/// `Σ^{AB}_{ij} = (1/m) Σ_μ a_i^μ b_j^μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    pub tag: SigmaTag,
    pub entries: Matrix,
}

pub fn sigma_matrix(data: &Dataset, pre: Activation, tag: SigmaTag) -> SigmaMatrix {
    let m = data.samples() as f64;
    let x = data.x();
    let pre_x;
    let (a, b) = match tag {
        SigmaTag::XX => (x, x),
        SigmaTag::YX => (data.y(), x),
        SigmaTag::XpreX | SigmaTag::YpreX => {
            pre_x = x.map(|v| pre.apply(v));
            let a = if tag == SigmaTag::XpreX { x } else { data.y() };
            (a, &pre_x)
        }
    };
    let entries = a.matmul_transpose(b).expect("dataset columns agree").scaled(1.0 / m);
    SigmaMatrix { tag, entries }
}

/// `M = Σ^{X σ_pre(X)} − Σ^{Y σ_pre(X)}`.
pub fn residual_cross_covariance(data: &Dataset, pre: Activation) -> Matrix {
    let xs = sigma_matrix(data, pre, SigmaTag::XpreX).entries;
    let ys = sigma_matrix(data, pre, SigmaTag::YpreX).entries;
    xs.sub(&ys).expect("same shape")
}

/// The off-diagonal block `A = σ'_mid(0) σ'_post(0) · blockdiag_d(M) · Pᵀ` of
/// a two-matrix unit at zero (rows: second matrix, columns: first matrix).
pub fn two_shortcut_block(data: &Dataset, acts: ActivationTriple) -> Result<Matrix> {
    let d = data.width();
    let gain = acts.mid.derivative_at_zero() * acts.post.derivative_at_zero();
    let m = residual_cross_covariance(data, acts.pre);
    let p = permutation_matrix(d)?;
    Ok(Matrix::block_diag_repeat(&m, d).matmul_transpose(&p)?.scaled(gain))
}

/// Blocks `(A, B)` of the single-matrix Hessian at zero with identity pre
/// and post activations:
/// `B = P · blockdiag_d(Σ^{XX}) · Pᵀ` and `A = blockdiag_d(Σ^{XX} − Σ^{YX}) · Pᵀ + B`.
pub fn one_shortcut_blocks(data: &Dataset) -> Result<(Matrix, Matrix)> {
    let d = data.width();
    let p = permutation_matrix(d)?;
    let sxx = sigma_matrix(data, Activation::Identity, SigmaTag::XX).entries;
    let syx = sigma_matrix(data, Activation::Identity, SigmaTag::YX).entries;
    let b = p.matmul(&Matrix::block_diag_repeat(&sxx, d))?.matmul_transpose(&p)?;
    let a = Matrix::block_diag_repeat(&sxx.sub(&syx)?, d).matmul_transpose(&p)?.add(&b)?;
    Ok((a, b))
}

/// Closed-form Hessian of the loss at all-zero weights for `n ∈ {1, 2}`.
///
/// * `n = 2`: block diagonal with `units` copies of `[[0, Aᵀ], [A, 0]]`.
/// * `n = 1`: block Toeplitz with `B` on the diagonal, `A` below and `Aᵀ`
///   above; only defined for identity pre and post activations.
pub fn analytic_hessian_zero(data: &Dataset, acts: ActivationTriple, n: usize, units: usize) -> Result<Matrix> {
    if units == 0 {
        return Err(invalid("at least one residual unit is required"));
    }
    let d = data.width();
    let q = d * d;
    match n {
        2 => {
            let a = two_shortcut_block(data, acts)?;
            let at = a.transpose();
            let mut h = Matrix::zeros(2 * q * units, 2 * q * units);
            for r in 0..units {
                let o = 2 * q * r;
                h.set_block(o + q, o, &a);
                h.set_block(o, o + q, &at);
            }
            Ok(h)
        }
        1 => {
            if acts.pre != Activation::Identity || acts.post != Activation::Identity {
                return Err(invalid(
                    "closed-form Hessian for n = 1 is defined only for identity pre and post activations",
                ));
            }
            let (a, b) = one_shortcut_blocks(data)?;
            let at = a.transpose();
            let mut h = Matrix::zeros(q * units, q * units);
            for r1 in 0..units {
                for r2 in 0..units {
                    let block = match r1.cmp(&r2) {
                        core::cmp::Ordering::Equal => &b,
                        core::cmp::Ordering::Greater => &a,
                        core::cmp::Ordering::Less => &at,
                    };
                    h.set_block(r1 * q, r2 * q, block);
                }
            }
            Ok(h)
        }
        _ => Err(invalid(format!(
            "closed-form Hessian covers n = 1 and n = 2; for n = {n} use vanishing_hessian"
        ))),
    }
}

/// For `n ≥ 3` the Hessian at zero is the zero matrix.
pub fn vanishing_hessian(shape: &NetworkShape) -> Result<Matrix> {
    if shape.shortcut_depth < 3 {
        return Err(invalid("the zero-point Hessian vanishes only for n >= 3"));
    }
    let p = shape.param_count();
    Ok(Matrix::zeros(p, p))
}
