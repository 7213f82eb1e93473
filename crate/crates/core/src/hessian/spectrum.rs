use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{abs_percentile, sym_eigvals, Matrix};

/// Percentile of |λ| used in the denominator of the condition proxy.
pub const COND_PERCENTILE: f64 = 0.1;

/// Eigenvalues below `−INDEX_REL_TOL·|λ|_max` count as negative.
const INDEX_REL_TOL: f64 = 1e-10;

/// |λ|_(0.1) at or below this fraction of |λ|_max is treated as zero.
const DEGENERACY_REL_TOL: f64 = 1e-12;

/// Spectrum of a Hessian at one point of parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// |λ|_max
    pub lambda_max: f64,
    /// Nearest-rank 10th percentile of |λ|.
    pub lambda_p10: f64,
    /// |λ|_max / |λ|_(0.1); `+∞` when the denominator is (numerically) zero.
    pub cond_proxy: f64,
    /// Fraction of strictly negative eigenvalues.
    pub index: f64,
    pub loss_at_point: f64,
    /// The percentile eigenvalue vanished, so `cond_proxy` is the sentinel.
    pub degenerate: bool,
}

/// Eigendecomposes `h` and summarizes its spectrum.
pub fn spectrum(h: &Matrix, loss_at_point: f64) -> Result<SpectrumReport> {
    let eigenvalues = sym_eigvals(h)?;
    SpectrumReport::from_eigenvalues(eigenvalues, loss_at_point)
}

/// `(|λ|_max / |λ|_(0.1), degenerate)` for a list of eigenvalues.
pub fn cond_proxy_of(eigenvalues: &[f64]) -> Result<(f64, bool)> {
    let max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let p10 = abs_percentile(eigenvalues, COND_PERCENTILE)?;
    if max == 0.0 || p10 <= DEGENERACY_REL_TOL * max {
        Ok((f64::INFINITY, true))
    } else {
        Ok((max / p10, false))
    }
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, loss_at_point: f64) -> Result<Self> {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let lambda_max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambda_p10 = abs_percentile(&eigenvalues, COND_PERCENTILE)?;
        let (cond_proxy, degenerate) = cond_proxy_of(&eigenvalues)?;
        let threshold = -INDEX_REL_TOL * lambda_max;
        let negatives = eigenvalues.iter().filter(|v| **v < threshold).count();
        let index = negatives as f64 / eigenvalues.len() as f64;
        Ok(Self {
            eigenvalues,
            lambda_max,
            lambda_p10,
            cond_proxy,
            index,
            loss_at_point,
            degenerate,
        })
    }
}
