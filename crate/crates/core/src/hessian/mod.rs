//! Hessians of the training loss: central finite differences of the exact
//! gradient, closed forms at the zero point, spectra and stationarity probes.

mod analytic;
mod probe;
mod spectrum;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::network::{Dataset, ShortcutNetwork};

pub use analytic::{
    analytic_hessian_zero, one_shortcut_blocks, residual_cross_covariance, sigma_matrix, two_shortcut_block,
    vanishing_hessian, SigmaMatrix, SigmaTag,
};
pub use probe::{probe_direction, probe_epsilons, stationarity_order_probe, ProbeResult, PROBE_MAX_ATTEMPTS, PROBE_STEPS};
pub use spectrum::{cond_proxy_of, spectrum, SpectrumReport, COND_PERCENTILE};

/// Finite-difference step used by [`hessian_fd`]: 1e-4·max(1, ‖w‖_∞).
pub fn fd_step(net: &ShortcutNetwork) -> f64 {
    1e-4 * net.flatten().max_abs().max(1.0)
}

/// Hessian by central differences of the analytic gradient, symmetrized.
///
/// Row `j` is `(g(w + h e_j) − g(w − h e_j)) / 2h`.
pub fn hessian_fd(net: &ShortcutNetwork, data: &Dataset) -> Result<Matrix> {
    let shape = *net.shape();
    let base = net.flatten();
    let p = base.len();
    let h = fd_step(net);
    let mut out = Matrix::zeros(p, p);
    let mut w = base.clone();
    for j in 0..p {
        let orig = base.as_slice()[j];
        w.as_mut_slice()[j] = orig + h;
        let g_plus = ShortcutNetwork::unflatten(shape, &w)?.gradient(data)?;
        w.as_mut_slice()[j] = orig - h;
        let g_minus = ShortcutNetwork::unflatten(shape, &w)?.gradient(data)?;
        w.as_mut_slice()[j] = orig;
        for (o, (a, b)) in out.row_mut(j).iter_mut().zip(g_plus.as_slice().iter().zip(g_minus.as_slice())) {
            *o = (a - b) / (2.0 * h);
        }
    }
    out.symmetrized()
}
