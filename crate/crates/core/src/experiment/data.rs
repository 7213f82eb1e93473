//! Whitened datasets: synthetic class-conditional Gaussians and PCA.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eig, Matrix};
use crate::math;
use crate::network::Dataset;
use crate::rng::Rng64;

/// Mean shift `s·e_c` of class `c` in [`whitened_synthetic_dataset`].
pub const DEFAULT_CLASS_SEPARATION: f64 = 3.0;

const RESAMPLE_ATTEMPTS: u64 = 5;
const RANK_TOL: f64 = 1e-10;

/// `m` whitened samples in `d` dimensions with one-hot targets assigned
/// round-robin (`class(μ) = μ mod d`). Inputs are drawn as
/// `N(s·e_class, I)` with `s = DEFAULT_CLASS_SEPARATION`, then centred and
/// whitened so their sample covariance `(1/m)XXᵀ` is the identity.
pub fn whitened_synthetic_dataset(d: usize, m: usize, seed: u64) -> Result<Dataset> {
    whitened_synthetic_dataset_with(d, m, seed, DEFAULT_CLASS_SEPARATION)
}

/// [`whitened_synthetic_dataset`] with an explicit class separation; 0
/// gives label-independent Gaussian inputs.
pub fn whitened_synthetic_dataset_with(d: usize, m: usize, seed: u64, separation: f64) -> Result<Dataset> {
    if d == 0 || m <= d {
        // centring leaves rank at most m − 1
        return Err(invalid(format!("synthetic data needs m > d >= 1, got d={d}, m={m}")));
    }
    if !separation.is_finite() {
        return Err(Error::NonFinite("class separation"));
    }
    let y = round_robin_targets(d, m);
    for attempt in 0..RESAMPLE_ATTEMPTS {
        let mut rng = Rng64::new(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut raw = Matrix::zeros(d, m);
        for mu in 0..m {
            for i in 0..d {
                raw[(i, mu)] = rng.normal() + if mu % d == i { separation } else { 0.0 };
            }
        }
        if let Some(x) = whiten_columns(&raw)? {
            return Dataset::new(x, y);
        }
    }
    Err(Error::Degenerate(format!(
        "sample covariance stayed rank-deficient after {RESAMPLE_ATTEMPTS} draws"
    )))
}

/// One-hot targets with `class(μ) = μ mod d`, as a `d × m` matrix.
pub fn round_robin_targets(d: usize, m: usize) -> Matrix {
    Matrix::from_fn(d, m, |i, mu| if mu % d == i { 1.0 } else { 0.0 })
}

/// Centres the columns and applies `V diag(λ^{-1/2}) Vᵀ`; `None` when the
/// covariance is numerically singular.
fn whiten_columns(raw: &Matrix) -> Result<Option<Matrix>> {
    let (d, m) = raw.shape();
    let centred = centre_columns(raw);
    let cov = centred.matmul_transpose(&centred)?.scaled(1.0 / m as f64);
    let eig = sym_eig(&cov)?;
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if eig.eigenvalues[0] <= RANK_TOL * top || top <= 0.0 {
        return Ok(None);
    }
    let v = &eig.eigenvectors;
    let scaled = Matrix::from_fn(d, d, |i, k| v[(i, k)] / math::sqrt(eig.eigenvalues[k]));
    let w = scaled.matmul_transpose(v)?;
    Ok(Some(w.matmul(&centred)?))
}

fn centre_columns(raw: &Matrix) -> Matrix {
    let (d, m) = raw.shape();
    let means: Vec<f64> = (0..d).map(|i| raw.row(i).iter().sum::<f64>() / m as f64).collect();
    Matrix::from_fn(d, m, |i, mu| raw[(i, mu)] - means[i])
}

/// Principal components of samples stored one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × p`, rows are unit principal directions, largest variance first.
    pub components: Matrix,
    pub variances: Vec<f64>,
}

impl PcaModel {
    /// Fits the top `k` components of the `p × m` sample matrix.
    pub fn fit(samples: &Matrix, k: usize) -> Result<Self> {
        let (p, m) = samples.shape();
        if k == 0 || k > p {
            return Err(invalid(format!("cannot keep {k} components of {p} features")));
        }
        if m < 2 {
            return Err(invalid("PCA needs at least two samples"));
        }
        let mean: Vec<f64> = (0..p).map(|i| samples.row(i).iter().sum::<f64>() / m as f64).collect();
        let centred = centre_columns(samples);
        let cov = centred.matmul_transpose(&centred)?.scaled(1.0 / m as f64);
        let eig = sym_eig(&cov)?;
        let order: Vec<usize> = (0..p).rev().take(k).collect();
        let components = Matrix::from_fn(k, p, |c, i| eig.eigenvectors[(i, order[c])]);
        let variances = order.iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect();
        Ok(Self { mean, components, variances })
    }

    /// Coordinates along the components, `k × m`.
    pub fn project(&self, samples: &Matrix) -> Result<Matrix> {
        let (p, m) = samples.shape();
        let centred = Matrix::from_fn(p, m, |i, mu| samples[(i, mu)] - self.mean[i]);
        self.components.matmul(&centred)
    }

    /// Projection scaled to unit variance per component.
    pub fn whiten(&self, samples: &Matrix) -> Result<Matrix> {
        let top = self.variances.first().copied().unwrap_or(0.0);
        if let Some(v) = self.variances.iter().find(|v| **v <= RANK_TOL * top) {
            return Err(Error::Degenerate(format!(
                "kept component has variance {v:e}; use fewer components"
            )));
        }
        let z = self.project(samples)?;
        Ok(Matrix::from_fn(z.rows(), z.cols(), |c, mu| z[(c, mu)] / math::sqrt(self.variances[c])))
    }

    /// Back-projection of [`PcaModel::project`] into feature space.
    pub fn reconstruct(&self, samples: &Matrix) -> Result<Matrix> {
        let z = self.project(samples)?;
        let back = self.components.transpose_matmul(&z)?;
        Ok(Matrix::from_fn(back.rows(), back.cols(), |i, mu| back[(i, mu)] + self.mean[i]))
    }
}

/// Top-`k` PCA whitening of `p × m` features with one-hot targets in `k`
/// dimensions; every label must be below `k`.
pub fn pca_whiten(samples: &Matrix, labels: &[usize], k: usize) -> Result<Dataset> {
    if labels.len() != samples.cols() {
        return Err(invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            samples.cols()
        )));
    }
    if let Some((mu, l)) = labels.iter().enumerate().find(|(_, l)| **l >= k) {
        return Err(invalid(format!("sample {mu} has label {l}, which needs more than {k} output dimensions")));
    }
    let model = PcaModel::fit(samples, k)?;
    let x = model.whiten(samples)?;
    let mut y = Matrix::zeros(k, labels.len());
    for (mu, &l) in labels.iter().enumerate() {
        y[(l, mu)] = 1.0;
    }
    Dataset::new(x, y)
}

/// `(1/m) X Xᵀ`.
pub fn sample_covariance(x: &Matrix) -> Result<Matrix> {
    Ok(x.matmul_transpose(x)?.scaled(1.0 / x.cols() as f64))
}
