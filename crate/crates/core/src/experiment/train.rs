//! Full-batch gradient descent with per-epoch records and spectrum snapshots.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::hessian::{hessian_fd, spectrum, SpectrumReport};
use crate::network::{Dataset, ShortcutNetwork};

/// Training stops and is flagged as divergent once the loss exceeds this.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub lr: f64,
    pub epochs: usize,
    /// Spectrum snapshot every this many epochs (and at the last epoch);
    /// 0 disables snapshots.
    pub snapshot_interval: usize,
    /// Snapshots are skipped for networks with more parameters.
    pub max_spectrum_params: usize,
}

impl TrainOptions {
    pub fn new(lr: f64, epochs: usize) -> Self {
        Self {
            lr,
            epochs,
            snapshot_interval: 0,
            max_spectrum_params: 0,
        }
    }

    pub fn with_snapshots(mut self, interval: usize, max_params: usize) -> Self {
        self.snapshot_interval = interval;
        self.max_spectrum_params = max_params;
        self
    }
}

/// State at the start of an epoch, before its update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub avg_frobenius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub report: SpectrumReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    /// Epochs `0..=epochs`; the last record is the trained network.
    pub records: Vec<EpochRecord>,
    pub snapshots: Vec<Snapshot>,
    pub diverged: bool,
}

impl TrainingTrace {
    /// Loss of the trained network, `+∞` after divergence.
    pub fn final_loss(&self) -> f64 {
        if self.diverged {
            return f64::INFINITY;
        }
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }

    pub fn final_avg_frobenius(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.avg_frobenius)
    }
}

/// Runs `w ← w − lr·∇L` for `epochs` epochs from `net`.
///
/// Epoch `e` is recorded before its update, so the trace holds
/// `epochs + 1` records. A loss above [`DIVERGENCE_LOSS`] or a non-finite
/// loss or gradient stops training with `diverged` set; non-finite values
/// are not recorded.
pub fn train(net: &ShortcutNetwork, data: &Dataset, opts: &TrainOptions) -> Result<(ShortcutNetwork, TrainingTrace)> {
    if !(opts.lr >= 0.0) || !opts.lr.is_finite() {
        return Err(invalid("learning rate must be finite and non-negative"));
    }
    if opts.epochs == 0 {
        return Err(invalid("epochs must be at least 1"));
    }
    let shape = *net.shape();
    let snapshots_on = opts.snapshot_interval > 0 && shape.param_count() <= opts.max_spectrum_params;
    let mut current = net.clone();
    let mut trace = TrainingTrace {
        records: Vec::with_capacity(opts.epochs + 1),
        ..TrainingTrace::default()
    };
    for epoch in 0..=opts.epochs {
        let (loss, grad) = current.loss_and_gradient(data)?;
        let grad_norm = grad.norm2();
        if !loss.is_finite() || !grad_norm.is_finite() {
            trace.diverged = true;
            break;
        }
        trace.records.push(EpochRecord {
            epoch,
            loss,
            grad_norm,
            avg_frobenius: current.average_frobenius_norm(),
        });
        if loss > DIVERGENCE_LOSS {
            trace.diverged = true;
            break;
        }
        if snapshots_on && (epoch % opts.snapshot_interval == 0 || epoch == opts.epochs) {
            let h = hessian_fd(&current, data)?;
            trace.snapshots.push(Snapshot {
                epoch,
                report: spectrum(&h, loss)?,
            });
        }
        if epoch == opts.epochs {
            break;
        }
        let mut params = current.flatten();
        for (w, g) in params.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *w -= opts.lr * g;
        }
        current = ShortcutNetwork::unflatten(shape, &params)?;
    }
    Ok((current, trace))
}
