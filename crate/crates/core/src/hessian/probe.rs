use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::network::{ActivationTriple, Dataset, NetworkShape, ParamVector, ShortcutNetwork};
use crate::rng::Rng64;

/// Number of step sizes ε, log-spaced from 1e-1 down to 1e-3.
pub const PROBE_STEPS: usize = 8;

/// The step sizes ε_k = 10^(−1 − 2k/7), k = 0..8.
pub fn probe_epsilons() -> [f64; PROBE_STEPS] {
    core::array::from_fn(|k| math::pow10(-1.0 - 2.0 * k as f64 / (PROBE_STEPS - 1) as f64))
}

/// Directions tried before a probe gives up on degenerate draws.
pub const PROBE_MAX_ATTEMPTS: usize = 10;

const DEGENERATE_DELTA: f64 = 1e-14;

/// Outcome of a stationarity-order probe at the zero point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    /// Least-squares slope of log|ΔL| against log ε.
    pub exponent: f64,
    /// Directions drawn, including the successful one.
    pub attempts: usize,
    /// `(ε, |L(εv) − L(0)|)` for the accepted direction.
    pub samples: Vec<(f64, f64)>,
}

/// Measures how fast the loss leaves the zero point along random unit
/// directions. Returns the fitted power of ε; an `(n−1)`th-order stationary
/// point shows exponent ≈ n.
pub fn stationarity_order_probe(
    data: &Dataset,
    acts: ActivationTriple,
    n: usize,
    units: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let shape = NetworkShape::new(data.width(), n, units, acts)?;
    if n >= 3 && !(acts.pre.is_smooth() && acts.mid.is_smooth() && acts.post.is_smooth()) {
        return Err(invalid(format!(
            "probing n = {n} needs smooth activations (identity or tanh), got {acts}"
        )));
    }
    let mut rng = Rng64::new(seed);
    for attempt in 1..=PROBE_MAX_ATTEMPTS {
        let mut v: Vec<f64> = (0..shape.param_count()).map(|_| rng.normal()).collect();
        let norm = math::norm2(&v);
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if let Some((exponent, samples)) = probe_direction(&shape, data, &v)? {
            return Ok(ProbeResult {
                exponent,
                attempts: attempt,
                samples,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "loss change stayed below {DEGENERATE_DELTA:e} along {PROBE_MAX_ATTEMPTS} random directions"
    )))
}

/// Fitted exponent along one direction, or `None` if the loss change is
/// below 1e-14 at every ε (or too few points are usable for a fit).
pub fn probe_direction(
    shape: &NetworkShape,
    data: &Dataset,
    direction: &[f64],
) -> Result<Option<(f64, Vec<(f64, f64)>)>> {
    if direction.len() != shape.param_count() {
        return Err(invalid("direction length does not match parameter count"));
    }
    let m = data.samples() as f64;
    // residual at zero: y − x
    let r0 = data.y().sub(data.x())?;
    let mut samples = Vec::with_capacity(PROBE_STEPS);
    for eps in probe_epsilons() {
        let p = ParamVector::new(direction.iter().map(|v| eps * v).collect());
        let net = ShortcutNetwork::unflatten(*shape, &p)?;
        let disp = net.residual_displacement(data.x())?;
        // ‖r0 − D‖² − ‖r0‖² = ‖D‖² − 2⟨r0, D⟩
        let s: f64 = disp
            .as_slice()
            .iter()
            .zip(r0.as_slice())
            .map(|(dv, rv)| dv * dv - 2.0 * rv * dv)
            .sum();
        samples.push((eps, (s / (2.0 * m)).abs()));
    }
    if samples.iter().all(|(_, dl)| *dl < DEGENERATE_DELTA) {
        return Ok(None);
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, dl)| *dl > 0.0)
        .map(|(e, dl)| (math::ln(*e), math::ln(*dl)))
        .collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    Ok(Some((least_squares_slope(&pts), samples)))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
