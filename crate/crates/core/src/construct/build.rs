//! Exact-fit networks with small per-matrix norms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{make_column_mover, min_column_distance, min_distance, plan_sphere_path, SpherePath};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::network::{Dataset, NetworkShape, ShortcutNetwork};

/// Largest accepted `max_μ ‖net(x^μ) − y^μ‖₂`.
pub const FIT_TOLERANCE: f64 = 1e-9;

const ASSUMPTION_TOL: f64 = 1e-9;

/// Step cap `δ = m(ρ(m−1)/2 + 1)π / R`.
pub fn step_cap_for_units(samples: usize, rho: f64, units: usize) -> f64 {
    let m = samples as f64;
    m * (rho * (m - 1.0) / 2.0 + 1.0) * core::f64::consts::PI / units as f64
}

/// A constructed network with the data needed to audit it.
#[derive(Debug, Clone)]
pub struct Construction {
    pub network: ShortcutNetwork,
    pub rho: f64,
    pub delta: f64,
    /// Units that move a column; the rest are identity units.
    pub units_used: usize,
    /// Step length of each mover unit, in unit order.
    pub unit_steps: Vec<f64>,
    pub paths: Vec<SpherePath>,
    /// Smallest column distance over every intermediate working matrix.
    pub min_intermediate_distance: f64,
}

impl Construction {
    /// `√(8δ)/ρ`.
    pub fn norm_bound(&self) -> f64 {
        math::sqrt(8.0 * self.delta) / self.rho
    }

    /// [`verify_construction`] plus the path invariants.
    pub fn verify(&self, data: &Dataset) -> ConstructionReport {
        let mut report = verify_construction(&self.network, data, self.rho, self.delta);
        report.paths_ok = Some(self.paths.iter().all(|p| p.verify().is_ok()));
        report
    }
}

/// Builds a biased two-matrix residual network with exactly `units` units
/// that maps every input column of `data` to its target.
///
/// Columns are moved one at a time along [`plan_sphere_path`] paths with
/// step cap [`step_cap_for_units`]; each step is one
/// [`super::ColumnMoverUnit`]. Unused units are identity units.
///
/// The map is exact, but a rounding error on a moving column grows by about
/// `1 + 2√2·δ/ρ` per unit, so a path of arc length `ℓ` amplifies it by
/// `exp(2√2·ℓ/ρ)`. Data with small `ρ` can miss [`FIT_TOLERANCE`].
pub fn build_small_norm_network(data: &Dataset, units: usize, rho: f64) -> Result<Construction> {
    let (d, m) = (data.width(), data.samples());
    if d < 3 {
        return Err(invalid(format!("construction needs width d >= 3, got {d}")));
    }
    if units == 0 {
        return Err(invalid("units must be positive"));
    }
    if !(rho > 0.0) {
        return Err(Error::Assumption {
            name: "minimum-distance assumption",
            detail: format!("rho must be positive, got {rho}"),
        });
    }
    data.check_unit_inputs_one_hot(ASSUMPTION_TOL)?;
    let points: Vec<Vec<f64>> = (0..m)
        .map(|j| data.x().column(j))
        .chain((0..m).map(|j| data.y().column(j)))
        .collect();
    let measured = min_distance(&points)?;
    if measured < rho * (1.0 - 1e-12) {
        return Err(Error::Assumption {
            name: "minimum-distance assumption",
            detail: format!(
                "inputs and targets have minimum pairwise distance {measured:.6e} < rho = {rho:.6e} (duplicate labels give 0)"
            ),
        });
    }

    let delta = step_cap_for_units(m, rho, units);
    let mut work = data.x().clone();
    let mut movers = Vec::new();
    let mut paths = Vec::with_capacity(m);
    let mut min_seen = if m > 1 { min_column_distance(&work)? } else { f64::INFINITY };
    for i in 0..m {
        let target = data.y().column(i);
        let path = plan_sphere_path(&work, i, &target, rho, delta)?;
        for next in &path.waypoints[1..] {
            let unit = make_column_mover(&work, i, next, rho)?;
            work.set_column(i, next);
            if m > 1 {
                min_seen = min_seen.min(min_column_distance(&work)?);
            }
            movers.push(unit);
            if movers.len() > units {
                return Err(invalid(format!(
                    "{units} units are too few: the construction needs more than {} mover steps",
                    movers.len() - 1
                )));
            }
        }
        paths.push(path);
    }

    let shape = NetworkShape::simplified_resnet(d, units)?;
    let mut weights = Vec::with_capacity(2 * units);
    let mut biases = Vec::with_capacity(units);
    let unit_steps: Vec<f64> = movers.iter().map(|u| u.step).collect();
    let units_used = movers.len();
    for u in movers {
        weights.push(u.w1);
        weights.push(u.w2);
        biases.push(u.bias);
    }
    for _ in units_used..units {
        weights.push(Matrix::zeros(d, d));
        weights.push(Matrix::zeros(d, d));
        biases.push(vec![0.0; d]);
    }
    let network = ShortcutNetwork::from_parts(shape, weights, Some(biases))?;
    Ok(Construction {
        network,
        rho,
        delta,
        units_used,
        unit_steps,
        paths,
        min_intermediate_distance: min_seen,
    })
}

/// Outcome of each construction check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionReport {
    pub samples: usize,
    pub width: usize,
    pub rho: f64,
    pub units: usize,
    pub delta: f64,
    pub units_used: usize,
    pub fit_error: f64,
    pub max_frobenius: f64,
    pub norm_bound: f64,
    /// Smallest column distance over the hidden states of the inputs.
    pub min_intermediate_distance: f64,
    pub fit_ok: bool,
    pub norms_ok: bool,
    pub distances_ok: bool,
    /// `None` when no paths were supplied.
    pub paths_ok: Option<bool>,
}

impl ConstructionReport {
    pub fn passed(&self) -> bool {
        self.fit_ok && self.norms_ok && self.distances_ok && self.paths_ok.unwrap_or(true)
    }
}

/// Checks exact fit, per-matrix norms against `√(8δ)/ρ`, and that the
/// inputs stay `ρ/2` apart after every unit.
pub fn verify_construction(net: &ShortcutNetwork, data: &Dataset, rho: f64, delta: f64) -> ConstructionReport {
    let shape = net.shape();
    let norm_bound = math::sqrt(8.0 * delta) / rho;
    let max_frobenius = net.max_frobenius_norm();
    let units_used = (0..shape.units)
        .filter(|&r| {
            (0..shape.shortcut_depth).any(|l| net.weight(r, l).max_abs() > 0.0)
                || net.bias(r).is_some_and(|b| b.iter().any(|v| *v != 0.0))
        })
        .count();
    let mut report = ConstructionReport {
        samples: data.samples(),
        width: data.width(),
        rho,
        units: shape.units,
        delta,
        units_used,
        fit_error: f64::INFINITY,
        max_frobenius,
        norm_bound,
        min_intermediate_distance: f64::NAN,
        fit_ok: false,
        norms_ok: max_frobenius <= norm_bound * (1.0 + 1e-12),
        distances_ok: false,
        paths_ok: None,
    };
    let Ok(states) = net.forward_states(data.x()) else { return report };
    let out = states.last().expect("states include the input");
    report.fit_error = (0..data.samples())
        .map(|j| math::dist2(&out.column(j), &data.y().column(j)))
        .fold(0.0, f64::max);
    report.fit_ok = report.fit_error <= FIT_TOLERANCE;
    if data.samples() > 1 {
        let dist = states
            .iter()
            .filter_map(|s| min_column_distance(s).ok())
            .fold(f64::INFINITY, f64::min);
        report.min_intermediate_distance = dist;
        report.distances_ok = dist >= 0.5 * rho * (1.0 - 1e-9);
    } else {
        report.min_intermediate_distance = f64::INFINITY;
        report.distances_ok = true;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = math::norm2(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    /// Random unit inputs with distinct one-hot targets.
    fn dataset(d: usize, m: usize, seed: u64) -> Dataset {
        let mut rng = Rng64::new(seed);
        let xs: Vec<Vec<f64>> = (0..m).map(|_| unit((0..d).map(|_| rng.normal()).collect())).collect();
        let ys: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                e
            })
            .collect();
        Dataset::new(Matrix::from_columns(&xs).unwrap(), Matrix::from_columns(&ys).unwrap()).unwrap()
    }

    fn measured_rho(data: &Dataset) -> f64 {
        let m = data.samples();
        let pts: Vec<Vec<f64>> = (0..m).map(|j| data.x().column(j)).chain((0..m).map(|j| data.y().column(j))).collect();
        min_distance(&pts).unwrap()
    }

    #[test]
    fn fits_exactly_with_bounded_norms() {
        let data = dataset(5, 3, 1);
        let rho = measured_rho(&data);
        let c = build_small_norm_network(&data, 400, rho).unwrap();
        let report = c.verify(&data);
        assert!(report.passed(), "{report:?}");
        assert!(report.fit_error <= 1e-9);
        assert_eq!(c.network.shape().units, 400);
        assert_eq!(report.units_used, c.units_used);
        for (k, step) in c.unit_steps.iter().enumerate() {
            let bound = (8.0 * step).sqrt() / rho;
            assert!((c.network.weight(k, 0).frobenius_norm() - bound).abs() <= 1e-12);
            assert!((c.network.weight(k, 1).frobenius_norm() - bound).abs() <= 1e-12);
            assert!(*step <= c.delta * (1.0 + 1e-12));
        }
        for r in c.units_used..400 {
            assert_eq!(c.network.weight(r, 0).max_abs(), 0.0);
        }
        assert!(c.min_intermediate_distance >= rho / 2.0);
    }

    #[test]
    fn unit_count_stays_within_step_budget() {
        for seed in 0..5 {
            let data = dataset(4, 3, seed);
            let rho = measured_rho(&data);
            let units = 300;
            let c = build_small_norm_network(&data, units, rho).unwrap();
            let m = 3.0;
            let per_column = ((core::f64::consts::PI * (rho * (m - 1.0) / 2.0 + 1.0)) / c.delta).ceil();
            assert!(c.units_used as f64 <= m * per_column);
        }
    }

    #[test]
    fn single_sample_uses_geodesic() {
        let data = dataset(3, 1, 3);
        let rho = measured_rho(&data);
        let delta = step_cap_for_units(1, rho, 50);
        assert!((delta - core::f64::consts::PI / 50.0).abs() < 1e-15);
        let c = build_small_norm_network(&data, 50, rho).unwrap();
        let angle = math::acos(math::dot(&data.x().column(0), &data.y().column(0)));
        assert_eq!(c.units_used, (angle / delta).ceil() as usize);
        assert!(c.verify(&data).passed());
    }

    #[test]
    fn bound_halves_when_units_quadruple() {
        let data = dataset(5, 3, 2);
        let rho = measured_rho(&data);
        let a = build_small_norm_network(&data, 500, rho).unwrap();
        let b = build_small_norm_network(&data, 2000, rho).unwrap();
        assert!((b.norm_bound() / a.norm_bound() - 0.5).abs() < 1e-12);
        assert!(b.network.max_frobenius_norm() <= a.network.max_frobenius_norm());
    }

    #[test]
    fn perturbed_weight_breaks_fit() {
        let data = dataset(4, 2, 5);
        let rho = measured_rho(&data);
        let c = build_small_norm_network(&data, 200, rho).unwrap();
        let mut net = c.network.clone();
        net.weight_mut(0, 1)[(0, 0)] += 0.1;
        let report = verify_construction(&net, &data, rho, c.delta);
        assert!(!report.fit_ok);
        assert!(!report.passed());
    }

    #[test]
    fn norm_check_matches_direct_computation() {
        let data = dataset(4, 2, 6);
        let rho = measured_rho(&data);
        let c = build_small_norm_network(&data, 200, rho).unwrap();
        let direct = c
            .network
            .weights()
            .iter()
            .map(|w| w.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let report = verify_construction(&c.network, &data, rho, c.delta);
        assert_eq!(report.max_frobenius, direct);
        assert_eq!(report.norms_ok, direct <= report.norm_bound * (1.0 + 1e-12));
    }

    #[test]
    fn rejects_assumption_violations() {
        // duplicate labels make the minimum distance zero
        let x = Matrix::from_columns(&[[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]]).unwrap();
        let y = Matrix::from_columns(&[[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let data = Dataset::new(x.clone(), y).unwrap();
        match build_small_norm_network(&data, 100, 0.5) {
            Err(Error::Assumption { name, .. }) => assert!(name.contains("minimum-distance")),
            other => panic!("unexpected {other:?}"),
        }
        let y = Matrix::from_columns(&[[0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            build_small_norm_network(&Dataset::new(x.clone(), y).unwrap(), 100, 0.5),
            Err(Error::Assumption { name: "one-hot targets", .. })
        ));
        let data = dataset(4, 3, 9);
        let rho = measured_rho(&data);
        // three columns cannot move with two units
        assert!(build_small_norm_network(&data, 2, rho).is_err());
        assert!(build_small_norm_network(&data, 100, rho * 1.5).is_err());
    }
}
