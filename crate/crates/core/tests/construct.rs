use shortcut_core::construct::{build_small_norm_network, min_distance, step_cap_for_units, verify_construction};
use shortcut_core::rng::Rng64;
use shortcut_core::{Dataset, Matrix};

fn unit_inputs_distinct_labels(d: usize, m: usize, seed: u64) -> (Dataset, f64) {
    let mut rng = Rng64::new(seed);
    let xs: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let ys: Vec<Vec<f64>> = (0..m).map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let rho = min_distance(&xs.iter().chain(&ys).collect::<Vec<_>>().iter().map(|v| v.as_slice()).collect::<Vec<_>>())
        .unwrap();
    let data = Dataset::new(Matrix::from_columns(&xs).unwrap(), Matrix::from_columns(&ys).unwrap()).unwrap();
    (data, rho)
}

#[test]
fn random_datasets_are_fitted_exactly() {
    let mut built = 0;
    for seed in 0..16 {
        let d = 3 + (seed as usize % 3);
        let m = 2 + (seed as usize % 2);
        let (data, rho) = unit_inputs_distinct_labels(d, m, seed);
        // rounding grows like exp(2√2·ℓ/ρ); see rounding_growth_matches_linearisation
        if rho < 0.45 {
            continue;
        }
        let c = build_small_norm_network(&data, 600, rho).unwrap();
        let report = c.verify(&data);
        assert!(report.passed(), "seed {seed}: {report:?}");
        assert!(report.min_intermediate_distance >= rho / 2.0);
        built += 1;
    }
    assert!(built >= 10, "{built}");
}

#[test]
fn norm_bound_scales_with_inverse_root_of_units() {
    let (data, rho) = unit_inputs_distinct_labels(5, 3, 42);
    let mut previous = f64::INFINITY;
    for units in [400, 800, 1600, 3200] {
        let c = build_small_norm_network(&data, units, rho).unwrap();
        let report = verify_construction(&c.network, &data, rho, c.delta);
        assert!(report.passed());
        assert!(report.max_frobenius <= previous);
        previous = report.max_frobenius;
        let bound = (8.0 * step_cap_for_units(3, rho, units)).sqrt() / rho;
        assert_eq!(report.norm_bound, bound);
    }
    let small = build_small_norm_network(&data, 400, rho).unwrap().network.max_frobenius_norm();
    let large = build_small_norm_network(&data, 1600, rho).unwrap().network.max_frobenius_norm();
    assert!((large / small - 0.5).abs() < 0.02, "{}", large / small);
}

#[test]
fn rounding_growth_matches_linearisation() {
    // Along a geodesic, a radial error η and an along-path error T evolve as
    // η' = η + δT, T' = T + (8δ/ρ²)η, growing by 1 + 2√2·δ/ρ per unit.
    let (data, rho) = unit_inputs_distinct_labels(5, 2, 2);
    let c = build_small_norm_network(&data, 600, rho).unwrap();
    let states = c.network.forward_states(data.x()).unwrap();
    let path = &c.paths[0];
    let errors: Vec<f64> = (1..path.waypoints.len())
        .map(|k| {
            let got = states[k].column(path.column_index);
            got.iter().zip(&path.waypoints[k]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .collect();
    let (a, b) = (errors.len() - 41, errors.len() - 1);
    let observed = (errors[b] / errors[a]).powf(1.0 / (b - a) as f64);
    let step = c.unit_steps[a];
    let predicted = 1.0 + 2.0 * 2f64.sqrt() * step / rho;
    assert!((observed / predicted - 1.0).abs() < 2e-3, "observed {observed}, predicted {predicted}");
}
