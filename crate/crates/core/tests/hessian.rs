use shortcut_core::experiment::whitened_synthetic_dataset;
use shortcut_core::hessian::{
    analytic_hessian_zero, cond_proxy_of, hessian_fd, residual_cross_covariance, spectrum, vanishing_hessian,
};
use shortcut_core::linalg::sym_eigvals;
use shortcut_core::{Activation, ActivationTriple, Dataset, NetworkShape, ShortcutNetwork};

fn fd_at_zero(data: &Dataset, acts: ActivationTriple, n: usize, units: usize) -> shortcut_core::Matrix {
    let shape = NetworkShape::new(data.width(), n, units, acts).unwrap();
    hessian_fd(&ShortcutNetwork::zeros(shape).unwrap(), data).unwrap()
}

#[test]
fn analytic_matches_finite_differences() {
    let data = whitened_synthetic_dataset(4, 20, 1).unwrap();
    let cases = [
        (1, ActivationTriple::linear()),
        (2, ActivationTriple::linear()),
        (2, ActivationTriple::mid(Activation::Relu)),
        (2, ActivationTriple::new(Activation::Relu, Activation::Tanh, Activation::Identity)),
    ];
    for (n, acts) in cases {
        let analytic = analytic_hessian_zero(&data, acts, n, 2).unwrap();
        let fd = fd_at_zero(&data, acts, n, 2);
        let err = analytic.sub(&fd).unwrap().max_abs();
        assert!(err <= 1e-5, "n={n} {acts}: {err:e}");
    }
}

#[test]
fn deep_paths_have_vanishing_hessian() {
    let data = whitened_synthetic_dataset(3, 12, 2).unwrap();
    let acts = ActivationTriple::mid(Activation::Tanh);
    let shape = NetworkShape::new(3, 3, 2, acts).unwrap();
    let fd = fd_at_zero(&data, acts, 3, 2);
    assert!(fd.max_abs() <= 1e-8);
    assert_eq!(vanishing_hessian(&shape).unwrap().shape(), fd.shape());
}

#[test]
fn two_shortcut_condition_is_depth_invariant() {
    let data = whitened_synthetic_dataset(4, 30, 3).unwrap();
    let acts = ActivationTriple::linear();
    let m = residual_cross_covariance(&data, Activation::Identity);
    // singular values of M, each appearing d times, are the |eigenvalues|
    let mut s: Vec<f64> = sym_eigvals(&m.transpose_matmul(&m).unwrap())
        .unwrap()
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    s.sort_by(f64::total_cmp);
    let mut abs_eigs = Vec::new();
    for v in &s {
        for _ in 0..2 * 4 {
            abs_eigs.push(v.sqrt());
        }
    }
    let (expected, _) = cond_proxy_of(&abs_eigs).unwrap();
    for units in [1, 2, 4, 8] {
        let h = analytic_hessian_zero(&data, acts, 2, units).unwrap();
        let report = spectrum(&h, 0.0).unwrap();
        assert!((report.cond_proxy / expected - 1.0).abs() < 1e-9, "R={units}");
        assert!((report.index - 0.5).abs() < 1e-12);
    }
}

#[test]
fn spectrum_is_paired_and_repeats_per_unit() {
    let data = whitened_synthetic_dataset(3, 15, 4).unwrap();
    let acts = ActivationTriple::linear();
    let one = sym_eigvals(&analytic_hessian_zero(&data, acts, 2, 1).unwrap()).unwrap();
    let four = sym_eigvals(&analytic_hessian_zero(&data, acts, 2, 4).unwrap()).unwrap();
    let k = one.len();
    for (i, v) in four.iter().enumerate() {
        assert!((v - one[i / 4]).abs() <= 1e-8, "{i}");
    }
    for i in 0..k {
        assert!((one[i] + one[k - 1 - i]).abs() <= 1e-8);
    }
}

#[test]
fn one_shortcut_condition_grows_with_depth() {
    let data = whitened_synthetic_dataset(4, 40, 5).unwrap();
    let conds: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|&r| {
            let h = analytic_hessian_zero(&data, ActivationTriple::linear(), 1, r).unwrap();
            spectrum(&h, 0.0).unwrap().cond_proxy
        })
        .collect();
    for w in conds.windows(2) {
        assert!(w[1] >= w[0], "{conds:?}");
    }
    assert!(conds[3] >= 2.0 * conds[0], "{conds:?}");
}
