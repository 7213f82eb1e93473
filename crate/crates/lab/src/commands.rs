//! Command implementations. Each returns an [`Outcome`]; the binary prints
//! its lines and exits nonzero when `passed` is false.

use std::path::Path;

use shortcut_core::construct::{build_small_norm_network, min_distance};
use shortcut_core::experiment::{init_network, initial_spectrum, sweep, train, InitScheme, TrainOptions};
use shortcut_core::hessian::{
    analytic_hessian_zero, hessian_fd, spectrum, stationarity_order_probe, vanishing_hessian, SpectrumReport,
};
use shortcut_core::network::Activation;
use shortcut_core::{Dataset, Matrix, NetworkShape, ShortcutNetwork};

use crate::cli::{Command, ConfigArgs, ConstructArgs, DataArgs, NetArgs, ProbeArgs, SpectrumArgs, VerifyArgs};
use crate::config::ConfigFile;
use crate::data::CsvMode;
use crate::error::{LabError, LabResult};
use crate::netjson::NetworkJson;
use crate::tables::{self, float, Table};

/// Entry-wise tolerance between closed-form and finite-difference Hessians.
pub const HESSIAN_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
}

impl Outcome {
    fn new(passed: bool) -> Self {
        Self { passed, lines: Vec::new() }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

pub fn run(command: &Command) -> LabResult<Outcome> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyHessian(a) => cmd_verify_hessian(a),
    }
}

fn load(data: &DataArgs) -> LabResult<Dataset> {
    data.data.load(data.width, data.samples, CsvMode::Whitened)
}

fn shape_of(net: &NetArgs, width: usize) -> LabResult<NetworkShape> {
    Ok(NetworkShape::new(width, net.n, net.depth, net.acts)?)
}

fn create_dir(dir: &Path) -> LabResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

/// Closed-form zero-point Hessian when one is defined for this shape.
pub fn closed_form_hessian(shape: &NetworkShape, data: &Dataset) -> LabResult<Option<Matrix>> {
    let acts = shape.activations;
    Ok(match shape.shortcut_depth {
        2 => Some(analytic_hessian_zero(data, acts, 2, shape.units)?),
        1 if acts.pre == Activation::Identity && acts.post == Activation::Identity => {
            Some(analytic_hessian_zero(data, acts, 1, shape.units)?)
        }
        1 => None,
        _ => Some(vanishing_hessian(shape)?),
    })
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> LabResult<f64> {
    Ok(a.sub(b)?.max_abs())
}

fn describe(report: &SpectrumReport) -> String {
    if report.degenerate {
        format!(
            "cond_proxy = {} (zero Hessian sentinel: |lambda|_max = {:e})  index = {}",
            float(report.cond_proxy),
            report.lambda_max,
            float(report.index)
        )
    } else {
        format!("cond_proxy = {}  index = {}", float(report.cond_proxy), float(report.index))
    }
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> LabResult<Outcome> {
    let data = load(&args.data)?;
    let shape = shape_of(&args.net, data.width())?;
    let zero = ShortcutNetwork::zeros(shape)?;
    let loss = zero.loss(&data)?;
    let analytic = closed_form_hessian(&shape, &data)?;
    let fd = if args.no_fd { None } else { Some(hessian_fd(&zero, &data)?) };
    let check = match (&analytic, &fd) {
        (Some(a), Some(f)) => {
            let diff = max_abs_diff(a, f)?;
            Some((diff, diff <= HESSIAN_TOLERANCE))
        }
        _ => None,
    };

    let mut out = Outcome::new(check.is_none_or(|c| c.1));
    let mut table = Table::new(tables::SPECTRUM_HEADER);
    let (n, units, width) = (shape.shortcut_depth, shape.units, shape.width);
    for (method, h) in [("analytic", &analytic), ("fd", &fd)] {
        if let Some(h) = h {
            let report = spectrum(h, loss)?;
            out.say(format!("{method}: {}", describe(&report)));
            table.push(tables::spectrum_row(method, n, units, width, &report, check));
        }
    }
    if analytic.is_none() {
        out.say("analytic: skipped (closed form for n = 1 needs identity pre and post activations)");
    }
    if let Some((diff, ok)) = check {
        out.say(format!("max |analytic - fd| = {diff:e} ({})", if ok { "pass" } else { "FAIL" }));
    }
    if let Some(path) = &args.out {
        table.write(path)?;
    }
    Ok(out)
}

/// Accepted exponent range for a probe of order `n`.
pub fn probe_expectation(n: usize) -> (f64, f64) {
    let n = n as f64;
    if n <= 2.0 {
        (n - 0.1, n + 0.1)
    } else {
        (n - 0.1, f64::INFINITY)
    }
}

fn expectation_label(n: usize) -> String {
    let (lo, hi) = probe_expectation(n);
    if hi.is_finite() {
        format!("{n}+-0.1")
    } else {
        format!(">={lo}")
    }
}

pub fn cmd_probe(args: &ProbeArgs) -> LabResult<Outcome> {
    let data = load(&args.data)?;
    let net = &args.net;
    let result = stationarity_order_probe(&data, net.acts, net.n, net.depth, args.seed)?;
    let (lo, hi) = probe_expectation(net.n);
    let passed = result.exponent >= lo && result.exponent <= hi;
    let mut out = Outcome::new(passed);
    out.say(format!(
        "exponent = {:.4} (expected {}, {} direction(s)): {}",
        result.exponent,
        expectation_label(net.n),
        result.attempts,
        if passed { "pass" } else { "FAIL" }
    ));
    if let Some(path) = &args.out {
        let mut table = Table::new(tables::PROBE_HEADER);
        table.push(vec![
            net.n.to_string(),
            net.depth.to_string(),
            data.width().to_string(),
            net.acts.to_string(),
            args.seed.to_string(),
            result.attempts.to_string(),
            float(result.exponent),
            expectation_label(net.n),
            passed.to_string(),
        ]);
        table.write(path)?;
    }
    Ok(out)
}

/// Smallest distance among all inputs and targets.
pub fn measured_rho(data: &Dataset) -> LabResult<f64> {
    let cols: Vec<Vec<f64>> = (0..data.samples())
        .flat_map(|mu| [data.x().column(mu), data.y().column(mu)])
        .collect();
    Ok(min_distance(&cols)?)
}

pub fn cmd_construct(args: &ConstructArgs) -> LabResult<Outcome> {
    let data = args.data.load(args.width, args.samples, CsvMode::Raw)?;
    let rho = match args.rho {
        Some(r) => r,
        None => measured_rho(&data)?,
    };
    let built = build_small_norm_network(&data, args.units, rho)?;
    let report = built.verify(&data);
    create_dir(&args.out)?;
    let json_path = args.out.join("network.json");
    std::fs::write(&json_path, NetworkJson::from_network(&built.network).to_string_pretty())
        .map_err(|e| LabError::io(&json_path, e))?;
    let mut table = Table::new(tables::CONSTRUCTION_HEADER);
    table.push(tables::construction_row(&report));
    table.write(&args.out.join("construction.csv"))?;

    let mut out = Outcome::new(report.passed());
    out.say(format!(
        "m = {}, d = {}, rho = {:.6}, R = {}, delta = {:.6e}, units used = {}",
        report.samples, report.width, report.rho, report.units, report.delta, report.units_used
    ));
    out.say(format!(
        "fit error = {:e} ({}), max |W|_F = {:.6e} (bound {:.6e}, {}), min intermediate distance = {:.6} ({})",
        report.fit_error,
        ok(report.fit_ok),
        report.max_frobenius,
        report.norm_bound,
        ok(report.norms_ok),
        report.min_intermediate_distance,
        ok(report.distances_ok)
    ));
    Ok(out)
}

fn ok(b: bool) -> &'static str {
    if b { "ok" } else { "FAIL" }
}

fn load_config(args: &ConfigArgs) -> LabResult<(ConfigFile, Dataset)> {
    let config = ConfigFile::read(&args.config)?;
    let data = config.dataset()?;
    Ok((config, data))
}

fn trace_name(depth: usize, scheme: &str, lr: f64, seed: u64) -> String {
    let scheme: String = scheme
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("trace_d{depth}_{scheme}_lr{lr:e}_s{seed}.csv")
}

pub fn cmd_train(args: &ConfigArgs) -> LabResult<Outcome> {
    let (file, data) = load_config(args)?;
    let config = file.experiment()?;
    create_dir(&args.out)?;
    let mut rows = Vec::new();
    for &depth in &config.depths {
        for arm in &config.arms {
            let shape = arm.shape(config.width, depth)?;
            for &lr in &config.learning_rates {
                for &seed in &config.seeds {
                    let scheme = InitScheme {
                        kind: arm.init,
                        seed,
                        perturbation_scale: arm.perturbation_scale,
                    };
                    let net = init_network(shape, &scheme)?;
                    let init = initial_spectrum(arm, &net, &data, config.max_spectrum_params)?;
                    let opts = TrainOptions::new(lr, config.epochs)
                        .with_snapshots(config.snapshot_interval, config.max_spectrum_params);
                    let (_, trace) = train(&net, &data, &opts)?;
                    tables::trace_table(&trace).write(&args.out.join(trace_name(depth, &arm.label, lr, seed)))?;
                    rows.push(shortcut_core::experiment::SweepRow {
                        depth,
                        shortcut_depth: arm.shortcut_depth,
                        scheme: arm.label.clone(),
                        lr,
                        seed,
                        final_loss: trace.final_loss(),
                        diverged: trace.diverged,
                        final_avg_frobenius: trace.final_avg_frobenius(),
                        init_cond_proxy: init.as_ref().map(|s| s.cond_proxy),
                        init_index: init.as_ref().map(|s| s.index),
                        first_index: trace.snapshots.first().map(|s| s.report.index),
                        last_index: trace.snapshots.last().map(|s| s.report.index),
                    });
                }
            }
        }
    }
    tables::sweep_table(&rows).write(&args.out.join("runs.csv"))?;
    let mut out = Outcome::new(true);
    for r in &rows {
        out.say(format!(
            "depth {:>3}  {:<24} lr {:<10.3e} seed {:<3} loss {:.6e}{}  avg|W|_F {:.4}",
            r.depth,
            r.scheme,
            r.lr,
            r.seed,
            r.final_loss,
            if r.diverged { " (diverged)" } else { "" },
            r.final_avg_frobenius
        ));
    }
    Ok(out)
}

pub fn cmd_sweep(args: &ConfigArgs) -> LabResult<Outcome> {
    let (file, data) = load_config(args)?;
    let config = file.experiment()?;
    let result = sweep(&config, &data)?;
    create_dir(&args.out)?;
    tables::sweep_table(&result.rows).write(&args.out.join("sweep.csv"))?;
    tables::summary_table(&result.summary).write(&args.out.join("summary.csv"))?;
    for t in &result.traces {
        tables::trace_table(&t.trace).write(&args.out.join(trace_name(t.depth, &t.scheme, t.lr, t.seed)))?;
    }
    let mut out = Outcome::new(true);
    for s in &result.summary {
        out.say(s.to_string());
    }
    Ok(out)
}

pub fn cmd_verify_hessian(args: &VerifyArgs) -> LabResult<Outcome> {
    if !matches!(args.net.n, 1 | 2) {
        return Err(LabError::Config(format!("--n must be 1 or 2, got {}", args.net.n)));
    }
    let data = load(&args.data)?;
    let shape = shape_of(&args.net, data.width())?;
    let analytic = analytic_hessian_zero(&data, shape.activations, shape.shortcut_depth, shape.units)?;
    let fd = hessian_fd(&ShortcutNetwork::zeros(shape)?, &data)?;
    let diff = max_abs_diff(&analytic, &fd)?;
    let passed = diff <= HESSIAN_TOLERANCE;
    let mut out = Outcome::new(passed);
    out.say(format!(
        "max |analytic - fd| = {diff:e} over {} parameters: {}",
        shape.param_count(),
        if passed { "pass" } else { "FAIL" }
    ));
    if let Some(path) = &args.out {
        let mut table = Table::new(tables::VERIFY_HEADER);
        table.push(vec![
            shape.shortcut_depth.to_string(),
            shape.units.to_string(),
            shape.width.to_string(),
            shape.activations.to_string(),
            shape.param_count().to_string(),
            float(diff),
            float(HESSIAN_TOLERANCE),
            passed.to_string(),
        ]);
        table.write(path)?;
    }
    Ok(out)
}
