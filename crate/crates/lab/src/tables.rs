//! CSV tables: header row, `.` decimals, 17 significant digits.

use shortcut_core::construct::ConstructionReport;
use shortcut_core::experiment::{SummaryRow, SweepRow, TrainingTrace};
use shortcut_core::hessian::SpectrumReport;

use crate::error::LabResult;

/// Formats a float with 17 significant digits; non-finite values are
/// `inf`, `-inf` or `nan`.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// In-memory CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> LabResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    pub fn write(&self, path: &std::path::Path) -> LabResult<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| crate::error::LabError::io(path, e))
    }
}

pub const SPECTRUM_HEADER: &[&str] = &[
    "method",
    "n",
    "units",
    "width",
    "params",
    "lambda_max",
    "lambda_p10",
    "cond_proxy",
    "index",
    "loss_at_point",
    "degenerate",
    "max_abs_diff",
    "pass",
];

/// `check` is the max entry-wise difference to a reference Hessian and
/// whether it met the tolerance.
pub fn spectrum_row(
    method: &str,
    n: usize,
    units: usize,
    width: usize,
    r: &SpectrumReport,
    check: Option<(f64, bool)>,
) -> Vec<String> {
    vec![
        method.into(),
        n.to_string(),
        units.to_string(),
        width.to_string(),
        r.eigenvalues.len().to_string(),
        float(r.lambda_max),
        float(r.lambda_p10),
        float(r.cond_proxy),
        float(r.index),
        float(r.loss_at_point),
        r.degenerate.to_string(),
        opt(check.map(|c| c.0)),
        check.map(|c| c.1.to_string()).unwrap_or_default(),
    ]
}

pub const PROBE_HEADER: &[&str] = &[
    "n", "units", "width", "activations", "seed", "attempts", "exponent", "expected", "pass",
];

pub const VERIFY_HEADER: &[&str] = &[
    "n", "units", "width", "activations", "params", "max_abs_diff", "tolerance", "pass",
];

pub const TRACE_HEADER: &[&str] = &["epoch", "loss", "grad_norm", "avg_frob", "cond_proxy", "index"];

pub fn trace_table(trace: &TrainingTrace) -> Table {
    let mut t = Table::new(TRACE_HEADER);
    let mut snaps = trace.snapshots.iter().peekable();
    for r in &trace.records {
        let snap = snaps.next_if(|s| s.epoch == r.epoch);
        t.push(vec![
            r.epoch.to_string(),
            float(r.loss),
            float(r.grad_norm),
            float(r.avg_frobenius),
            opt(snap.map(|s| s.report.cond_proxy)),
            opt(snap.map(|s| s.report.index)),
        ]);
    }
    t
}

pub const SWEEP_HEADER: &[&str] = &[
    "depth",
    "n",
    "scheme",
    "lr",
    "seed",
    "final_loss",
    "diverged",
    "init_cond_proxy",
    "init_index",
    "final_avg_frob",
    "first_index",
    "last_index",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            r.depth.to_string(),
            r.shortcut_depth.to_string(),
            r.scheme.clone(),
            float(r.lr),
            r.seed.to_string(),
            float(r.final_loss),
            r.diverged.to_string(),
            opt(r.init_cond_proxy),
            opt(r.init_index),
            float(r.final_avg_frobenius),
            opt(r.first_index),
            opt(r.last_index),
        ]);
    }
    t
}

pub const SUMMARY_HEADER: &[&str] = &[
    "depth",
    "n",
    "scheme",
    "best_lr",
    "mean_final_loss",
    "std_final_loss",
    "mean_final_avg_frob",
    "diverged_runs",
    "init_cond_proxy",
    "mean_first_index",
    "mean_last_index",
];

pub fn summary_table(rows: &[SummaryRow]) -> Table {
    let mut t = Table::new(SUMMARY_HEADER);
    for r in rows {
        t.push(vec![
            r.depth.to_string(),
            r.shortcut_depth.to_string(),
            r.scheme.clone(),
            float(r.best_lr),
            float(r.mean_final_loss),
            float(r.std_final_loss),
            float(r.mean_final_avg_frobenius),
            r.diverged_runs.to_string(),
            opt(r.init_cond_proxy),
            opt(r.mean_first_index),
            opt(r.mean_last_index),
        ]);
    }
    t
}

pub const CONSTRUCTION_HEADER: &[&str] = &[
    "m",
    "d",
    "rho",
    "R",
    "delta",
    "max_frobenius",
    "norm_bound",
    "fit_error",
    "min_intermediate_distance",
    "units_used",
    "fit_ok",
    "norms_ok",
    "distances_ok",
    "paths_ok",
    "pass",
];

pub fn construction_row(r: &ConstructionReport) -> Vec<String> {
    vec![
        r.samples.to_string(),
        r.width.to_string(),
        float(r.rho),
        r.units.to_string(),
        float(r.delta),
        float(r.max_frobenius),
        float(r.norm_bound),
        float(r.fit_error),
        float(r.min_intermediate_distance),
        r.units_used.to_string(),
        r.fit_ok.to_string(),
        r.norms_ok.to_string(),
        r.distances_ok.to_string(),
        r.paths_ok.map(|b| b.to_string()).unwrap_or_default(),
        r.passed().to_string(),
    ]
}
