//! Data sources named on the command line or in configs.

use std::path::{Path, PathBuf};

use shortcut_core::experiment::{pca_whiten, whitened_synthetic_dataset};
use shortcut_core::rng::Rng64;
use shortcut_core::{Dataset, Matrix};

use crate::error::{LabError, LabResult};

/// `synthetic:<seed>`, `sphere:<seed>` or a CSV path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSpec {
    /// Whitened class-conditional Gaussians with round-robin one-hot targets.
    Synthetic(u64),
    /// Random unit inputs with targets `e_1, …, e_m` (needs `m ≤ d`).
    Sphere(u64),
    Csv(PathBuf),
}

impl std::str::FromStr for DataSpec {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        let seed = |rest: &str| {
            rest.trim()
                .parse::<u64>()
                .map_err(|_| LabError::DataSpec(format!("'{s}': seed must be a non-negative integer")))
        };
        if let Some(rest) = s.strip_prefix("synthetic:") {
            Ok(DataSpec::Synthetic(seed(rest)?))
        } else if let Some(rest) = s.strip_prefix("sphere:") {
            Ok(DataSpec::Sphere(seed(rest)?))
        } else if s.is_empty() {
            Err(LabError::DataSpec("empty data spec".into()))
        } else {
            Ok(DataSpec::Csv(PathBuf::from(s)))
        }
    }
}

impl std::fmt::Display for DataSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSpec::Synthetic(s) => write!(f, "synthetic:{s}"),
            DataSpec::Sphere(s) => write!(f, "sphere:{s}"),
            DataSpec::Csv(p) => write!(f, "{}", p.display()),
        }
    }
}

/// How a CSV file becomes a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvMode {
    /// Top-`width` PCA, whitened; labels one-hot in `width` dimensions.
    Whitened,
    /// Features used as given; must have exactly `width` columns.
    Raw,
}

impl DataSpec {
    /// Builds the dataset with `width` features and (for generators)
    /// `samples` samples.
    pub fn load(&self, width: usize, samples: usize, mode: CsvMode) -> LabResult<Dataset> {
        match self {
            DataSpec::Synthetic(seed) => Ok(whitened_synthetic_dataset(width, samples, *seed)?),
            DataSpec::Sphere(seed) => sphere_dataset(width, samples, *seed),
            DataSpec::Csv(path) => {
                let (features, labels) = read_labeled_csv(path)?;
                match mode {
                    CsvMode::Whitened => Ok(pca_whiten(&features, &labels, width)?),
                    CsvMode::Raw => raw_dataset(path, &features, &labels, width),
                }
            }
        }
    }
}

/// Unit-norm Gaussian directions with distinct one-hot targets.
pub fn sphere_dataset(width: usize, samples: usize, seed: u64) -> LabResult<Dataset> {
    if samples == 0 || samples > width {
        return Err(LabError::DataSpec(format!(
            "sphere data needs 1 <= samples <= width for distinct one-hot labels, got m={samples}, d={width}"
        )));
    }
    let mut rng = Rng64::new(seed);
    let mut x = Matrix::zeros(width, samples);
    for mu in 0..samples {
        let v: Vec<f64> = (0..width).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for (i, a) in v.iter().enumerate() {
            x[(i, mu)] = a / norm;
        }
    }
    let y = Matrix::from_fn(width, samples, |i, mu| if i == mu { 1.0 } else { 0.0 });
    Ok(Dataset::new(x, y)?)
}

fn raw_dataset(path: &Path, features: &Matrix, labels: &[usize], width: usize) -> LabResult<Dataset> {
    if features.rows() != width {
        return Err(LabError::parse(
            path,
            format!("expected {width} features per row, found {}", features.rows()),
        ));
    }
    if let Some((mu, l)) = labels.iter().enumerate().find(|(_, l)| **l >= width) {
        return Err(LabError::parse(path, format!("row {}: label {l} does not fit {width} outputs", mu + 1)));
    }
    let y = Matrix::from_fn(width, labels.len(), |i, mu| if labels[mu] == i { 1.0 } else { 0.0 });
    Ok(Dataset::new(features.clone(), y)?)
}

/// Reads rows `label, feature…` into a `features × samples` matrix.
/// Lines starting with `#` are skipped; row numbers in errors are 1-based
/// over all lines.
pub fn read_labeled_csv(path: &Path) -> LabResult<(Matrix, Vec<usize>)> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: String| LabError::parse(path, format!("row {line}: {msg}"));
        if record.len() < 2 {
            return Err(bad("expected a label and at least one feature".into()));
        }
        let label = record[0]
            .parse::<usize>()
            .map_err(|_| bad(format!("label '{}' is not a non-negative integer", &record[0])))?;
        let feats = record
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("features must be finite numbers".into()))?;
        if let Some(first) = columns.first() {
            if first.len() != feats.len() {
                return Err(bad(format!("expected {} features, found {}", first.len(), feats.len())));
            }
        }
        labels.push(label);
        columns.push(feats);
    }
    if columns.is_empty() {
        return Err(LabError::parse(path, "no data rows"));
    }
    Ok((Matrix::from_columns(&columns)?, labels))
}
