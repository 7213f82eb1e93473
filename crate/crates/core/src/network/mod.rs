//! Residual networks whose units carry `n` weight matrices on the
//! transformation path and an identity shortcut.
//!
//! Unit `r` maps `h` to `σ_post(W^{r,n} σ_mid(⋯ σ_mid(W^{r,1} σ_pre(h)))) + h`.
//! The biased variant (`n = 2`, activations identity/relu/identity) adds
//! `b_r` after the first matrix: `W^{r,2} relu(W^{r,1} h + b_r) + h`.

mod activation;
mod eval;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math;

pub use activation::{Activation, ActivationTriple};

/// Structural description of a network, independent of its weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    /// Layer width d.
    pub width: usize,
    /// Weight matrices per transformation path, n.
    pub shortcut_depth: usize,
    /// Residual units, R.
    pub units: usize,
    pub activations: ActivationTriple,
    /// Bias after the first matrix of every unit.
    pub biased: bool,
    /// `false` removes the identity shortcuts, giving a plain network with
    /// the same weight layout and activation positions.
    pub shortcuts: bool,
}

impl NetworkShape {
    pub fn new(width: usize, shortcut_depth: usize, units: usize, activations: ActivationTriple) -> Result<Self> {
        let shape = Self {
            width,
            shortcut_depth,
            units,
            activations,
            biased: false,
            shortcuts: true,
        };
        shape.validate()?;
        Ok(shape)
    }

    /// `∏_r (W^{r,2} relu(W^{r,1} x + b_r) + I)`.
    pub fn simplified_resnet(width: usize, units: usize) -> Result<Self> {
        let shape = Self {
            width,
            shortcut_depth: 2,
            units,
            activations: ActivationTriple::mid(Activation::Relu),
            biased: true,
            shortcuts: true,
        };
        shape.validate()?;
        Ok(shape)
    }

    /// Same layout with the identity shortcuts removed.
    pub fn plain(mut self) -> Self {
        self.shortcuts = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.shortcut_depth == 0 || self.units == 0 {
            return Err(invalid(format!(
                "width, shortcut depth and units must be positive (got d={}, n={}, R={})",
                self.width, self.shortcut_depth, self.units
            )));
        }
        if self.biased && (self.shortcut_depth != 2 || self.activations != ActivationTriple::mid(Activation::Relu)) {
            return Err(invalid(
                "biases are only defined for n = 2 with activations identity,relu,identity",
            ));
        }
        Ok(())
    }

    /// Total weight layers, R·n.
    pub fn layer_count(&self) -> usize {
        self.units * self.shortcut_depth
    }

    pub fn weight_count(&self) -> usize {
        self.layer_count() * self.width * self.width
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + if self.biased { self.units * self.width } else { 0 }
    }

    /// Position of `w^{r,l}_{i,j}` (all 0-based) in the flattened parameter
    /// vector: lexicographic in (unit, matrix, column, row).
    pub fn param_index(&self, unit: usize, layer: usize, row: usize, col: usize) -> usize {
        debug_assert!(unit < self.units && layer < self.shortcut_depth);
        debug_assert!(row < self.width && col < self.width);
        ((unit * self.shortcut_depth + layer) * self.width + col) * self.width + row
    }

    /// Position of bias component `i` of unit `r`; biases follow all weights.
    pub fn bias_index(&self, unit: usize, row: usize) -> usize {
        debug_assert!(self.biased);
        self.weight_count() + unit * self.width + row
    }
}

/// Flattened parameters in [`NetworkShape::param_index`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        math::norm2(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Inputs and targets stored column-per-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::DimensionMismatch {
                op: "dataset",
                expected: x.shape(),
                found: y.shape(),
            });
        }
        if x.cols() == 0 || x.rows() == 0 {
            return Err(Error::Empty("dataset"));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn width(&self) -> usize {
        self.x.rows()
    }

    pub fn samples(&self) -> usize {
        self.x.cols()
    }

    /// Checks that every input column has unit 2-norm and every target is a
    /// standard basis vector, each to `tol`.
    pub fn check_unit_inputs_one_hot(&self, tol: f64) -> Result<()> {
        for mu in 0..self.samples() {
            let x = self.x.column(mu);
            let norm = math::norm2(&x);
            if (norm - 1.0).abs() > tol {
                return Err(Error::Assumption {
                    name: "unit-norm inputs",
                    detail: format!("sample {mu} has input norm {norm}"),
                });
            }
            let y = self.y.column(mu);
            let ones = y.iter().filter(|v| (**v - 1.0).abs() <= tol).count();
            let zeros = y.iter().filter(|v| v.abs() <= tol).count();
            if ones != 1 || ones + zeros != y.len() {
                return Err(Error::Assumption {
                    name: "one-hot targets",
                    detail: format!("sample {mu} target is not a standard basis vector"),
                });
            }
        }
        Ok(())
    }
}

/// An `n`-shortcut network with concrete weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortcutNetwork {
    shape: NetworkShape,
    /// Unit-major: index `r·n + l`.
    weights: Vec<Matrix>,
    biases: Option<Vec<Vec<f64>>>,
}

impl ShortcutNetwork {
    /// All weights (and biases) zero: every unit is the identity map.
    pub fn zeros(shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let d = shape.width;
        Ok(Self {
            shape,
            weights: vec![Matrix::zeros(d, d); shape.layer_count()],
            biases: shape.biased.then(|| vec![vec![0.0; d]; shape.units]),
        })
    }

    /// `weights` is unit-major (`r·n + l`); `biases` must be present exactly
    /// when the shape is biased.
    pub fn from_parts(shape: NetworkShape, weights: Vec<Matrix>, biases: Option<Vec<Vec<f64>>>) -> Result<Self> {
        shape.validate()?;
        let d = shape.width;
        if weights.len() != shape.layer_count() {
            return Err(invalid(format!(
                "expected {} weight matrices, got {}",
                shape.layer_count(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.shape() != (d, d)) {
            return Err(Error::DimensionMismatch {
                op: "network weights",
                expected: (d, d),
                found: w.shape(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("network weights"));
        }
        match (&biases, shape.biased) {
            (Some(b), true) => {
                if b.len() != shape.units || b.iter().any(|v| v.len() != d) {
                    return Err(invalid("bias list does not match units x width"));
                }
                if b.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("network biases"));
                }
            }
            (None, false) => {}
            (Some(_), false) => return Err(invalid("biases given for an unbiased shape")),
            (None, true) => return Err(invalid("biased shape requires biases")),
        }
        Ok(Self { shape, weights, biases })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// `W^{r,l}` with 0-based unit and layer.
    pub fn weight(&self, unit: usize, layer: usize) -> &Matrix {
        &self.weights[unit * self.shape.shortcut_depth + layer]
    }

    pub fn weight_mut(&mut self, unit: usize, layer: usize) -> &mut Matrix {
        &mut self.weights[unit * self.shape.shortcut_depth + layer]
    }

    pub fn bias(&self, unit: usize) -> Option<&[f64]> {
        self.biases.as_ref().map(|b| b[unit].as_slice())
    }

    pub fn bias_mut(&mut self, unit: usize) -> Option<&mut [f64]> {
        self.biases.as_mut().map(|b| b[unit].as_mut_slice())
    }

    /// Flattens weights column-major within each matrix, matrices in
    /// (unit, layer) order, then biases.
    pub fn flatten(&self) -> ParamVector {
        let d = self.shape.width;
        let mut out = Vec::with_capacity(self.shape.param_count());
        for w in &self.weights {
            for j in 0..d {
                for i in 0..d {
                    out.push(w[(i, j)]);
                }
            }
        }
        if let Some(b) = &self.biases {
            for v in b {
                out.extend_from_slice(v);
            }
        }
        ParamVector(out)
    }

    pub fn unflatten(shape: NetworkShape, params: &ParamVector) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.param_count() {
            return Err(invalid(format!(
                "parameter vector has length {}, shape needs {}",
                params.len(),
                shape.param_count()
            )));
        }
        let d = shape.width;
        let p = params.as_slice();
        let weights = (0..shape.layer_count())
            .map(|k| {
                let base = k * d * d;
                Matrix::from_fn(d, d, |i, j| p[base + j * d + i])
            })
            .collect();
        let biases = shape.biased.then(|| {
            (0..shape.units)
                .map(|r| {
                    let base = shape.weight_count() + r * d;
                    p[base..base + d].to_vec()
                })
                .collect()
        });
        Self::from_parts(shape, weights, biases)
    }

    /// Mean Frobenius norm over all weight matrices.
    pub fn average_frobenius_norm(&self) -> f64 {
        self.weights.iter().map(Matrix::frobenius_norm).sum::<f64>() / self.weights.len() as f64
    }

    pub fn max_frobenius_norm(&self) -> f64 {
        self.weights.iter().map(Matrix::frobenius_norm).fold(0.0, f64::max)
    }

    /// The d×d map `∏_r (W^{r,n}⋯W^{r,1} + I)` of a linear, bias-free network.
    pub fn end_to_end_map(&self) -> Result<Matrix> {
        if !self.shape.activations.is_linear() || self.shape.biased {
            return Err(invalid("end-to-end map requires identity activations and no biases"));
        }
        let d = self.shape.width;
        let mut total = Matrix::identity(d);
        for r in 0..self.shape.units {
            let mut path = self.weight(r, 0).clone();
            for l in 1..self.shape.shortcut_depth {
                path = self.weight(r, l).matmul(&path)?;
            }
            let unit = if self.shape.shortcuts {
                path.add(&Matrix::identity(d))?
            } else {
                path
            };
            total = unit.matmul(&total)?;
        }
        Ok(total)
    }

    /// Returns a copy whose residual units are reordered: unit `k` of the
    /// result is unit `order[k]` of `self`.
    pub fn with_unit_order(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.shape.units];
        if order.len() != self.shape.units {
            return Err(invalid("unit order has the wrong length"));
        }
        for &r in order {
            if r >= self.shape.units || seen[r] {
                return Err(invalid("unit order is not a permutation"));
            }
            seen[r] = true;
        }
        let n = self.shape.shortcut_depth;
        let weights = order
            .iter()
            .flat_map(|&r| (0..n).map(move |l| (r, l)))
            .map(|(r, l)| self.weight(r, l).clone())
            .collect();
        let biases = self.biases.as_ref().map(|b| order.iter().map(|&r| b[r].clone()).collect());
        Self::from_parts(self.shape, weights, biases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn random_net(shape: NetworkShape, seed: u64, scale: f64) -> ShortcutNetwork {
        let mut rng = Rng64::new(seed);
        let p: Vec<f64> = (0..shape.param_count()).map(|_| scale * rng.normal()).collect();
        ShortcutNetwork::unflatten(shape, &ParamVector::new(p)).unwrap()
    }

    #[test]
    fn flatten_round_trip() {
        let shape = NetworkShape::new(3, 2, 2, ActivationTriple::linear()).unwrap();
        let net = random_net(shape, 1, 1.0);
        assert_eq!(ShortcutNetwork::unflatten(shape, &net.flatten()).unwrap(), net);
        let biased = NetworkShape::simplified_resnet(3, 2).unwrap();
        let net = random_net(biased, 2, 1.0);
        assert_eq!(ShortcutNetwork::unflatten(biased, &net.flatten()).unwrap(), net);
    }

    #[test]
    fn column_major_within_matrix() {
        // d=2, n=1, R=1: w11, w21, w12, w22 occupy indices 1..4 (1-based)
        let shape = NetworkShape::new(2, 1, 1, ActivationTriple::linear()).unwrap();
        let w = Matrix::from_rows(&[[11.0, 12.0], [21.0, 22.0]]).unwrap();
        let net = ShortcutNetwork::from_parts(shape, vec![w], None).unwrap();
        assert_eq!(net.flatten().as_slice(), &[11.0, 21.0, 12.0, 22.0]);
        assert_eq!(shape.param_index(0, 0, 1, 0), 1);
        assert_eq!(shape.param_index(0, 0, 0, 1), 2);
    }

    #[test]
    fn second_unit_offset() {
        // w^{2,1}_{1,1} for d=2, n=2 sits at 1-based index (r-1)·n·d² + 1 = 9
        let shape = NetworkShape::new(2, 2, 2, ActivationTriple::linear()).unwrap();
        assert_eq!(shape.param_index(1, 0, 0, 0) + 1, 9);
    }

    #[test]
    fn unflatten_rejects_bad_length() {
        let shape = NetworkShape::new(2, 2, 2, ActivationTriple::linear()).unwrap();
        assert!(ShortcutNetwork::unflatten(shape, &ParamVector::zeros(3)).is_err());
    }

    #[test]
    fn biased_shape_constraints() {
        let mut s = NetworkShape::simplified_resnet(3, 1).unwrap();
        s.shortcut_depth = 3;
        assert!(s.validate().is_err());
        assert!(NetworkShape::new(0, 1, 1, ActivationTriple::linear()).is_err());
    }

    #[test]
    fn end_to_end_examples() {
        let shape = NetworkShape::new(3, 2, 1, ActivationTriple::linear()).unwrap();
        assert_eq!(ShortcutNetwork::zeros(shape).unwrap().end_to_end_map().unwrap(), Matrix::identity(3));
        let net = random_net(shape, 4, 1.0);
        let expect = net
            .weight(0, 1)
            .matmul(net.weight(0, 0))
            .unwrap()
            .add(&Matrix::identity(3))
            .unwrap();
        assert!(net.end_to_end_map().unwrap().sub(&expect).unwrap().max_abs() < 1e-14);
        let relu = NetworkShape::new(3, 2, 1, ActivationTriple::mid(Activation::Relu)).unwrap();
        assert!(ShortcutNetwork::zeros(relu).unwrap().end_to_end_map().is_err());
    }

    #[test]
    fn unit_one_hot_check() {
        let x = Matrix::from_columns(&[[1.0, 0.0], [0.6, 0.8]]).unwrap();
        let y = Matrix::from_columns(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let data = Dataset::new(x.clone(), y).unwrap();
        assert!(data.check_unit_inputs_one_hot(1e-12).is_ok());
        let bad = Dataset::new(x.clone(), x).unwrap();
        assert!(bad.check_unit_inputs_one_hot(1e-12).is_err());
    }
}
