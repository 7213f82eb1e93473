//! Network JSON: weight matrices as row-major nested arrays.

use serde::{Deserialize, Serialize};
use shortcut_core::{ActivationTriple, Matrix, NetworkShape, ShortcutNetwork};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkJson {
    pub width: usize,
    pub shortcut_depth: usize,
    pub units: usize,
    /// `pre,mid,post`
    pub activations: String,
    pub shortcuts: bool,
    /// `weights[r][l][i][j]`
    pub weights: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<Vec<f64>>>,
}

impl NetworkJson {
    pub fn from_network(net: &ShortcutNetwork) -> Self {
        let s = net.shape();
        let weights = (0..s.units)
            .map(|r| {
                (0..s.shortcut_depth)
                    .map(|l| {
                        let w = net.weight(r, l);
                        (0..w.rows()).map(|i| w.row(i).to_vec()).collect()
                    })
                    .collect()
            })
            .collect();
        let biases = s
            .biased
            .then(|| (0..s.units).map(|r| net.bias(r).unwrap_or_default().to_vec()).collect());
        Self {
            width: s.width,
            shortcut_depth: s.shortcut_depth,
            units: s.units,
            activations: s.activations.to_string(),
            shortcuts: s.shortcuts,
            weights,
            biases,
        }
    }

    pub fn to_network(&self) -> LabResult<ShortcutNetwork> {
        let acts: ActivationTriple = self.activations.parse()?;
        let mut shape = NetworkShape::new(self.width, self.shortcut_depth, self.units, acts)?;
        shape.shortcuts = self.shortcuts;
        shape.biased = self.biases.is_some();
        if self.weights.len() != self.units || self.weights.iter().any(|u| u.len() != self.shortcut_depth) {
            return Err(LabError::Config(format!(
                "weights: expected {} units of {} matrices",
                self.units, self.shortcut_depth
            )));
        }
        let weights = self
            .weights
            .iter()
            .flatten()
            .map(|rows| Matrix::from_rows(rows))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ShortcutNetwork::from_parts(shape, weights, self.biases.clone())?)
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use shortcut_core::network::Activation;
    use shortcut_core::ParamVector;

    #[test]
    fn round_trips_exactly() {
        let shape = NetworkShape::new(3, 2, 2, ActivationTriple::mid(Activation::Tanh)).unwrap();
        let p = ParamVector::new((0..shape.param_count()).map(|k| (k as f64 * 0.37).sin() / 3.0).collect());
        let net = ShortcutNetwork::unflatten(shape, &p).unwrap();
        let json = NetworkJson::from_network(&net);
        assert_eq!(json.weights[1][0][2][1], net.weight(1, 0)[(2, 1)]);
        let text = json.to_string_pretty();
        let back: NetworkJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_network().unwrap(), net);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_shapes() {
        let err = serde_json::from_str::<NetworkJson>(
            r#"{"width":1,"shortcut_depth":1,"units":1,"activations":"identity,identity,identity","shortcuts":true,"weights":[[[[0.0]]]],"extra":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"));
        let json = NetworkJson {
            width: 1,
            shortcut_depth: 1,
            units: 2,
            activations: "identity,identity,identity".into(),
            shortcuts: true,
            weights: vec![vec![vec![vec![0.0]]]],
            biases: None,
        };
        assert!(json.to_network().is_err());
    }
}
