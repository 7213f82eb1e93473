use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error};
use crate::math;

/// Element-wise activation placed on a transformation path.
///
/// All three kinds vanish at 0. ReLU's derivative at exactly 0 is the
/// symmetric derivative 1/2, the slope any central difference sees at the
/// kink, so closed-form and finite-difference Hessians at zero agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => math::tanh(x),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else if x == 0.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = math::tanh(x);
                1.0 - t * t
            }
        }
    }

    pub fn value_at_zero(self) -> f64 {
        self.apply(0.0)
    }

    pub fn derivative_at_zero(self) -> f64 {
        self.derivative(0.0)
    }

    /// Second derivative at 0; ReLU uses its local linear approximation.
    pub fn second_derivative_at_zero(self) -> f64 {
        0.0
    }

    /// Infinitely differentiable everywhere.
    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::Relu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "linear" | "id" | "none" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(invalid(alloc::format!("unknown activation `{other}`"))),
        }
    }
}

/// Activations before the first weight matrix, between weight matrices and
/// after the last one. `mid` only matters when a path has two or more
/// matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActivationTriple {
    pub pre: Activation,
    pub mid: Activation,
    pub post: Activation,
}

impl ActivationTriple {
    pub const fn new(pre: Activation, mid: Activation, post: Activation) -> Self {
        Self { pre, mid, post }
    }

    pub const fn linear() -> Self {
        Self::new(Activation::Identity, Activation::Identity, Activation::Identity)
    }

    pub const fn mid(mid: Activation) -> Self {
        Self::new(Activation::Identity, mid, Activation::Identity)
    }

    pub fn is_linear(&self) -> bool {
        *self == Self::linear()
    }
}

impl Default for ActivationTriple {
    fn default() -> Self {
        Self::linear()
    }
}

impl fmt::Display for ActivationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.pre, self.mid, self.post)
    }
}

/// Parses `pre,mid,post`.
impl FromStr for ActivationTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: alloc::vec::Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(invalid(alloc::format!(
                "expected `pre,mid,post`, got `{s}`"
            )));
        }
        Ok(Self::new(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
    }
}
