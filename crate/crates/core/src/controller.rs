//! Controllers: an analytic bang-bang energy pump and a small MLP with
//! sound interval propagation through its layers.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    #[serde(rename = "id")]
    Identity,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Tanh => libm::tanh(x),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// All four activations are monotone, so the interval image is the
    /// image of the endpoints.
    fn apply_interval(&self, x: &Interval) -> Interval {
        Interval::new(self.apply(x.lo), self.apply(x.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    /// Row-major: `weights[j][i]` maps input `i` to output `j`.
    #[serde(rename = "w")]
    pub weights: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
    #[serde(rename = "act")]
    pub activation: Activation,
}

/// A feed-forward network over inputs `(measurement, velocity)` with a
/// scalar output scaled into the control range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpController {
    pub layers: Vec<MlpLayer>,
    #[serde(rename = "scale")]
    pub output_scale: f64,
    #[serde(rename = "shift")]
    pub output_shift: f64,
}

impl MlpController {
    /// The built-in closed-loop policy `u = tanh(0.5 y + 80 v)`: a smooth
    /// energy pump with a measurement-dependent correction, expressed as a
    /// single-layer network.
    pub fn default_policy() -> Self {
        Self {
            layers: alloc::vec![MlpLayer {
                weights: alloc::vec![alloc::vec![1.0, 120.0]],
                bias: alloc::vec![0.0],
                activation: Activation::Tanh,
            }],
            output_scale: 1.0,
            output_shift: 0.0,
        }
    }

    fn check_dims(&self) -> Result<()> {
        let mut dim = 2usize;
        for (li, layer) in self.layers.iter().enumerate() {
            for row in &layer.weights {
                if row.len() != dim {
                    return Err(Error::MlpDimensionMismatch {
                        layer: li,
                        expected: dim,
                        got: row.len(),
                    });
                }
            }
            if layer.bias.len() != layer.weights.len() {
                return Err(Error::MlpDimensionMismatch {
                    layer: li,
                    expected: layer.weights.len(),
                    got: layer.bias.len(),
                });
            }
            dim = layer.weights.len();
        }
        if dim != 1 {
            return Err(Error::MlpDimensionMismatch {
                layer: self.layers.len(),
                expected: 1,
                got: dim,
            });
        }
        Ok(())
    }

    fn forward(&self, measurement: f64, velocity: f64) -> Result<f64> {
        self.check_dims()?;
        let mut values = alloc::vec![measurement, velocity];
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.weights.len());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let pre: f64 = row.iter().zip(&values).map(|(w, x)| w * x).sum::<f64>() + b;
                next.push(layer.activation.apply(pre));
            }
            values = next;
        }
        Ok(values[0] * self.output_scale + self.output_shift)
    }

    fn forward_interval(&self, measurement: &Interval, velocity: &Interval) -> Result<Interval> {
        self.check_dims()?;
        let mut values = alloc::vec![*measurement, *velocity];
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.weights.len());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut pre = Interval::point(*b);
                for (w, x) in row.iter().zip(&values) {
                    pre = pre.add(&x.scale(*w));
                }
                next.push(layer.activation.apply_interval(&pre));
            }
            values = next;
        }
        let mut out = values[0].scale(self.output_scale);
        out = out.add(&Interval::point(self.output_shift));
        Ok(out)
    }
}

/// Bang-bang energy pumping: thrust along the current velocity, pushing
/// toward the goal at standstill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyController {
    pub thrust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Controller {
    Energy(EnergyController),
    Mlp(MlpController),
}

impl Controller {
    /// Evaluate the control law; the result is clamped into `[-1, 1]`.
    pub fn eval(&self, measurement: f64, velocity: f64) -> Result<f64> {
        let u = match self {
            Controller::Energy(c) => {
                if velocity >= 0.0 {
                    c.thrust
                } else {
                    -c.thrust
                }
            }
            Controller::Mlp(mlp) => mlp.forward(measurement, velocity)?,
        };
        Ok(u.max(-1.0).min(1.0))
    }

    /// Sound interval enclosure of [`Controller::eval`] over boxes of
    /// measurements and velocities.
    pub fn eval_interval(&self, measurement: &Interval, velocity: &Interval) -> Result<Interval> {
        let u = match self {
            Controller::Energy(c) => {
                if velocity.lo >= 0.0 {
                    Interval::point(c.thrust)
                } else if velocity.hi < 0.0 {
                    Interval::point(-c.thrust)
                } else {
                    Interval::new(-c.thrust, c.thrust)
                }
            }
            Controller::Mlp(mlp) => mlp.forward_interval(measurement, velocity)?,
        };
        Ok(u.clamp_to(&Interval::new(-1.0, 1.0)))
    }
}
