use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::params::{Init, ParamRef, Parameters};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

/// Affine layer `y = act(x Wᵀ + b)` applied to each row of `x`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: ParamRef,
    pub bias: ParamRef,
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl Dense {
    pub fn register(
        params: &mut Parameters,
        name: &str,
        inputs: usize,
        outputs: usize,
        activation: Activation,
    ) -> Self {
        let weight = params.register_matrix(
            format!("{name}.weight"),
            outputs,
            inputs,
            Init::GlorotUniform {
                fan_in: inputs,
                fan_out: outputs,
            },
        );
        let bias = params.register_vector(format!("{name}.bias"), outputs, Init::Zeros);
        Self {
            weight,
            bias,
            inputs,
            outputs,
            activation,
        }
    }

    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                x.ncols()
            )));
        }
        let w = self.weight.matrix(params);
        let b = self.bias.vector(params);
        let mut y = Array2::from_shape_fn((x.nrows(), self.outputs), |(_, j)| b[j]);
        general_mat_mul(1.0, &x, &w.t(), 1.0, &mut y);
        if self.activation == Activation::Relu {
            y.mapv_inplace(|v| v.max(0.0));
        }
        Ok(y)
    }

    /// Accumulates dL/dW and dL/db into `grads` and returns dL/dx. `y` is the
    /// output of [`forward`](Self::forward) on the same `x`; the ReLU
    /// derivative at 0 is taken as 0.
    pub fn backward(
        &self,
        params: &[f64],
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
        dy: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Result<Array2<f64>> {
        if dy.dim() != y.dim() || x.nrows() != y.nrows() || x.ncols() != self.inputs {
            return Err(Error::ShapeMismatch(format!(
                "dense backward: x {:?}, y {:?}, dy {:?}",
                x.dim(),
                y.dim(),
                dy.dim()
            )));
        }
        let dpre = match self.activation {
            Activation::Identity => dy.to_owned(),
            Activation::Relu => {
                let mut d = dy.to_owned();
                Zip::from(&mut d).and(&y).for_each(|d, &y| {
                    if y <= 0.0 {
                        *d = 0.0;
                    }
                });
                d
            }
        };
        general_mat_mul(1.0, &dpre.t(), &x, 1.0, &mut self.weight.matrix_mut(grads));
        let mut db = self.bias.vector_mut(grads);
        db += &dpre.sum_axis(Axis(0));
        Ok(dpre.dot(&self.weight.matrix(params)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_layer_passes_through() {
        let mut p = Parameters::new();
        let layer = Dense::register(&mut p, "d", 3, 3, Activation::Identity);
        layer.weight.matrix_mut(p.values_mut()).assign(&Array2::eye(3));
        let x = array![[1.0, -2.0, 3.5], [0.0, 4.0, -1.0]];
        assert_eq!(layer.forward(p.values(), x.view()).unwrap(), x);
    }

    #[test]
    fn clamped_relu_blocks_gradient() {
        let mut p = Parameters::new();
        let layer = Dense::register(&mut p, "d", 2, 1, Activation::Relu);
        layer.weight.matrix_mut(p.values_mut()).assign(&array![[1.0, 1.0]]);
        let x = array![[1.0, -1.0]];
        let y = layer.forward(p.values(), x.view()).unwrap();
        assert_eq!(y, array![[0.0]]);
        let mut g = p.zeros_like();
        let dx = layer
            .backward(p.values(), x.view(), y.view(), array![[3.7]].view(), &mut g)
            .unwrap();
        assert_eq!(dx, array![[0.0, 0.0]]);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Parameters::new();
        let layer = Dense::register(&mut p, "d", 2, 1, Activation::Relu);
        assert!(layer.forward(p.values(), Array2::zeros((1, 3)).view()).is_err());
    }
}
