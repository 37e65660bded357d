use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

/// Fully connected layer `y = act(W·x + b)` with `W: [out, in]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseGrads {
    pub weight: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config("dense layer sizes must be positive".into()));
        }
        Ok(Dense {
            inputs,
            outputs,
            activation,
        })
    }

    fn check(&self, weight: &Tensor, x: &Tensor) -> Result<()> {
        if weight.shape() != [self.outputs, self.inputs] {
            return Err(Error::Shape(format!(
                "dense weight {:?}, expected [{}, {}]",
                weight.shape(),
                self.outputs,
                self.inputs
            )));
        }
        if x.len() != self.inputs {
            return Err(Error::Shape(format!(
                "dense expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, weight: &Tensor, bias: &Tensor, x: &Tensor) -> Result<Tensor> {
        self.check(weight, x)?;
        if bias.shape() != [self.outputs] {
            return Err(Error::Shape(format!("dense bias {:?}", bias.shape())));
        }
        let w = weight.data();
        let xd = x.data();
        let out: Vec<f64> = (0..self.outputs)
            .map(|o| {
                let z = bias.data()[o]
                    + w[o * self.inputs..(o + 1) * self.inputs]
                        .iter()
                        .zip(xd)
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                match self.activation {
                    Activation::Tanh => z.tanh(),
                    Activation::Identity => z,
                }
            })
            .collect();
        Tensor::new(&[self.outputs], out)
    }

    /// `y` is the post-activation output returned by `forward`.
    pub fn backward(&self, weight: &Tensor, x: &Tensor, y: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
        self.check(weight, x)?;
        if grad_out.len() != self.outputs || y.len() != self.outputs {
            return Err(Error::Shape("dense backward output size".into()));
        }
        let dz: Vec<f64> = match self.activation {
            Activation::Tanh => grad_out
                .data()
                .iter()
                .zip(y.data())
                .map(|(g, y)| g * (1.0 - y * y))
                .collect(),
            Activation::Identity => grad_out.data().to_vec(),
        };
        let xd = x.data();
        let w = weight.data();
        let mut dw = vec![0.0; self.outputs * self.inputs];
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in dz.iter().enumerate() {
            let row = &mut dw[o * self.inputs..(o + 1) * self.inputs];
            for (d, &xv) in row.iter_mut().zip(xd) {
                *d = g * xv;
            }
            for (d, &wv) in dx.iter_mut().zip(&w[o * self.inputs..(o + 1) * self.inputs]) {
                *d += g * wv;
            }
        }
        Ok(DenseGrads {
            weight: Tensor::new(&[self.outputs, self.inputs], dw)?,
            bias: Tensor::new(&[self.outputs], dz)?,
            input: Tensor::new(x.shape(), dx)?,
        })
    }
}
