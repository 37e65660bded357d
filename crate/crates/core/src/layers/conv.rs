use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One-dimensional valid convolution with stride.
///
/// Weights are `[filters, in_channels, kernel_width]`, bias is `[filters]`,
/// inputs are `[in_channels, length]` and outputs `[filters, out_len]` with
/// `out_len = (length - kernel_width) / stride + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv1d {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel_width: usize,
    pub stride: usize,
}

#[derive(Clone, Debug)]
pub struct Conv1dGrads {
    pub weight: Tensor,
    pub bias: Tensor,
    pub input: Option<Tensor>,
}

impl Conv1d {
    pub fn new(in_channels: usize, filters: usize, kernel_width: usize, stride: usize) -> Result<Self> {
        if in_channels == 0 || filters == 0 || kernel_width == 0 || stride == 0 {
            return Err(Error::Config(format!(
                "conv1d sizes must be positive (channels {in_channels}, filters {filters}, width {kernel_width}, stride {stride})"
            )));
        }
        Ok(Conv1d {
            in_channels,
            filters,
            kernel_width,
            stride,
        })
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.filters, self.in_channels, self.kernel_width]
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        if len < self.kernel_width {
            return Err(Error::Shape(format!(
                "conv1d input length {len} shorter than kernel width {}",
                self.kernel_width
            )));
        }
        Ok((len - self.kernel_width) / self.stride + 1)
    }

    fn check(&self, weight: &Tensor, bias: &Tensor, x: &Tensor) -> Result<(usize, usize)> {
        if weight.shape() != self.weight_shape() || bias.shape() != [self.filters] {
            return Err(Error::Shape(format!(
                "conv1d parameters {:?}/{:?} do not match {:?}",
                weight.shape(),
                bias.shape(),
                self.weight_shape()
            )));
        }
        let (c, l) = x.dims2()?;
        if c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv1d expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        Ok((l, self.output_len(l)?))
    }

    pub fn forward(&self, weight: &Tensor, bias: &Tensor, x: &Tensor) -> Result<Tensor> {
        let (l, out_len) = self.check(weight, bias, x)?;
        let (f_n, c_n, k) = (self.filters, self.in_channels, self.kernel_width);
        let w = weight.data();
        let xd = x.data();
        let mut out = vec![0.0; f_n * out_len];
        for f in 0..f_n {
            let row = &mut out[f * out_len..(f + 1) * out_len];
            row.fill(bias.data()[f]);
            for c in 0..c_n {
                let kern = &w[(f * c_n + c) * k..(f * c_n + c + 1) * k];
                let xs = &xd[c * l..(c + 1) * l];
                for (t, o) in row.iter_mut().enumerate() {
                    let win = &xs[t * self.stride..t * self.stride + k];
                    *o += kern.iter().zip(win).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        let y = Tensor::new(&[f_n, out_len], out)?;
        Ok(y)
    }

    pub fn backward(
        &self,
        weight: &Tensor,
        x: &Tensor,
        grad_out: &Tensor,
        need_input_grad: bool,
    ) -> Result<Conv1dGrads> {
        let bias = Tensor::zeros(&[self.filters]);
        let (l, out_len) = self.check(weight, &bias, x)?;
        if grad_out.shape() != [self.filters, out_len] {
            return Err(Error::Shape(format!(
                "conv1d grad_out {:?}, expected [{}, {out_len}]",
                grad_out.shape(),
                self.filters
            )));
        }
        let (f_n, c_n, k) = (self.filters, self.in_channels, self.kernel_width);
        let w = weight.data();
        let xd = x.data();
        let dy = grad_out.data();
        let mut dw = vec![0.0; f_n * c_n * k];
        let mut db = vec![0.0; f_n];
        let mut dx = if need_input_grad { vec![0.0; c_n * l] } else { Vec::new() };
        for f in 0..f_n {
            let g = &dy[f * out_len..(f + 1) * out_len];
            db[f] = g.iter().sum();
            for c in 0..c_n {
                let base = (f * c_n + c) * k;
                let xs = &xd[c * l..(c + 1) * l];
                for (t, &gt) in g.iter().enumerate() {
                    if gt == 0.0 {
                        continue;
                    }
                    let start = t * self.stride;
                    for j in 0..k {
                        dw[base + j] += gt * xs[start + j];
                    }
                    if need_input_grad {
                        let dxs = &mut dx[c * l + start..c * l + start + k];
                        for (d, &wv) in dxs.iter_mut().zip(&w[base..base + k]) {
                            *d += gt * wv;
                        }
                    }
                }
            }
        }
        Ok(Conv1dGrads {
            weight: Tensor::new(&self.weight_shape(), dw)?,
            bias: Tensor::new(&[f_n], db)?,
            input: if need_input_grad {
                Some(Tensor::new(&[c_n, l], dx)?)
            } else {
                None
            },
        })
    }
}
