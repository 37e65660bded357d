use crate::error::{Error, Result};
use crate::layers::{
    relu, relu_backward, softmax_ce, Activation, BiLstm, Dense, DropoutMode, DropoutSpec,
    LstmWeights,
};
use crate::params::ParamStore;
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::config::{NetworkConfig, Resolved};
use super::mask::{LayerMask, LayerName};

/// Network parameters plus the geometry derived from its config.
///
/// Initialization: Glorot-uniform weights (`±sqrt(6/(fan_in+fan_out))`, per
/// gate block for the LSTM), zero biases, and +1.0 on the LSTM forget-gate
/// bias.
#[derive(Clone, Debug)]
pub struct NetworkModel {
    config: NetworkConfig,
    geometry: Resolved,
    params: ParamStore,
}

struct Layers {
    conv1: crate::layers::Conv1d,
    conv2: crate::layers::Conv1d,
    lstm: Option<BiLstm>,
    fc1: Dense,
    fc2: Dense,
    out: Dense,
}

fn glorot(rng: &mut Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.uniform(-limit, limit)).collect()
}

impl NetworkModel {
    pub fn build(config: &NetworkConfig, rng: &mut Rng) -> Result<Self> {
        let mut model = Self::zeroed(config)?;
        for layer in model.layers() {
            model.init_layer(layer, rng)?;
        }
        Ok(model)
    }

    /// All-zero parameters with the right names and shapes.
    pub fn zeroed(config: &NetworkConfig) -> Result<Self> {
        let g = config.resolve()?;
        let mut params = ParamStore::new();
        let mut add = |name: &str, shape: &[usize]| params.insert(name, Tensor::zeros(shape), true);
        add("conv1/weight", &g.conv1.weight_shape())?;
        add("conv1/bias", &[g.conv1.filters])?;
        add("conv2/weight", &g.conv2.weight_shape())?;
        add("conv2/bias", &[g.conv2.filters])?;
        if config.use_lstm {
            let (d, h) = (g.conv2.filters, g.hidden);
            for dir in ["fwd", "bwd"] {
                add(&format!("lstm/{dir}_w"), &[4 * h, d])?;
                add(&format!("lstm/{dir}_u"), &[4 * h, h])?;
                add(&format!("lstm/{dir}_b"), &[4 * h])?;
            }
        }
        add("fc1/weight", &[g.fc1, g.fc1_in])?;
        add("fc1/bias", &[g.fc1])?;
        add("fc2/weight", &[g.fc2, g.fc1])?;
        add("fc2/bias", &[g.fc2])?;
        add("out/weight", &[g.classes, g.fc2])?;
        add("out/bias", &[g.classes])?;
        Ok(NetworkModel {
            config: config.clone(),
            geometry: g,
            params,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Swaps in a parameter store with exactly the same names and shapes.
    pub fn replace_params(&mut self, params: ParamStore) -> Result<()> {
        let same = params.len() == self.params.len()
            && params
                .iter()
                .zip(self.params.iter())
                .all(|((na, a), (nb, b))| na == nb && a.value.shape() == b.value.shape());
        if !same {
            return Err(Error::Contract("parameter store does not match the network".into()));
        }
        self.params = params;
        Ok(())
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    /// Layers present in this model, in forward order.
    pub fn layers(&self) -> Vec<LayerName> {
        LayerName::ALL
            .into_iter()
            .filter(|&l| l != LayerName::Lstm || self.config.use_lstm)
            .collect()
    }

    pub fn has_layer(&self, layer: LayerName) -> bool {
        layer != LayerName::Lstm || self.config.use_lstm
    }

    /// Parameter names belonging to `layer`, in store order.
    pub fn layer_params(&self, layer: LayerName) -> Vec<String> {
        let prefix = format!("{}/", layer.as_str());
        self.params
            .names()
            .filter(|n| n.starts_with(&prefix))
            .map(str::to_string)
            .collect()
    }

    pub fn layer_trainable(&self, layer: LayerName) -> bool {
        self.layer_params(layer)
            .iter()
            .any(|n| self.params.get(n).is_some_and(|p| p.trainable))
    }

    fn init_layer(&mut self, layer: LayerName, rng: &mut Rng) -> Result<()> {
        let g = self.geometry;
        let mut set = |name: &str, data: Vec<f64>| -> Result<()> {
            let p = self
                .params
                .get_mut(name)
                .ok_or_else(|| Error::Contract(format!("missing parameter `{name}`")))?;
            p.value = Tensor::new(p.value.shape(), data)?;
            Ok(())
        };
        match layer {
            LayerName::Conv1 | LayerName::Conv2 => {
                let conv = if layer == LayerName::Conv1 { g.conv1 } else { g.conv2 };
                let k = conv.kernel_width;
                let n = conv.filters * conv.in_channels * k;
                let w = glorot(rng, n, conv.in_channels * k, conv.filters * k);
                set(&format!("{layer}/weight"), w)?;
                set(&format!("{layer}/bias"), vec![0.0; conv.filters])?;
            }
            LayerName::Lstm => {
                let (d, h) = (g.conv2.filters, g.hidden);
                for dir in ["fwd", "bwd"] {
                    set(&format!("lstm/{dir}_w"), glorot(rng, 4 * h * d, d, h))?;
                    set(&format!("lstm/{dir}_u"), glorot(rng, 4 * h * h, h, h))?;
                    let mut b = vec![0.0; 4 * h];
                    b[h..2 * h].fill(1.0);
                    set(&format!("lstm/{dir}_b"), b)?;
                }
            }
            LayerName::Fc1 | LayerName::Fc2 | LayerName::Out => {
                let (inp, out) = match layer {
                    LayerName::Fc1 => (g.fc1_in, g.fc1),
                    LayerName::Fc2 => (g.fc1, g.fc2),
                    _ => (g.fc2, g.classes),
                };
                set(&format!("{layer}/weight"), glorot(rng, inp * out, inp, out))?;
                set(&format!("{layer}/bias"), vec![0.0; out])?;
            }
        }
        Ok(())
    }

    /// Freezes and re-initializes layers. Frozen layers become non-trainable,
    /// re-initialized layers are redrawn from `rng` (in forward order) and all
    /// other layers keep their values and become trainable.
    pub fn apply_mask(&mut self, mask: &LayerMask, rng: &mut Rng) -> Result<()> {
        for l in mask.frozen.iter().chain(&mask.reinit) {
            if !self.has_layer(*l) {
                return Err(Error::UnknownLayer(format!("{l} (not present in this network)")));
            }
        }
        if let Some(l) = mask.frozen.intersection(&mask.reinit).next() {
            return Err(Error::Contract(format!("layer {l} both frozen and re-initialized")));
        }
        for layer in self.layers() {
            if mask.reinit.contains(&layer) {
                self.init_layer(layer, rng)?;
            }
            let trainable = !mask.frozen.contains(&layer);
            for name in self.layer_params(layer) {
                self.params.set_trainable(&name, trainable)?;
            }
        }
        Ok(())
    }

    fn geometry_layers(&self) -> Result<Layers> {
        let g = &self.geometry;
        Ok(Layers {
            conv1: g.conv1,
            conv2: g.conv2,
            lstm: if self.config.use_lstm {
                Some(BiLstm::new(g.conv2.filters, g.hidden)?)
            } else {
                None
            },
            fc1: Dense::new(g.fc1_in, g.fc1, Activation::Tanh)?,
            fc2: Dense::new(g.fc1, g.fc2, Activation::Tanh)?,
            out: Dense::new(g.fc2, g.classes, Activation::Identity)?,
        })
    }

    fn p(&self, name: &str) -> Result<&Tensor> {
        self.params.value(name)
    }

    fn lstm_weights(&self, dir: &str) -> Result<LstmWeights<'_>> {
        Ok(LstmWeights {
            w: self.p(&format!("lstm/{dir}_w"))?,
            u: self.p(&format!("lstm/{dir}_u"))?,
            b: self.p(&format!("lstm/{dir}_b"))?,
        })
    }

    pub fn forward(&self, x: &Tensor, mode: DropoutMode, rng: &mut Rng) -> Result<Tensor> {
        self.run(x, mode, rng).map(|t| t.logits)
    }

    /// Eval-mode logits together with the sign pattern of every ReLU input
    /// (`true` where the input is positive), conv1 first.
    pub fn forward_with_relu_pattern(&self, x: &Tensor) -> Result<(Tensor, Vec<bool>)> {
        let tr = self.run(x, DropoutMode::Eval, &mut Rng::new(0))?;
        let pattern = tr
            .pre1
            .data()
            .iter()
            .chain(tr.pre2.data())
            .map(|&v| v > 0.0)
            .collect();
        Ok((tr.logits, pattern))
    }

    pub fn predict(&self, x: &Tensor) -> Result<usize> {
        let mut rng = Rng::new(0);
        Ok(self.forward(x, DropoutMode::Eval, &mut rng)?.argmax())
    }

    fn run(&self, x: &Tensor, mode: DropoutMode, rng: &mut Rng) -> Result<Trace> {
        if x.len() != self.config.input_length {
            return Err(Error::Shape(format!(
                "network expects {} input samples, got {}",
                self.config.input_length,
                x.len()
            )));
        }
        let layers = self.geometry_layers()?;
        let drop = DropoutSpec::new(self.config.dropout, mode)?;
        let input = x.clone().reshape(&[1, x.len()])?;

        let pre1 = layers
            .conv1
            .forward(self.p("conv1/weight")?, self.p("conv1/bias")?, &input)?;
        let (act1, mask1) = drop.apply(&relu(&pre1), rng)?;
        let pre2 = layers
            .conv2
            .forward(self.p("conv2/weight")?, self.p("conv2/bias")?, &act1)?;
        let (act2, mask2) = drop.apply(&relu(&pre2), rng)?;

        let (features, seq, bitrace) = match &layers.lstm {
            Some(bi) => {
                let seq = act2.transpose()?;
                let (h, tr) = bi.forward(self.lstm_weights("fwd")?, self.lstm_weights("bwd")?, &seq)?;
                (h, Some(seq), Some(tr))
            }
            None => {
                let n = act2.len();
                (act2.clone().reshape(&[n])?, None, None)
            }
        };

        let y1 = layers
            .fc1
            .forward(self.p("fc1/weight")?, self.p("fc1/bias")?, &features)?;
        let (e1, mask3) = drop.apply(&y1, rng)?;
        let y2 = layers
            .fc2
            .forward(self.p("fc2/weight")?, self.p("fc2/bias")?, &e1)?;
        let (e2, mask4) = drop.apply(&y2, rng)?;
        let logits = layers
            .out
            .forward(self.p("out/weight")?, self.p("out/bias")?, &e2)?;

        Ok(Trace {
            layers,
            drop,
            input,
            pre1,
            mask1,
            act1,
            pre2,
            mask2,
            seq,
            bitrace,
            features,
            y1,
            mask3,
            e1,
            y2,
            mask4,
            e2,
            logits,
        })
    }

    /// Cross-entropy loss on one example and the gradient for every
    /// parameter, in store order. Frozen parameters get zero gradients, and
    /// backpropagation stops below the lowest trainable layer.
    pub fn loss_and_grads(
        &self,
        x: &Tensor,
        label: usize,
        mode: DropoutMode,
        rng: &mut Rng,
    ) -> Result<(f64, Vec<Tensor>)> {
        let tr = self.run(x, mode, rng)?;
        let (loss, dlogits) = softmax_ce(&tr.logits, label)?;
        let mut grads: Vec<(String, Tensor)> = Vec::new();

        let train_of = |l: LayerName| self.has_layer(l) && self.layer_trainable(l);
        let needed_below = |l: LayerName| {
            LayerName::ALL
                .iter()
                .take_while(|&&x| x != l)
                .any(|&x| train_of(x))
        };

        let go = tr
            .layers
            .out
            .backward(self.p("out/weight")?, &tr.e2, &tr.logits, &dlogits)?;
        grads.push(("out/weight".into(), go.weight));
        grads.push(("out/bias".into(), go.bias));
        if needed_below(LayerName::Out) {
            let dy2 = tr.drop.backward(&go.input, &tr.mask4)?;
            let g2 = tr.layers.fc2.backward(self.p("fc2/weight")?, &tr.e1, &tr.y2, &dy2)?;
            grads.push(("fc2/weight".into(), g2.weight));
            grads.push(("fc2/bias".into(), g2.bias));
            if needed_below(LayerName::Fc2) {
                let dy1 = tr.drop.backward(&g2.input, &tr.mask3)?;
                let g1 = tr
                    .layers
                    .fc1
                    .backward(self.p("fc1/weight")?, &tr.features, &tr.y1, &dy1)?;
                grads.push(("fc1/weight".into(), g1.weight));
                grads.push(("fc1/bias".into(), g1.bias));
                if needed_below(LayerName::Fc1) {
                    let dact2 = match (&tr.layers.lstm, &tr.seq, &tr.bitrace) {
                        (Some(bi), Some(seq), Some(bt)) => {
                            let gl = bi.backward(
                                self.lstm_weights("fwd")?,
                                self.lstm_weights("bwd")?,
                                seq,
                                bt,
                                &g1.input,
                            )?;
                            grads.push(("lstm/fwd_w".into(), gl.fwd.w));
                            grads.push(("lstm/fwd_u".into(), gl.fwd.u));
                            grads.push(("lstm/fwd_b".into(), gl.fwd.b));
                            grads.push(("lstm/bwd_w".into(), gl.bwd.w));
                            grads.push(("lstm/bwd_u".into(), gl.bwd.u));
                            grads.push(("lstm/bwd_b".into(), gl.bwd.b));
                            gl.input.transpose()?
                        }
                        _ => g1.input.reshape(tr.pre2.shape())?,
                    };
                    if needed_below(LayerName::Lstm) {
                        let da2 = tr.drop.backward(&dact2, &tr.mask2)?;
                        let dpre2 = relu_backward(&tr.pre2, &da2)?;
                        let need_conv1 = train_of(LayerName::Conv1);
                        let gc2 = tr.layers.conv2.backward(
                            self.p("conv2/weight")?,
                            &tr.act1,
                            &dpre2,
                            need_conv1,
                        )?;
                        grads.push(("conv2/weight".into(), gc2.weight));
                        grads.push(("conv2/bias".into(), gc2.bias));
                        if let Some(dact1) = gc2.input {
                            let da1 = tr.drop.backward(&dact1, &tr.mask1)?;
                            let dpre1 = relu_backward(&tr.pre1, &da1)?;
                            let gc1 = tr.layers.conv1.backward(
                                self.p("conv1/weight")?,
                                &tr.input,
                                &dpre1,
                                false,
                            )?;
                            grads.push(("conv1/weight".into(), gc1.weight));
                            grads.push(("conv1/bias".into(), gc1.bias));
                        }
                    }
                }
            }
        }

        let mut ordered = Vec::with_capacity(self.params.len());
        for (name, p) in self.params.iter() {
            let g = if p.trainable {
                grads
                    .iter()
                    .position(|(n, _)| n == name)
                    .map(|i| std::mem::replace(&mut grads[i].1, Tensor::zeros(&[1])))
            } else {
                None
            };
            ordered.push(g.unwrap_or_else(|| Tensor::zeros(p.value.shape())));
        }
        Ok((loss, ordered))
    }
}

struct Trace {
    layers: Layers,
    drop: DropoutSpec,
    input: Tensor,
    pre1: Tensor,
    mask1: Tensor,
    act1: Tensor,
    pre2: Tensor,
    mask2: Tensor,
    seq: Option<Tensor>,
    bitrace: Option<crate::layers::BiLstmTrace>,
    features: Tensor,
    y1: Tensor,
    mask3: Tensor,
    e1: Tensor,
    y2: Tensor,
    mask4: Tensor,
    e2: Tensor,
    logits: Tensor,
}
