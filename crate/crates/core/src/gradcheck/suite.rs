//! Ready-made gradient checks for every layer type and for whole networks.

use crate::error::Result;
use crate::layers::{softmax_ce, Activation, BiLstm, Conv1d, Dense, DropoutMode, Lstm, LstmWeights};
use crate::network::{NetworkConfig, NetworkModel};
use crate::params::ParamStore;
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{grad_check, grad_check_piecewise, GradCheckReport};

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

/// A named check and its report.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub label: String,
    pub report: GradCheckReport,
}

fn random(rng: &mut Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-scale, scale)).collect()).expect("positive shape")
}

/// `(in_channels, filters, width, length, stride)`.
pub fn conv1d(shape: (usize, usize, usize, usize, usize), seed: u64) -> Result<GradCheckReport> {
    let (c, f, k, l, s) = shape;
    let mut rng = Rng::new(seed);
    let conv = Conv1d::new(c, f, k, s)?;
    let r = random(&mut rng, &[f, conv.output_len(l)?], 1.0);
    let mut ps = ParamStore::new();
    ps.insert("weight", random(&mut rng, &conv.weight_shape(), 1.0), true)?;
    ps.insert("bias", random(&mut rng, &[f], 1.0), true)?;
    ps.insert("input", random(&mut rng, &[c, l], 1.0), true)?;
    let g = conv.backward(ps.value("weight")?, ps.value("input")?, &r, true)?;
    ps.set_grads(vec![g.weight, g.bias, g.input.expect("requested")])?;
    let obj = |p: &ParamStore| -> Result<f64> {
        conv.forward(p.value("weight")?, p.value("bias")?, p.value("input")?)?.dot(&r)
    };
    grad_check(obj, &ps, EPS, TOL)
}

fn lstm_params(rng: &mut Rng, d: usize, h: usize, prefix: &str, ps: &mut ParamStore) -> Result<()> {
    ps.insert(format!("{prefix}w"), random(rng, &[4 * h, d], 0.7), true)?;
    ps.insert(format!("{prefix}u"), random(rng, &[4 * h, h], 0.7), true)?;
    ps.insert(format!("{prefix}b"), random(rng, &[4 * h], 0.7), true)
}

fn lstm_view<'a>(ps: &'a ParamStore, prefix: &str) -> Result<LstmWeights<'a>> {
    Ok(LstmWeights {
        w: ps.value(&format!("{prefix}w"))?,
        u: ps.value(&format!("{prefix}u"))?,
        b: ps.value(&format!("{prefix}b"))?,
    })
}

/// Unidirectional LSTM over `(input_size, hidden, steps)`; one step is `steps = 1`.
pub fn lstm(shape: (usize, usize, usize), reverse: bool, seed: u64) -> Result<GradCheckReport> {
    let (d, h, t) = shape;
    let mut rng = Rng::new(seed);
    let cell = Lstm::new(d, h)?;
    let mut ps = ParamStore::new();
    lstm_params(&mut rng, d, h, "", &mut ps)?;
    ps.insert("input", random(&mut rng, &[t, d], 1.0), true)?;
    let r = random(&mut rng, &[h], 1.0);
    let (_, trace) = cell.run(lstm_view(&ps, "")?, ps.value("input")?, reverse)?;
    let g = cell.backward(lstm_view(&ps, "")?, ps.value("input")?, &trace, &r)?;
    ps.set_grads(vec![g.w, g.u, g.b, g.input])?;
    let obj = |p: &ParamStore| -> Result<f64> {
        cell.run(lstm_view(p, "")?, p.value("input")?, reverse)?.0.dot(&r)
    };
    grad_check(obj, &ps, EPS, TOL)
}

pub fn bilstm(shape: (usize, usize, usize), seed: u64) -> Result<GradCheckReport> {
    let (d, h, t) = shape;
    let mut rng = Rng::new(seed);
    let bi = BiLstm::new(d, h)?;
    let mut ps = ParamStore::new();
    lstm_params(&mut rng, d, h, "fwd_", &mut ps)?;
    lstm_params(&mut rng, d, h, "bwd_", &mut ps)?;
    ps.insert("input", random(&mut rng, &[t, d], 1.0), true)?;
    let r = random(&mut rng, &[2 * h], 1.0);
    let x = ps.value("input")?;
    let (_, trace) = bi.forward(lstm_view(&ps, "fwd_")?, lstm_view(&ps, "bwd_")?, x)?;
    let g = bi.backward(lstm_view(&ps, "fwd_")?, lstm_view(&ps, "bwd_")?, x, &trace, &r)?;
    ps.set_grads(vec![g.fwd.w, g.fwd.u, g.fwd.b, g.bwd.w, g.bwd.u, g.bwd.b, g.input])?;
    let obj = |p: &ParamStore| -> Result<f64> {
        bi.forward(lstm_view(p, "fwd_")?, lstm_view(p, "bwd_")?, p.value("input")?)?.0.dot(&r)
    };
    grad_check(obj, &ps, EPS, TOL)
}

/// Tanh dense layer `(inputs, outputs)`.
pub fn dense_tanh(shape: (usize, usize), seed: u64) -> Result<GradCheckReport> {
    let (i, o) = shape;
    let mut rng = Rng::new(seed);
    let dense = Dense::new(i, o, Activation::Tanh)?;
    let mut ps = ParamStore::new();
    ps.insert("weight", random(&mut rng, &[o, i], 1.0), true)?;
    ps.insert("bias", random(&mut rng, &[o], 1.0), true)?;
    ps.insert("input", random(&mut rng, &[i], 1.0), true)?;
    let r = random(&mut rng, &[o], 1.0);
    let (w, b, x) = (ps.value("weight")?, ps.value("bias")?, ps.value("input")?);
    let y = dense.forward(w, b, x)?;
    let g = dense.backward(w, x, &y, &r)?;
    ps.set_grads(vec![g.weight, g.bias, g.input])?;
    let obj = |p: &ParamStore| -> Result<f64> {
        dense.forward(p.value("weight")?, p.value("bias")?, p.value("input")?)?.dot(&r)
    };
    grad_check(obj, &ps, EPS, TOL)
}

pub fn softmax_cross_entropy(classes: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let label = rng.below(classes as u64) as usize;
    let mut ps = ParamStore::new();
    ps.insert("logits", random(&mut rng, &[classes], 3.0), true)?;
    let (_, g) = softmax_ce(ps.value("logits")?, label)?;
    ps.set_grads(vec![g])?;
    grad_check(|p| Ok(softmax_ce(p.value("logits")?, label)?.0), &ps, EPS, TOL)
}

/// Cross-entropy of a whole network on one random input, dropout off.
/// Parameters are jittered away from the zero bias initialisation so no ReLU
/// input sits exactly on its kink, and coordinates whose probes flip a ReLU
/// sign are skipped. `per_tensor` limits the scalars checked.
pub fn network(cfg: &NetworkConfig, seed: u64, per_tensor: Option<usize>) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let mut model = NetworkModel::build(cfg, &mut rng)?;
    for (_, p) in model.params_mut().iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.uniform(-0.05, 0.05);
        }
    }
    let x = random(&mut rng, &[cfg.input_length], 1.5);
    let label = rng.below(cfg.num_classes as u64) as usize;
    let (_, grads) = model.loss_and_grads(&x, label, DropoutMode::Eval, &mut Rng::new(0))?;
    let mut ps = model.params().clone();
    ps.set_grads(grads)?;
    let mut probe = model.clone();
    let obj = |p: &ParamStore| -> Result<(f64, u64)> {
        probe.replace_params(p.clone())?;
        let (logits, pattern) = probe.forward_with_relu_pattern(&x)?;
        Ok((softmax_ce(&logits, label)?.0, pattern_tag(&pattern)))
    };
    grad_check_piecewise(obj, &ps, EPS, TOL, per_tensor, seed)
}

/// FNV-1a over the sign pattern.
fn pattern_tag(pattern: &[bool]) -> u64 {
    pattern.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b) ^ 2).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Every layer type over three shapes and the given seeds.
pub fn layers(seeds: &[u64]) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut push = |label: String, report: GradCheckReport| out.push(CheckOutcome { label, report });
    for &seed in seeds {
        for shape in [(1, 2, 3, 10, 1), (2, 3, 3, 9, 2), (3, 2, 4, 17, 3)] {
            push(format!("conv1d {shape:?} seed {seed}"), conv1d(shape, seed)?);
        }
        for shape in [(2, 3, 1), (3, 2, 2), (4, 5, 6)] {
            for reverse in [false, true] {
                let dir = if reverse { "reverse" } else { "forward" };
                push(format!("lstm {dir} {shape:?} seed {seed}"), lstm(shape, reverse, seed)?);
            }
        }
        for shape in [(2, 2, 1), (3, 3, 3), (2, 4, 5)] {
            push(format!("bilstm {shape:?} seed {seed}"), bilstm(shape, seed)?);
        }
        for shape in [(1, 1), (3, 4), (7, 5)] {
            push(format!("dense-tanh {shape:?} seed {seed}"), dense_tanh(shape, seed)?);
        }
        for k in [2, 6, 9] {
            push(format!("softmax-ce {k} classes seed {seed}"), softmax_cross_entropy(k, seed)?);
        }
    }
    Ok(out)
}

/// `base` plus two smaller variants of the same architecture.
pub fn network_shapes(base: &NetworkConfig) -> Vec<NetworkConfig> {
    let mut small = base.clone();
    small.input_length = (base.input_length / 4).max(64);
    small.conv1.filters = (base.conv1.filters / 2).max(2);
    small.conv2.filters = (base.conv2.filters / 2).max(2);
    small.conv1.width = (base.conv1.width / 2).max(2);
    small.conv1.stride = (base.conv1.stride / 2).max(1);
    small.conv2.width = (base.conv2.width / 2).max(2);
    small.conv2.stride = (base.conv2.stride / 2).max(1);
    small.lstm_hidden = (base.lstm_hidden / 4).max(2);
    small.fc_sizes = [(base.fc_sizes[0] / 4).max(2), (base.fc_sizes[1] / 8).max(2)];
    let mut tiny = small.clone();
    tiny.input_length = 48;
    tiny.conv1.width = 6;
    tiny.conv1.stride = 3;
    tiny.conv2.width = 4;
    tiny.conv2.stride = 2;
    tiny.lstm_hidden = 3;
    tiny.fc_sizes = [5, 4];
    vec![base.clone(), small, tiny]
}
