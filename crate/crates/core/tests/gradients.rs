//! Central-difference checks for every layer's backward pass and for whole
//! networks, over several seeds and shapes.

use emoxfer::gradcheck::{grad_check, GradCheckReport};
use emoxfer::layers::{
    softmax_ce, Activation, BiLstm, Conv1d, Dense, DropoutMode, Lstm, LstmWeights,
};
use emoxfer::network::{ConvConfig, NetworkConfig, NetworkModel};
use emoxfer::{ParamStore, Result, Rng, Tensor};

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn random(rng: &mut Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-scale, scale)).collect()).unwrap()
}

/// Random projection weights so the checked objective is a scalar.
fn project(y: &Tensor, r: &Tensor) -> f64 {
    y.dot(r).unwrap()
}

fn assert_passes(what: &str, report: &GradCheckReport) {
    for e in &report.entries {
        assert!(
            e.max_rel_error < TOL,
            "{what}: `{}`[{}] analytic {} numeric {} rel {}",
            e.name,
            e.worst_index,
            e.analytic,
            e.numeric,
            e.max_rel_error
        );
    }
}

#[test]
fn conv1d_gradients() {
    let shapes = [(1, 2, 3, 10, 1), (2, 3, 3, 9, 2), (3, 2, 4, 17, 3)];
    for &(c, f, k, l, s) in &shapes {
        for seed in SEEDS {
            let mut rng = Rng::new(seed);
            let conv = Conv1d::new(c, f, k, s).unwrap();
            let out_len = conv.output_len(l).unwrap();
            let r = random(&mut rng, &[f, out_len], 1.0);
            let mut ps = ParamStore::new();
            ps.insert("w", random(&mut rng, &conv.weight_shape(), 1.0), true).unwrap();
            ps.insert("b", random(&mut rng, &[f], 1.0), true).unwrap();
            ps.insert("x", random(&mut rng, &[c, l], 1.0), true).unwrap();
            let g = conv
                .backward(ps.value("w").unwrap(), ps.value("x").unwrap(), &r, true)
                .unwrap();
            ps.set_grads(vec![g.weight, g.bias, g.input.unwrap()]).unwrap();
            let f = |p: &ParamStore| -> Result<f64> {
                let y = conv.forward(p.value("w")?, p.value("b")?, p.value("x")?)?;
                Ok(project(&y, &r))
            };
            assert_passes("conv1d", &grad_check(f, &ps, EPS, TOL).unwrap());
        }
    }
}

fn lstm_store(rng: &mut Rng, d: usize, h: usize, prefix: &str, ps: &mut ParamStore) {
    ps.insert(format!("{prefix}w"), random(rng, &[4 * h, d], 0.7), true).unwrap();
    ps.insert(format!("{prefix}u"), random(rng, &[4 * h, h], 0.7), true).unwrap();
    ps.insert(format!("{prefix}b"), random(rng, &[4 * h], 0.7), true).unwrap();
}

fn view<'a>(ps: &'a ParamStore, prefix: &str) -> LstmWeights<'a> {
    LstmWeights {
        w: ps.value(&format!("{prefix}w")).unwrap(),
        u: ps.value(&format!("{prefix}u")).unwrap(),
        b: ps.value(&format!("{prefix}b")).unwrap(),
    }
}

#[test]
fn lstm_gradients() {
    // T = 1 is a single recurrence step from zero state.
    let shapes = [(2, 3, 1), (3, 2, 4), (4, 5, 6)];
    for &(d, h, t) in &shapes {
        for seed in SEEDS {
            for reverse in [false, true] {
                let mut rng = Rng::new(seed);
                let cell = Lstm::new(d, h).unwrap();
                let mut ps = ParamStore::new();
                lstm_store(&mut rng, d, h, "", &mut ps);
                ps.insert("x", random(&mut rng, &[t, d], 1.0), true).unwrap();
                let r = random(&mut rng, &[h], 1.0);
                let (_, trace) = cell.run(view(&ps, ""), ps.value("x").unwrap(), reverse).unwrap();
                let g = cell
                    .backward(view(&ps, ""), ps.value("x").unwrap(), &trace, &r)
                    .unwrap();
                ps.set_grads(vec![g.w, g.u, g.b, g.input]).unwrap();
                let f = |p: &ParamStore| -> Result<f64> {
                    let (hf, _) = cell.run(view(p, ""), p.value("x")?, reverse)?;
                    Ok(project(&hf, &r))
                };
                assert_passes("lstm", &grad_check(f, &ps, EPS, TOL).unwrap());
            }
        }
    }
}

#[test]
fn bilstm_gradients() {
    let shapes = [(2, 2, 1), (3, 3, 3), (2, 4, 5)];
    for &(d, h, t) in &shapes {
        for seed in SEEDS {
            let mut rng = Rng::new(seed);
            let bi = BiLstm::new(d, h).unwrap();
            let mut ps = ParamStore::new();
            lstm_store(&mut rng, d, h, "f_", &mut ps);
            lstm_store(&mut rng, d, h, "b_", &mut ps);
            ps.insert("x", random(&mut rng, &[t, d], 1.0), true).unwrap();
            let r = random(&mut rng, &[2 * h], 1.0);
            let x = ps.value("x").unwrap();
            let (_, trace) = bi.forward(view(&ps, "f_"), view(&ps, "b_"), x).unwrap();
            let g = bi
                .backward(view(&ps, "f_"), view(&ps, "b_"), x, &trace, &r)
                .unwrap();
            ps.set_grads(vec![g.fwd.w, g.fwd.u, g.fwd.b, g.bwd.w, g.bwd.u, g.bwd.b, g.input])
                .unwrap();
            let f = |p: &ParamStore| -> Result<f64> {
                let (y, _) = bi.forward(view(p, "f_"), view(p, "b_"), p.value("x")?)?;
                Ok(project(&y, &r))
            };
            assert_passes("bilstm", &grad_check(f, &ps, EPS, TOL).unwrap());
        }
    }
}

#[test]
fn dense_tanh_gradients() {
    let shapes = [(1, 1), (3, 4), (7, 5)];
    for &(i, o) in &shapes {
        for seed in SEEDS {
            for act in [Activation::Tanh, Activation::Identity] {
                let mut rng = Rng::new(seed);
                let dense = Dense::new(i, o, act).unwrap();
                let mut ps = ParamStore::new();
                ps.insert("w", random(&mut rng, &[o, i], 1.0), true).unwrap();
                ps.insert("b", random(&mut rng, &[o], 1.0), true).unwrap();
                ps.insert("x", random(&mut rng, &[i], 1.0), true).unwrap();
                let r = random(&mut rng, &[o], 1.0);
                let (w, b, x) = (
                    ps.value("w").unwrap(),
                    ps.value("b").unwrap(),
                    ps.value("x").unwrap(),
                );
                let y = dense.forward(w, b, x).unwrap();
                let g = dense.backward(w, x, &y, &r).unwrap();
                ps.set_grads(vec![g.weight, g.bias, g.input]).unwrap();
                let f = |p: &ParamStore| -> Result<f64> {
                    let y = dense.forward(p.value("w")?, p.value("b")?, p.value("x")?)?;
                    Ok(project(&y, &r))
                };
                assert_passes("dense", &grad_check(f, &ps, EPS, TOL).unwrap());
            }
        }
    }
}

#[test]
fn softmax_ce_gradients() {
    for k in [2, 6, 9] {
        for seed in SEEDS {
            let mut rng = Rng::new(seed);
            let label = rng.below(k as u64) as usize;
            let mut ps = ParamStore::new();
            ps.insert("z", random(&mut rng, &[k], 3.0), true).unwrap();
            let (_, g) = softmax_ce(ps.value("z").unwrap(), label).unwrap();
            ps.set_grads(vec![g]).unwrap();
            let f = |p: &ParamStore| -> Result<f64> { Ok(softmax_ce(p.value("z")?, label)?.0) };
            let report = grad_check(f, &ps, EPS, 1e-6).unwrap();
            assert!(report.passed(), "softmax_ce k={k}: {}", report.max_rel_error());
        }
    }
}

pub fn small_configs(use_lstm: bool) -> Vec<NetworkConfig> {
    let make = |input_length, f1, k1, s1, f2, k2, s2, hidden, fc: [usize; 2], classes| NetworkConfig {
        input_length,
        conv1: ConvConfig {
            filters: f1,
            width: k1,
            stride: s1,
        },
        conv2: ConvConfig {
            filters: f2,
            width: k2,
            stride: s2,
        },
        lstm_hidden: hidden,
        fc_sizes: fc,
        num_classes: classes,
        dropout: 0.3,
        use_lstm,
        scale: 1.0,
    };
    vec![
        make(24, 2, 4, 2, 2, 3, 2, 2, [3, 3], 2),
        make(48, 3, 6, 3, 3, 4, 2, 4, [6, 5], 6),
        make(80, 4, 8, 4, 3, 4, 2, 5, [8, 6], 4),
    ]
}

fn network_check(cfg: &NetworkConfig, seed: u64) -> GradCheckReport {
    let mut rng = Rng::new(seed);
    let mut model = NetworkModel::build(cfg, &mut rng).unwrap();
    // Zero biases over dead ReLU windows sit exactly on the kink.
    for (_, p) in model.params_mut().iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.uniform(-0.1, 0.1);
        }
    }
    let x = random(&mut rng, &[cfg.input_length], 1.5);
    let label = rng.below(cfg.num_classes as u64) as usize;
    let (_, grads) = model
        .loss_and_grads(&x, label, DropoutMode::Eval, &mut Rng::new(0))
        .unwrap();
    let mut ps = model.params().clone();
    ps.set_grads(grads).unwrap();
    let mut probe = model.clone();
    let f = |p: &ParamStore| -> Result<f64> {
        probe.replace_params(p.clone())?;
        let logits = probe.forward(&x, DropoutMode::Eval, &mut Rng::new(0))?;
        Ok(softmax_ce(&logits, label)?.0)
    };
    grad_check(f, &ps, EPS, TOL).unwrap()
}

#[test]
fn full_network_gradients() {
    for cfg in small_configs(true) {
        for seed in SEEDS {
            assert_passes(&format!("network {seed}"), &network_check(&cfg, seed));
        }
    }
}

#[test]
fn cnn_only_network_gradients() {
    for cfg in small_configs(false) {
        for seed in SEEDS {
            assert_passes(&format!("cnn network {seed}"), &network_check(&cfg, seed));
        }
    }
}
