//! LSTM cell and the bidirectional wrapper.
//!
//! Gate order in the stacked `4H` dimension is `(i, f, g, o)`:
//!
//! ```text
//! z = W·x_t + U·h_{t-1} + b
//! i = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! `W` is `[4H, d_in]`, `U` is `[4H, H]` and there is one shared bias `[4H]`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lstm {
    pub input_size: usize,
    pub hidden_size: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub w: &'a Tensor,
    pub u: &'a Tensor,
    pub b: &'a Tensor,
}

/// Everything a backward pass over one direction needs.
#[derive(Clone, Debug)]
pub struct LstmTrace {
    reverse: bool,
    steps: usize,
    /// Activated gates per processed step, `4H` each.
    gates: Vec<f64>,
    /// Cell states c_0..c_T in processing order (`(T+1)·H`).
    cells: Vec<f64>,
    /// Hidden states h_0..h_T in processing order.
    hiddens: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LstmGrads {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    /// `[T, d_in]`
    pub input: Tensor,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Lstm {
    pub fn new(input_size: usize, hidden_size: usize) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Config("LSTM sizes must be positive".into()));
        }
        Ok(Lstm {
            input_size,
            hidden_size,
        })
    }

    pub fn w_shape(&self) -> [usize; 2] {
        [4 * self.hidden_size, self.input_size]
    }

    pub fn u_shape(&self) -> [usize; 2] {
        [4 * self.hidden_size, self.hidden_size]
    }

    fn check(&self, p: &LstmWeights<'_>) -> Result<()> {
        if p.w.shape() != self.w_shape()
            || p.u.shape() != self.u_shape()
            || p.b.shape() != [4 * self.hidden_size]
        {
            return Err(Error::Shape(format!(
                "LSTM parameters {:?}/{:?}/{:?} do not match input {} hidden {}",
                p.w.shape(),
                p.u.shape(),
                p.b.shape(),
                self.input_size,
                self.hidden_size
            )));
        }
        Ok(())
    }

    /// Computes activated gates into `gates` and the new state into `h`, `c`.
    fn step_into(
        &self,
        p: &LstmWeights<'_>,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        gates: &mut [f64],
        h: &mut [f64],
        c: &mut [f64],
    ) {
        let hs = self.hidden_size;
        let d = self.input_size;
        let w = p.w.data();
        let u = p.u.data();
        for (r, z) in gates.iter_mut().enumerate() {
            let wx: f64 = w[r * d..(r + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
            let uh: f64 = u[r * hs..(r + 1) * hs]
                .iter()
                .zip(h_prev)
                .map(|(a, b)| a * b)
                .sum();
            *z = p.b.data()[r] + wx + uh;
        }
        for j in 0..hs {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[hs + j]);
            let g = gates[2 * hs + j].tanh();
            let o = sigmoid(gates[3 * hs + j]);
            gates[j] = i;
            gates[hs + j] = f;
            gates[2 * hs + j] = g;
            gates[3 * hs + j] = o;
            c[j] = f * c_prev[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }

    /// A single recurrence step.
    pub fn step(
        &self,
        p: LstmWeights<'_>,
        x_t: &Tensor,
        h_prev: &Tensor,
        c_prev: &Tensor,
    ) -> Result<(Tensor, Tensor)> {
        self.check(&p)?;
        let hs = self.hidden_size;
        if x_t.len() != self.input_size || h_prev.len() != hs || c_prev.len() != hs {
            return Err(Error::Shape("LSTM step input/state sizes".into()));
        }
        let mut gates = vec![0.0; 4 * hs];
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        self.step_into(
            &p,
            x_t.data(),
            h_prev.data(),
            c_prev.data(),
            &mut gates,
            &mut h,
            &mut c,
        );
        Ok((Tensor::new(&[hs], h)?, Tensor::new(&[hs], c)?))
    }

    /// Runs over `x: [T, d_in]` from zero state (in reverse time order when
    /// `reverse`), returning the final hidden state and a trace.
    pub fn run(&self, p: LstmWeights<'_>, x: &Tensor, reverse: bool) -> Result<(Tensor, LstmTrace)> {
        self.check(&p)?;
        let (t_n, d) = x.dims2()?;
        if d != self.input_size {
            return Err(Error::Shape(format!(
                "LSTM expects {} features per step, got {d}",
                self.input_size
            )));
        }
        let hs = self.hidden_size;
        let mut gates = vec![0.0; t_n * 4 * hs];
        let mut cells = vec![0.0; (t_n + 1) * hs];
        let mut hiddens = vec![0.0; (t_n + 1) * hs];
        for k in 0..t_n {
            let t = if reverse { t_n - 1 - k } else { k };
            let xt = &x.data()[t * d..(t + 1) * d];
            let (h_prev_all, h_next_all) = hiddens.split_at_mut((k + 1) * hs);
            let (c_prev_all, c_next_all) = cells.split_at_mut((k + 1) * hs);
            self.step_into(
                &p,
                xt,
                &h_prev_all[k * hs..],
                &c_prev_all[k * hs..],
                &mut gates[k * 4 * hs..(k + 1) * 4 * hs],
                &mut h_next_all[..hs],
                &mut c_next_all[..hs],
            );
        }
        let h_final = Tensor::new(&[hs], hiddens[t_n * hs..].to_vec())?;
        Ok((
            h_final,
            LstmTrace {
                reverse,
                steps: t_n,
                gates,
                cells,
                hiddens,
            },
        ))
    }

    /// Backpropagation through time from a gradient on the final hidden state.
    pub fn backward(
        &self,
        p: LstmWeights<'_>,
        x: &Tensor,
        trace: &LstmTrace,
        grad_h_final: &Tensor,
    ) -> Result<LstmGrads> {
        self.check(&p)?;
        let hs = self.hidden_size;
        let d = self.input_size;
        let t_n = trace.steps;
        if x.shape() != [t_n, d] || grad_h_final.len() != hs {
            return Err(Error::Shape("LSTM backward sizes".into()));
        }
        let w = p.w.data();
        let u = p.u.data();
        let mut dw = vec![0.0; 4 * hs * d];
        let mut du = vec![0.0; 4 * hs * hs];
        let mut db = vec![0.0; 4 * hs];
        let mut dx = vec![0.0; t_n * d];
        let mut dh = grad_h_final.data().to_vec();
        let mut dc = vec![0.0; hs];
        let mut dz = vec![0.0; 4 * hs];
        for k in (0..t_n).rev() {
            let t = if trace.reverse { t_n - 1 - k } else { k };
            let gates = &trace.gates[k * 4 * hs..(k + 1) * 4 * hs];
            let c_prev = &trace.cells[k * hs..(k + 1) * hs];
            let c = &trace.cells[(k + 1) * hs..(k + 2) * hs];
            let h_prev = &trace.hiddens[k * hs..(k + 1) * hs];
            for j in 0..hs {
                let (i, f, g, o) = (gates[j], gates[hs + j], gates[2 * hs + j], gates[3 * hs + j]);
                let tc = c[j].tanh();
                let d_o = dh[j] * tc;
                let dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
                dz[j] = dc_total * g * i * (1.0 - i);
                dz[hs + j] = dc_total * c_prev[j] * f * (1.0 - f);
                dz[2 * hs + j] = dc_total * i * (1.0 - g * g);
                dz[3 * hs + j] = d_o * o * (1.0 - o);
                dc[j] = dc_total * f;
            }
            let xt = &x.data()[t * d..(t + 1) * d];
            let dxt = &mut dx[t * d..(t + 1) * d];
            dh.fill(0.0);
            for (r, &g) in dz.iter().enumerate() {
                db[r] += g;
                if g == 0.0 {
                    continue;
                }
                for (dwv, &xv) in dw[r * d..(r + 1) * d].iter_mut().zip(xt) {
                    *dwv += g * xv;
                }
                for (dxv, &wv) in dxt.iter_mut().zip(&w[r * d..(r + 1) * d]) {
                    *dxv += g * wv;
                }
                for ((duv, &hv), (dhv, &uv)) in du[r * hs..(r + 1) * hs]
                    .iter_mut()
                    .zip(h_prev)
                    .zip(dh.iter_mut().zip(&u[r * hs..(r + 1) * hs]))
                {
                    *duv += g * hv;
                    *dhv += g * uv;
                }
            }
        }
        Ok(LstmGrads {
            w: Tensor::new(&self.w_shape(), dw)?,
            u: Tensor::new(&self.u_shape(), du)?,
            b: Tensor::new(&[4 * hs], db)?,
            input: Tensor::new(&[t_n, d], dx)?,
        })
    }
}

/// Forward and backward LSTMs over the same sequence; the output is
/// `[h_fwd(T), h_bwd(1)]`, the final hidden state of each direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BiLstm {
    pub cell: Lstm,
}

#[derive(Clone, Debug)]
pub struct BiLstmTrace {
    fwd: LstmTrace,
    bwd: LstmTrace,
}

#[derive(Clone, Debug)]
pub struct BiLstmGrads {
    pub fwd: LstmGrads,
    pub bwd: LstmGrads,
    pub input: Tensor,
}

impl BiLstm {
    pub fn new(input_size: usize, hidden_size: usize) -> Result<Self> {
        Ok(BiLstm {
            cell: Lstm::new(input_size, hidden_size)?,
        })
    }

    pub fn output_size(&self) -> usize {
        2 * self.cell.hidden_size
    }

    pub fn forward(
        &self,
        fwd: LstmWeights<'_>,
        bwd: LstmWeights<'_>,
        x: &Tensor,
    ) -> Result<(Tensor, BiLstmTrace)> {
        let (t_n, _) = x.dims2()?;
        if t_n == 0 {
            return Err(Error::EmptySequence("bidirectional LSTM input".into()));
        }
        let (hf, tf) = self.cell.run(fwd, x, false)?;
        let (hb, tb) = self.cell.run(bwd, x, true)?;
        let mut out = hf.into_data();
        out.extend_from_slice(hb.data());
        Ok((
            Tensor::new(&[self.output_size()], out)?,
            BiLstmTrace { fwd: tf, bwd: tb },
        ))
    }

    pub fn backward(
        &self,
        fwd: LstmWeights<'_>,
        bwd: LstmWeights<'_>,
        x: &Tensor,
        trace: &BiLstmTrace,
        grad_out: &Tensor,
    ) -> Result<BiLstmGrads> {
        let hs = self.cell.hidden_size;
        if grad_out.len() != 2 * hs {
            return Err(Error::Shape("BiLSTM grad_out size".into()));
        }
        let gf = Tensor::new(&[hs], grad_out.data()[..hs].to_vec())?;
        let gb = Tensor::new(&[hs], grad_out.data()[hs..].to_vec())?;
        let f = self.cell.backward(fwd, x, &trace.fwd, &gf)?;
        let b = self.cell.backward(bwd, x, &trace.bwd, &gb)?;
        let input = f.input.add(&b.input)?;
        Ok(BiLstmGrads { fwd: f, bwd: b, input })
    }
}

/// Convenience wrapper returning only the concatenated output.
pub fn bilstm_forward(fwd: LstmWeights<'_>, bwd: LstmWeights<'_>, x: &Tensor) -> Result<Tensor> {
    let (_, d) = x.dims2()?;
    let hs = fwd.u.shape()[1];
    BiLstm::new(d, hs)?.forward(fwd, bwd, x).map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    struct Owned {
        w: Tensor,
        u: Tensor,
        b: Tensor,
    }

    impl Owned {
        fn random(d: usize, h: usize, rng: &mut Rng) -> Self {
            let mut draw = |n| (0..n).map(|_| rng.uniform(-0.8, 0.8)).collect::<Vec<_>>();
            Owned {
                w: Tensor::new(&[4 * h, d], draw(4 * h * d)).unwrap(),
                u: Tensor::new(&[4 * h, h], draw(4 * h * h)).unwrap(),
                b: Tensor::new(&[4 * h], draw(4 * h)).unwrap(),
            }
        }
        fn view(&self) -> LstmWeights<'_> {
            LstmWeights {
                w: &self.w,
                u: &self.u,
                b: &self.b,
            }
        }
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let (d, h) = (3, 2);
        let cell = Lstm::new(d, h).unwrap();
        let w = Tensor::zeros(&[4 * h, d]);
        let u = Tensor::zeros(&[4 * h, h]);
        let b = Tensor::zeros(&[4 * h]);
        let p = LstmWeights { w: &w, u: &u, b: &b };
        let x = Tensor::from_vec(vec![0.3, -1.0, 2.0]).unwrap();
        let (hn, cn) = cell
            .step(p, &x, &Tensor::zeros(&[h]), &Tensor::zeros(&[h]))
            .unwrap();
        assert!(hn.data().iter().all(|&v| v == 0.0));
        assert!(cn.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_cell_state_ignores_forget_path() {
        let (d, h) = (2, 3);
        let cell = Lstm::new(d, h).unwrap();
        let mut rng = Rng::new(8);
        let a = Owned::random(d, h, &mut rng);
        let mut b2 = a.b.clone();
        let mut w2 = a.w.clone();
        // perturb only forget-gate rows
        for j in h..2 * h {
            b2.data_mut()[j] += 3.0;
            for k in 0..d {
                w2.data_mut()[j * d + k] -= 1.5;
            }
        }
        let x = Tensor::from_vec(vec![0.5, -0.25]).unwrap();
        let hp = Tensor::from_vec(vec![0.1, 0.2, -0.3]).unwrap();
        let c0 = Tensor::zeros(&[h]);
        let r1 = cell.step(a.view(), &x, &hp, &c0).unwrap();
        let p2 = LstmWeights {
            w: &w2,
            u: &a.u,
            b: &b2,
        };
        let r2 = cell.step(p2, &x, &hp, &c0).unwrap();
        assert!(r1.0.bit_eq(&r2.0));
        assert!(r1.1.bit_eq(&r2.1));
    }

    #[test]
    fn step_matches_scalar_recurrence() {
        let (d, h) = (4, 3);
        let cell = Lstm::new(d, h).unwrap();
        let mut rng = Rng::new(21);
        let p = Owned::random(d, h, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let hp: Vec<f64> = (0..h).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let cp: Vec<f64> = (0..h).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (hn, cn) = cell
            .step(
                p.view(),
                &Tensor::from_vec(x.clone()).unwrap(),
                &Tensor::from_vec(hp.clone()).unwrap(),
                &Tensor::from_vec(cp.clone()).unwrap(),
            )
            .unwrap();
        let pre = |row: usize| {
            let mut z = p.b.data()[row];
            for k in 0..d {
                z += p.w.data()[row * d + k] * x[k];
            }
            for k in 0..h {
                z += p.u.data()[row * h + k] * hp[k];
            }
            z
        };
        for j in 0..h {
            let i = sig(pre(j));
            let f = sig(pre(h + j));
            let g = pre(2 * h + j).tanh();
            let o = sig(pre(3 * h + j));
            let c = f * cp[j] + i * g;
            let hh = o * c.tanh();
            assert!((cn.data()[j] - c).abs() < 1e-14);
            assert!((hn.data()[j] - hh).abs() < 1e-14);
        }
    }

    #[test]
    fn full_width_output_is_1000() {
        let (d, h) = (128, 500);
        let w = Tensor::filled(&[4 * h, d], 0.001);
        let u = Tensor::filled(&[4 * h, h], 0.001);
        let b = Tensor::zeros(&[4 * h]);
        let p = LstmWeights { w: &w, u: &u, b: &b };
        let x = Tensor::filled(&[2, d], 0.1);
        assert_eq!(bilstm_forward(p, p, &x).unwrap().len(), 1000);
    }

    #[test]
    fn single_step_sequence() {
        let (d, h) = (2, 3);
        let cell = Lstm::new(d, h).unwrap();
        let mut rng = Rng::new(4);
        let pf = Owned::random(d, h, &mut rng);
        let pb = Owned::random(d, h, &mut rng);
        let x = Tensor::new(&[1, d], vec![0.7, -0.2]).unwrap();
        let y = bilstm_forward(pf.view(), pb.view(), &x).unwrap();
        let x0 = Tensor::from_vec(vec![0.7, -0.2]).unwrap();
        let z = Tensor::zeros(&[h]);
        let (hf, _) = cell.step(pf.view(), &x0, &z, &z).unwrap();
        let (hb, _) = cell.step(pb.view(), &x0, &z, &z).unwrap();
        assert_eq!(&y.data()[..h], hf.data());
        assert_eq!(&y.data()[h..], hb.data());
    }

    #[test]
    fn reversal_swaps_directions() {
        let (d, h, t) = (3, 4, 5);
        let mut rng = Rng::new(12);
        let pf = Owned::random(d, h, &mut rng);
        let pb = Owned::random(d, h, &mut rng);
        let data: Vec<f64> = (0..t * d).map(|_| rng.normal()).collect();
        let x = Tensor::new(&[t, d], data.clone()).unwrap();
        let mut rev = Vec::with_capacity(t * d);
        for step in (0..t).rev() {
            rev.extend_from_slice(&data[step * d..(step + 1) * d]);
        }
        let xr = Tensor::new(&[t, d], rev).unwrap();
        let y = bilstm_forward(pf.view(), pb.view(), &x).unwrap();
        let yr = bilstm_forward(pb.view(), pf.view(), &xr).unwrap();
        assert_eq!(&y.data()[..h], &yr.data()[h..]);
        assert_eq!(&y.data()[h..], &yr.data()[..h]);
    }

    proptest::proptest! {
        #[test]
        fn cell_growth_is_bounded(seed in 0u64..500, t in 1usize..30) {
            let (d, h) = (2, 3);
            let cell = Lstm::new(d, h).unwrap();
            let mut rng = Rng::new(seed);
            let bound = 5.0;
            let mut draw = |n| (0..n).map(|_| rng.uniform(-bound, bound)).collect::<Vec<_>>();
            let w = Tensor::new(&[4 * h, d], draw(4 * h * d)).unwrap();
            let u = Tensor::new(&[4 * h, h], draw(4 * h * h)).unwrap();
            let b = Tensor::new(&[4 * h], draw(4 * h)).unwrap();
            let x = Tensor::new(&[t, d], draw(t * d).iter().map(|v| v / bound).collect()).unwrap();
            let (_, trace) = cell.run(LstmWeights { w: &w, u: &u, b: &b }, &x, false).unwrap();
            for k in 1..=t {
                for j in 0..h {
                    let c = trace.cells[k * h + j];
                    let hv = trace.hiddens[k * h + j];
                    proptest::prop_assert!(c.abs() <= k as f64);
                    proptest::prop_assert!(hv.abs() <= 1.0);
                }
            }
        }
    }
}
