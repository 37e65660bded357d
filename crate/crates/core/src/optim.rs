//! AdaDelta.
//!
//! Per trainable scalar, with decay `rho` and conditioning constant `eps`:
//!
//! ```text
//! E[g²] ← ρ·E[g²] + (1−ρ)·g²
//! Δ     = −sqrt((E[Δ²] + ε) / (E[g²] + ε)) · g
//! E[Δ²] ← ρ·E[Δ²] + (1−ρ)·Δ²
//! θ     ← θ + Δ
//! ```
//!
//! There is no global learning rate. Parameters flagged non-trainable are
//! never touched.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaDeltaConfig {
    pub rho: f64,
    pub eps: f64,
}

impl Default for AdaDeltaConfig {
    fn default() -> Self {
        AdaDeltaConfig {
            rho: 0.95,
            eps: 1e-6,
        }
    }
}

impl AdaDeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("optimizer.rho {} outside (0, 1)", self.rho)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("optimizer.eps {} must be positive", self.eps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Accumulators {
    sq_grad: Tensor,
    sq_delta: Tensor,
}

#[derive(Clone, Debug)]
pub struct AdaDeltaState {
    config: AdaDeltaConfig,
    accum: IndexMap<String, Accumulators>,
}

impl AdaDeltaState {
    /// Zero accumulators for exactly the trainable entries of `params`.
    pub fn new(config: AdaDeltaConfig, params: &ParamStore) -> Result<Self> {
        config.validate()?;
        let accum = params
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(name, p)| {
                (
                    name.to_string(),
                    Accumulators {
                        sq_grad: Tensor::zeros(p.value.shape()),
                        sq_delta: Tensor::zeros(p.value.shape()),
                    },
                )
            })
            .collect();
        Ok(AdaDeltaState { config, accum })
    }

    pub fn config(&self) -> AdaDeltaConfig {
        self.config
    }

    pub fn tracked(&self) -> impl Iterator<Item = &str> {
        self.accum.keys().map(String::as_str)
    }

    pub fn sq_grad(&self, name: &str) -> Option<&Tensor> {
        self.accum.get(name).map(|a| &a.sq_grad)
    }

    pub fn sq_delta(&self, name: &str) -> Option<&Tensor> {
        self.accum.get(name).map(|a| &a.sq_delta)
    }

    /// Applies one update using the gradients stored in `params`.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<()> {
        let trainable = params.iter().filter(|(_, p)| p.trainable).count();
        if trainable != self.accum.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters but the store has {trainable} trainable",
                self.accum.len()
            )));
        }
        let AdaDeltaConfig { rho, eps } = self.config;
        for (name, p) in params.iter_mut().filter(|(_, p)| p.trainable) {
            let acc = self.accum.get_mut(name).ok_or_else(|| {
                Error::Contract(format!("no optimizer state for trainable `{name}`"))
            })?;
            if p.grad.shape() != p.value.shape() {
                return Err(Error::Contract(format!("gradient for `{name}` missing")));
            }
            let values = p.value.data_mut();
            let grads = p.grad.data();
            let eg = acc.sq_grad.data_mut();
            let ed = acc.sq_delta.data_mut();
            for k in 0..values.len() {
                let g = grads[k];
                if !g.is_finite() {
                    return Err(Error::NonFinite(format!("gradient of `{name}`")));
                }
                eg[k] = rho * eg[k] + (1.0 - rho) * g * g;
                let delta = -((ed[k] + eps) / (eg[k] + eps)).sqrt() * g;
                ed[k] = rho * ed[k] + (1.0 - rho) * delta * delta;
                values[k] += delta;
            }
        }
        Ok(())
    }
}
