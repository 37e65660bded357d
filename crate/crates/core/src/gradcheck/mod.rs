//! Central-difference gradient checking.
//!
//! The analytic gradient is whatever the caller left in each parameter's
//! `grad` slot; every trainable scalar is perturbed by `±eps` and compared
//! with `(f(θ+eps) − f(θ−eps)) / (2·eps)` using the relative error
//! `|a − n| / max(1e-8, |a| + |n|)`.
//!
//! For piecewise-smooth objectives the caller may also return a region tag
//! (for example a ReLU sign pattern); coordinates whose `±eps` probes land in
//! a different region from the unperturbed point straddle a kink, where the
//! difference quotient is not a derivative estimate, and are counted as
//! skipped instead of compared.

pub mod suite;

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct GradCheckEntry {
    pub name: String,
    /// Number of scalars checked.
    pub scalars: usize,
    pub max_rel_error: f64,
    /// Coordinates whose probes crossed a region boundary.
    pub skipped: usize,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub tol: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }

    pub fn checked(&self) -> usize {
        self.entries.iter().map(|e| e.scalars - e.skipped).sum()
    }

    pub fn skipped(&self) -> usize {
        self.entries.iter().map(|e| e.skipped).sum()
    }

    pub fn failures(&self) -> impl Iterator<Item = &GradCheckEntry> {
        self.entries.iter().filter(move |e| e.max_rel_error >= self.tol)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Checks every trainable scalar.
pub fn grad_check<F>(f: F, params: &ParamStore, eps: f64, tol: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    let mut f = f;
    check_indices(|p| Ok((f(p)?, 0)), params, eps, tol, |_, n| (0..n).collect())
}

/// Checks at most `per_tensor` randomly chosen scalars of each trainable tensor.
pub fn grad_check_sampled<F>(
    f: F,
    params: &ParamStore,
    eps: f64,
    tol: f64,
    per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    let mut f = f;
    check_indices(|p| Ok((f(p)?, 0)), params, eps, tol, sampler(per_tensor, seed))
}

/// Like [`grad_check_sampled`] for an objective that also reports a region tag.
/// `per_tensor = None` checks every scalar.
pub fn grad_check_piecewise<F>(
    f: F,
    params: &ParamStore,
    eps: f64,
    tol: f64,
    per_tensor: Option<usize>,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, u64)>,
{
    check_indices(f, params, eps, tol, sampler(per_tensor.unwrap_or(usize::MAX), seed))
}

fn sampler(per_tensor: usize, seed: u64) -> impl FnMut(&str, usize) -> Vec<usize> {
    move |name, n| {
        let mut idx: Vec<usize> = (0..n).collect();
        if n > per_tensor {
            Rng::derived(seed, name).shuffle(&mut idx);
            idx.truncate(per_tensor);
            idx.sort_unstable();
        }
        idx
    }
}

fn check_indices<F, S>(mut f: F, params: &ParamStore, eps: f64, tol: f64, mut select: S) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, u64)>,
    S: FnMut(&str, usize) -> Vec<usize>,
{
    if !(1e-6..=1e-4).contains(&eps) {
        return Err(Error::Config(format!(
            "grad_check eps {eps} outside [1e-6, 1e-4]"
        )));
    }
    let mut probe = params.clone();
    let (_, base_region) = f(params)?;
    let names: Vec<String> = params
        .iter()
        .filter(|(_, p)| p.trainable)
        .map(|(n, _)| n.to_string())
        .collect();
    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        let analytic_grad = params.get(&name).expect("listed").grad.clone();
        let indices = select(&name, analytic_grad.len());
        let mut entry = GradCheckEntry {
            name: name.clone(),
            scalars: indices.len(),
            max_rel_error: 0.0,
            skipped: 0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (k, &i) in indices.iter().enumerate() {
            let orig = probe.get(&name).expect("listed").value.data()[i];
            probe.get_mut(&name).expect("listed").value.data_mut()[i] = orig + eps;
            let (plus, region_plus) = f(&probe)?;
            probe.get_mut(&name).expect("listed").value.data_mut()[i] = orig - eps;
            let (minus, region_minus) = f(&probe)?;
            probe.get_mut(&name).expect("listed").value.data_mut()[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!("grad_check objective at `{name}`[{i}]")));
            }
            if region_plus != base_region || region_minus != base_region {
                entry.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = analytic_grad.data()[i];
            let rel = relative_error(analytic, numeric);
            if rel > entry.max_rel_error || k == entry.skipped {
                entry.max_rel_error = rel;
                entry.worst_index = i;
                entry.analytic = analytic;
                entry.numeric = numeric;
            }
        }
        entries.push(entry);
    }
    Ok(GradCheckReport { tol, entries })
}
