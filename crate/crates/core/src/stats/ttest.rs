//! Paired Student's t-test with a table-free t distribution.
//!
//! The two-tailed p-value of `t` with `ν` degrees of freedom is
//! `I_x(ν/2, 1/2)` with `x = ν / (ν + t²)`, where `I` is the regularized
//! incomplete beta function evaluated by Lentz's continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CF_TOL: f64 = 1e-12;
const CF_MAX_ITER: usize = 500;

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let tiny = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            return Ok(h);
        }
    }
    Err(Error::Stats(format!(
        "incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )))
}

/// `I_x(a, b)` for `a, b > 0` and `x ∈ [0, 1]`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Stats(format!("incomplete beta domain (a={a}, b={b}, x={x})")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Two-tailed p-value `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::Stats(format!("degrees of freedom must be positive, got {df}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(regularized_incomplete_beta(df / 2.0, 0.5, x)?.clamp(0.0, 1.0))
}

/// `P(T ≤ t)`.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64> {
    let tail = 0.5 * two_tailed_p(t, df)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p: f64,
    /// Mean of `a − b`.
    pub mean_diff: f64,
    /// The differences had zero variance; `p` is 0 or 1 by convention.
    pub degenerate: bool,
}

/// Paired two-tailed t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Stats(format!(
            "paired t-test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Stats("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = super::mean(&d);
    let sd = super::sample_std(&d);
    let df = n - 1;
    if sd == 0.0 || sd <= 1e-12 * mean.abs() {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(TTest {
            t,
            df,
            p,
            mean_diff: mean,
            degenerate: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTest {
        t,
        df,
        p: two_tailed_p(t, df as f64)?,
        mean_diff: mean,
        degenerate: false,
    })
}
