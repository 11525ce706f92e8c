//! Slope fits and robust summaries for replica ensembles.

use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};
use thiserror::Error;

use crate::config::MIN_FIT_POINTS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("fit window holds {got} points, need {MIN_FIT_POINTS}")]
    TooFewPoints { got: usize },
    #[error("fit window has no spread in x")]
    Degenerate,
    #[error("non-positive or non-finite value under the transform")]
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// (ln x, ln y)
    LogLog,
    /// (x, ln y)
    SemiLog,
}

/// Closed interval of x values kept by a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn all() -> Window {
        Window {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn from(lo: f64) -> Window {
        Window { lo, hi: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub se: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Ordinary least squares on the transformed points inside the window.
pub fn fit_slope(points: &[(f64, f64)], window: Window, transform: Transform) -> Result<Fit, StatsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(x, y) in points.iter().filter(|(x, _)| *x >= window.lo && *x <= window.hi) {
        let (u, v) = match transform {
            Transform::LogLog => (x.ln(), y.ln()),
            Transform::SemiLog => (x, y.ln()),
        };
        if !(u.is_finite() && v.is_finite()) {
            return Err(StatsError::Domain);
        }
        xs.push(u);
        ys.push(v);
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(StatsError::TooFewPoints { got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-300) || xs.iter().all(|&x| x == xs[0]) {
        return Err(StatsError::Degenerate);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(Fit {
        slope,
        se: (ssr / (nf - 2.0) / sxx).sqrt(),
        intercept,
        points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
}

impl Spread {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn spread(xs: &[f64]) -> Spread {
    let mut data = Data::new(xs.to_vec());
    Spread {
        median: data.median(),
        q1: data.lower_quartile(),
        q3: data.upper_quartile(),
        count: xs.len(),
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ks {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against Exp(1), asymptotic p-value.
pub fn ks_exponential(xs: &[f64]) -> Ks {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = -(-x.max(0.0)).exp_m1();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ks {
        statistic: d,
        p_value: kolmogorov_tail(lambda),
    }
}

/// P(K > λ) for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson χ² goodness-of-fit p-value; adjacent cells are pooled until each
/// expects at least 5 counts.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = counts.iter().sum::<u64>() as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut oc, mut ep) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        oc += c as f64;
        ep += p * n;
        if ep >= 5.0 {
            stat += (oc - ep).powi(2) / ep;
            cells += 1;
            oc = 0.0;
            ep = 0.0;
        }
    }
    if ep > 0.0 {
        stat += (oc - ep).powi(2) / ep;
        cells += 1;
    }
    match cells.checked_sub(1).filter(|&d| d > 0) {
        Some(dof) => ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}
