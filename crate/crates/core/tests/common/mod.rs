#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson χ² p-value of observed counts against probabilities. Bins with
/// expected count below 5 are pooled into their successor.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let mut stat = 0.0;
    let mut dof = 0usize;
    let (mut oc, mut ep) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        oc += c as f64;
        ep += p * n;
        if ep >= 5.0 {
            stat += (oc - ep).powi(2) / ep;
            dof += 1;
            oc = 0.0;
            ep = 0.0;
        }
    }
    if ep > 0.0 {
        stat += (oc - ep).powi(2) / ep.max(1e-300);
        dof += 1;
    }
    p_value(stat, dof.saturating_sub(1))
}

/// Two-sample χ² homogeneity p-value for equal-size samples.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut dof = 0usize;
    let (mut sa, mut sb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sa += x as f64;
        sb += y as f64;
        if sa + sb >= 10.0 {
            stat += (ka * sa - kb * sb).powi(2) / (sa + sb);
            dof += 1;
            sa = 0.0;
            sb = 0.0;
        }
    }
    if sa + sb > 0.0 {
        stat += (ka * sa - kb * sb).powi(2) / (sa + sb);
        dof += 1;
    }
    p_value(stat, dof.saturating_sub(1))
}

fn p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One-sample Kolmogorov–Smirnov p-value (asymptotic, with Stephens' correction).
pub fn ks_pvalue(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let t = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        p += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * t * t).exp();
    }
    p.clamp(0.0, 1.0)
}
