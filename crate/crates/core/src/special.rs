//! Log-gamma, gamma ratios and Hurwitz zeta, generic over the scalar type.

use crate::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Bernoulli numbers B_0..B_23 with B_1 = -1/2.
const BERNOULLI: [f64; 24] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
    0.0,
    854513.0 / 138.0,
    0.0,
];

/// Number of asymptotic terms kept in gamma-ratio expansions.
pub const RATIO_TERMS: usize = 20;

/// Argument above which the asymptotic expansion is used.
const RATIO_SWITCH: f64 = 30.0;

#[inline]
fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

pub fn bernoulli_number(n: usize) -> f64 {
    BERNOULLI[n]
}

/// Bernoulli polynomial B_n(x).
pub fn bernoulli_poly<T: Real>(n: usize, x: T) -> T {
    let mut binom = 1.0f64;
    let mut acc = T::zero();
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n + 1 - k) as f64 / k as f64;
        }
        let b = BERNOULLI[k];
        if b != 0.0 {
            acc = acc + lit::<T>(binom * b) * x.powi((n - k) as i32);
        }
    }
    acc
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = lit::<T>(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + lit::<T>(c) / (x + lit::<T>(i as f64));
    }
    let t = x + lit::<T>(LANCZOS_G + 0.5);
    lit::<T>(0.918_938_533_204_672_8) + (x + half) * t.ln() - t + a.ln()
}

/// Γ(x) for real x that is not a nonpositive integer.
pub fn gamma<T: Real>(x: T) -> T {
    if x < lit(0.5) {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    ln_gamma(x).exp()
}

/// Precomputed expansion of ln Γ(y+δ) − ln Γ(y) for a fixed shift δ.
#[derive(Clone, Debug)]
pub struct GammaRatio<T: Real> {
    delta: T,
    coef: [T; RATIO_TERMS],
    // cut[n]: y above which terms beyond the n-th are below 1e-17.
    cut: [T; RATIO_TERMS],
}

impl<T: Real> GammaRatio<T> {
    pub fn new(delta: T) -> Self {
        let mut coef = [T::zero(); RATIO_TERMS];
        for (i, c) in coef.iter_mut().enumerate() {
            let n = i + 1;
            let sign = if n % 2 == 1 { T::one() } else { -T::one() };
            let d = bernoulli_poly(n + 1, delta) - lit(BERNOULLI[n + 1]);
            *c = sign * d / lit((n * (n + 1)) as f64);
        }
        let mut cut = [T::infinity(); RATIO_TERMS];
        for (n, slot) in cut.iter_mut().enumerate() {
            let mut y = T::zero();
            for (m, c) in coef.iter().enumerate().skip(n) {
                let mag = c.abs() / lit(1e-17);
                if mag > T::zero() {
                    y = y.max(mag.powf(lit::<T>(1.0) / lit((m + 1) as f64)));
                }
            }
            *slot = y;
        }
        GammaRatio { delta, coef, cut }
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// ln Γ(y+δ) − ln Γ(y); requires y > 0 and y + δ > 0.
    pub fn ln_ratio(&self, y: T) -> T {
        let switch = lit::<T>(RATIO_SWITCH) + lit::<T>(8.0) * self.delta.abs();
        if y >= switch {
            return self.asymptotic(y);
        }
        if self.delta.abs() > lit(8.0) {
            return ln_gamma(y + self.delta) - ln_gamma(y);
        }
        // Shift upward: Γ(y+δ)/Γ(y) = Γ(y+m+δ)/Γ(y+m) · Π (y+i)/(y+δ+i).
        let m = (switch - y).ceil().to_usize().unwrap();
        let mut prod = T::one();
        let mut acc = T::zero();
        for i in 0..m {
            let yi = y + lit(i as f64);
            prod = prod * yi / (yi + self.delta);
            if i % 16 == 15 {
                acc = acc + prod.ln();
                prod = T::one();
            }
        }
        acc + prod.ln() + self.asymptotic(y + lit(m as f64))
    }

    fn asymptotic(&self, y: T) -> T {
        let u = y.recip();
        let n = self.cut.iter().position(|&c| y >= c).unwrap_or(RATIO_TERMS);
        let mut s = T::zero();
        for c in self.coef[..n].iter().rev() {
            s = (s + *c) * u;
        }
        self.delta * y.ln() + s
    }
}

/// ln(Γ(x+α)/Γ(x+β)).
pub fn ln_gamma_ratio<T: Real>(x: T, alpha: T, beta: T) -> T {
    GammaRatio::new(alpha - beta).ln_ratio(x + beta)
}

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q+k)^{-s} for s > 1, q > 0.
pub fn hurwitz_zeta<T: Real>(s: T, q: T) -> T {
    let floor = lit::<T>(24.0).max(s * lit(2.0));
    let mut sum = T::zero();
    let mut x = q;
    while x < floor {
        sum = sum + x.powf(-s);
        x = x + T::one();
    }
    let xs = x.powf(-s);
    sum = sum + x * xs / (s - T::one()) + xs * lit(0.5);
    // Euler–Maclaurin corrections.
    let mut rising = s;
    let mut fact = 2.0f64;
    let mut pw = xs / x;
    for r in 1..=9usize {
        let term = lit::<T>(BERNOULLI[2 * r] / fact) * rising * pw;
        sum = sum + term;
        let k = (2 * r) as f64;
        rising = rising * (s + lit(k - 1.0)) * (s + lit(k));
        fact *= (k + 1.0) * (k + 2.0);
        pw = pw / (x * x);
    }
    sum
}

/// Sums Σ_{k≥K} t(k) for t(k) = C·Π_i Γ(k+α_i)/Γ(k+β_i), using the exact terms
/// below a switch point and an asymptotic Hurwitz-zeta expansion beyond it.
#[derive(Clone, Debug)]
pub struct GammaProductSeries<T: Real> {
    ln_c: T,
    pairs: Vec<(T, T)>,
    ratios: Vec<GammaRatio<T>>,
    sigma: T,
    f: Vec<T>,
    switch: T,
}

const SERIES_TERMS: usize = 16;

impl<T: Real> GammaProductSeries<T> {
    /// `pairs` holds (α_i, β_i); the power Σ(α_i − β_i) must be below −1.
    pub fn new(ln_c: T, pairs: &[(T, T)]) -> Self {
        let sigma = pairs.iter().fold(T::zero(), |acc, &(a, b)| acc + a - b);
        assert!(sigma < -T::one(), "series is not summable");
        let mut e = vec![T::zero(); SERIES_TERMS + 1];
        for (n, en) in e.iter_mut().enumerate().skip(1) {
            let sign = if n % 2 == 1 { T::one() } else { -T::one() };
            let mut acc = T::zero();
            for &(a, b) in pairs {
                acc = acc + bernoulli_poly(n + 1, a) - bernoulli_poly(n + 1, b);
            }
            *en = sign * acc / lit((n * (n + 1)) as f64);
        }
        let mut f = vec![T::zero(); SERIES_TERMS + 1];
        f[0] = T::one();
        for j in 1..=SERIES_TERMS {
            let mut acc = T::zero();
            for n in 1..=j {
                acc = acc + lit::<T>(n as f64) * e[n] * f[j - n];
            }
            f[j] = acc / lit(j as f64);
        }
        let scale = pairs.iter().fold(T::one(), |m, &(a, b)| m.max(a.abs()).max(b.abs()));
        let switch = (lit::<T>(64.0) * (scale + T::one())).max(lit(512.0));
        GammaProductSeries {
            ln_c,
            pairs: pairs.to_vec(),
            ratios: pairs.iter().map(|&(a, b)| GammaRatio::new(a - b)).collect(),
            sigma,
            f,
            switch,
        }
    }

    pub fn ln_term(&self, k: T) -> T {
        let mut s = self.ln_c;
        for (r, &(_, b)) in self.ratios.iter().zip(&self.pairs) {
            s = s + r.ln_ratio(k + b);
        }
        s
    }

    pub fn term(&self, k: T) -> T {
        self.ln_term(k).exp()
    }

    /// Smallest index from which the asymptotic tail is trusted.
    pub fn switch(&self) -> T {
        self.switch
    }

    fn asymptotic_tail(&self, k: T) -> T {
        let mut acc = T::zero();
        for (j, &fj) in self.f.iter().enumerate() {
            acc = acc + fj * hurwitz_zeta(lit::<T>(j as f64) - self.sigma, k);
        }
        self.ln_c.exp() * acc
    }

    /// Σ_{j≥k} t(j) for integer-valued k ≥ 1 with all Γ arguments positive.
    pub fn tail(&self, k: T) -> T {
        if k >= self.switch {
            return self.asymptotic_tail(k);
        }
        let stop = self.switch.ceil();
        let mut sum = T::zero();
        let mut j = k;
        while j < stop {
            sum = sum + self.term(j);
            j = j + T::one();
        }
        sum + self.asymptotic_tail(stop)
    }

    /// Power σ = Σ(α_i − β_i) governing t(k) ~ C k^σ.
    pub fn power(&self) -> T {
        self.sigma
    }
}
