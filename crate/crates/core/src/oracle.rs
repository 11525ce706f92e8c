//! Independent ground truth: Fourier inversion of the ν-walk, FFT convolution,
//! cycle-lemma identities and vertex-resolved disk enumeration.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::Phase;
use crate::Model;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("quadrature did not converge: last change {change:e} with {nodes} nodes")]
    NoConvergence { change: f64, nodes: usize },
    #[error("requires the dense phase")]
    NotDense,
    #[error("enumeration bounds too large: ℓ_max = {0}, n_max = {1}")]
    Bounds(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// (1/2π)∫ f(θ) dθ over one period, real part.
    pub value: f64,
    /// Imaginary part of the same integral; vanishes for real targets.
    pub imag: f64,
    /// Difference between the last two refinements.
    pub change: f64,
    pub nodes: usize,
}

const TOL: f64 = 1e-11;
const T_MAX: f64 = 4.0;
const MIN_LEVEL: u32 = 6;
const MAX_NODES: usize = 1 << 22;

/// (1/2π)∫_{−π}^{π} f(θ) dθ for f singular only at θ = 0, by double-exponential
/// quadrature on (0, π] and on [−π, 0).
pub fn circle_integral(f: impl Fn(f64) -> Complex64) -> Result<Quadrature, OracleError> {
    outer_integral(f, 0.0)
}

/// (1/2π)∫ f(θ) dθ over lo ≤ |θ| ≤ π.
fn outer_integral(f: impl Fn(f64) -> Complex64, lo: f64) -> Result<Quadrature, OracleError> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    let span = pi - lo;
    // Node at t: θ = lo + span/(1+e^{−2u}), u = (π/2) sinh t.
    let eval = |t: f64| -> Complex64 {
        let u = half_pi * t.sinh();
        let x = span / (1.0 + (-2.0 * u).exp());
        let w = span * half_pi * t.cosh() / (2.0 * u.cosh().powi(2));
        if !(w > 0.0) || !(x > 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let theta = lo + x;
        (f(theta) + f(-theta)) * w
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1usize;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut nodes = 2 * k - 1;
    let mut prev = sum * h;
    let mut level = 1u32;
    loop {
        h *= 0.5;
        level += 1;
        let mut k = 1usize;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        nodes += k - 1;
        let cur = sum * h;
        let change = (cur - prev).norm() / (2.0 * pi);
        if level >= MIN_LEVEL && change < TOL * (cur.norm() / (2.0 * pi)).max(1.0) {
            let v = cur / (2.0 * pi);
            return Ok(Quadrature {
                value: v.re,
                imag: v.im,
                change,
                nodes: 2 * nodes,
            });
        }
        if 2 * nodes > MAX_NODES {
            return Err(OracleError::NoConvergence {
                change,
                nodes: 2 * nodes,
            });
        }
        prev = cur;
    }
}

const SERIES_CUT: f64 = 1e-3;
const SERIES_ORDER: usize = 8;

/// (1/2π)∫_{|θ|<θ₀} e^{iθ}/(1−φ(θ)) dθ from the expansion
/// e^{iθ}/(1−φ) = θ^{1−a} h(θ), h analytic, on 0 < θ < θ₀.
fn inner_inverse_series(model: &Model, cut: f64) -> f64 {
    let a = model.a;
    let amp = (std::f64::consts::PI.sqrt() / 2.0) * crate::special::gamma(a - 0.5) / crate::special::gamma(a);
    // ln h(θ) = −ln A − i(a−2)(−π)/2 + iθ(1 − (a−2)/2) + (1−a) ln sinc(θ/2)
    let lead = Complex64::new(-amp.ln(), (a - 2.0) * std::f64::consts::PI / 2.0);
    // ln sinc(x) = −x²/6 − x⁴/180 − x⁶/2835 − x⁸/37800
    let sinc = [
        0.0,
        0.0,
        -1.0 / 24.0,
        0.0,
        -1.0 / 2880.0,
        0.0,
        -1.0 / 181_440.0,
        0.0,
        -1.0 / 9_676_800.0,
    ];
    let mut e = [Complex64::new(0.0, 0.0); SERIES_ORDER + 1];
    e[1] = Complex64::new(0.0, 1.0 - (a - 2.0) / 2.0);
    for j in 2..=SERIES_ORDER {
        e[j] += Complex64::new((1.0 - a) * sinc[j], 0.0);
    }
    let mut f = [Complex64::new(0.0, 0.0); SERIES_ORDER + 1];
    f[0] = Complex64::new(1.0, 0.0);
    for j in 1..=SERIES_ORDER {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 1..=j {
            acc += e[n] * f[j - n] * n as f64;
        }
        f[j] = acc / j as f64;
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (j, fj) in f.iter().enumerate() {
        let p = 2.0 - a + j as f64;
        total += fj * cut.powf(p) / p;
    }
    // The negative half contributes the conjugate.
    2.0 * (lead.exp() * total).re / (2.0 * std::f64::consts::PI)
}

/// P₁(W_k = 0) = P(ν-walk from 0 is at −1 after k steps), by Fourier inversion.
pub fn return_prob_quadrature(model: &Model, k: u64) -> Result<Quadrature, OracleError> {
    let kf = k as f64;
    circle_integral(|t| {
        let phi = model.char_fn(t);
        (phi.ln() * kf).exp() * Complex64::from_polar(1.0, t)
    })
}

/// Σ_{k>n} w^k/k, by whichever of the tail or the complementary partial sum is shorter.
fn log_tail(w: Complex64, n: u64) -> Complex64 {
    let r = w.norm();
    let direct_terms = if r < 1.0 { 42.0 / -r.ln() } else { f64::INFINITY };
    if direct_terms < n as f64 || r < 0.5 {
        // Terms past k shrink by r^k ≤ e^{−42} relative to the first.
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = (w.ln() * (n + 1) as f64).exp();
        for k in n + 1..=n + 1 + direct_terms.ceil() as u64 {
            acc += p / k as f64;
            p *= w;
        }
        return acc;
    }
    let mut partial = Complex64::new(0.0, 0.0);
    let mut p = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        p *= w;
        partial += p / k as f64;
    }
    -(Complex64::new(1.0, 0.0) - w).ln() - partial
}

/// E[1/P_n] = 2Σ_{k>n} P₁(W_k=0)/k in closed generating-function form.
pub fn exp_inv_p(model: &Model, n: u64) -> Result<Quadrature, OracleError> {
    let q = circle_integral(|t| {
        let one_minus = model.one_minus_char_fn(t);
        let phi = Complex64::new(1.0, 0.0) - one_minus;
        let tail = if n == 0 { -one_minus.ln() } else { log_tail(phi, n) };
        tail * Complex64::from_polar(2.0, t)
    })?;
    Ok(q)
}

/// ln(1 − x) without cancellation for small x.
fn ln_one_minus(x: Complex64) -> Complex64 {
    if x.norm() > 1e-3 {
        return (Complex64::new(1.0, 0.0) - x).ln();
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut p = x;
    for k in 1..=8 {
        acc -= p / k as f64;
        p *= x;
    }
    acc
}

/// Σ_{i<n} E[1/Pᵢ] = 2Σ_{k≤n} P₁(W_k=0) + n E[1/P_n], valid in both phases.
pub fn inverse_perimeter_sum(model: &Model, n: u64) -> Result<Quadrature, OracleError> {
    let nf = n as f64;
    circle_integral(|t| {
        let one_minus = model.one_minus_char_fn(t);
        let phi = Complex64::new(1.0, 0.0) - one_minus;
        let ln_phi = ln_one_minus(one_minus);
        // (1 − φⁿ)/(1 − φ) with 1 − φⁿ = −expm1(n ln φ)
        let z = ln_phi * nf;
        let expm1 = if z.norm() < 1e-5 {
            z + z * z / 2.0
        } else {
            z.exp() - 1.0
        };
        let partial = phi * (-expm1) / one_minus;
        let tail = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            log_tail(phi, n) * nf
        };
        (partial + tail) * Complex64::from_polar(2.0, t)
    })
}

/// Σ_{k>n} P₁(W_k=0), the expected number of returns after step n (dense only).
pub fn return_tail(model: &Model, n: u64) -> Result<Quadrature, OracleError> {
    if model.phase() != Phase::Dense {
        return Err(OracleError::NotDense);
    }
    circle_integral(|t| {
        let one_minus = model.one_minus_char_fn(t);
        let phi = Complex64::new(1.0, 0.0) - one_minus;
        (phi.ln() * (n + 1) as f64).exp() / one_minus * Complex64::from_polar(1.0, t)
    })
}

/// E[Σ_{i≥n} 1/(2P_i)] = Σ_{k>n} P₁(W_k=0)(1 − n/k) (dense only).
pub fn dfpp_remainder(model: &Model, n: u64) -> Result<Quadrature, OracleError> {
    if model.phase() != Phase::Dense {
        return Err(OracleError::NotDense);
    }
    let nf = n as f64;
    circle_integral(|t| {
        let one_minus = model.one_minus_char_fn(t);
        let phi = Complex64::new(1.0, 0.0) - one_minus;
        let geo = (phi.ln() * (n + 1) as f64).exp() / one_minus;
        let log = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            log_tail(phi, n)
        };
        (geo - log * nf) * Complex64::from_polar(1.0, t)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfppClosed {
    pub closed: f64,
    pub quadrature: Quadrature,
}

/// Closed form of E[d_fpp] together with (1/2π)∫ e^{iθ}/(1−φ(θ)) dθ.
pub fn e_dfpp_closed(model: &Model) -> Result<DfppClosed, OracleError> {
    let closed = model.derived_constants().e_dfpp.ok_or(OracleError::NotDense)?;
    let mut quadrature = outer_integral(
        |t| Complex64::from_polar(1.0, t) / model.one_minus_char_fn(t),
        SERIES_CUT,
    )?;
    quadrature.value += inner_inverse_series(model, SERIES_CUT);
    assert!(
        (quadrature.value - closed).abs() < 1e-6,
        "closed form {closed} disagrees with quadrature {}",
        quadrature.value
    );
    Ok(DfppClosed { closed, quadrature })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convolved {
    pub value: f64,
    /// Bound on the mass lost by truncating ν.
    pub truncation: f64,
}

/// P₁(W_k = 0) for k = 1..=k_max (k_max ≤ 8) by FFT convolution of ν
/// truncated to |x| < 2^19.
pub fn return_prob_convolution(model: &Model, k_max: usize) -> Vec<Convolved> {
    assert!((1..=8).contains(&k_max));
    let m: i64 = 1 << 19;
    let n: usize = 1 << 23;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let pos = model.nu_run(1, (m - 1) as usize, 1);
    let neg = model.nu_run(-1, (m - 1) as usize, -1);
    for (i, &v) in pos.iter().enumerate() {
        buf[i + 1] = Complex64::new(v, 0.0);
    }
    for (i, &v) in neg.iter().enumerate() {
        buf[n - 1 - i] = Complex64::new(v, 0.0);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let inverse = planner.plan_fft_inverse(n);
    let spectrum = buf;
    // A step beyond ±M must be compensated by the other k−1 steps, one of which
    // then exceeds M/(k−1) in the opposite direction.
    let truncation = |k: usize| -> f64 {
        if k == 1 {
            return 0.0;
        }
        let r = (k - 1) as f64;
        let far = |tail: f64| (r * tail).min(1.0);
        let reach = (m as f64 / r).floor().max(1.0) as i64;
        k as f64 * (model.nu_pmf(m) * far(model.nu_tail_neg(reach)) + model.nu_pmf(-m) * far(model.nu_tail(reach)))
    };
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut work: Vec<Complex64> = spectrum.iter().map(|z| z.powu(k as u32)).collect();
        inverse.process(&mut work);
        out.push(Convolved {
            value: work[n - 1].re / n as f64,
            truncation: truncation(k),
        });
    }
    out
}

/// Vertex-resolved disk weights W^(ℓ)_n for ℓ ≤ ℓ_max, n ≤ n_max.
#[derive(Debug, Clone)]
pub struct TutteTable {
    pub l_max: usize,
    pub n_max: usize,
    /// w[ℓ][n], ℓ up to n_max−1 internally, exposed up to ℓ_max.
    w: Vec<Vec<f64>>,
}

impl TutteTable {
    pub fn weight(&self, l: usize, n: usize) -> f64 {
        self.w[l][n]
    }

    /// Σ_{n ≤ n_max} W^(ℓ)_n.
    pub fn partial_sum(&self, l: usize) -> f64 {
        self.w[l].iter().sum()
    }

    /// Σ_{n ≤ n_max} n W^(ℓ)_n.
    pub fn partial_mean_sum(&self, l: usize) -> f64 {
        self.w[l].iter().enumerate().map(|(n, w)| n as f64 * w).sum()
    }

    /// Upper bound on Σ_{n > n_max} W^(ℓ)_n from the pointed partition function.
    pub fn remainder_bound(&self, model: &Model, l: usize) -> f64 {
        let pointed = (-(l as f64) * model.kappa.ln() + model.ln_h_down(l as i64)).exp();
        ((pointed - self.partial_mean_sum(l)) / (self.n_max + 1) as f64).max(0.0)
    }

    /// P(|B^(ℓ)| = n) for n ≤ n_max.
    pub fn volume_law(&self, model: &Model, l: usize) -> Vec<f64> {
        let z = model.disk_partition(l as i64);
        self.w[l].iter().map(|w| w / z).collect()
    }
}

pub fn tutte_enumerate(model: &Model, l_max: usize, n_max: usize) -> Result<TutteTable, OracleError> {
    if l_max > 8 || n_max > 12 || l_max + 1 > n_max {
        return Err(OracleError::Bounds(l_max, n_max));
    }
    let lcap = n_max;
    let mut w = vec![vec![0.0f64; n_max + 1]; lcap + 1];
    w[0][1] = 1.0;
    for n in 2..=n_max {
        // W^(L)_n vanishes for L ≥ n; fill L = n−1 down to 1.
        for l in (1..n).rev() {
            let mut acc = 0.0;
            for k in 2.. {
                let lk = l + k - 1;
                if lk >= n {
                    break;
                }
                acc += model.weight(k as i64) * w[lk][n];
            }
            for l1 in 0..l {
                let l2 = l - 1 - l1;
                for n1 in 1..n {
                    acc += w[l1][n1] * w[l2][n - n1];
                }
            }
            w[l][n] = acc;
        }
    }
    w.truncate(l_max.max(1) + 1);
    Ok(TutteTable { l_max, n_max, w })
}
