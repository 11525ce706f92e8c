//! The special critical weight sequence, its step law ν, the harmonic
//! functions h↑/h↓ and the closed-form constants attached to them.

use num_complex::Complex;
use thiserror::Error;

use crate::special::{gamma, GammaProductSeries, GammaRatio};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Dilute,
    Dense,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a = {0} lies outside (3/2, 5/2)")]
    OutOfRange(f64),
    #[error("a = 2 is the critical boundary case and is not supported")]
    Critical,
}

#[inline]
fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// One critical weight sequence q_k = c κ^{k−1} Γ(1/2−a+k)/Γ(1/2+k) 1_{k≥2}.
#[derive(Clone, Debug)]
pub struct ModelParams<T: Real> {
    pub a: T,
    pub c: T,
    pub kappa: T,
    cos_pi_a: T,
    // Γ(y−a)/Γ(y): shared by both sides of ν.
    step: GammaRatio<T>,
    // Γ(y+1/2)/Γ(y): h↑ and h↓.
    half: GammaRatio<T>,
    // Γ(y+1−a)/Γ(y): tails of ν.
    tail: GammaRatio<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants<T> {
    pub p_q: T,
    pub b_q: T,
    pub v_q: T,
    /// Face-count analogue of b_q.
    pub b_q_faces: T,
    pub dim_a: Option<T>,
    pub perimeter_exponent: Option<T>,
    pub a_q: Option<T>,
    pub h_q: Option<T>,
    pub e_dfpp: Option<T>,
}

pub fn make_special_model<T: Real>(a: T) -> Result<ModelParams<T>, ModelError> {
    let af = a.to_f64().unwrap_or(f64::NAN);
    if !(af > 1.5 && af < 2.5) {
        return Err(ModelError::OutOfRange(af));
    }
    if af == 2.0 {
        return Err(ModelError::Critical);
    }
    let half = lit::<T>(0.5);
    let kappa = (lit::<T>(4.0) * a - lit(2.0)).recip();
    // −√π/(2Γ(3/2−a)) rewritten with Γ(5/2−a) to keep the argument positive.
    let c = T::PI().sqrt() * (a - lit(1.5)) / (lit::<T>(2.0) * gamma(lit::<T>(2.5) - a));
    Ok(ModelParams {
        a,
        c,
        kappa,
        cos_pi_a: (T::PI() * a).cos(),
        step: GammaRatio::new(-a),
        half: GammaRatio::new(half),
        tail: GammaRatio::new(T::one() - a),
    })
}

impl<T: Real> ModelParams<T> {
    pub fn phase(&self) -> Phase {
        if self.a > lit(2.0) {
            Phase::Dilute
        } else {
            Phase::Dense
        }
    }

    pub fn cos_pi_a(&self) -> T {
        self.cos_pi_a
    }

    /// q_k; zero for k ≤ 1.
    pub fn weight(&self, k: i64) -> T {
        if k < 2 {
            return T::zero();
        }
        (self.ln_nu(k - 1) + lit::<T>((k - 1) as f64) * self.kappa.ln()).exp()
    }

    /// ln ν(k) for k ≠ 0.
    pub fn ln_nu(&self, k: i64) -> T {
        let three_halves = lit::<T>(1.5);
        if k > 0 {
            self.c.ln() + self.step.ln_ratio(lit::<T>(k as f64) + three_halves)
        } else {
            assert!(k < 0, "ν(0) = 0 has no logarithm");
            let m = lit::<T>((-k) as f64);
            (self.c / self.cos_pi_a).ln() + self.step.ln_ratio(m + self.a - lit(0.5))
        }
    }

    /// ν(k) = c Γ(3/2−a+k)/Γ(3/2+k) for k ≠ 0.
    pub fn nu_pmf(&self, k: i64) -> T {
        if k == 0 {
            T::zero()
        } else {
            self.ln_nu(k).exp()
        }
    }

    /// ν(k+1)/ν(k), valid for k ≥ 1 and k ≤ −2.
    pub fn nu_ratio(&self, k: i64) -> T {
        T::one() - self.a / (lit::<T>(k as f64) + lit(1.5))
    }

    /// ν(start), ν(start+dir), ... (n values, dir = ±1) by the ratio
    /// recurrence, accumulated in log space with compensation.
    pub fn nu_run(&self, start: i64, n: usize, dir: i64) -> Vec<T> {
        assert!(dir == 1 || dir == -1);
        let last = start + dir * (n as i64 - 1).max(0);
        assert!((start > 0 && last > 0) || (start < 0 && last < 0), "run crosses k = 0");
        let base = self.ln_nu(start);
        let (mut sum, mut comp) = (T::zero(), T::zero());
        let mut out = Vec::with_capacity(n);
        let mut k = start;
        for _ in 0..n {
            out.push((base + sum).exp());
            let step = if dir == 1 {
                (-self.a / (lit::<T>(k as f64) + lit(1.5))).ln_1p()
            } else {
                -(-self.a / (lit::<T>((k - 1) as f64) + lit(1.5))).ln_1p()
            };
            let y = step - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            k += dir;
        }
        out
    }

    /// Σ_{j≥k} ν(j) for k ≥ 1.
    pub fn nu_tail(&self, k: i64) -> T {
        assert!(k >= 1);
        let y = lit::<T>(k as f64) + lit(0.5);
        self.c / (self.a - T::one()) * self.tail.ln_ratio(y).exp()
    }

    /// Σ_{j≤−k} ν(j) for k ≥ 1.
    pub fn nu_tail_neg(&self, k: i64) -> T {
        assert!(k >= 1);
        let y = lit::<T>(k as f64) + self.a - lit(1.5);
        self.c / (self.cos_pi_a * (self.a - T::one())) * self.tail.ln_ratio(y).exp()
    }

    pub fn ln_h_up(&self, l: i64) -> T {
        assert!(l >= 1);
        lit::<T>(2.0).ln() - lit::<T>(0.5) * T::PI().ln() + self.half.ln_ratio(lit(l as f64))
    }

    /// h↑(ℓ) = 2ℓ 2^{−2ℓ} C(2ℓ, ℓ), zero for ℓ ≤ 0.
    pub fn h_up(&self, l: i64) -> T {
        if l <= 0 {
            T::zero()
        } else {
            self.ln_h_up(l).exp()
        }
    }

    pub fn ln_h_down(&self, l: i64) -> T {
        assert!(l >= 0);
        -lit::<T>(0.5) * T::PI().ln() - self.half.ln_ratio(lit::<T>(l as f64) + lit(0.5))
    }

    /// h↓(ℓ) = 2^{−2ℓ} C(2ℓ, ℓ), zero for ℓ < 0.
    pub fn h_down(&self, l: i64) -> T {
        if l < 0 {
            T::zero()
        } else {
            self.ln_h_down(l).exp()
        }
    }

    pub fn ln_disk_partition(&self, l: i64) -> T {
        assert!(l >= 0);
        self.ln_nu(-1 - l) - lit::<T>((l + 1) as f64) * self.kappa.ln() - lit::<T>(2.0).ln()
    }

    /// W^(ℓ) = ν(−1−ℓ) κ^{−1−ℓ} / 2.
    pub fn disk_partition(&self, l: i64) -> T {
        self.ln_disk_partition(l).exp()
    }

    /// E|B^(ℓ)| = κ^{−ℓ} h↓(ℓ) / W^(ℓ).
    pub fn exact_mean_volume(&self, l: i64) -> T {
        assert!(l >= 0);
        ((lit::<T>(2.0) * self.kappa).ln() + self.ln_h_down(l) - self.ln_nu(-1 - l)).exp()
    }

    fn branch_amplitude(&self) -> T {
        T::PI().sqrt() / lit(2.0) * gamma(self.a - lit(0.5)) / gamma(self.a)
    }

    /// 1 − φ(θ), computed without cancellation near θ = 0.
    pub fn one_minus_char_fn(&self, theta: T) -> Complex<T> {
        let s = (theta / lit(2.0)).sin();
        let two_s2 = lit::<T>(2.0) * s * s;
        if two_s2 == T::zero() && theta.sin() == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        // 1 − e^{±iθ} = 2 sin²(θ/2) ∓ i sin θ
        let plus = Complex::new(two_s2, -theta.sin());
        let minus = Complex::new(two_s2, theta.sin());
        let e = self.a - lit(1.5);
        let lp = plus.ln() * e + minus.ln() * lit::<T>(0.5);
        lp.exp() * self.branch_amplitude()
    }

    /// φ(θ) = Σ_k ν(k) e^{ikθ}.
    pub fn char_fn(&self, theta: T) -> Complex<T> {
        Complex::new(T::one(), T::zero()) - self.one_minus_char_fn(theta)
    }

    pub fn derived_constants(&self) -> DerivedConstants<T> {
        let a = self.a;
        let half = lit::<T>(0.5);
        let p_q = self.c.powf((a - T::one()).recip());
        let b_q = gamma(a + half).recip();
        let v_q = b_q * p_q.powf(a - half);
        let b_q_faces = ((lit::<T>(4.0) * self.kappa).recip() - T::one()) * b_q;
        let (mut dim_a, mut perimeter_exponent, mut a_q, mut h_q, mut e_dfpp) = (None, None, None, None, None);
        match self.phase() {
            Phase::Dilute => {
                let two = lit::<T>(2.0);
                dim_a = Some((a - half) / (a - two));
                perimeter_exponent = Some((a - two).recip());
                let aq = T::one() + (lit::<T>(4.0) * (a - two)).recip();
                a_q = Some(aq);
                h_q = Some(aq / (two * p_q));
            }
            Phase::Dense => {
                let pa = T::PI() * a;
                let cot = pa.cos() / pa.sin();
                e_dfpp = Some(cot / T::PI() * (a - T::one()) / ((a - lit(2.5)) * (a - lit(1.5))));
            }
        }
        DerivedConstants {
            p_q,
            b_q,
            v_q,
            b_q_faces,
            dim_a,
            perimeter_exponent,
            a_q,
            h_q,
            e_dfpp,
        }
    }

    /// (Σ_{k<0} ν(k)h↑(ℓ+k), Σ_{k>0} ν(k)h↑(ℓ+k)), the second with an analytic tail.
    pub fn harmonic_sums(&self, l: i64) -> (T, T) {
        assert!(l >= 1);
        let mut neg = T::zero();
        for k in (1 - l..=-1).rev() {
            neg = neg + (self.ln_nu(k) + self.ln_h_up(l + k)).exp();
        }
        let half = lit::<T>(0.5);
        let lf = lit::<T>(l as f64);
        let ln_c = self.c.ln() + lit::<T>(2.0).ln() - half * T::PI().ln();
        let series = GammaProductSeries::new(ln_c, &[(lit::<T>(1.5) - self.a, lit(1.5)), (lf + half, lf)]);
        (neg, series.tail(T::one()))
    }

    /// Relative residuals |Σ_k h↑(ℓ+k)ν(k) − h↑(ℓ)| / h↑(ℓ) for ℓ = 1..=ℓ_max.
    pub fn check_criticality(&self, l_max: i64) -> Vec<T> {
        (1..=l_max)
            .map(|l| {
                let (neg, pos) = self.harmonic_sums(l);
                let h = self.h_up(l);
                ((neg + pos - h) / h).abs()
            })
            .collect()
    }
}
