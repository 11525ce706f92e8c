//! Exact samplers for ν, the peeling kernels, exponential clocks and the
//! positive stable laws attached to large disks.

use std::sync::OnceLock;

use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::special::{ln_gamma, GammaProductSeries, GammaRatio};
use crate::Model;

/// Jumps are saturated here; perimeters beyond it are treated as escaped.
pub const JUMP_CAP: i64 = 1 << 62;

/// Largest half-perimeter served from a cached table.
pub const TABLE_MAX_PERIMETER: i64 = 256;

const NU_TABLE: usize = 1 << 16;
const KERNEL_TABLE: usize = 1 << 14;
const DISK_TABLE: usize = 1 << 12;
const DISK_TABLE_MAX_PERIMETER: i64 = 64;
const TABLE_MASS: f64 = 1.0 - 1e-9;
const SMALL: i64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("rate must be positive, got {0}")]
    BadRate(f64),
    #[error("stable index must lie in (0, 1), got {0}")]
    BadIndex(f64),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-replica generator keyed by (master seed, replica index).
#[derive(Clone, Debug)]
pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn new(seed: u64, index: u64) -> Self {
        let key = splitmix(seed ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Rng(Xoshiro256PlusPlus::seed_from_u64(key))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bit(&mut self) -> bool {
        self.0.next_u64() >> 63 == 1
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.0.try_fill_bytes(dest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeelEvent {
    /// A new face of degree 2k.
    NewFace(i64),
    /// A bubble of half-perimeter j swallowed on the left.
    GlueLeft(i64),
    GlueRight(i64),
}

impl PeelEvent {
    /// Change of the half-perimeter.
    pub fn jump(self) -> i64 {
        match self {
            PeelEvent::NewFace(k) => k - 1,
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => -(j + 1),
        }
    }

    fn from_jump(x: i64, left: bool) -> Self {
        if x > 0 {
            PeelEvent::NewFace(x.saturating_add(1))
        } else if left {
            PeelEvent::GlueLeft(-x - 1)
        } else {
            PeelEvent::GlueRight(-x - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiniteStep {
    Event(PeelEvent),
    /// The walk hit 0: the last bubble of half-perimeter ℓ−1 is swallowed
    /// and the marked vertex is reached.
    Absorbed,
}

/// One step of the unpointed disk decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskStep {
    /// New face: the hole grows by j ≥ 1.
    Grow(i64),
    /// Gluing splits the hole into two holes of half-perimeters (ℓ₁, ℓ₂), ℓ₁+ℓ₂ = ℓ−1.
    Split(i64, i64),
}

pub fn sample_exponential(rng: &mut Rng, rate: f64) -> Result<f64, SamplerError> {
    if !(rate > 0.0) {
        return Err(SamplerError::BadRate(rate));
    }
    Ok(-rng.uniform().ln() / rate)
}

/// Zolotarev's function for Kanter's representation.
fn kanter_a(alpha: f64, u: f64) -> f64 {
    ((alpha * u).sin().powf(alpha) * ((1.0 - alpha) * u).sin().powf(1.0 - alpha) / u.sin()).powf(1.0 / (1.0 - alpha))
}

/// X with E[e^{−λX}] = exp(−(scale·λ)^index).
pub fn sample_positive_stable(rng: &mut Rng, index: f64, scale: f64) -> Result<f64, SamplerError> {
    if !(index > 0.0 && index < 1.0) {
        return Err(SamplerError::BadIndex(index));
    }
    let u = std::f64::consts::PI * rng.uniform();
    let e = -rng.uniform().ln();
    Ok(scale * (kanter_a(index, u) / e).powf((1.0 - index) / index))
}

/// Positive stable law biased by 1/x: Y with E[f(Y)] = E[f(X)/X] / E[1/X].
#[derive(Clone, Debug)]
pub struct InverseBiasedStable {
    index: f64,
    scale: f64,
    gamma: Gamma<f64>,
    g_max: f64,
}

impl InverseBiasedStable {
    pub fn new(index: f64, scale: f64) -> Result<Self, SamplerError> {
        if !(index > 0.0 && index < 1.0) {
            return Err(SamplerError::BadIndex(index));
        }
        let beta = (1.0 - index) / index;
        let mut g_max: f64 = 0.0;
        for i in 0..=4096 {
            let u = std::f64::consts::PI * (i as f64 + 0.5) / 4097.0;
            g_max = g_max.max(Self::g(index, u));
        }
        Ok(InverseBiasedStable {
            index,
            scale,
            gamma: Gamma::new(1.0 + beta, 1.0).unwrap(),
            g_max: g_max * 1.05,
        })
    }

    // 1/X = E^β · g(U) in Kanter's representation.
    fn g(alpha: f64, u: f64) -> f64 {
        kanter_a(alpha, u).powf(-(1.0 - alpha) / alpha)
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let alpha = self.index;
        let u = loop {
            let u = std::f64::consts::PI * rng.uniform();
            let g = Self::g(alpha, u);
            debug_assert!(g <= self.g_max);
            if rng.uniform() * self.g_max <= g {
                break u;
            }
        };
        let e = self.gamma.sample(rng);
        self.scale * (kanter_a(alpha, u) / e).powf((1.0 - alpha) / alpha)
    }
}

/// Finds max{x ≥ lo : g(x) ≥ r} for a decreasing tail function g with
/// g(lo) ≥ r, g(x) ~ C x^p (p < 0). Saturates at the jump cap.
fn invert_tail(g: impl Fn(f64) -> f64, lo: f64, r: f64, p: f64) -> f64 {
    let cap = JUMP_CAP as f64;
    let g_lo = g(lo);
    if r > g_lo {
        return lo;
    }
    let guess = (lo * (r / g_lo).powf(1.0 / p)).clamp(lo, cap);
    let (mut a, mut b) = (lo, guess.max(lo + 1.0));
    // Expand upward until g(b) < r.
    while g(b) >= r {
        if b >= cap {
            return cap;
        }
        a = b;
        b = (b * 2.0).min(cap);
    }
    let mut lo_try = guess;
    while lo_try > a && g(lo_try) < r {
        b = lo_try;
        lo_try = (lo_try / 2.0).floor();
    }
    if lo_try > a && g(lo_try) >= r {
        a = lo_try;
    }
    while b - a > 1.0 && (b - a) > a * 1e-15 {
        let m = (0.5 * (a + b)).floor();
        let m = if m <= a { a + 1.0 } else { m };
        if g(m) >= r {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Law on x ≥ 1 with P(x) ∝ Γ(x+α)/Γ(x+β), β−α > 1; exact via table and
/// the telescoping tail Σ_{j≥x} = Γ(x+α)/((β−α−1)Γ(x+β−1)).
#[derive(Clone, Debug)]
pub struct TelescopingSampler {
    alpha: f64,
    beta: f64,
    tail_ratio: GammaRatio<f64>,
    ln_norm: f64,
    cdf: Vec<f64>,
    guide: Vec<u32>,
}

impl TelescopingSampler {
    pub fn new(alpha: f64, beta: f64, table: usize) -> Self {
        assert!(beta - alpha > 1.0);
        let tail_ratio = GammaRatio::new(alpha - beta + 1.0);
        let ln_norm = tail_ratio.ln_ratio(1.0 + beta - 1.0) - (beta - alpha - 1.0).ln();
        let ratio = GammaRatio::new(alpha - beta);
        let mut cdf = Vec::with_capacity(table);
        let mut acc = 0.0;
        for x in 1..=table {
            acc += (ratio.ln_ratio(x as f64 + beta) - ln_norm).exp();
            cdf.push(acc);
        }
        let guide = build_guide(&cdf);
        TelescopingSampler {
            alpha,
            beta,
            tail_ratio,
            ln_norm,
            cdf,
            guide,
        }
    }

    /// Normalized tail P(X ≥ x) for real x ≥ 1.
    pub fn tail(&self, x: f64) -> f64 {
        (self.tail_ratio.ln_ratio(x + self.beta - 1.0) - (self.beta - self.alpha - 1.0).ln() - self.ln_norm).exp()
    }

    pub fn sample_with(&self, u: f64) -> i64 {
        if let Some(i) = guided_search(&self.cdf, &self.guide, u) {
            return i as i64 + 1;
        }
        let k = self.cdf.len() as f64;
        let r = (1.0 - u).min(self.tail(k + 1.0));
        invert_tail(|x| self.tail(x), k + 1.0, r, self.alpha - self.beta + 1.0) as i64
    }

    pub fn sample(&self, rng: &mut Rng) -> i64 {
        self.sample_with(rng.uniform())
    }
}

fn build_guide(cdf: &[f64]) -> Vec<u32> {
    let n = cdf.len();
    let total = *cdf.last().unwrap_or(&0.0);
    let mut guide = Vec::with_capacity(n + 1);
    let mut i = 0usize;
    for g in 0..=n {
        let level = total * g as f64 / n as f64;
        while i < n && cdf[i] <= level {
            i += 1;
        }
        guide.push(i as u32);
    }
    guide
}

/// First index i with u < cdf[i], or None if u ≥ the table total.
#[inline]
fn guided_search(cdf: &[f64], guide: &[u32], u: f64) -> Option<usize> {
    let n = cdf.len();
    let total = cdf[n - 1];
    if u >= total {
        return None;
    }
    let g = ((u / total) * n as f64) as usize;
    let mut i = guide[g.min(n)] as usize;
    while cdf[i] <= u {
        i += 1;
    }
    Some(i)
}

/// Inverse-CDF sampler of ν.
#[derive(Clone, Debug)]
pub struct NuSampler {
    neg_mass: f64,
    pos: TelescopingSampler,
    neg: TelescopingSampler,
}

impl NuSampler {
    pub fn new(model: &Model) -> Self {
        let a = model.a;
        NuSampler {
            neg_mass: model.nu_tail_neg(1),
            pos: TelescopingSampler::new(1.5 - a, 1.5, NU_TABLE),
            neg: TelescopingSampler::new(-0.5, a - 0.5, NU_TABLE),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> i64 {
        let u = rng.uniform();
        if u < self.neg_mass {
            -self.neg.sample_with(u / self.neg_mass)
        } else {
            self.pos.sample_with((u - self.neg_mass) / (1.0 - self.neg_mass))
        }
    }
}

/// Cached exact CDF of an h-transformed kernel at one half-perimeter.
#[derive(Debug)]
struct JumpTable {
    /// Smallest jump in the table (negative side is contiguous up to −1).
    neg_len: usize,
    cdf: Vec<f64>,
    guide: Vec<u32>,
    table_total: f64,
    tail: GammaProductSeries<f64>,
    total: f64,
}

impl JumpTable {
    /// Jumps x ∈ [−neg_len, −1] ∪ [1, K] with weights w, then the series tail.
    fn build(
        neg: impl Iterator<Item = f64>,
        pos: impl Fn(i64) -> f64,
        tail: GammaProductSeries<f64>,
        max_pos: usize,
    ) -> Self {
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for w in neg {
            acc += w;
            cdf.push(acc);
        }
        let neg_len = cdf.len();
        let whole = 1.0;
        for x in 1..=max_pos as i64 {
            acc += pos(x);
            cdf.push(acc);
            if acc >= TABLE_MASS * whole {
                break;
            }
        }
        let k = (cdf.len() - neg_len) as f64;
        let table_total = acc;
        let total = table_total + tail.tail(k + 1.0);
        let guide = build_guide(&cdf);
        JumpTable {
            neg_len,
            cdf,
            guide,
            table_total,
            tail,
            total,
        }
    }

    fn sample(&self, rng: &mut Rng) -> i64 {
        let u = rng.uniform() * self.total;
        match guided_search(&self.cdf, &self.guide, u) {
            Some(i) if i < self.neg_len => -((self.neg_len - i) as i64),
            Some(i) => (i - self.neg_len + 1) as i64,
            None => {
                let k = (self.cdf.len() - self.neg_len) as f64;
                let r = (u - self.table_total).clamp(f64::MIN_POSITIVE, self.tail.tail(k + 1.0));
                let p = self.tail.power() + 1.0;
                invert_tail(|x| self.tail.tail(x.floor()), k + 1.0, r, p) as i64
            }
        }
    }

    /// Total mass before normalization (should be 1).
    fn mass(&self) -> f64 {
        self.total
    }
}

/// Kernels of the infinite peeling (h↑), the pointed disk (h↓) and the
/// unpointed disk decomposition, sharing one model and lazily filled caches.
#[derive(Debug)]
pub struct Kernels {
    pub model: Model,
    nu: NuSampler,
    // Γ(x+3/2−a)/Γ(x+1): envelope companion of ν for the large-ℓ h↑ kernel.
    envelope: TelescopingSampler,
    envelope_mass: f64,
    half: GammaRatio<f64>,
    // ln ν(x) for |x| ≤ SMALL, and ln Γ(x+3/2)/Γ(x+1) for 0 ≤ x ≤ SMALL.
    ln_nu_small: Vec<f64>,
    ln_g_small: Vec<f64>,
    up: Vec<OnceLock<JumpTable>>,
    down: Vec<OnceLock<JumpTable>>,
    disk: Vec<OnceLock<JumpTable>>,
}

impl Kernels {
    pub fn new(model: Model) -> Self {
        let a = model.a;
        let n = TABLE_MAX_PERIMETER as usize + 1;
        let dn = DISK_TABLE_MAX_PERIMETER as usize + 1;
        let half = GammaRatio::new(0.5);
        Kernels {
            ln_nu_small: (-SMALL..=SMALL)
                .map(|x| if x == 0 { f64::NEG_INFINITY } else { model.ln_nu(x) })
                .collect(),
            ln_g_small: (0..=SMALL).map(|x| half.ln_ratio(x as f64 + 1.0)).collect(),
            nu: NuSampler::new(&model),
            envelope: TelescopingSampler::new(1.5 - a, 1.0, NU_TABLE),
            envelope_mass: ln_gamma(2.5 - a).exp() / (a - 1.5),
            half,
            up: (0..n).map(|_| OnceLock::new()).collect(),
            down: (0..n).map(|_| OnceLock::new()).collect(),
            disk: (0..dn).map(|_| OnceLock::new()).collect(),
            model,
        }
    }

    pub fn sample_nu(&self, rng: &mut Rng) -> i64 {
        self.nu.sample(rng)
    }

    #[inline]
    fn ln_nu(&self, x: i64) -> f64 {
        if x.abs() <= SMALL {
            self.ln_nu_small[(x + SMALL) as usize]
        } else {
            self.model.ln_nu(x)
        }
    }

    #[inline]
    fn ln_g(&self, x: i64) -> f64 {
        if x <= SMALL {
            self.ln_g_small[x as usize]
        } else {
            self.half.ln_ratio(x as f64 + 1.0)
        }
    }

    fn ln_h_up(&self, l: f64) -> f64 {
        std::f64::consts::FRAC_2_SQRT_PI.ln() + self.half.ln_ratio(l)
    }

    fn ln_h_down(&self, l: f64) -> f64 {
        -0.5 * std::f64::consts::PI.ln() - self.half.ln_ratio(l + 0.5)
    }

    fn up_table(&self, l: i64) -> &JumpTable {
        self.up[l as usize].get_or_init(|| {
            let m = &self.model;
            let lh = m.ln_h_up(l);
            let neg = (1..l).map(|i| (m.ln_nu(-i) + m.ln_h_up(l - i) - lh).exp());
            let negs: Vec<f64> = neg.collect();
            let lf = l as f64;
            let tail = GammaProductSeries::new(
                m.c.ln() + std::f64::consts::FRAC_2_SQRT_PI.ln() - lh,
                &[(1.5 - m.a, 1.5), (lf + 0.5, lf)],
            );
            JumpTable::build(
                negs.into_iter().rev(),
                |x| (m.ln_nu(x) + m.ln_h_up(l + x) - lh).exp(),
                tail,
                KERNEL_TABLE,
            )
        })
    }

    fn down_table(&self, l: i64) -> &JumpTable {
        self.down[l as usize].get_or_init(|| {
            let m = &self.model;
            let lh = m.ln_h_down(l);
            let negs: Vec<f64> = (1..=l).map(|i| (m.ln_nu(-i) + m.ln_h_down(l - i) - lh).exp()).collect();
            let lf = l as f64;
            let tail = GammaProductSeries::new(
                m.c.ln() - 0.5 * std::f64::consts::PI.ln() - lh,
                &[(1.5 - m.a, 1.5), (lf + 0.5, lf + 1.0)],
            );
            JumpTable::build(
                negs.into_iter().rev(),
                |x| (m.ln_nu(x) + m.ln_h_down(l + x) - lh).exp(),
                tail,
                KERNEL_TABLE,
            )
        })
    }

    // Negative entries encode splits by the smaller part ℓ₁ = i−1, i ≤ m/2.
    fn disk_table(&self, l: i64) -> &JumpTable {
        self.disk[l as usize].get_or_init(|| {
            let m = &self.model;
            let mm = l + 1;
            let ln_norm = m.ln_nu(-mm);
            let half = mm / 2;
            let negs: Vec<f64> = (1..=half)
                .map(|i| {
                    let w = (m.ln_nu(-i) + m.ln_nu(-(mm - i)) - ln_norm).exp();
                    if 2 * i == mm {
                        0.5 * w
                    } else {
                        w
                    }
                })
                .collect();
            let mf = mm as f64;
            let tail = GammaProductSeries::new(
                m.c.ln() + (m.c / m.cos_pi_a()).ln() - ln_norm,
                &[(1.5 - m.a, 1.5), (mf - 0.5, mf + m.a - 0.5)],
            );
            JumpTable::build(
                negs.into_iter().rev(),
                |x| (m.ln_nu(x) + m.ln_nu(-mm - x) - ln_norm).exp(),
                tail,
                DISK_TABLE,
            )
        })
    }

    /// P(jump = x) for the h↑ walk from ℓ, glue sides merged.
    pub fn up_prob(&self, l: i64, x: i64) -> f64 {
        if x == 0 || l + x <= 0 {
            return 0.0;
        }
        let m = &self.model;
        (m.ln_nu(x) + m.ln_h_up(l + x) - m.ln_h_up(l)).exp()
    }

    /// P(jump = x) for the h↓ walk from ℓ; x = −ℓ is absorption.
    pub fn down_prob(&self, l: i64, x: i64) -> f64 {
        if x == 0 || l + x < 0 {
            return 0.0;
        }
        let m = &self.model;
        (m.ln_nu(x) + m.ln_h_down(l + x) - m.ln_h_down(l)).exp()
    }

    /// Probability of a disk step from a hole of half-perimeter ℓ, splits ordered.
    pub fn disk_prob(&self, l: i64, step: DiskStep) -> f64 {
        let m = &self.model;
        let ln_norm = m.ln_nu(-(l + 1));
        match step {
            DiskStep::Grow(j) if j >= 1 => (m.ln_nu(j) + m.ln_nu(-(l + 1) - j) - ln_norm).exp(),
            DiskStep::Split(a, b) if a >= 0 && b >= 0 && a + b == l - 1 => {
                0.5 * (m.ln_nu(-1 - a) + m.ln_nu(-1 - b) - ln_norm).exp()
            }
            _ => 0.0,
        }
    }

    /// Total mass of the cached h↑ kernel at ℓ (equals 1 by harmonicity).
    pub fn up_kernel_mass(&self, l: i64) -> f64 {
        self.up_table(l).mass()
    }

    pub fn down_kernel_mass(&self, l: i64) -> f64 {
        self.down_table(l).mass()
    }

    pub fn disk_kernel_mass(&self, l: i64) -> f64 {
        self.disk_table(l).mass()
    }

    /// Perimeter jump x of the h↑-transformed walk from ℓ (x ≥ 1 − ℓ, x ≠ 0).
    pub fn up_jump(&self, rng: &mut Rng, l: i64) -> i64 {
        debug_assert!(l >= 1);
        if l <= TABLE_MAX_PERIMETER {
            return self.up_table(l).sample(rng);
        }
        let lf = l as f64;
        let sl = lf.sqrt();
        let lh = self.ln_h_up(lf);
        // ρ = sup_m (h↑(m)/√m) / (h↑(ℓ)/√ℓ)
        let rho = (std::f64::consts::FRAC_2_SQRT_PI.ln() + 0.5 * lf.ln() - lh).exp();
        let w_env = self.model.c * self.envelope_mass / sl;
        loop {
            let x = if rng.uniform() * (1.0 + w_env) < 1.0 {
                self.nu.sample(rng)
            } else {
                self.envelope.sample(rng)
            };
            if x <= -l {
                continue;
            }
            let xf = x as f64;
            let extra = if x >= 1 { self.ln_g(x).exp() / sl } else { 0.0 };
            let accept = (self.ln_h_up(lf + xf) - lh).exp() / (rho * (1.0 + extra));
            debug_assert!(accept <= 1.0 + 1e-12, "envelope violated at ℓ={l}, x={x}");
            if rng.uniform() <= accept {
                return x;
            }
        }
    }

    pub fn peel_step_infinite(&self, rng: &mut Rng, l: i64) -> PeelEvent {
        let x = self.up_jump(rng, l);
        let left = x < 0 && rng.bit();
        PeelEvent::from_jump(x, left)
    }

    /// Jump of the h↓-transformed walk from ℓ ≥ 1 (x ≥ −ℓ, x ≠ 0).
    pub fn down_jump(&self, rng: &mut Rng, l: i64) -> i64 {
        debug_assert!(l >= 1);
        if l <= TABLE_MAX_PERIMETER {
            return self.down_table(l).sample(rng);
        }
        let lf = l as f64;
        let lh = self.ln_h_down(lf);
        let half = l / 2;
        let big = l - half;
        let r1 = (self.ln_h_down(big as f64) - lh).exp();
        let ln_nu_mid = self.ln_nu(-half - 1);
        let h_up_big = self.ln_h_up(big as f64);
        let mass_b = (ln_nu_mid + h_up_big - lh).exp();
        loop {
            let x = if rng.uniform() * (r1 + mass_b) < r1 {
                self.nu.sample(rng)
            } else {
                // m ∝ h↓(m) on [0, big): P(m ≤ j) = h↑(j+1)/h↑(big)
                let target = h_up_big + rng.uniform().ln();
                let j = invert_increasing(|y| self.ln_h_up(y), target, big);
                j - l
            };
            if x < -l {
                continue;
            }
            let xf = x as f64;
            let nu = self.ln_nu(x).exp();
            let ratio = (self.ln_h_down(lf + xf) - lh).exp();
            let mut env = r1 * nu;
            if x < -half {
                env += ln_nu_mid.exp() * ratio;
            }
            let accept = nu * ratio / env;
            debug_assert!(accept <= 1.0 + 1e-12);
            if rng.uniform() <= accept {
                return x;
            }
        }
    }

    pub fn peel_step_finite(&self, rng: &mut Rng, l: i64) -> FiniteStep {
        let x = self.down_jump(rng, l);
        if x == -l {
            return FiniteStep::Absorbed;
        }
        let left = x < 0 && rng.bit();
        FiniteStep::Event(PeelEvent::from_jump(x, left))
    }

    /// One step of the unpointed disk decomposition of a hole of half-perimeter ℓ ≥ 1.
    pub fn disk_step(&self, rng: &mut Rng, l: i64) -> DiskStep {
        debug_assert!(l >= 1);
        let mm = l + 1;
        let x = if l <= DISK_TABLE_MAX_PERIMETER {
            self.disk_table(l).sample(rng)
        } else {
            self.disk_jump_rejection(rng, mm)
        };
        if x > 0 {
            DiskStep::Grow(x)
        } else {
            let i = -x;
            let (small, large) = (i - 1, mm - i - 1);
            if small != large && rng.bit() {
                DiskStep::Split(large, small)
            } else {
                DiskStep::Split(small, large)
            }
        }
    }

    fn disk_jump_rejection(&self, rng: &mut Rng, mm: i64) -> i64 {
        let ln_norm = self.ln_nu(-mm);
        let ln_r = self.ln_nu(-(mm + 1) / 2) - ln_norm;
        loop {
            let x = self.nu.sample(rng);
            let ln_accept = if x > 0 {
                self.ln_nu((-mm).saturating_sub(x).max(-JUMP_CAP)) - ln_norm - ln_r
            } else {
                let i = -x;
                if 2 * i > mm {
                    continue;
                }
                let w = self.ln_nu(-(mm - i)) - ln_norm - ln_r;
                if 2 * i == mm {
                    w - std::f64::consts::LN_2
                } else {
                    w
                }
            };
            debug_assert!(ln_accept <= 1e-12);
            if rng.uniform().ln() <= ln_accept {
                return x;
            }
        }
    }
}

/// Smallest integer j ∈ [0, n) with f(j+1) ≥ target for increasing f.
fn invert_increasing(f: impl Fn(f64) -> f64, target: f64, n: i64) -> i64 {
    let (mut lo, mut hi) = (0i64, n - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if f((mid + 1) as f64) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}
