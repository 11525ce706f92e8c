mod common;

use common::{chi2_gof, chi2_two_sample, mean_se};
use peelmap::sampler::{
    sample_exponential, sample_positive_stable, DiskStep, FiniteStep, InverseBiasedStable, Kernels, PeelEvent, Rng,
    SamplerError,
};
use peelmap::{make_special_model, Model};
use rand_core::RngCore;
use statrs::function::gamma::{gamma, gamma_ur, ln_gamma};

fn kernels(a: f64) -> Kernels {
    Kernels::new(make_special_model(a).unwrap())
}

/// ν(k) from statrs log-gamma, independent of the crate's evaluation.
fn nu_ref(m: &Model, k: i64) -> f64 {
    let a = m.a;
    let c = -std::f64::consts::PI.sqrt() / (2.0 * gamma(1.5 - a));
    if k > 0 {
        let k = k as f64;
        c * (ln_gamma(1.5 - a + k) - ln_gamma(1.5 + k)).exp()
    } else {
        let j = (-k) as f64;
        c / (std::f64::consts::PI * a).cos() * (ln_gamma(j - 0.5) - ln_gamma(j + a - 0.5)).exp()
    }
}

#[test]
fn rng_is_deterministic_per_index() {
    let mut a = Rng::new(42, 9);
    let mut b = Rng::new(42, 9);
    for _ in 0..100 {
        assert_eq!(a.next_u64(), b.next_u64());
    }
    let mut c = Rng::new(43, 9);
    assert_ne!(Rng::new(42, 9).next_u64(), c.next_u64());
}

#[test]
fn nu_minus_one_frequency() {
    let k = kernels(2.25);
    let mut rng = Rng::new(1, 0);
    let n = 1_000_000;
    let mut hits = 0u64;
    for _ in 0..n {
        let x = k.sample_nu(&mut rng);
        assert_ne!(x, 0);
        if x == -1 {
            hits += 1;
        }
    }
    let p = 2.0 / 7.0;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
}

#[test]
fn nu_tail_frequency() {
    let k = kernels(2.25);
    let mut rng = Rng::new(2, 0);
    let n = 10_000_000u64;
    let mut hits = 0u64;
    for _ in 0..n {
        if k.sample_nu(&mut rng) >= 1000 {
            hits += 1;
        }
    }
    let p = k.model.nu_tail(1000);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!(
        (hits as f64 / n as f64 - p).abs() < 3.0 * se,
        "{hits} vs {}",
        p * n as f64
    );
}

/// Independent ν sampler: scan on |k| ≤ K, Pareto proposals with rejection beyond.
struct RejectionNu {
    core: Vec<(i64, f64)>,
    tail_pos: f64,
    tail_neg: f64,
    k: i64,
    a: f64,
    bound_pos: f64,
    bound_neg: f64,
    model: Model,
}

impl RejectionNu {
    fn new(model: Model, k: i64) -> Self {
        let mut core = Vec::new();
        let mut acc = 0.0;
        for x in (-k..=k).filter(|&x| x != 0) {
            acc += nu_ref(&model, x);
            core.push((x, acc));
        }
        let a = model.a;
        let k1 = (k + 1) as f64;
        RejectionNu {
            tail_pos: model.nu_tail(k + 1),
            tail_neg: model.nu_tail_neg(k + 1),
            bound_pos: nu_ref(&model, k + 1) * (k1 + 1.0).powf(a) * (1.0 + 1e-9),
            bound_neg: nu_ref(&model, -k - 1) * (k1 + 1.0).powf(a) * (1.0 + 1e-9),
            core,
            k,
            a,
            model,
        }
    }

    fn pareto_tail(&self, rng: &mut Rng, sign: i64, bound: f64) -> i64 {
        let xm = (self.k + 1) as f64;
        loop {
            let y = xm * rng.uniform().powf(-1.0 / (self.a - 1.0));
            if y > 1e15 {
                continue;
            }
            let j = y.floor();
            let q = (self.a - 1.0) * xm.powf(self.a - 1.0) * (j + 1.0).powf(-self.a);
            let target = nu_ref(&self.model, sign * j as i64);
            let ratio = target / (q * bound / (self.a - 1.0) / xm.powf(self.a - 1.0));
            assert!(ratio <= 1.0 + 1e-9);
            if rng.uniform() <= ratio {
                return sign * j as i64;
            }
        }
    }

    fn sample(&self, rng: &mut Rng) -> i64 {
        let u = rng.uniform();
        let core_mass = self.core.last().unwrap().1;
        if u < core_mass {
            let i = self.core.partition_point(|&(_, c)| c <= u);
            return self.core[i].0;
        }
        if u < core_mass + self.tail_neg {
            self.pareto_tail(rng, -1, self.bound_neg)
        } else {
            let _ = self.tail_pos;
            self.pareto_tail(rng, 1, self.bound_pos)
        }
    }
}

fn nu_bin(x: i64) -> usize {
    // 40 central values, then dyadic tail bins on each side.
    if x.abs() <= 20 {
        (x + 20) as usize
    } else {
        let b = 63 - (x.unsigned_abs()).leading_zeros() as usize;
        if x > 0 {
            41 + b
        } else {
            105 + b
        }
    }
}

#[test]
fn inverse_cdf_matches_independent_rejection_sampler() {
    for &a in &[1.6, 2.25] {
        let k = kernels(a);
        let rej = RejectionNu::new(k.model.clone(), 64);
        let mut r1 = Rng::new(11, 0);
        let mut r2 = Rng::new(11, 1);
        let (mut c1, mut c2) = (vec![0u64; 170], vec![0u64; 170]);
        for _ in 0..1_000_000 {
            c1[nu_bin(k.sample_nu(&mut r1))] += 1;
            c2[nu_bin(rej.sample(&mut r2))] += 1;
        }
        let p = chi2_two_sample(&c1, &c2);
        assert!(p > 0.001, "a={a}: p={p}");
    }
}

#[test]
fn up_kernel_normalized() {
    for &a in &[1.6, 1.75, 2.25, 2.4] {
        let k = kernels(a);
        for l in 1..=128 {
            let m = k.up_kernel_mass(l);
            assert!((m - 1.0).abs() < 1e-10, "a={a} ℓ={l}: {m}");
        }
    }
}

#[test]
fn down_kernel_normalized() {
    for &a in &[1.6, 2.25] {
        let k = kernels(a);
        for l in 1..=32 {
            let m = k.down_kernel_mass(l);
            assert!((m - 1.0).abs() < 1e-10, "a={a} ℓ={l}: {m}");
        }
    }
}

#[test]
fn disk_kernel_normalized() {
    for &a in &[1.6, 2.25] {
        let k = kernels(a);
        for l in 1..=64 {
            let m = k.disk_kernel_mass(l);
            assert!((m - 1.0).abs() < 1e-10, "a={a} ℓ={l}: {m}");
        }
    }
}

#[test]
fn down_weight_at_one() {
    let k = kernels(2.25);
    let p = k.down_prob(1, -1);
    assert!((p - 2.0 * k.model.nu_pmf(-1)).abs() < 1e-14);
}

#[test]
fn infinite_step_from_one_is_new_face() {
    let k = kernels(2.25);
    let mut rng = Rng::new(3, 0);
    for _ in 0..100_000 {
        assert!(matches!(k.peel_step_infinite(&mut rng, 1), PeelEvent::NewFace(_)));
    }
}

/// Bins: each negative jump, each positive jump ≤ 60, dyadic bins up to 2^16, remainder.
fn jump_bin(x: i64, l: i64) -> usize {
    let base = (l - 1) as usize;
    if x < 0 {
        (x + l - 1) as usize
    } else if x <= 60 {
        base + (x - 1) as usize
    } else if x < 1 << 16 {
        let b = 63 - x.leading_zeros() as usize;
        base + 60 + (b - 5)
    } else {
        base + 60 + 11
    }
}

fn check_up_kernel(k: &Kernels, l: i64, seed: u64, n: usize) {
    let nbins = (l - 1) as usize + 72;
    let mut probs = vec![0.0; nbins];
    for x in (1 - l)..(1 << 16) {
        if x != 0 {
            probs[jump_bin(x, l)] += k.up_prob(l, x);
        }
    }
    probs[nbins - 1] = 1.0 - probs[..nbins - 1].iter().sum::<f64>();
    let mut rng = Rng::new(seed, l as u64);
    let mut counts = vec![0u64; nbins];
    for _ in 0..n {
        let x = k.up_jump(&mut rng, l);
        assert!(x != 0 && x > -l);
        counts[jump_bin(x, l)] += 1;
    }
    let pv = chi2_gof(&counts, &probs);
    assert!(pv > 0.001, "ℓ={l}: p={pv}");
}

#[test]
fn up_kernel_matches_table_at_five() {
    check_up_kernel(&kernels(2.25), 5, 21, 1_000_000);
}

#[test]
fn up_kernel_rejection_branch_matches_exact_law() {
    let k = kernels(2.25);
    check_up_kernel(&k, 300, 22, 400_000);
    let k = kernels(1.6);
    check_up_kernel(&k, 1000, 23, 400_000);
}

#[test]
fn glue_jumps_dominated_by_nu() {
    let k = kernels(2.25);
    for &l in &[2i64, 8, 32] {
        let mut rng = Rng::new(5, l as u64);
        let n = 400_000;
        let mut counts = vec![0u64; l as usize];
        for _ in 0..n {
            let x = k.up_jump(&mut rng, l);
            if x < 0 {
                counts[(-x) as usize] += 1;
            }
        }
        for j in 1..l {
            assert!(k.up_prob(l, -j) <= k.model.nu_pmf(-j) * (1.0 + 1e-12));
            let p = k.model.nu_pmf(-j);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[j as usize] as f64 / n as f64) <= p + 3.0 * se);
        }
    }
}

#[test]
fn glue_sides_symmetric() {
    let k = kernels(1.75);
    let mut rng = Rng::new(6, 0);
    let l = 6;
    let (mut left, mut right) = (vec![0f64; 8], vec![0f64; 8]);
    for _ in 0..1_000_000 {
        match k.peel_step_infinite(&mut rng, l) {
            PeelEvent::GlueLeft(j) => left[j as usize] += 1.0,
            PeelEvent::GlueRight(j) => right[j as usize] += 1.0,
            PeelEvent::NewFace(_) => {}
        }
    }
    for j in 0..=(l - 2) as usize {
        let d = left[j] - right[j];
        let se = (left[j] + right[j]).sqrt();
        assert!(d.abs() < 3.0 * se.max(1.0), "j={j}: {} vs {}", left[j], right[j]);
    }
}

fn check_down_kernel(k: &Kernels, l: i64, seed: u64, n: usize) {
    let mut probs: Vec<f64> = (-l..=40).filter(|&x| x != 0).map(|x| k.down_prob(l, x)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let mut counts = vec![0u64; probs.len()];
    let mut rng = Rng::new(seed, l as u64);
    for _ in 0..n {
        let x = k.down_jump(&mut rng, l);
        assert!(x != 0 && x >= -l);
        let b = if x > 40 {
            probs.len() - 1
        } else if x < 0 {
            (x + l) as usize
        } else {
            (x + l - 1) as usize
        };
        counts[b] += 1;
    }
    let pv = chi2_gof(&counts, &probs);
    assert!(pv > 0.001, "ℓ={l}: p={pv}");
}

#[test]
fn down_kernel_table_and_rejection_match_exact_law() {
    let k = kernels(2.25);
    check_down_kernel(&k, 3, 31, 500_000);
    check_down_kernel(&k, 400, 32, 300_000);
    let k = kernels(1.6);
    check_down_kernel(&k, 7, 33, 500_000);
    check_down_kernel(&k, 301, 34, 300_000);
}

#[test]
fn finite_walk_from_one_is_absorbed() {
    // The hitting time has a tail of order n^{-1/(a-1)}, so a handful of the
    // 10^5 walks may exceed 10^7 steps; every walk must still be absorbed.
    let k = kernels(2.25);
    let mut long = 0;
    for r in 0..100_000u64 {
        let mut rng = Rng::new(8, r);
        let mut l = 1i64;
        let mut steps = 0u64;
        loop {
            match k.peel_step_finite(&mut rng, l) {
                FiniteStep::Absorbed => break,
                FiniteStep::Event(e) => l += e.jump(),
            }
            assert!(l >= 1);
            steps += 1;
            assert!(steps < 1_000_000_000);
        }
        if steps >= 10_000_000 {
            long += 1;
        }
    }
    assert!(long <= 3, "{long} walks beyond 10^7 steps");
}

fn check_disk_kernel(k: &Kernels, l: i64, seed: u64, n: usize) {
    let mut probs: Vec<f64> = (0..l).map(|a| k.disk_prob(l, DiskStep::Split(a, l - 1 - a))).collect();
    probs.extend((1..=40).map(|j| k.disk_prob(l, DiskStep::Grow(j))));
    probs.push(1.0 - probs.iter().sum::<f64>());
    let mut counts = vec![0u64; probs.len()];
    let mut rng = Rng::new(seed, l as u64);
    for _ in 0..n {
        let b = match k.disk_step(&mut rng, l) {
            DiskStep::Split(a, b) => {
                assert_eq!(a + b, l - 1);
                a as usize
            }
            DiskStep::Grow(j) if j <= 40 => (l + j - 1) as usize,
            DiskStep::Grow(_) => probs.len() - 1,
        };
        counts[b] += 1;
    }
    let pv = chi2_gof(&counts, &probs);
    assert!(pv > 0.001, "ℓ={l}: p={pv}");
}

#[test]
fn disk_kernel_matches_exact_law() {
    let k = kernels(2.25);
    check_disk_kernel(&k, 1, 41, 300_000);
    check_disk_kernel(&k, 6, 42, 300_000);
    check_disk_kernel(&k, 100, 43, 300_000);
    let k = kernels(1.6);
    check_disk_kernel(&k, 9, 44, 300_000);
    check_disk_kernel(&k, 129, 45, 300_000);
}

#[test]
fn exponential_moments() {
    let mut rng = Rng::new(9, 0);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| sample_exponential(&mut rng, 2.0).unwrap())
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 0.5).abs() < 3.0 * se);
    let ys: Vec<f64> = (0..1_000_000)
        .map(|_| (sample_exponential(&mut rng, 1.0).unwrap() > 1.0) as u8 as f64)
        .collect();
    let (m, se) = mean_se(&ys);
    assert!((m - (-1.0f64).exp()).abs() < 3.0 * se);
    let mut r1 = Rng::new(4, 4);
    let mut r2 = r1.clone();
    assert_eq!(sample_exponential(&mut r1, 3.0), sample_exponential(&mut r2, 3.0));
    assert_eq!(sample_exponential(&mut r1, 0.0), Err(SamplerError::BadRate(0.0)));
    assert!(sample_exponential(&mut r1, -1.0).is_err());
}

#[test]
fn positive_stable_laplace_and_inverse_mean() {
    let a = 2.25f64;
    let index = 1.0 / (a - 0.5);
    let scale = gamma(a + 0.5);
    let mut rng = Rng::new(10, 0);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| sample_positive_stable(&mut rng, index, scale).unwrap())
        .collect();
    assert!(xs.iter().all(|&x| x > 0.0));
    let lt: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
    let (m, se) = mean_se(&lt);
    assert!((m - (-scale.powf(index)).exp()).abs() < 3.0 * se);
    let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
    let (m, se) = mean_se(&inv);
    assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    assert!(sample_positive_stable(&mut rng, 1.0, 1.0).is_err());
}

#[test]
fn inverse_biased_stable_laws() {
    for &a in &[1.75f64, 2.25] {
        let alpha = 1.0 / (a - 0.5);
        let s = gamma(a + 0.5);
        let sampler = InverseBiasedStable::new(alpha, s).unwrap();
        let mut rng = Rng::new(12, 0);
        let ys: Vec<f64> = (0..1_000_000).map(|_| sampler.sample(&mut rng)).collect();
        // E[e^{−Y}] = ∫_1^∞ exp(−(sλ)^α) dλ
        let want = gamma(1.0 / alpha) * gamma_ur(1.0 / alpha, s.powf(alpha)) / (alpha * s);
        let (m, se) = mean_se(&ys.iter().map(|y| (-y).exp()).collect::<Vec<_>>());
        assert!((m - want).abs() < 3.0 * se, "a={a}: {m} vs {want}");
        // E[1/Y] = ∫_0^∞ λ exp(−(sλ)^α) dλ
        let want = gamma(2.0 / alpha) / (alpha * s * s);
        let (m, se) = mean_se(&ys.iter().map(|y| 1.0 / y).collect::<Vec<_>>());
        assert!((m - want).abs() < 3.0 * se, "a={a}: {m} vs {want}");
    }
}
