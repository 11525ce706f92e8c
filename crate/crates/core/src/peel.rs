//! Perimeter and volume chain of the infinite peeling, and Boltzmann disk volumes.

use thiserror::Error;

use crate::sampler::{DiskStep, FiniteStep, InverseBiasedStable, Kernels, PeelEvent, Rng, JUMP_CAP};
use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PeelError {
    #[error("volume of a disk with half-perimeter {perimeter} exceeded the budget of {budget} steps")]
    VolumeBudget { perimeter: i64, budget: u64 },
    #[error("volume stack for half-perimeter {perimeter} exceeded depth {depth}")]
    VolumeDepth { perimeter: i64, depth: usize },
}

/// How swallowed bubbles are filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeMode {
    /// Exact Boltzmann samples for every bubble.
    Exact,
    /// Bubbles with half-perimeter above the threshold use b_q j^{a−1/2} ξ.
    Shortcut { threshold: i64 },
    /// Volumes are not tracked (V stays 0).
    Skip,
}

#[derive(Debug, Clone, Copy)]
pub struct VolumeLimits {
    /// Disk steps allowed for one bubble.
    pub steps: u64,
    pub depth: usize,
}

impl Default for VolumeLimits {
    fn default() -> Self {
        VolumeLimits {
            steps: 1 << 40,
            depth: 1 << 24,
        }
    }
}

/// Samples volumes of Boltzmann disks for one model.
#[derive(Debug)]
pub struct VolumeSampler<'k> {
    pub kernels: &'k Kernels,
    pub mode: VolumeMode,
    pub limits: VolumeLimits,
    xi: InverseBiasedStable,
    b_q: f64,
    stack: Vec<i64>,
}

impl<'k> VolumeSampler<'k> {
    pub fn new(kernels: &'k Kernels, mode: VolumeMode) -> Self {
        let a = kernels.model.a;
        VolumeSampler {
            kernels,
            mode,
            limits: VolumeLimits::default(),
            xi: InverseBiasedStable::new(1.0 / (a - 0.5), gamma(a + 0.5)).unwrap(),
            b_q: 1.0 / gamma(a + 0.5),
            stack: Vec::new(),
        }
    }

    pub fn with_limits(mut self, limits: VolumeLimits) -> Self {
        self.limits = limits;
        self
    }

    /// Volume added by a swallowed bubble of half-perimeter j under the mode.
    pub fn bubble(&mut self, rng: &mut Rng, j: i64) -> Result<u128, PeelError> {
        match self.mode {
            VolumeMode::Skip => Ok(0),
            VolumeMode::Shortcut { threshold } if j > threshold => Ok(self.limit_law(rng, j)),
            _ => self.boltzmann_volume(rng, j),
        }
    }

    fn limit_law(&self, rng: &mut Rng, j: i64) -> u128 {
        let a = self.kernels.model.a;
        let v = self.b_q * (j as f64).powf(a - 0.5) * self.xi.sample(rng);
        (v.round().max(1.0)).min(u128::MAX as f64) as u128
    }

    /// Exact sample of the vertex count of a Boltzmann disk of half-perimeter ℓ.
    pub fn boltzmann_volume(&mut self, rng: &mut Rng, l: i64) -> Result<u128, PeelError> {
        let mut steps = 0;
        self.fill(rng, l, l, &mut steps)
    }

    fn fill(&mut self, rng: &mut Rng, l: i64, origin: i64, steps: &mut u64) -> Result<u128, PeelError> {
        assert!(l >= 0);
        let mut vol: u128 = 0;
        self.stack.clear();
        let mut hole = l;
        loop {
            if hole == 0 {
                vol += 1;
                match self.stack.pop() {
                    Some(h) => hole = h,
                    None => return Ok(vol),
                }
                continue;
            }
            self.tick(steps, origin)?;
            match self.kernels.disk_step(rng, hole) {
                DiskStep::Grow(j) => hole = hole.saturating_add(j).min(JUMP_CAP),
                DiskStep::Split(x, y) => {
                    let (small, large) = if x <= y { (x, y) } else { (y, x) };
                    if self.stack.len() >= self.limits.depth {
                        return Err(PeelError::VolumeDepth {
                            perimeter: origin,
                            depth: self.limits.depth,
                        });
                    }
                    self.stack.push(large);
                    hole = small;
                }
            }
        }
    }

    fn tick(&self, steps: &mut u64, origin: i64) -> Result<(), PeelError> {
        *steps += 1;
        if *steps > self.limits.steps {
            return Err(PeelError::VolumeBudget {
                perimeter: origin,
                budget: self.limits.steps,
            });
        }
        Ok(())
    }

    /// Vertex count of a Boltzmann disk pointed at a uniform vertex (size-biased
    /// law), driven by the h↓ walk with unpointed bubbles filled exactly.
    /// The step budget covers the whole sample; exceeding it implies V > budget/4.
    pub fn pointed_volume(&mut self, rng: &mut Rng, l: i64) -> Result<u128, PeelError> {
        assert!(l >= 0);
        let mut steps = 0;
        let mut vol: u128 = 0;
        let mut p = l;
        while p > 0 {
            self.tick(&mut steps, l)?;
            match self.kernels.peel_step_finite(rng, p) {
                FiniteStep::Absorbed => {
                    vol += self.fill(rng, p - 1, l, &mut steps)?;
                    p = 0;
                }
                FiniteStep::Event(e) => {
                    if let PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) = e {
                        vol += self.fill(rng, j, l, &mut steps)?;
                    }
                    p += e.jump();
                }
            }
        }
        Ok(vol + 1)
    }
}

/// State of the infinite peeling after i steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeelState {
    pub i: u64,
    pub p: i64,
    pub v: u128,
    /// The perimeter hit the jump cap at least once.
    pub saturated: bool,
}

impl Default for PeelState {
    fn default() -> Self {
        PeelState {
            i: 0,
            p: 1,
            v: 0,
            saturated: false,
        }
    }
}

impl PeelState {
    pub fn at(p: i64) -> Self {
        assert!(p >= 1);
        PeelState {
            p,
            ..Default::default()
        }
    }

    /// Applies one event; bubble volume supplied by the caller.
    pub fn apply(&mut self, event: PeelEvent, bubble: u128) {
        let x = event.jump();
        let next = self.p.saturating_add(x);
        if next >= JUMP_CAP {
            self.p = JUMP_CAP;
            self.saturated = true;
        } else {
            self.p = next;
        }
        assert!(self.p >= 1, "perimeter left the positive half-line");
        self.v = self.v.saturating_add(bubble);
        self.i += 1;
    }
}

pub fn peel_step(
    state: &mut PeelState,
    rng: &mut Rng,
    volumes: &mut VolumeSampler<'_>,
) -> Result<PeelEvent, PeelError> {
    let event = volumes.kernels.peel_step_infinite(rng, state.p);
    let bubble = match event {
        PeelEvent::NewFace(_) => 0,
        PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => volumes.bubble(rng, j)?,
    };
    state.apply(event, bubble);
    Ok(event)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeelRecord {
    pub replica: u64,
    pub step: u64,
    pub p: i64,
    pub v: u128,
}

/// 0, 1, 2, 4, ... up to n, plus n itself.
pub fn dyadic_checkpoints(n: u64) -> Vec<u64> {
    let mut out = vec![0];
    let mut c = 1;
    while c < n {
        out.push(c);
        c *= 2;
    }
    if n > 0 {
        out.push(n);
    }
    out
}

pub fn run_peel_replica(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    replica: u64,
    steps: u64,
) -> Result<Vec<PeelRecord>, PeelError> {
    let mut rng = Rng::new(seed, replica);
    let mut volumes = VolumeSampler::new(kernels, mode);
    let mut state = PeelState::default();
    let mut out = Vec::new();
    for c in dyadic_checkpoints(steps) {
        while state.i < c {
            peel_step(&mut state, &mut rng, &mut volumes)?;
        }
        out.push(PeelRecord {
            replica,
            step: c,
            p: state.p,
            v: state.v,
        });
    }
    Ok(out)
}

pub fn run_peel(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    steps: u64,
    replicas: u64,
) -> Result<Vec<PeelRecord>, PeelError> {
    let mut out = Vec::new();
    for r in 0..replicas {
        out.extend(run_peel_replica(kernels, mode, seed, r, steps)?);
    }
    Ok(out)
}
