//! Uniform peeling with exponential clocks: first-passage percolation on the dual.

use thiserror::Error;

use crate::model::Phase;
use crate::oracle::{dfpp_remainder, e_dfpp_closed, return_tail, OracleError};
use crate::peel::{peel_step, PeelError, PeelState, VolumeMode, VolumeSampler};
use crate::sampler::{sample_exponential, Kernels, Rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdenError {
    #[error(transparent)]
    Volume(#[from] PeelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("the distance to infinity is finite only in the dense phase")]
    NotDense,
    #[error("growth records need the dilute phase")]
    NotDilute,
    #[error("replica {replica} used its budget of {budget} steps before time {t}")]
    StepBudget { replica: u64, budget: u64, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdenState {
    pub peel: PeelState,
    /// τ = tau + tau_lo, accumulated with compensated summation so that
    /// increments below ulp(tau) at huge perimeters are kept.
    pub tau: f64,
    pub tau_lo: f64,
}

impl Default for EdenState {
    fn default() -> Self {
        EdenState {
            peel: PeelState::default(),
            tau: 0.0,
            tau_lo: 0.0,
        }
    }
}

impl EdenState {
    pub fn time(&self) -> f64 {
        self.tau + self.tau_lo
    }

    fn advance(&mut self, dt: f64) {
        let s = self.tau + dt;
        let err = if self.tau.abs() >= dt.abs() {
            (self.tau - s) + dt
        } else {
            (dt - s) + self.tau
        };
        self.tau = s;
        self.tau_lo += err;
        let folded = self.tau + self.tau_lo;
        self.tau_lo -= folded - self.tau;
        self.tau = folded;
    }
}

/// Waits for the next clock among the 2P boundary edges, then peels.
pub fn eden_step(state: &mut EdenState, rng: &mut Rng, volumes: &mut VolumeSampler<'_>) -> Result<(), PeelError> {
    let rate = 2.0 * state.peel.p as f64;
    state.advance(sample_exponential(rng, rate).expect("positive rate"));
    peel_step(&mut state.peel, rng, volumes)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfppEstimate {
    /// Mean of τ_n plus the exact expected remainder.
    pub estimate: f64,
    pub mean_truncated: f64,
    pub se: f64,
    /// E[Σ_{i≥n} 1/(2Pᵢ)], added to the estimate.
    pub remainder: f64,
    /// Σ_{k>n} P₁(W_k = 0), which dominates the remainder.
    pub tail_bound: f64,
    pub closed: f64,
    pub replicas: u64,
    pub n_trunc: u64,
}

impl DfppEstimate {
    pub fn error_bound(&self) -> f64 {
        self.se + self.tail_bound
    }
}

/// Per-replica τ at step n_trunc, no volumes.
pub fn truncated_times(kernels: &Kernels, seed: u64, replicas: u64, n_trunc: u64) -> Vec<f64> {
    let mut volumes = VolumeSampler::new(kernels, VolumeMode::Skip);
    (0..replicas)
        .map(|r| {
            let mut rng = Rng::new(seed, r);
            let mut s = EdenState::default();
            while s.peel.i < n_trunc {
                eden_step(&mut s, &mut rng, &mut volumes).expect("volumes skipped");
            }
            s.time()
        })
        .collect()
}

pub fn summarize_dfpp(kernels: &Kernels, times: &[f64], n_trunc: u64) -> Result<DfppEstimate, EdenError> {
    let model = &kernels.model;
    let closed = e_dfpp_closed(model)?.closed;
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let remainder = dfpp_remainder(model, n_trunc)?.value;
    let tail_bound = return_tail(model, n_trunc)?.value;
    Ok(DfppEstimate {
        estimate: mean + remainder,
        mean_truncated: mean,
        se: (var / n).sqrt(),
        remainder,
        tail_bound,
        closed,
        replicas: times.len() as u64,
        n_trunc,
    })
}

pub fn estimate_dfpp(kernels: &Kernels, seed: u64, replicas: u64, n_trunc: u64) -> Result<DfppEstimate, EdenError> {
    if kernels.model.phase() != Phase::Dense {
        return Err(EdenError::NotDense);
    }
    let times = truncated_times(kernels, seed, replicas, n_trunc);
    summarize_dfpp(kernels, &times, n_trunc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdenRecord {
    pub replica: u64,
    /// Grid time crossed.
    pub t: f64,
    pub tau: f64,
    pub step: u64,
    pub p: i64,
    pub v: u128,
}

/// FPP times 2^j for j ≥ −4 up to t_max.
pub fn time_grid(t_max: f64) -> Vec<f64> {
    (-4..)
        .map(|j| 2f64.powi(j))
        .take_while(|&t| t <= t_max * (1.0 + 1e-12))
        .collect()
}

/// Records the state at the first jump time at or after each grid time.
pub fn run_eden_replica(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    replica: u64,
    t_max: f64,
    step_budget: u64,
) -> Result<Vec<EdenRecord>, EdenError> {
    let mut rng = Rng::new(seed, replica);
    let mut volumes = VolumeSampler::new(kernels, mode);
    let mut s = EdenState::default();
    let mut out = Vec::new();
    for t in time_grid(t_max) {
        while s.time() < t {
            if s.peel.i >= step_budget {
                return Err(EdenError::StepBudget {
                    replica,
                    budget: step_budget,
                    t,
                });
            }
            eden_step(&mut s, &mut rng, &mut volumes)?;
        }
        out.push(EdenRecord {
            replica,
            t,
            tau: s.time(),
            step: s.peel.i,
            p: s.peel.p,
            v: s.peel.v,
        });
    }
    Ok(out)
}

pub fn run_eden_dilute(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    replicas: u64,
    t_max: f64,
    step_budget: u64,
) -> Result<Vec<EdenRecord>, EdenError> {
    if kernels.model.phase() != Phase::Dilute {
        return Err(EdenError::NotDilute);
    }
    let mut out = Vec::new();
    for r in 0..replicas {
        out.extend(run_eden_replica(kernels, mode, seed, r, t_max, step_budget)?);
    }
    Ok(out)
}

/// Standardized clock increments 2Pᵢ(τᵢ₊₁ − τᵢ) along one trajectory.
pub fn standardized_increments(kernels: &Kernels, seed: u64, replica: u64, steps: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed, replica);
    let mut volumes = VolumeSampler::new(kernels, VolumeMode::Skip);
    let mut s = EdenState::default();
    (0..steps)
        .map(|_| {
            let (p, hi, lo) = (s.peel.p, s.tau, s.tau_lo);
            eden_step(&mut s, &mut rng, &mut volumes).expect("volumes skipped");
            2.0 * p as f64 * ((s.tau - hi) + (s.tau_lo - lo))
        })
        .collect()
}
