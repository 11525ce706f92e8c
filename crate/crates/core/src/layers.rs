//! Peeling by layers: the (P, D, H) chain whose completed layers are hull balls
//! for the dual graph distance.

use thiserror::Error;

use crate::model::Phase;
use crate::peel::{PeelError, PeelState, VolumeMode, VolumeSampler};
use crate::sampler::{Kernels, PeelEvent, Rng};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayerError {
    #[error(transparent)]
    Volume(#[from] PeelError),
    #[error("replica {replica} used its budget of {budget} steps at radius {reached}")]
    StepBudget { replica: u64, budget: u64, reached: u64 },
    #[error("replica {replica} hit the perimeter cap at radius {reached}")]
    PerimeterCap { replica: u64, reached: u64 },
    #[error("height growth check needs the dilute phase")]
    NotDilute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerState {
    pub peel: PeelState,
    /// Boundary edges at the current minimal height.
    pub d: i64,
    pub h: u64,
}

impl Default for LayerState {
    fn default() -> Self {
        LayerState {
            peel: PeelState::default(),
            d: 2,
            h: 0,
        }
    }
}

impl LayerState {
    pub fn p(&self) -> i64 {
        self.peel.p
    }
}

/// Routes a peeling event from (p, d) to the next (d, height increment).
/// Glue events swallow k = j+1 half-edges pairs; "right" is the side of the
/// edges still at the minimal height, "left" the side already one layer out.
pub fn route(p: i64, d: i64, event: PeelEvent) -> (i64, u64) {
    let next_p = p + event.jump();
    if d == 1 {
        return (2 * next_p, 1);
    }
    match event {
        PeelEvent::NewFace(_) => (d - 1, 0),
        PeelEvent::GlueRight(j) => {
            let k = j + 1;
            if 2 * k < d {
                (d - 2 * k, 0)
            } else {
                (2 * next_p, 1)
            }
        }
        PeelEvent::GlueLeft(j) => {
            let k = j + 1;
            if 2 * k <= 2 * p - d {
                (d - 1, 0)
            } else {
                (2 * next_p, 0)
            }
        }
    }
}

pub fn layer_step(
    state: &mut LayerState,
    rng: &mut Rng,
    volumes: &mut VolumeSampler<'_>,
) -> Result<PeelEvent, PeelError> {
    let p = state.peel.p;
    let event = crate::peel::peel_step(&mut state.peel, rng, volumes)?;
    let (d, dh) = route(p, state.d, event);
    state.d = d;
    state.h += dh;
    debug_assert!(1 <= state.d && state.d <= 2 * state.peel.p);
    Ok(event)
}

/// Masses of the five kernel lines at (p, d) for d ≥ 2, or of the single
/// layer-completing line (in slot 2) for d = 1.
pub fn kernel_line_masses(kernels: &Kernels, p: i64, d: i64) -> [f64; 5] {
    assert!(p >= 1 && (1..=2 * p).contains(&d));
    let m = &kernels.model;
    lines_at(kernels, p, d, m.harmonic_sums(p).1 / m.h_up(p))
}

/// `kernel_line_masses` for every d = 1..=2p.
pub fn kernel_line_table(kernels: &Kernels, p: i64) -> Vec<[f64; 5]> {
    assert!(p >= 1);
    let m = &kernels.model;
    let new_face = m.harmonic_sums(p).1 / m.h_up(p);
    (1..=2 * p).map(|d| lines_at(kernels, p, d, new_face)).collect()
}

fn lines_at(kernels: &Kernels, p: i64, d: i64, new_face: f64) -> [f64; 5] {
    let mut lines = [0.0; 5];
    for k in 1..p {
        let side = 0.5 * kernels.up_prob(p, -k);
        if d == 1 {
            lines[2] += 2.0 * side;
            continue;
        }
        if 2 * k < d {
            lines[1] += side;
        } else {
            lines[2] += side;
        }
        if 2 * k <= 2 * p - d {
            lines[3] += side;
        } else {
            lines[4] += side;
        }
    }
    if d == 1 {
        lines[2] += new_face;
    } else {
        lines[0] = new_face;
    }
    lines
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerRecord {
    pub replica: u64,
    pub r: u64,
    pub theta: u64,
    pub p: i64,
    pub v: u128,
}

pub fn run_layers_replica(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    replica: u64,
    r_max: u64,
    step_budget: u64,
) -> Result<Vec<LayerRecord>, LayerError> {
    let mut rng = Rng::new(seed, replica);
    let mut volumes = VolumeSampler::new(kernels, mode);
    let mut state = LayerState::default();
    let mut out = Vec::with_capacity(r_max as usize);
    while state.h < r_max {
        if state.peel.i >= step_budget {
            return Err(LayerError::StepBudget {
                replica,
                budget: step_budget,
                reached: state.h,
            });
        }
        let h = state.h;
        layer_step(&mut state, &mut rng, &mut volumes)?;
        if state.peel.saturated {
            return Err(LayerError::PerimeterCap { replica, reached: h });
        }
        if state.h > h {
            out.push(LayerRecord {
                replica,
                r: state.h,
                theta: state.peel.i,
                p: state.peel.p,
                v: state.peel.v,
            });
        }
    }
    Ok(out)
}

pub fn run_layers(
    kernels: &Kernels,
    mode: VolumeMode,
    seed: u64,
    r_max: u64,
    replicas: u64,
    step_budget: u64,
) -> Result<Vec<LayerRecord>, LayerError> {
    let mut out = Vec::new();
    for r in 0..replicas {
        out.extend(run_layers_replica(kernels, mode, seed, r, r_max, step_budget)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightRow {
    pub n: u64,
    pub mean_h: f64,
    pub scale: f64,
    pub ratio: f64,
}

/// Mean height after n steps at dyadic n, against n^{(a−2)/(a−1)}.
pub fn height_growth_check(
    kernels: &Kernels,
    seed: u64,
    n_max: u64,
    replicas: u64,
) -> Result<Vec<HeightRow>, LayerError> {
    let a = kernels.model.a;
    if kernels.model.phase() != Phase::Dilute {
        return Err(LayerError::NotDilute);
    }
    let checkpoints = crate::peel::dyadic_checkpoints(n_max);
    let mut sums = vec![0.0; checkpoints.len()];
    for rep in 0..replicas {
        let mut rng = Rng::new(seed, rep);
        let mut volumes = VolumeSampler::new(kernels, VolumeMode::Skip);
        let mut state = LayerState::default();
        for (slot, &c) in checkpoints.iter().enumerate() {
            while state.peel.i < c {
                layer_step(&mut state, &mut rng, &mut volumes)?;
            }
            sums[slot] += state.h as f64;
        }
    }
    Ok(checkpoints
        .iter()
        .zip(sums)
        .map(|(&n, s)| {
            let mean_h = s / replicas as f64;
            let scale = (n as f64).powf((a - 2.0) / (a - 1.0));
            HeightRow {
                n,
                mean_h,
                scale,
                ratio: if n == 0 { 0.0 } else { mean_h / scale },
            }
        })
        .collect())
}
