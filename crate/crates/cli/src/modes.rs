//! One function per experiment mode. Each returns the CSV table, the JSON
//! summary body and an overall pass flag.

use peelmap::eden::{eden_step, run_eden_replica, summarize_dfpp, EdenState};
use peelmap::layers::{run_layers_replica, LayerRecord};
use peelmap::oracle::{e_dfpp_closed, exp_inv_p, inverse_perimeter_sum, return_prob_quadrature};
use peelmap::peel::{dyadic_checkpoints, run_peel_replica, VolumeMode, VolumeSampler};
use peelmap::sampler::{Kernels, Rng};
use peelmap::{Model, Phase};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::checks::identity_suite;
use crate::config::{eden_window_start, ExperimentConfig, Mode, LAYER_WINDOW_START};
use crate::output::{real, Table};
use crate::stats::{fit_slope, mean_se, spread, Spread, Transform, Window};
use crate::CliError;

pub struct ModeResult {
    pub table: Table,
    pub results: Map<String, Value>,
    pub flags: Map<String, Value>,
}

impl ModeResult {
    pub fn pass(&self) -> bool {
        self.flags.values().all(|v| v.as_bool() == Some(true))
    }
}

pub fn run_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<ModeResult, CliError> {
    match mode {
        Mode::Peel => peel(cfg),
        Mode::Layers => layers(cfg),
        Mode::EdenDilute => eden_dilute(cfg),
        Mode::Dfpp => dfpp(cfg),
        Mode::Check => check(),
        Mode::Constants => constants(cfg),
        Mode::Oracle => oracle(cfg),
    }
}

/// Runs `f` for each replica on the configured pool, in replica order. The
/// first failure stops the remaining replicas.
fn per_replica<T, E, F>(cfg: &ExperimentConfig, replicas: u64, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    E: std::fmt::Display + Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| (0..replicas).into_par_iter().map(&f).collect::<Result<Vec<T>, E>>())
        .map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn constants_json(m: &Model) -> Value {
    let d = m.derived_constants();
    json!({
        "a": m.a,
        "c": m.c,
        "kappa": m.kappa,
        "phase": match m.phase() { Phase::Dilute => "dilute", Phase::Dense => "dense" },
        "p_q": d.p_q,
        "b_q": d.b_q,
        "v_q": d.v_q,
        "b_q_faces": d.b_q_faces,
        "dim_a": d.dim_a,
        "perimeter_exponent": d.perimeter_exponent,
        "a_q": d.a_q,
        "h_q": d.h_q,
        "e_dfpp": d.e_dfpp,
    })
}

fn spread_json(s: &Spread) -> Value {
    json!({ "median": s.median, "q1": s.q1, "q3": s.q3, "iqr": s.iqr(), "count": s.count })
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    ((value - target) / target).abs() <= rel
}

fn exponent_entry(s: &Spread, target: f64, rel: f64) -> (Value, bool) {
    let ok = within(s.median, target, rel);
    let mut v = spread_json(s);
    v["target"] = json!(target);
    v["tolerance"] = json!(rel);
    (v, ok)
}

/// As `exponent_entry` over per-replica fits; any failed fit fails the flag.
fn fitted_entry(fits: &[Option<f64>], target: f64, rel: f64) -> (Value, bool) {
    let ok: Vec<f64> = fits.iter().flatten().copied().collect();
    let failed = fits.len() - ok.len();
    let (mut v, pass) = exponent_entry(&spread(&ok), target, rel);
    v["failed_fits"] = json!(failed);
    (v, pass && failed == 0)
}

fn peel(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let (replicas, steps, seed, vm) = (cfg.replicas()?, cfg.steps()?, cfg.seed(), cfg.volume_mode());
    let kernels = Kernels::new(m.clone());
    let runs = per_replica(cfg, replicas, |r| run_peel_replica(&kernels, vm, seed, r, steps))?;

    let mut table = Table::new(&["replica", "step", "P", "V"]);
    for rec in runs.iter().flatten() {
        table.push(vec![
            rec.replica.to_string(),
            rec.step.to_string(),
            rec.p.to_string(),
            rec.v.to_string(),
        ]);
    }
    let ln_n = (steps as f64).ln();
    let finals: Vec<_> = runs.iter().map(|r| *r.last().expect("checkpoint at n")).collect();
    let lp: Vec<f64> = finals.iter().map(|r| (r.p as f64).ln() / ln_n).collect();
    let lv: Vec<f64> = finals.iter().map(|r| (r.v as f64).ln() / ln_n).collect();
    let inv_p: Vec<f64> = finals.iter().map(|r| 1.0 / r.p as f64).collect();
    let (inv_mean, inv_se) = mean_se(&inv_p);
    let oracle = exp_inv_p(&m, steps).map_err(|e| CliError::Numerical(e.to_string()))?;

    let a = m.a;
    let (p_entry, p_ok) = exponent_entry(&spread(&lp), 1.0 / (a - 1.0), 0.10);
    let mut results = Map::new();
    results.insert("log_p_over_log_n".into(), p_entry);
    let mut flags = Map::new();
    flags.insert("log_p_exponent".into(), json!(p_ok));
    if vm != VolumeMode::Skip {
        let (v_entry, v_ok) = exponent_entry(&spread(&lv), (a - 0.5) / (a - 1.0), 0.10);
        results.insert("log_v_over_log_n".into(), v_entry);
        flags.insert("log_v_exponent".into(), json!(v_ok));
    }
    results.insert(
        "inverse_perimeter".into(),
        json!({ "mean": inv_mean, "se": inv_se, "oracle": oracle.value, "n": steps }),
    );
    Ok(ModeResult { table, results, flags })
}

/// Per-replica (r, P) and (r, V) series.
fn layer_series(recs: &[LayerRecord]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let p = recs.iter().map(|x| (x.r as f64, x.p as f64)).collect();
    let v = recs.iter().map(|x| (x.r as f64, x.v as f64)).collect();
    (p, v)
}

/// Per-replica slopes; a replica whose window is degenerate gives None.
fn slopes(series: impl Iterator<Item = Vec<(f64, f64)>>, window: Window, t: Transform) -> Vec<Option<f64>> {
    series.map(|s| fit_slope(&s, window, t).ok().map(|f| f.slope)).collect()
}

fn layers(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let (replicas, r_max, seed, vm, budget) = (
        cfg.replicas()?,
        cfg.r_max()?,
        cfg.seed(),
        cfg.volume_mode(),
        cfg.budget(),
    );
    let kernels = Kernels::new(m.clone());
    let runs = per_replica(cfg, replicas, |r| {
        run_layers_replica(&kernels, vm, seed, r, r_max, budget)
    })?;

    let mut table = Table::new(&["replica", "r", "theta", "P", "V"]);
    for rec in runs.iter().flatten() {
        table.push(vec![
            rec.replica.to_string(),
            rec.r.to_string(),
            rec.theta.to_string(),
            rec.p.to_string(),
            rec.v.to_string(),
        ]);
    }
    let a = m.a;
    let mut results = Map::new();
    let mut flags = Map::new();
    match m.phase() {
        Phase::Dilute => {
            let w = Window::from(LAYER_WINDOW_START as f64);
            let sp = slopes(runs.iter().map(|r| layer_series(r).0), w, Transform::LogLog);
            let sv = slopes(runs.iter().map(|r| layer_series(r).1), w, Transform::LogLog);
            let (pe, pok) = fitted_entry(&sp, 1.0 / (a - 2.0), 0.15);
            let (ve, vok) = fitted_entry(&sv, (a - 0.5) / (a - 2.0), 0.20);
            results.insert("perimeter_slope".into(), pe);
            results.insert("volume_slope".into(), ve);
            flags.insert("perimeter_slope".into(), json!(pok));
            flags.insert("volume_slope".into(), json!(vok));
        }
        Phase::Dense => {
            let w = Window::from((r_max / 2 + 1) as f64);
            let cp = slopes(runs.iter().map(|r| layer_series(r).0), w, Transform::SemiLog);
            let cv = slopes(runs.iter().map(|r| layer_series(r).1), w, Transform::SemiLog);
            let ratio: Vec<Option<f64>> = cv.iter().zip(&cp).map(|(v, p)| Some((*v)? / (*p)?)).collect();
            let quartile = 3 * r_max / 4;
            let variation: Vec<f64> = runs
                .iter()
                .map(|recs| {
                    let c: Vec<f64> = recs
                        .iter()
                        .filter(|x| x.r > quartile)
                        .map(|x| (x.p as f64).ln() / x.r as f64)
                        .collect();
                    let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (hi - lo) / (c.iter().sum::<f64>() / c.len() as f64)
                })
                .collect();
            let (early, late) = increment_moments(&runs, r_max);
            let c_hat = spread(&cp.iter().flatten().copied().collect::<Vec<_>>());
            let var = spread(&variation);
            let (re, rok) = fitted_entry(&ratio, a - 0.5, 0.10);
            results.insert("c_hat".into(), spread_json(&c_hat));
            results.insert(
                "volume_rate".into(),
                spread_json(&spread(&cv.iter().flatten().copied().collect::<Vec<_>>())),
            );
            results.insert("rate_ratio".into(), re);
            results.insert("last_quartile_variation".into(), spread_json(&var));
            results.insert(
                "log_increment_second_moment".into(),
                json!({ "first_half": early, "second_half": late }),
            );
            let all_fit = cp.iter().all(Option::is_some);
            flags.insert(
                "c_hat_stable".into(),
                json!(all_fit && c_hat.median > 0.0 && var.median < 0.10),
            );
            flags.insert("rate_ratio".into(), json!(rok));
            flags.insert(
                "increments_bounded".into(),
                json!(late.is_finite() && late <= 2.0 * early),
            );
        }
    }
    Ok(ModeResult { table, results, flags })
}

/// Mean of (ln P_r − ln P_{r−1})² over the first and second half of radii.
fn increment_moments(runs: &[Vec<LayerRecord>], r_max: u64) -> (f64, f64) {
    let (mut s, mut n) = ([0.0; 2], [0u64; 2]);
    for recs in runs {
        for w in recs.windows(2) {
            let d = (w[1].p as f64).ln() - (w[0].p as f64).ln();
            let half = usize::from(w[1].r > r_max / 2);
            s[half] += d * d;
            n[half] += 1;
        }
    }
    (s[0] / n[0] as f64, s[1] / n[1] as f64)
}

fn eden_dilute(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let (replicas, t_max, seed, vm, budget) = (
        cfg.replicas()?,
        cfg.t_max()?,
        cfg.seed(),
        cfg.volume_mode(),
        cfg.budget(),
    );
    let kernels = Kernels::new(m.clone());
    let runs = per_replica(cfg, replicas, |r| {
        run_eden_replica(&kernels, vm, seed, r, t_max, budget)
    })?;

    let mut table = Table::new(&["replica", "t", "tau", "step", "P", "V"]);
    for rec in runs.iter().flatten() {
        table.push(vec![
            rec.replica.to_string(),
            real(rec.t),
            real(rec.tau),
            rec.step.to_string(),
            rec.p.to_string(),
            rec.v.to_string(),
        ]);
    }
    let a = m.a;
    let w = Window::from(eden_window_start(t_max));
    let sp = slopes(
        runs.iter().map(|r| r.iter().map(|x| (x.t, x.p as f64)).collect()),
        w,
        Transform::LogLog,
    );
    let sv = slopes(
        runs.iter().map(|r| r.iter().map(|x| (x.t, x.v as f64)).collect()),
        w,
        Transform::LogLog,
    );
    let (pe, pok) = fitted_entry(&sp, 1.0 / (a - 2.0), 0.15);
    let (ve, vok) = fitted_entry(&sv, (a - 0.5) / (a - 2.0), 0.20);
    let mut results = Map::new();
    let mut flags = Map::new();
    results.insert("perimeter_slope".into(), pe);
    results.insert("volume_slope".into(), ve);
    flags.insert("perimeter_slope".into(), json!(pok));
    flags.insert("volume_slope".into(), json!(vok));
    Ok(ModeResult { table, results, flags })
}

fn dfpp(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let (replicas, n, seed) = (cfg.replicas()?, cfg.steps()?, cfg.seed());
    let kernels = Kernels::new(m.clone());
    let times = per_replica(cfg, replicas, |r| {
        let mut rng = Rng::new(seed, r);
        let mut volumes = VolumeSampler::new(&kernels, VolumeMode::Skip);
        let mut s = EdenState::default();
        while s.peel.i < n {
            eden_step(&mut s, &mut rng, &mut volumes)?;
        }
        Ok::<f64, peelmap::peel::PeelError>(s.time())
    })?;
    let mut table = Table::new(&["replica", "step", "tau"]);
    for (r, t) in times.iter().enumerate() {
        table.push(vec![r.to_string(), n.to_string(), real(*t)]);
    }
    let est = summarize_dfpp(&kernels, &times, n).map_err(|e| CliError::Numerical(e.to_string()))?;
    let rel_err = (est.estimate - est.closed).abs() / est.closed;
    let mut results = Map::new();
    results.insert(
        "dfpp".into(),
        json!({
            "estimate": est.estimate,
            "mean_truncated": est.mean_truncated,
            "se": est.se,
            "remainder": est.remainder,
            "tail_bound": est.tail_bound,
            "error_bound": est.error_bound(),
            "closed": est.closed,
            "relative_error": rel_err,
            "replicas": est.replicas,
            "n_trunc": est.n_trunc,
        }),
    );
    let mut flags = Map::new();
    flags.insert("within_5_percent".into(), json!(rel_err < 0.05));
    flags.insert("tail_below_1_percent".into(), json!(est.tail_bound < 0.01 * est.closed));
    Ok(ModeResult { table, results, flags })
}

fn check() -> Result<ModeResult, CliError> {
    let rows = identity_suite();
    let mut table = Table::new(&["name", "value", "tolerance", "pass"]);
    let mut flags = Map::new();
    for r in &rows {
        table.push(vec![
            r.name.clone(),
            real(r.value),
            real(r.tolerance),
            r.pass.to_string(),
        ]);
        flags.insert(r.name.clone(), json!(r.pass));
    }
    let mut results = Map::new();
    results.insert("checks".into(), json!(rows.len()));
    Ok(ModeResult { table, results, flags })
}

fn constants(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let mut table = Table::new(&["name", "value"]);
    if let Value::Object(c) = constants_json(&m) {
        for (k, v) in c {
            let cell = match v {
                Value::Number(x) => real(x.as_f64().unwrap_or(f64::NAN)),
                Value::String(s) => s,
                _ => String::new(),
            };
            table.push(vec![k, cell]);
        }
    }
    Ok(ModeResult {
        table,
        results: Map::new(),
        flags: Map::new(),
    })
}

fn oracle(cfg: &ExperimentConfig) -> Result<ModeResult, CliError> {
    let m = cfg.model()?;
    let n_max = cfg.steps()?;
    let num = |e: peelmap::oracle::OracleError| CliError::Numerical(e.to_string());
    let mut table = Table::new(&["n", "return_prob", "exp_inv_p", "inverse_perimeter_sum"]);
    for n in dyadic_checkpoints(n_max) {
        let r = if n == 0 {
            1.0
        } else {
            return_prob_quadrature(&m, n).map_err(num)?.value
        };
        let e = exp_inv_p(&m, n).map_err(num)?.value;
        let s = inverse_perimeter_sum(&m, n).map_err(num)?.value;
        table.push(vec![n.to_string(), real(r), real(e), real(s)]);
    }
    let identity = exp_inv_p(&m, 0).map_err(num)?;
    let err = (identity.value - 1.0).abs();
    let mut results = Map::new();
    results.insert(
        "cycle_identity".into(),
        json!({ "value": identity.value, "error": err, "tolerance": 1e-6, "imag": identity.imag }),
    );
    if m.phase() == Phase::Dense {
        let d = e_dfpp_closed(&m).map_err(num)?;
        results.insert(
            "e_dfpp".into(),
            json!({ "closed": d.closed, "quadrature": d.quadrature.value }),
        );
    }
    let mut flags = Map::new();
    flags.insert("cycle_identity".into(), json!(err < 1e-6));
    Ok(ModeResult { table, results, flags })
}
