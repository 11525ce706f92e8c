use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, ValueEnum};
use peelmap::{make_special_model, Model, Phase};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SHORTCUT: u64 = 1000;
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;
/// Smallest radius used by dilute log-log fits.
pub const LAYER_WINDOW_START: u64 = 16;
/// Dilute FPP fits use the grid times within this many octaves of the last.
pub const EDEN_FIT_OCTAVES: i32 = 7;
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Peel,
    Layers,
    EdenDilute,
    Dfpp,
    Check,
    Constants,
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Peel => "peel",
            Mode::Layers => "layers",
            Mode::EdenDilute => "eden-dilute",
            Mode::Dfpp => "dfpp",
            Mode::Check => "check",
            Mode::Constants => "constants",
            Mode::Oracle => "oracle",
        }
    }
}

/// One experiment. Every field is optional so that a config file and the
/// command line can be merged; `validate` enforces what each mode needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields)]
#[command(
    name = "peelmap",
    version,
    about = "Peeling experiments on heavy-tailed Boltzmann maps"
)]
pub struct ExperimentConfig {
    /// JSON file supplying any of the flags below; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    /// Peeling steps (peel), truncation n (dfpp) or largest n (oracle).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[arg(long = "rmax")]
    #[serde(rename = "rmax", skip_serializing_if = "Option::is_none")]
    pub r_max: Option<u64>,
    #[arg(long = "tmax")]
    #[serde(rename = "tmax", skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Output prefix: writes <out>.csv and <out>.json.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// false switches large bubbles to the stable-limit shortcut.
    #[arg(long, action = ArgAction::Set)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_volume: Option<bool>,
    /// Bubble perimeter above which the shortcut applies.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortcut: Option<u64>,
    /// Per-replica step budget for layers and eden-dilute.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Fields set here win over `base`.
    pub fn or(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            config: self.config.or(base.config),
            a: self.a.or(base.a),
            seed: self.seed.or(base.seed),
            replicas: self.replicas.or(base.replicas),
            steps: self.steps.or(base.steps),
            r_max: self.r_max.or(base.r_max),
            t_max: self.t_max.or(base.t_max),
            mode: self.mode.or(base.mode),
            out: self.out.or(base.out),
            exact_volume: self.exact_volume.or(base.exact_volume),
            shortcut: self.shortcut.or(base.shortcut),
            budget: self.budget.or(base.budget),
            threads: self.threads.or(base.threads),
        }
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Flags merged over the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<ExperimentConfig, CliError> {
        match self.config.clone() {
            Some(path) => {
                let file = ExperimentConfig::from_file(&path)?;
                Ok(ExperimentConfig {
                    config: None,
                    ..self.or(file)
                })
            }
            None => Ok(self),
        }
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        self.mode.ok_or_else(|| usage("--mode is required"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let a = self.a.ok_or_else(|| usage("--a is required"))?;
        make_special_model(a).map_err(|e| usage(&e.to_string()))
    }

    pub fn replicas(&self) -> Result<u64, CliError> {
        match self.replicas {
            Some(r) if r >= 1 => Ok(r),
            Some(_) => Err(usage("--replicas must be positive")),
            None => Err(usage("--replicas is required")),
        }
    }

    pub fn steps(&self) -> Result<u64, CliError> {
        match self.steps {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(usage("--steps must be positive")),
            None => Err(usage("--steps is required")),
        }
    }

    pub fn r_max(&self) -> Result<u64, CliError> {
        self.r_max.ok_or_else(|| usage("--rmax is required"))
    }

    pub fn t_max(&self) -> Result<f64, CliError> {
        match self.t_max {
            Some(t) if t.is_finite() && t > 0.0 => Ok(t),
            Some(_) => Err(usage("--tmax must be positive")),
            None => Err(usage("--tmax is required")),
        }
    }

    pub fn volume_mode(&self) -> peelmap::peel::VolumeMode {
        if self.exact_volume.unwrap_or(true) {
            peelmap::peel::VolumeMode::Exact
        } else {
            peelmap::peel::VolumeMode::Shortcut {
                threshold: self.shortcut.unwrap_or(DEFAULT_SHORTCUT) as i64,
            }
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    /// Checks every field the selected mode needs before anything runs.
    pub fn validate(&self) -> Result<Mode, CliError> {
        let mode = self.mode()?;
        if self.threads == Some(0) {
            return Err(usage("--threads must be positive"));
        }
        match mode {
            Mode::Check => {}
            Mode::Constants => {
                self.model()?;
            }
            Mode::Oracle => {
                self.model()?;
                if self.steps()? > 1 << 24 {
                    return Err(usage("oracle tables stop at --steps 16777216"));
                }
            }
            Mode::Peel => {
                self.model()?;
                self.replicas()?;
                if self.steps()? < 2 {
                    return Err(usage("peel needs --steps of at least 2"));
                }
            }
            Mode::Layers => {
                let m = self.model()?;
                self.replicas()?;
                let r = self.r_max()?;
                let points = match m.phase() {
                    Phase::Dilute => r.saturating_sub(LAYER_WINDOW_START) + 1,
                    Phase::Dense => r - r / 2,
                };
                if (points as usize) < MIN_FIT_POINTS {
                    return Err(usage(&format!(
                        "--rmax {r} leaves {points} radii in the fit window, need {MIN_FIT_POINTS}"
                    )));
                }
            }
            Mode::EdenDilute => {
                let m = self.model()?;
                if m.phase() != Phase::Dilute {
                    return Err(usage("eden-dilute needs a dilute model (a > 2)"));
                }
                self.replicas()?;
                let t = self.t_max()?;
                let points = peelmap::eden::time_grid(t)
                    .iter()
                    .filter(|&&x| x >= eden_window_start(t))
                    .count();
                if points < MIN_FIT_POINTS {
                    return Err(usage(&format!(
                        "--tmax {t} leaves {points} times in the fit window, need {MIN_FIT_POINTS}"
                    )));
                }
            }
            Mode::Dfpp => {
                let m = self.model()?;
                if m.phase() != Phase::Dense {
                    return Err(usage("dfpp needs a dense model (a < 2)"));
                }
                if self.replicas()? < 2 {
                    return Err(usage("dfpp needs at least 2 replicas"));
                }
                self.steps()?;
            }
        }
        Ok(mode)
    }
}

/// Start of the FPP fit window for a run to `t_max`.
pub fn eden_window_start(t_max: f64) -> f64 {
    let last = peelmap::eden::time_grid(t_max).last().copied().unwrap_or(t_max);
    last / 2f64.powi(EDEN_FIT_OCTAVES)
}

fn usage(msg: &str) -> CliError {
    CliError::Usage(msg.to_string())
}
