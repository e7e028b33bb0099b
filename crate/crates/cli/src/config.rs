//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use ou_drift_core::harness::{Cell, Preset, Schedule};
use ou_drift_core::{Estimator, IndexConvention, Variant};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUTPUT_DIR: &str = "ou-drift-out";

/// Optional outputs of `rates` and `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emit {
    CellsCsv,
    RatesCsv,
    ReportMd,
    PlotdataCsv,
}

impl Emit {
    pub const ALL: [Emit; 4] = [Emit::CellsCsv, Emit::RatesCsv, Emit::ReportMd, Emit::PlotdataCsv];

    pub fn as_str(&self) -> &'static str {
        match self {
            Emit::CellsCsv => "cells_csv",
            Emit::RatesCsv => "rates_csv",
            Emit::ReportMd => "report_md",
            Emit::PlotdataCsv => "plotdata_csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub n: usize,
    pub delta: f64,
    pub variant: Variant,
    /// Also emit the zero-start path driven by the same innovations.
    pub coupling: bool,
    pub paths: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { n: 1000, delta: 0.01, variant: Variant::FromZero, coupling: false, paths: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta_true: f64,
    pub estimators: Vec<Estimator>,
    pub schedule: Schedule,
    pub replications: usize,
    pub master_seed: u64,
    pub index_convention: IndexConvention,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta_true: 1.0,
            estimators: vec![Estimator::Amce, Estimator::Amle],
            schedule: Preset::AmceGammaHalf.schedule(),
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_SEED,
            index_convention: IndexConvention::Body,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            emit: Emit::ALL.to_vec(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Command-line flags that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub preset: Option<String>,
    pub estimators: Option<Vec<Estimator>>,
    pub index_convention: Option<IndexConvention>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    theta_true: Option<f64>,
    estimators: Option<Vec<String>>,
    schedule: Option<RawSchedule>,
    replications: Option<i64>,
    master_seed: Option<u64>,
    index_convention: Option<String>,
    output_dir: Option<PathBuf>,
    emit: Option<Vec<String>>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    preset: Option<String>,
    name: Option<String>,
    gamma: Option<f64>,
    log2_n: Option<[u32; 2]>,
    n: Option<Vec<usize>>,
    delta: Option<f64>,
    horizon: Option<f64>,
    cells: Option<Vec<RawCell>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    n: usize,
    delta: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    n: Option<i64>,
    delta: Option<f64>,
    variant: Option<String>,
    coupling: Option<bool>,
    paths: Option<i64>,
}

pub fn parse_estimator(s: &str) -> Option<Estimator> {
    match s.to_ascii_lowercase().as_str() {
        "amce" => Some(Estimator::Amce),
        "amle" => Some(Estimator::Amle),
        _ => None,
    }
}

pub fn parse_convention(s: &str) -> Option<IndexConvention> {
    match s.to_ascii_lowercase().as_str() {
        "body" => Some(IndexConvention::Body),
        "abstract" => Some(IndexConvention::Abstract),
        _ => None,
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn count(field: &str, v: i64, min: i64) -> Result<usize> {
    if v < min {
        return Err(CliError::config(field, format!("must be at least {min}, got {v}")));
    }
    Ok(v as usize)
}

fn preset_schedule(field: &str, name: &str) -> Result<Schedule> {
    Preset::from_name(name).map(|p| p.schedule()).ok_or_else(|| {
        let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        CliError::config(field, format!("unknown preset {name:?}; known: {}", known.join(", ")))
    })
}

fn build_schedule(raw: RawSchedule) -> Result<Schedule> {
    let forms =
        [raw.preset.is_some(), raw.gamma.is_some(), raw.delta.is_some(), raw.horizon.is_some(), raw.cells.is_some()];
    if forms.iter().filter(|f| **f).count() != 1 {
        return Err(CliError::config(
            "schedule",
            "give exactly one of `preset`, `gamma`, `delta`, `horizon` or `cells`",
        ));
    }
    if let Some(p) = raw.preset {
        return preset_schedule("schedule.preset", &p);
    }
    let name = raw.name.unwrap_or_else(|| "custom".to_string());
    let ns = || -> Result<Vec<usize>> {
        match (&raw.n, raw.log2_n) {
            (Some(_), Some(_)) => Err(CliError::config("schedule.n", "give `n` or `log2_n`, not both")),
            (Some(ns), None) => Ok(ns.clone()),
            (None, Some([lo, hi])) if lo <= hi && hi < 40 => Ok((lo..=hi).map(|k| 1usize << k).collect()),
            (None, Some(_)) => Err(CliError::config("schedule.log2_n", "expected [lo, hi] with lo <= hi < 40")),
            (None, None) => Err(CliError::config("schedule.n", "missing; give `n = [...]` or `log2_n = [lo, hi]`")),
        }
    };
    let wrap = |field: &str, r: ou_drift_core::Result<Schedule>| r.map_err(|e| CliError::config(field, e.to_string()));
    if let Some(g) = raw.gamma {
        return wrap("schedule.gamma", Schedule::power_of(name, positive("schedule.gamma", g)?, &ns()?));
    }
    if let Some(d) = raw.delta {
        return wrap("schedule.delta", Schedule::fixed_delta(name, positive("schedule.delta", d)?, &ns()?));
    }
    if let Some(h) = raw.horizon {
        return wrap("schedule.horizon", Schedule::fixed_horizon(name, positive("schedule.horizon", h)?, &ns()?));
    }
    let cells = raw.cells.unwrap_or_default().into_iter().map(|c| Cell::new(c.n, c.delta)).collect();
    wrap("schedule.cells", Schedule::new(name, cells))
}

impl RunConfig {
    /// Parse TOML text; every field is checked before anything runs.
    pub fn from_toml_str(text: &str, origin: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Parse { path: origin.to_path_buf(), source: Box::new(e) })?;
        Self::from_raw(raw, overrides)
    }

    /// Load from `path`, or start from the defaults when no file is given.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_toml_str(&text, p, overrides)
            }
            None => Self::from_raw(RawConfig::default(), overrides),
        }
    }

    fn from_raw(raw: RawConfig, ov: &Overrides) -> Result<RunConfig> {
        let d = RunConfig::default();
        let theta_true = positive("theta_true", raw.theta_true.unwrap_or(d.theta_true))?;

        let estimators = match (&ov.estimators, raw.estimators) {
            (Some(e), _) => e.clone(),
            (None, Some(names)) => {
                let mut out = Vec::new();
                for s in &names {
                    let e = parse_estimator(s)
                        .ok_or_else(|| CliError::config("estimators", format!("unknown estimator {s:?}")))?;
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                if out.is_empty() {
                    return Err(CliError::config("estimators", "must name at least one estimator"));
                }
                out
            }
            (None, None) => d.estimators,
        };

        let schedule = match (&ov.preset, raw.schedule) {
            (Some(p), _) => preset_schedule("--preset", p)?,
            (None, Some(s)) => build_schedule(s)?,
            (None, None) => d.schedule,
        };

        let replications = match (ov.replications, raw.replications) {
            (Some(r), _) => count("--reps", r as i64, 2)?,
            (None, Some(r)) => count("replications", r, 2)?,
            (None, None) => d.replications,
        };

        let index_convention = match (ov.index_convention, raw.index_convention) {
            (Some(c), _) => c,
            (None, Some(s)) => parse_convention(&s).ok_or_else(|| {
                CliError::config("index_convention", format!("expected \"body\" or \"abstract\", got {s:?}"))
            })?,
            (None, None) => d.index_convention,
        };

        let emit = match raw.emit {
            Some(names) => {
                let mut out = Vec::new();
                for s in &names {
                    let e = Emit::ALL
                        .into_iter()
                        .find(|e| e.as_str() == s)
                        .ok_or_else(|| CliError::config("emit", format!("unknown output {s:?}")))?;
                    out.push(e);
                }
                out.sort();
                out.dedup();
                out
            }
            None => d.emit,
        };

        let rs = raw.simulate.unwrap_or_default();
        let sd = SimulateConfig::default();
        let simulate = SimulateConfig {
            n: match rs.n {
                Some(n) => count("simulate.n", n, 1)?,
                None => sd.n,
            },
            delta: positive("simulate.delta", rs.delta.unwrap_or(sd.delta))?,
            variant: match rs.variant.as_deref() {
                None => sd.variant,
                Some("from-zero") => Variant::FromZero,
                Some("stationary") => Variant::Stationary,
                Some(other) => {
                    return Err(CliError::config(
                        "simulate.variant",
                        format!("expected \"from-zero\" or \"stationary\", got {other:?}"),
                    ))
                }
            },
            coupling: rs.coupling.unwrap_or(sd.coupling),
            paths: match rs.paths {
                Some(p) => count("simulate.paths", p, 1)?,
                None => sd.paths,
            },
        };
        if simulate.coupling && simulate.variant != Variant::Stationary {
            return Err(CliError::config("simulate.coupling", "coupling needs variant = \"stationary\""));
        }

        Ok(RunConfig {
            theta_true,
            estimators,
            schedule,
            replications,
            master_seed: ov.seed.or(raw.master_seed).unwrap_or(d.master_seed),
            index_convention,
            output_dir: ov.output_dir.clone().or(raw.output_dir).unwrap_or(d.output_dir),
            emit,
            simulate,
        })
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}
