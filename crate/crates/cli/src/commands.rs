//! The five subcommands. Each is a pure function of the configuration:
//! same config and seed, same bytes on disk.

use std::path::{Path, PathBuf};

use ou_drift_core::estimators::estimate;
use ou_drift_core::harness::{
    coupling_check, fit_schedule, run_cells, run_schedule, CellOptions, CouplingReport, McSummary, Preset, ScheduleRun,
    COUPLING_SPREAD_LIMIT, GATE_SIGMAS,
};
use ou_drift_core::oracles::{moment_report, MomentQuantity};
use ou_drift_core::process::{simulate_coupled, simulate_stream};
use ou_drift_core::{Error as CoreError, OuParams, Variant};

use crate::config::{Emit, RunConfig};
use crate::csvio::{num, Table};
use crate::error::{CliError, Result};
use crate::report;

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(dir: &Path, name: &str, table: &Table, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    files.push(path);
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn cell_options(cfg: &RunConfig) -> CellOptions {
    CellOptions { convention: cfg.index_convention, ..CellOptions::default() }
}

fn simulate_params(cfg: &RunConfig) -> Result<OuParams> {
    OuParams::new(cfg.theta_true, cfg.simulate.delta, cfg.simulate.n)
        .map_err(|e| CliError::config("simulate", e.to_string()))
}

/// `paths.csv`: one row per grid point per path.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let params = simulate_params(cfg)?;
    let sim = &cfg.simulate;
    let mut table = match (sim.variant, sim.coupling) {
        (Variant::FromZero, _) => Table::new(&["stream", "i", "t", "x"]),
        (Variant::Stationary, false) => Table::new(&["stream", "i", "t", "z"]),
        (Variant::Stationary, true) => Table::new(&["stream", "i", "t", "z", "x"]),
    };
    for stream in 0..sim.paths as u64 {
        let (first, second) = if sim.coupling {
            let pair = simulate_coupled(&params, cfg.master_seed, stream);
            (pair.stationary, Some(pair.observed))
        } else {
            (simulate_stream(&params, sim.variant, cfg.master_seed, stream), None)
        };
        for (i, v) in first.values().iter().enumerate() {
            let mut row = vec![stream.to_string(), i.to_string(), num(params.time(i)), num(*v)];
            if let Some(x) = &second {
                row.push(num(x.values()[i]));
            }
            table.push(row);
        }
    }
    prepare_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    write(&cfg.output_dir, "paths.csv", &table, &mut files)?;
    Ok(files)
}

/// `estimates.csv`: every configured estimator on every simulated path.
///
/// Estimators take the observed process (`X_0 = 0`); with coupling on this is
/// the `x` column of `paths.csv`, otherwise a zero-start path of the same stream.
pub fn estimate_paths(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let params = simulate_params(cfg)?;
    let mut table = Table::new(&[
        "stream",
        "estimator",
        "index_convention",
        "n",
        "delta",
        "T",
        "estimate",
        "normalized_error",
        "denominator",
        "status",
    ]);
    for stream in 0..cfg.simulate.paths as u64 {
        let path = if cfg.simulate.coupling {
            simulate_coupled(&params, cfg.master_seed, stream).observed
        } else {
            simulate_stream(&params, Variant::FromZero, cfg.master_seed, stream)
        };
        for &est in &cfg.estimators {
            let lead = vec![
                stream.to_string(),
                est.as_str().to_string(),
                cfg.index_convention.as_str().to_string(),
                params.n().to_string(),
                num(params.delta()),
                num(params.horizon()),
            ];
            let tail = match estimate(est, &path, cfg.theta_true, cfg.index_convention) {
                Ok(r) => vec![num(r.estimate), num(r.normalized_error), num(r.denominator), "ok".into()],
                Err(CoreError::DegenerateDenominator { value, .. }) => {
                    vec![String::new(), String::new(), num(value), "degenerate".into()]
                }
                Err(e) => return Err(e.into()),
            };
            table.push(lead.into_iter().chain(tail).collect());
        }
    }
    prepare_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    write(&cfg.output_dir, "estimates.csv", &table, &mut files)?;
    Ok(files)
}

/// `oracles.csv`: exact moments and cumulants for every schedule cell.
pub fn oracle(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut table = Table::new(&["n", "delta", "T", "theta", "quantity", "exact", "limit", "rate_expression", "note"]);
    for c in cfg.schedule.cells() {
        let params = c.params(cfg.theta_true)?;
        for q in MomentQuantity::ALL {
            let mut row = vec![c.n.to_string(), num(c.delta), num(c.horizon()), num(cfg.theta_true), q.as_str().into()];
            match moment_report(q, &params) {
                Ok(r) => row.extend([num(r.exact_value), num(r.asymptotic_value), num(r.bound_value), String::new()]),
                Err(e @ CoreError::TooLarge { .. }) => {
                    row.extend([String::new(), String::new(), String::new(), e.to_string()])
                }
                Err(e) => return Err(e.into()),
            }
            table.push(row);
        }
    }
    prepare_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    write(&cfg.output_dir, "oracles.csv", &table, &mut files)?;
    Ok(files)
}

fn cells_table(runs: &[(ou_drift_core::Estimator, &[McSummary])]) -> Table {
    let mut t = Table::new(&[
        "estimator",
        "n",
        "delta",
        "T",
        "replications",
        "excluded",
        "w1",
        "w1_se",
        "kolmogorov",
        "mean_error",
        "rmse",
        "mae",
        "mae_se",
        "k3",
        "k3_se",
        "k4",
        "k4_se",
        "gated_pass",
    ]);
    for (est, sums) in runs {
        for s in *sums {
            let cum = |f: fn(&ou_drift_core::SampleCumulants) -> f64| {
                s.error_cumulants.as_ref().map(|c| num(f(c))).unwrap_or_default()
            };
            t.push(vec![
                est.as_str().into(),
                s.cell.n.to_string(),
                num(s.cell.delta),
                num(s.cell.horizon()),
                s.replications.to_string(),
                s.excluded.to_string(),
                num(s.distance.w1),
                num(s.w1_se),
                num(s.distance.kolmogorov),
                num(s.mean_error),
                num(s.rmse),
                num(s.mae),
                num(s.mae_se),
                cum(|c| c.k3),
                cum(|c| c.se_k3),
                cum(|c| c.k4),
                cum(|c| c.se_k4),
                s.gated_pass().to_string(),
            ]);
        }
    }
    t
}

/// Result of `rates`.
#[derive(Debug)]
pub struct RatesOutcome {
    pub runs: Vec<ScheduleRun>,
    pub files: Vec<PathBuf>,
}

/// Run the schedule for every estimator and fit `W1` against each rate bound.
pub fn rates(cfg: &RunConfig) -> Result<RatesOutcome> {
    let opts = cell_options(cfg);
    let runs = cfg
        .estimators
        .iter()
        .map(|&est| run_schedule(&cfg.schedule, cfg.theta_true, est, cfg.replications, cfg.master_seed, &opts))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rates = Table::new(&[
        "estimator",
        "n",
        "delta",
        "T",
        "bound",
        "w1",
        "w1_se",
        "predictor",
        "slope",
        "intercept",
        "r2",
        "dominant_term",
        "dominant_slope",
    ]);
    let mut plot = Table::new(&[
        "n",
        "delta",
        "T",
        "bound_term_1",
        "bound_term_2",
        "w1",
        "w1_se",
        "kolmogorov",
        "estimator",
        "slope",
        "intercept",
        "r2",
    ]);
    for run in &runs {
        let (b, d) = (&run.bound_fit, &run.dominant_fit);
        for s in &run.summaries {
            let c = s.cell;
            let (t1, t2) = c.bound_terms(run.estimator);
            rates.push(vec![
                run.estimator.as_str().into(),
                c.n.to_string(),
                num(c.delta),
                num(c.horizon()),
                num(c.bound(run.estimator)),
                num(s.distance.w1),
                num(s.w1_se),
                b.predictor.clone(),
                num(b.fit.slope),
                num(b.fit.intercept),
                num(b.fit.r2),
                d.predictor.clone(),
                num(d.fit.slope),
            ]);
            plot.push(vec![
                c.n.to_string(),
                num(c.delta),
                num(c.horizon()),
                num(t1),
                num(t2),
                num(s.distance.w1),
                num(s.w1_se),
                num(s.distance.kolmogorov),
                run.estimator.as_str().into(),
                num(b.fit.slope),
                num(b.fit.intercept),
                num(b.fit.r2),
            ]);
        }
    }

    prepare_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    if cfg.emits(Emit::CellsCsv) {
        let pairs: Vec<_> = runs.iter().map(|r| (r.estimator, r.summaries.as_slice())).collect();
        write(dir, "cells.csv", &cells_table(&pairs), &mut files)?;
    }
    if cfg.emits(Emit::RatesCsv) {
        write(dir, "rates.csv", &rates, &mut files)?;
    }
    if cfg.emits(Emit::PlotdataCsv) {
        write(dir, "plotdata.csv", &plot, &mut files)?;
    }
    if cfg.emits(Emit::ReportMd) {
        write_text(dir, "report.md", &report::rates_report(cfg, &runs), &mut files)?;
    }
    Ok(RatesOutcome { runs, files })
}

/// One line of the `verify` report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub scope: String,
    pub exact: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub gated: bool,
    pub pass: bool,
}

impl CheckRow {
    pub fn verdict(&self) -> &'static str {
        match (self.pass, self.gated) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "fail (not gated)",
        }
    }
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub checks: Vec<CheckRow>,
    pub coupling: CouplingReport,
    pub files: Vec<PathBuf>,
}

impl VerifyOutcome {
    /// True when every gated check passes.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.gated)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckRow> {
        self.checks.iter().filter(|c| c.gated && !c.pass)
    }
}

/// Oracle parity, cumulant screens, rate-fit preconditions and the coupling sweep.
pub fn verify(cfg: &RunConfig) -> Result<VerifyOutcome> {
    cfg.schedule.require_clt_valid()?;
    let opts = cell_options(cfg);
    let mut checks = Vec::new();
    let mut all = Vec::new();
    for &est in &cfg.estimators {
        let sums = run_cells(&cfg.schedule, cfg.theta_true, est, cfg.replications, cfg.master_seed, &opts)?;
        // refuses to go on when too few replications support a fit
        fit_schedule(&cfg.schedule, est, &sums)?;
        for s in &sums {
            let scope = format!("{} n={} delta={}", est.as_str(), s.cell.n, s.cell.delta);
            for c in &s.oracle_checks {
                checks.push(CheckRow {
                    check: c.name.clone(),
                    scope: scope.clone(),
                    exact: c.exact,
                    empirical: c.empirical,
                    standard_error: c.standard_error,
                    gated: c.gated,
                    pass: c.passes_at(GATE_SIGMAS),
                });
            }
        }
        all.push((est, sums));
    }

    let sweep = Preset::CouplingSweep.schedule();
    let coupling = coupling_check(&sweep, cfg.theta_true, cfg.replications, cfg.master_seed)?;
    checks.push(CheckRow {
        check: "coupling_spread".into(),
        scope: sweep.name().into(),
        exact: COUPLING_SPREAD_LIMIT,
        empirical: coupling.spread,
        standard_error: f64::NAN,
        gated: true,
        pass: coupling.pass(),
    });

    let mut table = Table::new(&["check", "scope", "exact", "empirical", "se", "z", "gated", "verdict"]);
    for c in &checks {
        let z = if c.standard_error.is_finite() && c.standard_error > 0.0 {
            num((c.empirical - c.exact) / c.standard_error)
        } else {
            String::new()
        };
        let se = if c.standard_error.is_finite() { num(c.standard_error) } else { String::new() };
        table.push(vec![
            c.check.clone(),
            c.scope.clone(),
            num(c.exact),
            num(c.empirical),
            se,
            z,
            c.gated.to_string(),
            c.verdict().into(),
        ]);
    }

    prepare_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    write(dir, "checks.csv", &table, &mut files)?;
    if cfg.emits(Emit::CellsCsv) {
        let pairs: Vec<_> = all.iter().map(|(e, s)| (*e, s.as_slice())).collect();
        write(dir, "cells.csv", &cells_table(&pairs), &mut files)?;
    }
    let mut outcome = VerifyOutcome { checks, coupling, files };
    if cfg.emits(Emit::ReportMd) {
        let text = report::verify_report(cfg, &outcome);
        write_text(dir, "report.md", &text, &mut outcome.files)?;
    }
    Ok(outcome)
}
