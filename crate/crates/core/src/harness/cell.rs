use rayon::prelude::*;

use super::fit::{fit_rate, LogLogFit};
use super::schedule::{Cell, Schedule};
use crate::error::{Error, Result};
use crate::estimators::{big_f_n, estimate, lambda_n, Estimator, IndexConvention};
use crate::metrics::{bootstrap_w1_se, distance_report, sample_cumulants, DistanceReport, SampleCumulants};
use crate::oracles::{exact_k3_lambda, exact_var_fn_z, exact_var_lambda, k3_lambda_is_zero};
use crate::process::{simulate_coupled, OuParams};
use crate::rng::derive_seed;

/// Standard errors allowed between an oracle and its Monte Carlo estimate
/// before a gated check fails.
pub const GATE_SIGMAS: f64 = 4.0;
/// Minimum replications for a cell to feed a rate fit.
pub const MIN_FIT_REPLICATIONS: usize = 100;
/// Abort when more than this fraction of paths is degenerate.
pub const DEGENERATE_ABORT_FRACTION: f64 = 1e-3;

const BOOTSTRAP_TAG: u64 = 0xB007;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOptions {
    pub convention: IndexConvention,
    pub bootstrap_resamples: usize,
    /// Compute and attach oracle cross-checks.
    pub oracle_checks: bool,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self { convention: IndexConvention::Body, bootstrap_resamples: 200, oracle_checks: true }
    }
}

/// Oracle value against its Monte Carlo counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub exact: f64,
    pub empirical: f64,
    pub standard_error: f64,
    /// Whether a failure fails the run. Ungated checks are reported only.
    pub gated: bool,
}

impl OracleCheck {
    pub fn new(name: impl Into<String>, exact: f64, empirical: f64, standard_error: f64, gated: bool) -> Self {
        Self { name: name.into(), exact, empirical, standard_error, gated }
    }

    /// `|empirical - exact|` in standard errors.
    pub fn z_score(&self) -> f64 {
        let gap = (self.empirical - self.exact).abs();
        if self.standard_error > 0.0 {
            gap / self.standard_error
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passes_at(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }

    pub fn pass(&self) -> bool {
        self.passes_at(GATE_SIGMAS)
    }
}

/// Monte Carlo aggregate for one `(n, delta)` cell and one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub cell: Cell,
    pub theta: f64,
    pub estimator: Estimator,
    pub replications: usize,
    pub excluded: usize,
    /// Distances of the normalized errors to `N(0, 1)`.
    pub distance: DistanceReport,
    pub w1_se: f64,
    pub mean_error: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Standard error of `mae`.
    pub mae_se: f64,
    /// Cumulants of the normalized errors (`None` below 4 usable paths).
    pub error_cumulants: Option<SampleCumulants>,
    pub oracle_checks: Vec<OracleCheck>,
}

impl McSummary {
    pub fn gated_pass(&self) -> bool {
        self.oracle_checks.iter().filter(|c| c.gated).all(OracleCheck::pass)
    }

    pub fn failing_checks(&self) -> impl Iterator<Item = &OracleCheck> {
        self.oracle_checks.iter().filter(|c| c.gated && !c.pass())
    }
}

struct Replicate {
    estimate: Option<(f64, f64)>,
    big_f_z: f64,
    g: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if n > 1.0 { values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Simulate `replications` coupled `(X, Z)` paths for one cell, evaluate
/// `estimator` on each `X`, and summarize the normalized errors.
///
/// Path `i` is stream `i` of `master_seed`; all reductions run in index
/// order, so the summary is bit-identical for any thread count.
pub fn run_cell(
    params: &OuParams,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    options: &CellOptions,
) -> Result<McSummary> {
    if replications < 2 {
        return Err(Error::TooSmall { size: replications, min: 2 });
    }
    let theta = params.theta();
    let root_t = params.horizon().sqrt();
    let reps: Vec<Replicate> = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let pair = simulate_coupled(params, master_seed, i);
            let est = estimate(estimator, &pair.observed, theta, options.convention)
                .ok()
                .map(|r| (r.estimate, r.normalized_error));
            let g = lambda_n(&pair.observed).expect("coupled paths keep innovations") / root_t;
            Replicate { estimate: est, big_f_z: big_f_n(&pair.stationary, theta), g }
        })
        .collect();

    let usable: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.estimate).collect();
    let excluded = replications - usable.len();
    if excluded as f64 > DEGENERATE_ABORT_FRACTION * replications as f64 {
        return Err(Error::TooManyDegenerate { excluded, total: replications });
    }
    let errors: Vec<f64> = usable.iter().map(|u| u.1).collect();
    let distance = distance_report(&errors)?;
    let w1_se = bootstrap_w1_se(&errors, options.bootstrap_resamples.max(2), derive_seed(master_seed, BOOTSTRAP_TAG))?;
    let k = usable.len() as f64;
    let mean_error = usable.iter().map(|u| u.0 - theta).sum::<f64>() / k;
    let rmse = (usable.iter().map(|u| (u.0 - theta).powi(2)).sum::<f64>() / k).sqrt();
    let (mae, mae_se) = mean_and_se(usable.iter().map(|u| (u.0 - theta).abs()));
    let error_cumulants = if errors.len() >= 4 { Some(sample_cumulants(&errors)?) } else { None };

    let mut oracle_checks = Vec::new();
    if options.oracle_checks {
        let (f2, f2_se) = mean_and_se(reps.iter().map(|r| r.big_f_z * r.big_f_z));
        oracle_checks.push(OracleCheck::new("exact_var_fn_z", exact_var_fn_z(params), f2, f2_se, true));
        let (g2, g2_se) = mean_and_se(reps.iter().map(|r| r.g * r.g));
        oracle_checks.push(OracleCheck::new("exact_var_lambda", exact_var_lambda(params), g2, g2_se, true));
        if reps.len() >= 4 {
            let g: Vec<f64> = reps.iter().map(|r| r.g).collect();
            let gc = sample_cumulants(&g)?;
            oracle_checks.push(OracleCheck::new("exact_k3_lambda", exact_k3_lambda(params)?, gc.k3, gc.se_k3, true));
            oracle_checks.push(OracleCheck::new(
                "k3_lambda_is_zero",
                k3_lambda_is_zero(params),
                gc.k3,
                gc.se_k3,
                false,
            ));
        }
        if let Some(c) = &error_cumulants {
            oracle_checks.push(OracleCheck::new("normalized_error_k3", 0.0, c.k3, c.se_k3, false));
            oracle_checks.push(OracleCheck::new("normalized_error_k4", 0.0, c.k4, c.se_k4, false));
        }
    }

    Ok(McSummary {
        cell: Cell::new(params.n(), params.delta()),
        theta,
        estimator,
        replications,
        excluded,
        distance,
        w1_se,
        mean_error,
        rmse,
        mae,
        mae_se,
        error_cumulants,
        oracle_checks,
    })
}

/// Which quantity a rate fit explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    W1Amce,
    W1Amle,
    VarGapFnZ,
}

impl Response {
    pub fn for_estimator(estimator: Estimator) -> Self {
        match estimator {
            Estimator::Amce => Response::W1Amce,
            Estimator::Amle => Response::W1Amle,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Response::W1Amce => "W1_AMCE",
            Response::W1Amle => "W1_AMLE",
            Response::VarGapFnZ => "VarGapFnZ",
        }
    }
}

/// Log-log fit of a response against a bound expression across a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub schedule: String,
    pub response: Response,
    /// Human-readable bound expression.
    pub predictor: String,
    pub fit: LogLogFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRun {
    pub schedule: Schedule,
    pub estimator: Estimator,
    pub summaries: Vec<McSummary>,
    /// `W1` against the full bound expression.
    pub bound_fit: RateFit,
    /// `W1` against the bound term that dominates at the largest cell.
    pub dominant_fit: RateFit,
}

impl ScheduleRun {
    /// `W1` strictly decreasing from cell to cell.
    pub fn w1_strictly_decreasing(&self) -> bool {
        self.summaries.windows(2).all(|w| w[1].distance.w1 < w[0].distance.w1)
    }

    /// `(W1_first - W1_last) / sqrt(se_first^2 + se_last^2)`.
    pub fn first_last_separation(&self) -> f64 {
        let (a, b) = (&self.summaries[0], &self.summaries[self.summaries.len() - 1]);
        (a.distance.w1 - b.distance.w1) / a.w1_se.hypot(b.w1_se)
    }
}

pub fn bound_label(estimator: Estimator) -> (&'static str, &'static str, &'static str) {
    match estimator {
        Estimator::Amce => ("delta^2 + 1/sqrt(n delta)", "delta^2", "1/sqrt(n delta)"),
        Estimator::Amle => ("1/sqrt(n delta) + sqrt(n delta^3)", "1/sqrt(n delta)", "sqrt(n delta^3)"),
    }
}

/// Seed used for cell `index` of a schedule run.
pub fn cell_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64 + 1)
}

/// Run every cell of `schedule`, then fit `W1` against the estimator's rate bound.
pub fn run_schedule(
    schedule: &Schedule,
    theta: f64,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    options: &CellOptions,
) -> Result<ScheduleRun> {
    schedule.require_clt_valid()?;
    let summaries = run_cells(schedule, theta, estimator, replications, master_seed, options)?;
    let (bound_fit, dominant_fit) = fit_schedule(schedule, estimator, &summaries)?;
    Ok(ScheduleRun { schedule: schedule.clone(), estimator, summaries, bound_fit, dominant_fit })
}

/// Cells only, no regime check and no fit.
pub fn run_cells(
    schedule: &Schedule,
    theta: f64,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    options: &CellOptions,
) -> Result<Vec<McSummary>> {
    schedule
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| run_cell(&c.params(theta)?, estimator, replications, cell_seed(master_seed, i), options))
        .collect()
}

/// Fits over the summaries with enough replications.
pub fn fit_schedule(schedule: &Schedule, estimator: Estimator, summaries: &[McSummary]) -> Result<(RateFit, RateFit)> {
    let eligible: Vec<&McSummary> = summaries.iter().filter(|s| s.replications >= MIN_FIT_REPLICATIONS).collect();
    if eligible.len() < 3 {
        return Err(Error::InsufficientCells { got: eligible.len() });
    }
    let (full, first, second) = bound_label(estimator);
    let last = eligible[eligible.len() - 1].cell.bound_terms(estimator);
    let take_first = last.0 >= last.1;
    let full_pts: Vec<(f64, f64)> = eligible.iter().map(|s| (s.cell.bound(estimator), s.distance.w1)).collect();
    let dom_pts: Vec<(f64, f64)> = eligible
        .iter()
        .map(|s| {
            let t = s.cell.bound_terms(estimator);
            (if take_first { t.0 } else { t.1 }, s.distance.w1)
        })
        .collect();
    let response = Response::for_estimator(estimator);
    Ok((
        RateFit { schedule: schedule.name().into(), response, predictor: full.into(), fit: fit_rate(&full_pts)? },
        RateFit {
            schedule: schedule.name().into(),
            response,
            predictor: (if take_first { first } else { second }).into(),
            fit: fit_rate(&dom_pts)?,
        },
    ))
}
