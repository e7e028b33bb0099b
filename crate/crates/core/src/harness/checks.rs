use rayon::prelude::*;

use super::cell::{cell_seed, run_cells, CellOptions, McSummary, RateFit, Response};
use super::fit::fit_rate;
use super::schedule::{Cell, Schedule};
use crate::error::Result;
use crate::estimators::{big_f_n, f_n, Estimator};
use crate::oracles::exact_var_fn_z;
use crate::process::{coupled_from_normals, OuParams, PathNormals};

/// Allowed spread of `||F_n(X) - F_n(Z)||_2 * n delta` across a coupling sweep.
pub const COUPLING_SPREAD_LIMIT: f64 = 10.0;
/// Standard errors separating successive cells in a consistency check.
pub const CONSISTENCY_SIGMAS: f64 = 3.0;

/// `F_n(X) - F_n(Z)` for one coupled pair. Setting `zero_start` forces
/// `Z_0 = 0`, in which case the two paths coincide.
pub fn coupling_difference(params: &OuParams, seed: u64, stream: u64, zero_start: bool) -> f64 {
    let mut normals = PathNormals::draw(params.n(), seed, stream);
    if zero_start {
        normals.start = 0.0;
    }
    let pair = coupled_from_normals(params, &normals, seed, stream);
    // the centering cancels in the difference
    params.horizon().sqrt() * (f_n(&pair.observed) - f_n(&pair.stationary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCell {
    pub cell: Cell,
    pub l2: f64,
    pub l2_se: f64,
    pub l4: f64,
    /// `l2 * n delta`
    pub scaled_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub schedule: String,
    pub cells: Vec<CouplingCell>,
    /// `max / min` of `scaled_l2` over cells.
    pub spread: f64,
}

impl CouplingReport {
    pub fn pass(&self) -> bool {
        self.spread <= COUPLING_SPREAD_LIMIT
    }
}

/// Empirical `L^2` and `L^4` norms of `F_n(X) - F_n(Z)` per cell.
pub fn coupling_check(
    schedule: &Schedule,
    theta: f64,
    replications: usize,
    master_seed: u64,
) -> Result<CouplingReport> {
    let mut cells = Vec::with_capacity(schedule.cells().len());
    for (idx, c) in schedule.cells().iter().enumerate() {
        let params = c.params(theta)?;
        let seed = cell_seed(master_seed, idx);
        let diffs: Vec<f64> =
            (0..replications as u64).into_par_iter().map(|i| coupling_difference(&params, seed, i, false)).collect();
        let m = diffs.len() as f64;
        let sq: Vec<f64> = diffs.iter().map(|d| d * d).collect();
        let mean_sq = sq.iter().sum::<f64>() / m;
        let var_sq = sq.iter().map(|s| (s - mean_sq).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let l2 = mean_sq.sqrt();
        // delta method on sqrt
        let l2_se = if l2 > 0.0 { (var_sq / m).sqrt() / (2.0 * l2) } else { 0.0 };
        let l4 = (diffs.iter().map(|d| d.powi(4)).sum::<f64>() / m).powf(0.25);
        cells.push(CouplingCell { cell: *c, l2, l2_se, l4, scaled_l2: l2 * c.horizon() });
    }
    let (lo, hi) = cells.iter().fold((f64::INFINITY, 0.0f64), |(l, h), c| (l.min(c.scaled_l2), h.max(c.scaled_l2)));
    Ok(CouplingReport { schedule: schedule.name().into(), cells, spread: hi / lo })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub schedule: String,
    pub estimator: Estimator,
    pub summaries: Vec<McSummary>,
}

impl ConsistencyReport {
    /// Each cell's MAE lies more than [`CONSISTENCY_SIGMAS`] combined standard
    /// errors below the previous one.
    pub fn significantly_decreasing(&self) -> bool {
        self.summaries.windows(2).all(|w| w[0].mae - w[1].mae > CONSISTENCY_SIGMAS * w[0].mae_se.hypot(w[1].mae_se))
    }

    /// `|mean estimate - theta| / theta` at the last cell.
    pub fn final_relative_bias(&self) -> f64 {
        let s = self.summaries.last().expect("non-empty schedule");
        s.mean_error.abs() / s.theta
    }
}

/// Mean absolute error of `estimator` across the cells of `schedule`.
pub fn consistency_check(
    schedule: &Schedule,
    theta: f64,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    options: &CellOptions,
) -> Result<ConsistencyReport> {
    let opts = CellOptions { oracle_checks: false, ..*options };
    let summaries = run_cells(schedule, theta, estimator, replications, master_seed, &opts)?;
    Ok(ConsistencyReport { schedule: schedule.name().into(), estimator, summaries })
}

/// Outcome of running a schedule whose cells violate the CLT regime.
/// Recorded only; a decrease here is never taken as evidence of convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeControl {
    pub schedule: String,
    pub summaries: Vec<McSummary>,
    pub w1_decreased: bool,
}

pub fn negative_control(
    schedule: &Schedule,
    theta: f64,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    options: &CellOptions,
) -> Result<NegativeControl> {
    let opts = CellOptions { oracle_checks: false, ..*options };
    let summaries = run_cells(schedule, theta, estimator, replications, master_seed, &opts)?;
    let w1_decreased = summaries.windows(2).all(|w| w[1].distance.w1 < w[0].distance.w1);
    Ok(NegativeControl { schedule: schedule.name().into(), summaries, w1_decreased })
}

/// Gap `|E F_n(Z)^2 - 1/(2 theta^3)|` per cell and its log-log fit against
/// `delta^2 + 1/(n delta)`.
pub fn variance_gap_fit(schedule: &Schedule, theta: f64) -> Result<(Vec<f64>, RateFit)> {
    let limit = 1.0 / (2.0 * theta.powi(3));
    let mut gaps = Vec::new();
    let mut pts = Vec::new();
    for c in schedule.cells() {
        let gap = (exact_var_fn_z(&c.params(theta)?) - limit).abs();
        gaps.push(gap);
        pts.push((c.delta_sq() + 1.0 / c.horizon(), gap));
    }
    let fit = fit_rate(&pts)?;
    Ok((
        gaps,
        RateFit {
            schedule: schedule.name().into(),
            response: Response::VarGapFnZ,
            predictor: "delta^2 + 1/(n delta)".into(),
            fit,
        },
    ))
}

/// Empirical `Var F_n(Z)` (second moment, the mean being zero) with its
/// standard error, from stationary paths `0..replications` of `seed`.
pub fn empirical_var_fn_z(params: &OuParams, replications: usize, seed: u64) -> (f64, f64) {
    let sq: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let path = crate::process::simulate_stream(params, crate::process::Variant::Stationary, seed, i);
            big_f_n(&path, params.theta()).powi(2)
        })
        .collect();
    let m = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / m;
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_start_coupling_is_exact() {
        let p = OuParams::new(1.0, 0.05, 300).unwrap();
        for stream in 0..10 {
            assert_eq!(coupling_difference(&p, 4, stream, true), 0.0);
        }
        assert_ne!(coupling_difference(&p, 4, 0, false), 0.0);
    }

    #[test]
    fn variance_gap_fit_on_sqrt_schedule() {
        let s = Schedule::power_of("gap", 0.5, &[100, 1000, 10_000]).unwrap();
        let (gaps, fit) = variance_gap_fit(&s, 1.0).unwrap();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(fit.fit.slope > 0.0);
    }
}
