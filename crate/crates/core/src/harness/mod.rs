//! Monte Carlo experiments over `(n, delta_n)` schedules.
//!
//! Replications are independent work items executed on the ambient rayon
//! pool. Every path is keyed by `(seed, replication index)` and every
//! reduction runs in index order, so results do not depend on the number of
//! workers.

mod cell;
mod checks;
mod fit;
mod schedule;

pub use cell::{
    bound_label, cell_seed, fit_schedule, run_cell, run_cells, run_schedule, CellOptions, McSummary, OracleCheck,
    RateFit, Response, ScheduleRun, DEGENERATE_ABORT_FRACTION, GATE_SIGMAS, MIN_FIT_REPLICATIONS,
};
pub use checks::{
    consistency_check, coupling_check, coupling_difference, empirical_var_fn_z, negative_control, variance_gap_fit,
    ConsistencyReport, CouplingCell, CouplingReport, NegativeControl, CONSISTENCY_SIGMAS, COUPLING_SPREAD_LIMIT,
};
pub use fit::{fit_rate, LogLogFit};
pub use schedule::{Cell, Preset, Schedule};
