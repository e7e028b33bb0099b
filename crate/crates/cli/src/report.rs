//! Markdown summaries. No timestamps or host details, so reruns are byte-identical.

use std::fmt::Write;

use ou_drift_core::harness::{ScheduleRun, GATE_SIGMAS};
use ou_drift_core::Estimator;

use crate::commands::VerifyOutcome;
use crate::config::RunConfig;

/// The theorem each estimator's fit speaks to, as (title, statement).
pub fn theorem_for(estimator: Estimator) -> (&'static str, &'static str) {
    match estimator {
        Estimator::Amce => (
            "Wasserstein rate of the approximate minimum contrast estimator",
            "d_W( sqrt(T/(2 theta)) (theta_tilde_n - theta), N(0,1) ) <= C (Delta_n^2 + 1/sqrt(n Delta_n))",
        ),
        Estimator::Amle => (
            "Wasserstein rate of the approximate maximum likelihood estimator",
            "d_W( sqrt(T/(2 theta)) (theta_hat_n - theta), N(0,1) ) <= 1/sqrt(n Delta_n) + C sqrt(n Delta_n^3)",
        ),
    }
}

fn header(out: &mut String, title: &str, cfg: &RunConfig) {
    let _ = writeln!(out, "# {title}\n");
    let _ = writeln!(out, "| setting | value |\n|---|---|");
    let _ = writeln!(out, "| theta | {} |", cfg.theta_true);
    let _ = writeln!(out, "| schedule | {} ({} cells) |", cfg.schedule.name(), cfg.schedule.cells().len());
    let _ = writeln!(out, "| replications per cell | {} |", cfg.replications);
    let _ = writeln!(out, "| master seed | {} |", cfg.master_seed);
    let _ = writeln!(out, "| index convention | {} |\n", cfg.index_convention.as_str());
}

pub fn rates_report(cfg: &RunConfig, runs: &[ScheduleRun]) -> String {
    let mut out = String::new();
    header(&mut out, "Normal approximation rates", cfg);
    for run in runs {
        let (title, statement) = theorem_for(run.estimator);
        let _ = writeln!(out, "## {}: {title}\n", run.estimator.as_str().to_uppercase());
        let _ = writeln!(out, "Theorem addressed: `{statement}`\n");
        let _ = writeln!(out, "| n | delta | T | bound | W1 | W1 se | Kolmogorov | excluded |");
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        for s in &run.summaries {
            let _ = writeln!(
                out,
                "| {} | {:.6} | {:.3} | {:.5} | {:.5} | {:.5} | {:.5} | {} |",
                s.cell.n,
                s.cell.delta,
                s.cell.horizon(),
                s.cell.bound(run.estimator),
                s.distance.w1,
                s.w1_se,
                s.distance.kolmogorov,
                s.excluded
            );
        }
        let (b, d) = (&run.bound_fit, &run.dominant_fit);
        let _ = writeln!(
            out,
            "\nLog-log fit of W1 on `{}`: slope {:.4}, intercept {:.4}, r2 {:.4} ({} cells).",
            b.predictor, b.fit.slope, b.fit.intercept, b.fit.r2, b.fit.points
        );
        let _ =
            writeln!(out, "Against the dominant term `{}`: slope {:.4}, r2 {:.4}.", d.predictor, d.fit.slope, d.fit.r2);
        let _ = writeln!(
            out,
            "W1 strictly decreasing across cells: {}; first-to-last separation {:.2} bootstrap SE.\n",
            if run.w1_strictly_decreasing() { "yes" } else { "no" },
            run.first_last_separation()
        );
    }
    let _ = writeln!(
        out,
        "Slopes are reported, not tested against thresholds: the constants in the bounds are unknown, \
         and a slope near 1 only supports the bound as an upper envelope."
    );
    out
}

pub fn verify_report(cfg: &RunConfig, outcome: &VerifyOutcome) -> String {
    let mut out = String::new();
    header(&mut out, "Verification", cfg);
    let _ = writeln!(
        out,
        "Gated checks fail beyond {GATE_SIGMAS} standard errors; ungated rows are recorded for inspection only.\n"
    );
    let _ = writeln!(out, "| check | scope | exact | empirical | se | verdict |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    for c in &outcome.checks {
        let _ = writeln!(
            out,
            "| {} | {} | {:.6e} | {:.6e} | {:.3e} | {} |",
            c.check,
            c.scope,
            c.exact,
            c.empirical,
            c.standard_error,
            c.verdict()
        );
    }
    let _ = writeln!(out, "\n## Coupling sweep\n");
    let _ = writeln!(out, "| n | delta | L2 | L2 se | L4 | L2 * n delta |\n|---|---|---|---|---|---|");
    for c in &outcome.coupling.cells {
        let _ = writeln!(
            out,
            "| {} | {} | {:.5e} | {:.2e} | {:.5e} | {:.5} |",
            c.cell.n, c.cell.delta, c.l2, c.l2_se, c.l4, c.scaled_l2
        );
    }
    let _ = writeln!(out, "\nSpread (max/min of L2 * n delta): {:.3}\n", outcome.coupling.spread);
    let failing: Vec<String> = outcome.failing().map(|c| format!("{} ({})", c.check, c.scope)).collect();
    if failing.is_empty() {
        let _ = writeln!(out, "**Result: all gated checks pass.**");
    } else {
        let _ = writeln!(out, "**Result: {} gated check(s) failed:** {}", failing.len(), failing.join("; "));
    }
    out
}
