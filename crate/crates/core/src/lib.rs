//! Drift estimation for a discretely observed Ornstein-Uhlenbeck process.
//!
//! The crate provides exact path simulation ([`process`]), the approximate
//! minimum contrast and approximate maximum likelihood estimators
//! ([`estimators`]), exact moment and cumulant oracles ([`oracles`]),
//! distances to the standard normal law ([`metrics`]) and a Monte Carlo
//! harness that checks the estimators' normal approximation rates
//! ([`harness`]).

pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod numeric;
pub mod oracles;
pub mod process;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{amce, amle, big_f_n, f_n, lambda_n, EstimateRecord, Estimator, IndexConvention};
pub use harness::{Cell, McSummary, Preset, RateFit, Schedule};
pub use metrics::{kolmogorov_to_std_normal, sample_cumulants, w1_to_std_normal, DistanceReport, SampleCumulants};
pub use oracles::{MomentQuantity, MomentReport};
pub use process::{rho, simulate_path, transition_coefficients, OuParams, SamplePath, Variant};
