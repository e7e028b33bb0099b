//! Drift estimators built from the empirical second moment of a path.
//!
//! * AMCE: `theta_tilde = 1 / (2 f_n(X))`, inverting the stationary variance.
//! * AMLE: `theta_hat = -sum X_{i-1}(X_i - X_{i-1}) / (delta sum X_{i-1}^2)`.

use crate::error::{Error, Result};
use crate::process::{OuParams, SamplePath, Variant};

/// Denominators at or below this are treated as an unusable path.
pub const DEGENERACY_THRESHOLD: f64 = 1e-30;

/// Which grid points enter `f_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum IndexConvention {
    /// `t_0 .. t_{n-1}`
    #[default]
    Body,
    /// `t_1 .. t_n`
    Abstract,
}

impl IndexConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            IndexConvention::Body => "body",
            IndexConvention::Abstract => "abstract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Amce,
    Amle,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Amce => "amce",
            Estimator::Amle => "amle",
        }
    }
}

/// One estimator evaluation on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub estimator: Estimator,
    pub estimate: f64,
    /// `sqrt(T / (2 theta_true)) * (estimate - theta_true)`
    pub normalized_error: f64,
    /// `f_n(X)` for AMCE, `S_n / T` for AMLE.
    pub denominator: f64,
    pub params: OuParams,
    pub seed: u64,
    pub stream: u64,
}

/// `sqrt(T / (2 theta_true)) * (estimate - theta_true)`.
#[inline]
pub fn normalized_error(estimate: f64, params: &OuParams, theta_true: f64) -> f64 {
    (params.horizon() / (2.0 * theta_true)).sqrt() * (estimate - theta_true)
}

/// Empirical second moment `(1/n) sum_{i=0}^{n-1} V_{t_i}^2`.
pub fn f_n(path: &SamplePath) -> f64 {
    f_n_with(path, IndexConvention::Body)
}

pub fn f_n_with(path: &SamplePath, convention: IndexConvention) -> f64 {
    let v = path.values();
    let n = path.params().n();
    let window = match convention {
        IndexConvention::Body => &v[..n],
        IndexConvention::Abstract => &v[1..],
    };
    window.iter().map(|x| x * x).sum::<f64>() / n as f64
}

/// `F_n = sqrt(T) (f_n - 1/(2 theta_true))`.
pub fn big_f_n(path: &SamplePath, theta_true: f64) -> f64 {
    path.params().horizon().sqrt() * (f_n(path) - 1.0 / (2.0 * theta_true))
}

fn check_denominator(value: f64) -> Result<()> {
    if value > DEGENERACY_THRESHOLD {
        Ok(())
    } else {
        Err(Error::DegenerateDenominator { value, threshold: DEGENERACY_THRESHOLD })
    }
}

fn require_observed(path: &SamplePath) -> Result<()> {
    match path.variant() {
        Variant::FromZero => Ok(()),
        Variant::Stationary => Err(Error::WrongVariant),
    }
}

/// Approximate minimum contrast estimator.
pub fn amce(path: &SamplePath, theta_true: f64, convention: IndexConvention) -> Result<EstimateRecord> {
    require_observed(path)?;
    let fx = f_n_with(path, convention);
    check_denominator(fx)?;
    let estimate = 1.0 / (2.0 * fx);
    Ok(EstimateRecord {
        estimator: Estimator::Amce,
        estimate,
        normalized_error: normalized_error(estimate, path.params(), theta_true),
        denominator: fx,
        params: *path.params(),
        seed: path.seed(),
        stream: path.stream(),
    })
}

/// `S_n = delta * sum_{i=1}^n X_{t_{i-1}}^2`.
pub fn s_n(path: &SamplePath) -> f64 {
    let n = path.params().n();
    path.params().delta() * path.values()[..n].iter().map(|x| x * x).sum::<f64>()
}

/// Approximate maximum likelihood estimator.
pub fn amle(path: &SamplePath, theta_true: f64) -> Result<EstimateRecord> {
    require_observed(path)?;
    let p = path.params();
    let sn = s_n(path);
    check_denominator(sn)?;
    let v = path.values();
    let score: f64 = v.windows(2).map(|w| w[0] * (w[1] - w[0])).sum();
    let estimate = -score / sn;
    Ok(EstimateRecord {
        estimator: Estimator::Amle,
        estimate,
        normalized_error: normalized_error(estimate, p, theta_true),
        denominator: sn / p.horizon(),
        params: *p,
        seed: path.seed(),
        stream: path.stream(),
    })
}

pub fn estimate(
    estimator: Estimator,
    path: &SamplePath,
    theta_true: f64,
    convention: IndexConvention,
) -> Result<EstimateRecord> {
    match estimator {
        Estimator::Amce => amce(path, theta_true, convention),
        Estimator::Amle => amle(path, theta_true),
    }
}

/// Martingale term `Lambda_n = sum_{i=1}^n e^{-theta t_i} X_{t_{i-1}} (zeta_{t_i} - zeta_{t_{i-1}})`.
///
/// Evaluated through `e^{-theta t_i} (zeta_{t_i} - zeta_{t_{i-1}}) = eta_i`, the
/// path's own innovation, so it stays finite for any horizon.
pub fn lambda_n(path: &SamplePath) -> Result<f64> {
    let eta = path.innovations().ok_or(Error::MissingInnovations)?;
    let v = path.values();
    Ok(v.iter().zip(eta).map(|(x, e)| x * e).sum())
}

/// `Lambda_n` evaluated literally from the `zeta` increments. Only usable
/// while `theta * T` stays well below the `exp` overflow point.
pub fn lambda_n_from_zeta(path: &SamplePath) -> Result<f64> {
    let dz = path.zeta_increments()?;
    let p = path.params();
    let v = path.values();
    Ok(dz.iter().enumerate().map(|(k, d)| (-p.theta() * p.time(k + 1)).exp() * v[k] * d).sum())
}

/// Relative residual of `-theta_hat = (e^{-theta delta} - 1)/delta + Lambda_n / S_n`,
/// scaled by `1 + |theta_hat|`.
pub fn decomposition_residual(path: &SamplePath) -> Result<f64> {
    let p = path.params();
    let rec = amle(path, p.theta())?;
    let lambda = lambda_n(path)?;
    let drift = (-p.theta() * p.delta()).exp_m1() / p.delta();
    let rhs = drift + lambda / s_n(path);
    Ok((-rec.estimate - rhs).abs() / (1.0 + rec.estimate.abs()))
}
