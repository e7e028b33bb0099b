//! Exact simulation of the Ornstein-Uhlenbeck process `dX = -theta X dt + dW`
//! on an equidistant grid.
//!
//! Both the observed process `X` (started at zero) and its stationary
//! version `Z` are sampled through the exact AR(1) transition
//! `V_{i+1} = a V_i + eta_{i+1}`, `a = e^{-theta delta}`,
//! `eta ~ N(0, (1 - a^2) / (2 theta))`. A path draws its stationary start
//! first and the innovations after it, so `X` and `Z` built from the same
//! stream satisfy `X_t = Z_t - e^{-theta t} Z_0` pathwise.

use crate::error::{Error, Result};
use crate::numeric::one_minus_exp_neg;
use crate::rng::{std_normal, stream_rng};

/// Model and grid: drift `theta`, step `delta`, number of steps `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    theta: f64,
    delta: f64,
    n: usize,
}

impl OuParams {
    pub fn new(theta: f64, delta: f64, n: usize) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid("theta", format!("must be finite and > 0, got {theta}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be finite and > 0, got {delta}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        Ok(Self { theta, delta, n })
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Observation horizon `T = n * delta`.
    #[inline]
    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.delta
    }

    /// Grid time `t_i = i * delta`.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    /// Same model on a different grid.
    pub fn with_grid(&self, delta: f64, n: usize) -> Result<Self> {
        Self::new(self.theta, delta, n)
    }
}

/// Exact one-step transition: `(a, s2)` with `a = e^{-theta delta}` and
/// innovation variance `s2 = (1 - e^{-2 theta delta}) / (2 theta)`.
pub fn transition_coefficients(params: &OuParams) -> (f64, f64) {
    transition_for_step(params.theta, params.delta)
}

pub(crate) fn transition_for_step(theta: f64, delta: f64) -> (f64, f64) {
    let a = (-theta * delta).exp();
    let s2 = one_minus_exp_neg(2.0 * theta * delta) / (2.0 * theta);
    (a, s2)
}

/// Stationary covariance `rho(t) = e^{-theta |t|} / (2 theta)`.
#[inline]
pub fn rho(params: &OuParams, t: f64) -> f64 {
    rho_theta(params.theta, t)
}

#[inline]
pub(crate) fn rho_theta(theta: f64, t: f64) -> f64 {
    (-theta * t.abs()).exp() / (2.0 * theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Observed process, `X_0 = 0`.
    FromZero,
    /// Stationary process, `Z_0 ~ N(0, 1/(2 theta))`.
    Stationary,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::FromZero => "from-zero",
            Variant::Stationary => "stationary",
        }
    }
}

/// One realized trajectory on `t_0..t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    params: OuParams,
    values: Vec<f64>,
    variant: Variant,
    seed: u64,
    stream: u64,
    /// `eta_i = V_{t_i} - a V_{t_{i-1}}`, `i = 1..n`, when retained.
    innovations: Option<Vec<f64>>,
}

impl SamplePath {
    pub fn params(&self) -> &OuParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Scaled innovations `eta_1..eta_n`, if the path kept them.
    pub fn innovations(&self) -> Option<&[f64]> {
        self.innovations.as_deref()
    }

    /// Increments `zeta_{t_i} - zeta_{t_{i-1}}` of `zeta_t = int_0^t e^{theta s} dW_s`.
    ///
    /// These relate to the innovations by `eta_i = e^{-theta t_i} (zeta_{t_i} - zeta_{t_{i-1}})`.
    /// They grow like `e^{theta t}` and overflow once `theta * T` exceeds ~709.
    pub fn zeta_increments(&self) -> Result<Vec<f64>> {
        let eta = self.innovations().ok_or(Error::MissingInnovations)?;
        let theta = self.params.theta;
        Ok(eta.iter().enumerate().map(|(k, e)| (theta * self.params.time(k + 1)).exp() * e).collect())
    }

    /// Drop the retained innovations.
    pub fn without_innovations(mut self) -> Self {
        self.innovations = None;
        self
    }
}

/// Standard normals driving one path: the stationary start first, then
/// `n` innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNormals {
    pub start: f64,
    pub steps: Vec<f64>,
}

impl PathNormals {
    pub fn draw(n: usize, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let start = std_normal(&mut rng);
        let steps = (0..n).map(|_| std_normal(&mut rng)).collect();
        Self { start, steps }
    }

    /// All draws with their sign flipped.
    pub fn negated(&self) -> Self {
        Self { start: -self.start, steps: self.steps.iter().map(|x| -x).collect() }
    }
}

/// Build a path deterministically from given standard normals.
/// `normals.steps` must hold exactly `n` values.
pub fn path_from_normals(
    params: &OuParams,
    variant: Variant,
    normals: &PathNormals,
    seed: u64,
    stream: u64,
) -> SamplePath {
    assert_eq!(normals.steps.len(), params.n, "need one normal per step");
    let (a, s2) = transition_coefficients(params);
    let sd = s2.sqrt();
    let start = match variant {
        Variant::FromZero => 0.0,
        Variant::Stationary => normals.start * (1.0 / (2.0 * params.theta)).sqrt(),
    };
    let mut values = Vec::with_capacity(params.n + 1);
    let mut innovations = Vec::with_capacity(params.n);
    values.push(start);
    let mut v = start;
    for xi in &normals.steps {
        let eta = sd * xi;
        v = a.mul_add(v, eta);
        values.push(v);
        innovations.push(eta);
    }
    SamplePath { params: *params, values, variant, seed, stream, innovations: Some(innovations) }
}

/// Exact-in-law sample of `variant` driven by stream 0 of `seed`.
pub fn simulate_path(params: &OuParams, variant: Variant, seed: u64) -> SamplePath {
    simulate_stream(params, variant, seed, 0).without_innovations()
}

/// Like [`simulate_path`] but keeps the innovations (needed for `Lambda_n`).
pub fn simulate_path_with_innovations(params: &OuParams, variant: Variant, seed: u64) -> SamplePath {
    simulate_stream(params, variant, seed, 0)
}

/// Path for `(seed, stream)`, innovations retained.
pub fn simulate_stream(params: &OuParams, variant: Variant, seed: u64, stream: u64) -> SamplePath {
    let normals = PathNormals::draw(params.n, seed, stream);
    path_from_normals(params, variant, &normals, seed, stream)
}

/// Observed and stationary paths sharing one innovation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub observed: SamplePath,
    pub stationary: SamplePath,
}

impl CoupledPaths {
    /// Largest pathwise violation of `X_t = Z_t - e^{-theta t} Z_0`.
    pub fn coupling_residual(&self) -> f64 {
        let p = self.observed.params();
        let z0 = self.stationary.values[0];
        self.observed
            .values
            .iter()
            .zip(&self.stationary.values)
            .enumerate()
            .map(|(i, (x, z))| (x - (z - (-p.theta * p.time(i)).exp() * z0)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn simulate_coupled(params: &OuParams, seed: u64, stream: u64) -> CoupledPaths {
    let normals = PathNormals::draw(params.n, seed, stream);
    coupled_from_normals(params, &normals, seed, stream)
}

pub fn coupled_from_normals(params: &OuParams, normals: &PathNormals, seed: u64, stream: u64) -> CoupledPaths {
    CoupledPaths {
        observed: path_from_normals(params, Variant::FromZero, normals, seed, stream),
        stationary: path_from_normals(params, Variant::Stationary, normals, seed, stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn rejects_degenerate_grid() {
        assert!(OuParams::new(1.0, 0.0, 4).is_err());
        assert!(OuParams::new(1.0, 0.1, 0).is_err());
        assert!(OuParams::new(0.0, 0.1, 4).is_err());
        assert!(OuParams::new(-1.0, 0.1, 4).is_err());
        assert!(OuParams::new(1.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn horizon_is_derived() {
        let p = OuParams::new(0.7, 0.25, 12).unwrap();
        assert_eq!(p.horizon(), 3.0);
        assert_eq!(p.time(4), 1.0);
    }

    #[test]
    fn transition_at_ln2() {
        let p = OuParams::new(1.0, LN_2, 3).unwrap();
        let (a, s2) = transition_coefficients(&p);
        assert!((a - 0.5).abs() < 1e-15);
        assert!((s2 - 0.375).abs() < 1e-15);
    }

    #[test]
    fn transition_small_step_limit() {
        let (a, s2) = transition_for_step(0.5, 1e-300);
        assert_eq!(a, 1.0);
        assert!(s2 > 0.0 && s2 < 1e-299);
        let (a0, s0) = transition_for_step(0.5, 0.0);
        assert_eq!((a0, s0), (1.0, 0.0));
    }

    #[test]
    fn rho_values() {
        let p = OuParams::new(0.5, 0.1, 1).unwrap();
        assert_eq!(rho(&p, 0.0), 1.0);
        let q = OuParams::new(1.0, 0.1, 1).unwrap();
        assert!((rho(&q, 4f64.ln()) - 0.125).abs() < 1e-16);
        assert_eq!(rho(&q, 0.3), rho(&q, -0.3));
    }

    #[test]
    fn from_zero_starts_at_zero() {
        let p = OuParams::new(2.0, 0.01, 50).unwrap();
        for seed in 0..20 {
            let path = simulate_path(&p, Variant::FromZero, seed);
            assert_eq!(path.values()[0], 0.0);
            assert_eq!(path.values().len(), 51);
            assert!(path.values().iter().all(|v| v.is_finite()));
            assert!(path.innovations().is_none());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let p = OuParams::new(1.0, 0.1, 64).unwrap();
        let a = simulate_path(&p, Variant::Stationary, 42);
        let b = simulate_path(&p, Variant::Stationary, 42);
        let c = simulate_path(&p, Variant::Stationary, 43);
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn coupling_holds_pathwise() {
        let p = OuParams::new(1.3, 0.05, 500).unwrap();
        for stream in 0..10 {
            let pair = simulate_coupled(&p, 11, stream);
            assert!(pair.coupling_residual() < 1e-13, "{}", pair.coupling_residual());
        }
    }

    #[test]
    fn from_zero_path_is_observed_half_of_coupling() {
        let p = OuParams::new(1.0, 0.1, 16).unwrap();
        let x = simulate_stream(&p, Variant::FromZero, 5, 2);
        let pair = simulate_coupled(&p, 5, 2);
        assert_eq!(x, pair.observed);
    }

    #[test]
    fn innovations_reconstruct_path() {
        let p = OuParams::new(0.8, 0.2, 30).unwrap();
        let path = simulate_path_with_innovations(&p, Variant::Stationary, 3);
        let (a, _) = transition_coefficients(&p);
        let v = path.values();
        for (i, eta) in path.innovations().unwrap().iter().enumerate() {
            assert!((v[i + 1] - a * v[i] - eta).abs() < 1e-14);
        }
    }

    #[test]
    fn zeta_increments_scale_innovations() {
        let p = OuParams::new(1.0, 0.5, 4).unwrap();
        let path = simulate_path_with_innovations(&p, Variant::FromZero, 1);
        let dz = path.zeta_increments().unwrap();
        for (k, (d, e)) in dz.iter().zip(path.innovations().unwrap()).enumerate() {
            let t = p.time(k + 1);
            assert!(((-t).exp() * d - e).abs() < 1e-15);
        }
        let bare = simulate_path(&p, Variant::FromZero, 1);
        assert_eq!(bare.zeta_increments(), Err(Error::MissingInnovations));
    }
}
