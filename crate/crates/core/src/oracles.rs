//! Exact moments and cumulants of `F_n(Z)` and `Lambda_n / sqrt(T)`.
//!
//! `F_n(Z) = sqrt(delta/n) sum_i (Z_{t_i}^2 - rho(0))` is a second-chaos
//! variable whose kernel has Gram matrix `R_{ij} = rho((i-j) delta)`, so its
//! cumulants are `kappa_p = 2^{p-1} (p-1)! (delta/n)^{p/2} tr(R^p)`.
//! `Lambda_n = sum_i X_{t_{i-1}} eta_i` is the quadratic form `eta' Q eta` in
//! the iid `N(0, s2)` innovations with `Q_{ij} = a^{|i-j|-1} / 2` off the
//! diagonal, so `kappa_p = 2^{p-1} (p-1)! s2^p tr(Q^p)`.
//!
//! Every quantity comes in at least two routes: a literal finite sum taken
//! straight from its definition, and a reduced form built on the closed-form
//! square of the Kac-Murdock-Szego matrix `B_{ij} = r^{|i-j|}`.

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, exp_defect, one_minus_exp_neg, CompensatedSum};
use crate::process::{rho_theta, transition_coefficients, OuParams};

/// Cap for the O(n^3) literal third-cumulant sum.
pub const TRIPLE_SUM_CAP: usize = 512;
/// Cap for the O(n^4) literal fourth-cumulant sum.
pub const QUADRUPLE_SUM_CAP: usize = 128;
/// Cap for the O(n^3) change-of-variables lattice sum.
pub const LATTICE_SUM_CAP: usize = 256;
/// Cap for dense O(n^3) matrix-power routes.
pub const DENSE_CAP: usize = 512;
/// Cap for the O(n^2) reduced routes.
pub const REDUCED_CAP: usize = 1 << 15;

fn cap(n: usize, cap: usize, route: &'static str) -> Result<()> {
    if n > cap {
        Err(Error::TooLarge { n, cap, route })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Kac-Murdock-Szego traces

/// Traces of powers of the `n x n` matrix `B_{ij} = r^{|i-j|}` and of
/// `(B - I) / (2r)`, evaluated in O(n^2) from the closed form
/// `(B^2)_{ij} = r^d (G(i) + d + 1 + G(n-1-j))` for `i <= j`, `d = j - i`,
/// with `G(m) = sum_{l=1}^m r^{2l}`.
struct KmsTraces {
    n: usize,
    r: f64,
    /// `r^d`, `d = 0..n`
    pow: Vec<f64>,
    /// `G(m)`, `m = 0..n`
    g: Vec<f64>,
}

impl KmsTraces {
    fn new(r: f64, n: usize) -> Self {
        let mut pow = Vec::with_capacity(n + 1);
        let mut g = Vec::with_capacity(n + 1);
        let mut p = 1.0;
        let mut acc = CompensatedSum::new();
        let r2 = r * r;
        let mut p2 = 1.0;
        for _ in 0..=n {
            pow.push(p);
            g.push(acc.value());
            p *= r;
            p2 *= r2;
            acc.add(p2);
        }
        Self { n, r, pow, g }
    }

    /// `(B^2)_{ij}` for `i <= j`.
    #[inline]
    fn b2(&self, i: usize, j: usize) -> f64 {
        let d = j - i;
        self.pow[d] * (self.g[i] + (d + 1) as f64 + self.g[self.n - 1 - j])
    }

    /// `tr(B^2)`, `tr(B^3)`, `tr(B^4)`.
    fn traces(&self) -> (f64, f64, f64) {
        let n = self.n;
        let (mut t2, mut t3, mut t4) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for i in 0..n {
            let diag = self.b2(i, i);
            t2.add(1.0);
            t3.add(diag);
            t4.add(diag * diag);
            let (mut r2, mut r3, mut r4) = (0.0, 0.0, 0.0);
            for j in i + 1..n {
                let b = self.pow[j - i];
                let b2 = self.b2(i, j);
                r2 += b * b;
                r3 += b * b2;
                r4 += b2 * b2;
            }
            t2.add(2.0 * r2);
            t3.add(2.0 * r3);
            t4.add(2.0 * r4);
        }
        (t2.value(), t3.value(), t4.value())
    }

    /// `tr(Q^2)`, `tr(Q^3)`, `tr(Q^4)` for `Q = (B - I) / (2r)`.
    ///
    /// Off the diagonal `(Q^2)_{ij} = r^{d-2} (r^2 (H(i) + H(n-1-j)) + d - 1) / 4`
    /// and on it `(Q^2)_{ii} = (H(i) + H(n-1-i)) / 4`, with `H(m) = G(m) / r^2`.
    fn shifted_traces(&self) -> (f64, f64, f64) {
        let n = self.n;
        let r = self.r;
        let h = |m: usize| if m == 0 { 0.0 } else { self.g[m] / (r * r) };
        // r^{d-2} (d - 1) without dividing by r when d = 1
        let lead = |d: usize| if d < 2 { 0.0 } else { (d - 1) as f64 * self.pow[d - 2] };
        let (mut t2, mut t3, mut t4) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for i in 0..n {
            let diag = 0.25 * (h(i) + h(n - 1 - i));
            t4.add(diag * diag);
            let (mut r2, mut r3, mut r4) = (0.0, 0.0, 0.0);
            for j in i + 1..n {
                let d = j - i;
                let q = 0.5 * self.pow[d - 1];
                let q2 = 0.25 * (self.pow[d] * (h(i) + h(n - 1 - j)) + lead(d));
                r2 += q * q;
                r3 += q * q2;
                r4 += q2 * q2;
            }
            t2.add(2.0 * r2);
            t3.add(2.0 * r3);
            t4.add(2.0 * r4);
        }
        (t2.value(), t3.value(), t4.value())
    }
}

// ---------------------------------------------------------------------------
// F_n(Z)

/// `E[F_n(Z)^2]` in closed form:
/// `delta/(2 theta^2) + delta/(theta^2 n) sum_{k=1}^{n-1} (n-k) e^{-2 k theta delta}`,
/// with the inner sum written as `r (g(n h) - n g(h)) / (1 - r)^2`,
/// `h = 2 theta delta`, `r = e^{-h}`, `g(x) = e^{-x} - 1 + x`.
pub fn exact_var_fn_z(params: &OuParams) -> f64 {
    let (theta, delta, n) = (params.theta(), params.delta(), params.n());
    let nf = n as f64;
    let h = 2.0 * theta * delta;
    let r = (-h).exp();
    let u = one_minus_exp_neg(h);
    let lagged = r * (exp_defect(nf * h) - nf * exp_defect(h)) / (u * u);
    delta / (2.0 * theta * theta) + delta / (theta * theta * nf) * lagged
}

/// `(2 delta / n) sum_{i,j=0}^{n-1} rho^2((j - i) delta)`, literally.
pub fn exact_var_fn_z_literal(params: &OuParams) -> Result<f64> {
    let n = params.n();
    cap(n, 1 << 14, "literal double sum")?;
    let (theta, delta) = (params.theta(), params.delta());
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            let r = rho_theta(theta, (j as f64 - i as f64) * delta);
            acc.add(r * r);
        }
    }
    Ok(2.0 * delta / n as f64 * acc.value())
}

fn fn_z_traces(params: &OuParams) -> Result<(f64, f64, f64)> {
    cap(params.n(), REDUCED_CAP, "reduced trace")?;
    let theta = params.theta();
    let kms = KmsTraces::new((-theta * params.delta()).exp(), params.n());
    let (t2, t3, t4) = kms.traces();
    let s = 1.0 / (2.0 * theta);
    Ok((t2 * s * s, t3 * s * s * s, t4 * s * s * s * s))
}

/// `kappa_3(F_n(Z)) = 8 (delta/n)^{3/2} sum_{i,j,k} rho((j-i)delta) rho((i-k)delta) rho((k-j)delta)`,
/// through the O(n^2) trace reduction.
pub fn k3_fn_z(params: &OuParams) -> Result<f64> {
    let (_, t3, _) = fn_z_traces(params)?;
    Ok(8.0 * (params.delta() / params.n() as f64).powf(1.5) * t3)
}

/// The triple sum for `kappa_3(F_n(Z))` evaluated term by term.
pub fn k3_fn_z_literal(params: &OuParams) -> Result<f64> {
    let n = params.n();
    cap(n, TRIPLE_SUM_CAP, "literal triple sum")?;
    let table = lag_table(params);
    let rho = |a: usize, b: usize| table[a.abs_diff(b)];
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            let rij = rho(i, j);
            let mut row = 0.0;
            for k in 0..n {
                row += rho(i, k) * rho(k, j);
            }
            acc.add(rij * row);
        }
    }
    Ok(8.0 * (params.delta() / n as f64).powf(1.5) * acc.value())
}

/// `48 (delta^2/n^2) sum_{k1..k4} rho(k1-k2) rho(k3-k4) rho(k1-k3) rho(k2-k4)`,
/// i.e. `48 ||eps_n (x)_1 eps_n||^2`. Because the contraction of a symmetric
/// kernel with itself is again symmetric this is the fourth cumulant itself,
/// not just an upper bound. O(n^2) trace reduction.
pub fn k4_fn_z_bound(params: &OuParams) -> Result<f64> {
    let (_, _, t4) = fn_z_traces(params)?;
    let scale = params.delta() / params.n() as f64;
    Ok(48.0 * scale * scale * t4)
}

/// The quadruple sum for [`k4_fn_z_bound`] evaluated term by term.
pub fn k4_fn_z_literal(params: &OuParams) -> Result<f64> {
    let n = params.n();
    cap(n, QUADRUPLE_SUM_CAP, "literal quadruple sum")?;
    let table = lag_table(params);
    let rho = |a: usize, b: usize| table[a.abs_diff(b)];
    let mut acc = CompensatedSum::new();
    for k1 in 0..n {
        for k2 in 0..n {
            let r12 = rho(k1, k2);
            let mut block = 0.0;
            for k3 in 0..n {
                let r13 = rho(k1, k3);
                for k4 in 0..n {
                    block += rho(k3, k4) * r13 * rho(k2, k4);
                }
            }
            acc.add(r12 * block);
        }
    }
    let scale = params.delta() / n as f64;
    Ok(48.0 * scale * scale * acc.value())
}

/// The quadruple sum after the substitution `j1 = k1 - k2`, `j2 = k2 - k4`,
/// `j3 = k3 - k4`: each lag triple is weighted by the number of `k4` that keep
/// all four indices on the grid.
pub fn k4_fn_z_lattice(params: &OuParams) -> Result<f64> {
    let n = params.n();
    cap(n, LATTICE_SUM_CAP, "lattice sum")?;
    let table = lag_table(params);
    let ni = n as i64;
    let rho = |lag: i64| table[lag.unsigned_abs() as usize];
    let mut acc = CompensatedSum::new();
    for j1 in -(ni - 1)..ni {
        for j2 in -(ni - 1)..ni {
            let k1_off = j1 + j2;
            if k1_off.abs() >= ni {
                continue;
            }
            let r12 = rho(j1) * rho(j2);
            let mut row = 0.0;
            for j3 in -(ni - 1)..ni {
                let hi = 0.max(j2).max(j3).max(k1_off);
                let lo = 0.min(j2).min(j3).min(k1_off);
                let count = ni - (hi - lo);
                if count <= 0 {
                    continue;
                }
                row += count as f64 * rho(j3) * rho(k1_off - j3);
            }
            acc.add(r12 * row);
        }
    }
    let scale = params.delta() / n as f64;
    Ok(48.0 * scale * scale * acc.value())
}

fn lag_table(params: &OuParams) -> Vec<f64> {
    (0..params.n()).map(|k| rho_theta(params.theta(), k as f64 * params.delta())).collect()
}

// ---------------------------------------------------------------------------
// Lambda_n / sqrt(T)

/// `(1 - e^{-2 theta delta}) / ((2 theta)^2 delta)`.
fn lambda_scale(params: &OuParams) -> f64 {
    let theta = params.theta();
    one_minus_exp_neg(2.0 * theta * params.delta()) / (4.0 * theta * theta * params.delta())
}

/// `E[(Lambda_n / sqrt T)^2] = c - c (1 - e^{-2 theta T}) / (n (1 - e^{-2 theta delta}))`,
/// `c = (1 - e^{-2 theta delta}) / ((2 theta)^2 delta)`.
pub fn exact_var_lambda(params: &OuParams) -> f64 {
    let theta = params.theta();
    let c = lambda_scale(params);
    let ratio = one_minus_exp_neg(2.0 * theta * params.horizon())
        / (params.n() as f64 * one_minus_exp_neg(2.0 * theta * params.delta()));
    c * (1.0 - ratio)
}

/// `c (1/n) sum_{i=1}^n (1 - e^{-2 theta t_{i-1}})`.
pub fn exact_var_lambda_literal(params: &OuParams) -> f64 {
    let theta = params.theta();
    let n = params.n();
    let s = compensated_sum((0..n).map(|i| one_minus_exp_neg(2.0 * theta * params.time(i))));
    lambda_scale(params) * s / n as f64
}

/// Fourth cumulant of `Lambda_n / sqrt(T)` in the diagonal-only form
/// `c^2 (1/n^2) sum_{i=1}^n (1 - e^{-2 theta t_{i-1}})^2`.
///
/// This form keeps only the `i = j = k = l` terms of `E[Lambda_n^4]`. The exact
/// value is [`exact_k4_lambda`], which is larger by orders of magnitude at
/// desk-scale horizons.
pub fn k4_lambda(params: &OuParams) -> f64 {
    let theta = params.theta();
    let n = params.n();
    let c = lambda_scale(params);
    let s = compensated_sum((0..n).map(|i| {
        let v = one_minus_exp_neg(2.0 * theta * params.time(i));
        v * v
    }));
    c * c * s / (n as f64 * n as f64)
}

/// `c^2 / n`, the explicit upper bound on [`k4_lambda`].
pub fn k4_lambda_bound(params: &OuParams) -> f64 {
    let c = lambda_scale(params);
    c * c / params.n() as f64
}

/// Third moment of `Lambda_n / sqrt(T)` as claimed by the martingale
/// independence argument: identically zero. See [`exact_k3_lambda`] for the
/// actual value.
pub fn k3_lambda_is_zero(_params: &OuParams) -> f64 {
    0.0
}

fn lambda_traces(params: &OuParams) -> Result<(f64, f64, f64)> {
    cap(params.n(), REDUCED_CAP, "reduced trace")?;
    let (a, _) = transition_coefficients(params);
    Ok(KmsTraces::new(a, params.n()).shifted_traces())
}

/// Exact `(kappa_2, kappa_3, kappa_4)` of `Lambda_n / sqrt(T)` from the
/// quadratic-form representation.
pub fn exact_lambda_cumulants(params: &OuParams) -> Result<(f64, f64, f64)> {
    let (t2, t3, t4) = lambda_traces(params)?;
    let (_, s2) = transition_coefficients(params);
    Ok(scale_lambda_traces(s2, params.horizon(), t2, t3, t4))
}

/// `kappa_p(Lambda_n / sqrt T) = 2^{p-1} (p-1)! s2^p tr(Q^p) / T^{p/2}`.
fn scale_lambda_traces(s2: f64, horizon: f64, t2: f64, t3: f64, t4: f64) -> (f64, f64, f64) {
    let v = s2 / horizon.sqrt();
    (2.0 * v.powi(2) * t2, 8.0 * v.powi(3) * t3, 48.0 * v.powi(4) * t4)
}

/// Exact third cumulant of `Lambda_n / sqrt(T)`: `8 s2^3 tr(Q^3) / T^{3/2}`.
pub fn exact_k3_lambda(params: &OuParams) -> Result<f64> {
    exact_lambda_cumulants(params).map(|c| c.1)
}

/// Exact fourth cumulant of `Lambda_n / sqrt(T)`: `48 s2^4 tr(Q^4) / T^2`.
pub fn exact_k4_lambda(params: &OuParams) -> Result<f64> {
    exact_lambda_cumulants(params).map(|c| c.2)
}

/// Same cumulants from explicit dense powers of `Q`. O(n^3).
pub fn exact_lambda_cumulants_dense(params: &OuParams) -> Result<(f64, f64, f64)> {
    let n = params.n();
    cap(n, DENSE_CAP, "dense matrix power")?;
    let (a, s2) = transition_coefficients(params);
    let q: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                0.0
            } else {
                0.5 * a.powi(i.abs_diff(j) as i32 - 1)
            }
        })
        .collect();
    let q2 = matmul(&q, &q, n);
    let dot = |x: &[f64], y: &[f64]| compensated_sum(x.iter().zip(y).map(|(u, v)| u * v));
    // Q, Q^2 symmetric: tr(AB) = sum_ij A_ij B_ij
    let (t2, t3, t4) = (dot(&q, &q), dot(&q, &q2), dot(&q2, &q2));
    Ok(scale_lambda_traces(s2, params.horizon(), t2, t3, t4))
}

fn matmul(x: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let xik = x[i * n + k];
            if xik == 0.0 {
                continue;
            }
            let row = &y[k * n..(k + 1) * n];
            for (o, yk) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o += xik * yk;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentQuantity {
    VarFnZ,
    K3FnZ,
    K4FnZAbsBound,
    VarLambda,
    K4Lambda,
    K3LambdaExact,
    K4LambdaExact,
}

impl MomentQuantity {
    pub const ALL: [MomentQuantity; 7] = [
        MomentQuantity::VarFnZ,
        MomentQuantity::K3FnZ,
        MomentQuantity::K4FnZAbsBound,
        MomentQuantity::VarLambda,
        MomentQuantity::K4Lambda,
        MomentQuantity::K3LambdaExact,
        MomentQuantity::K4LambdaExact,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MomentQuantity::VarFnZ => "var_fn_z",
            MomentQuantity::K3FnZ => "k3_fn_z",
            MomentQuantity::K4FnZAbsBound => "k4_fn_z_bound",
            MomentQuantity::VarLambda => "var_lambda",
            MomentQuantity::K4Lambda => "k4_lambda",
            MomentQuantity::K3LambdaExact => "k3_lambda_exact",
            MomentQuantity::K4LambdaExact => "k4_lambda_exact",
        }
    }
}

/// Exact value of one quantity next to its limit and its rate expression.
///
/// `bound_value` is the rate expression with unit constant, except for
/// `K4Lambda`, where the explicit bound `c^2 / n` is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub quantity: MomentQuantity,
    pub exact_value: f64,
    pub asymptotic_value: f64,
    pub bound_value: f64,
    pub params: OuParams,
}

pub fn moment_report(quantity: MomentQuantity, params: &OuParams) -> Result<MomentReport> {
    let (theta, delta, n) = (params.theta(), params.delta(), params.n() as f64);
    let inv_t = 1.0 / (n * delta);
    let (exact_value, asymptotic_value, bound_value) = match quantity {
        MomentQuantity::VarFnZ => (exact_var_fn_z(params), 1.0 / (2.0 * theta.powi(3)), delta * delta + inv_t),
        // the exact value decays like 1/sqrt(n delta)
        MomentQuantity::K3FnZ => (k3_fn_z(params)?, 0.0, inv_t.sqrt()),
        MomentQuantity::K4FnZAbsBound => (k4_fn_z_bound(params)?, 0.0, inv_t),
        MomentQuantity::VarLambda => (exact_var_lambda(params), 1.0 / (2.0 * theta), delta + inv_t),
        MomentQuantity::K4Lambda => (k4_lambda(params), 0.0, k4_lambda_bound(params)),
        MomentQuantity::K3LambdaExact => (exact_k3_lambda(params)?, 0.0, inv_t.sqrt()),
        MomentQuantity::K4LambdaExact => (exact_k4_lambda(params)?, 0.0, inv_t),
    };
    Ok(MomentReport { quantity, exact_value, asymptotic_value, bound_value, params: *params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(theta: f64, delta: f64, n: usize) -> OuParams {
        OuParams::new(theta, delta, n).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn var_single_step() {
        let q = p(1.7, 0.3, 1);
        let expected = 0.3 / (2.0 * 1.7 * 1.7);
        assert!(rel(exact_var_fn_z(&q), expected) < 1e-14);
    }

    #[test]
    fn var_closed_form_matches_literal() {
        for &(theta, delta) in &[(1.0, 0.05), (1.0, 0.01), (0.5, 0.1), (2.0, 0.002)] {
            for &n in &[1, 2, 3, 7, 64, 512] {
                let q = p(theta, delta, n);
                let (c, l) = (exact_var_fn_z(&q), exact_var_fn_z_literal(&q).unwrap());
                assert!(rel(c, l) < 1e-12, "theta={theta} delta={delta} n={n}: {c} vs {l}");
            }
        }
    }

    #[test]
    fn var_reduced_trace_agrees() {
        let q = p(1.0, 0.05, 300);
        let (t2, _, _) = fn_z_traces(&q).unwrap();
        let via_trace = 2.0 * q.delta() / q.n() as f64 * t2;
        assert!(rel(via_trace, exact_var_fn_z(&q)) < 1e-12);
    }

    #[test]
    fn var_gap_small_at_fine_grid() {
        let q = p(1.0, 0.01, 10_000);
        assert!((exact_var_fn_z(&q) - 0.5).abs() <= 0.02);
    }

    #[test]
    fn var_gap_decays_on_sqrt_schedule() {
        let gaps: Vec<f64> = [100usize, 1000, 10_000]
            .iter()
            .map(|&n| (exact_var_fn_z(&p(1.0, (n as f64).powf(-0.5), n)) - 0.5).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn k3_single_step() {
        let (theta, delta) = (1.3, 0.2);
        let q = p(theta, delta, 1);
        let expected = delta.powf(1.5) / theta.powi(3);
        assert!(rel(k3_fn_z(&q).unwrap(), expected) < 1e-14);
        assert!(rel(k3_fn_z_literal(&q).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn k3_routes_agree() {
        for &n in &[2, 3, 7, 64, 200] {
            let q = p(1.0, 0.1, n);
            let (a, b) = (k3_fn_z(&q).unwrap(), k3_fn_z_literal(&q).unwrap());
            assert!(rel(a, b) < 1e-12, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn k3_halves_when_n_quadruples() {
        for &n in &[64usize, 128] {
            let small = k3_fn_z(&p(1.0, 0.1, n)).unwrap();
            let big = k3_fn_z(&p(1.0, 0.1, 4 * n)).unwrap();
            let ratio = big / small;
            assert!((0.35..=0.65).contains(&ratio), "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn k3_literal_cap() {
        assert!(matches!(k3_fn_z_literal(&p(1.0, 0.1, 513)), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn k4_single_step() {
        let (theta, delta) = (0.9, 0.4);
        let q = p(theta, delta, 1);
        let expected = 3.0 * delta * delta / theta.powi(4);
        assert!(rel(k4_fn_z_bound(&q).unwrap(), expected) < 1e-14);
        assert!(rel(k4_fn_z_literal(&q).unwrap(), expected) < 1e-14);
        assert!(rel(k4_fn_z_lattice(&q).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn k4_three_routes_agree() {
        for &n in &[2, 5, 16, 48] {
            let q = p(1.0, 0.1, n);
            let reduced = k4_fn_z_bound(&q).unwrap();
            let literal = k4_fn_z_literal(&q).unwrap();
            let lattice = k4_fn_z_lattice(&q).unwrap();
            assert!(rel(reduced, literal) < 1e-12, "n={n}");
            assert!(rel(lattice, literal) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn k4_scales_like_inverse_horizon() {
        let scaled: Vec<f64> =
            [16usize, 32, 64, 128].iter().map(|&n| k4_fn_z_bound(&p(1.0, 0.1, n)).unwrap() * n as f64 * 0.1).collect();
        let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo <= 4.0, "{scaled:?}");
    }

    #[test]
    fn var_lambda_single_step_is_zero() {
        assert_eq!(exact_var_lambda(&p(1.0, 0.1, 1)), 0.0);
        assert_eq!(exact_var_lambda_literal(&p(1.0, 0.1, 1)), 0.0);
    }

    #[test]
    fn var_lambda_routes_agree() {
        for &n in &[2, 3, 10, 1000] {
            let q = p(1.0, 0.05, n);
            let (a, b) = (exact_var_lambda(&q), exact_var_lambda_literal(&q));
            assert!(rel(a, b) < 1e-12, "n={n}");
            let (k2, _, _) = exact_lambda_cumulants(&q).unwrap();
            assert!(rel(k2, a) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn var_lambda_near_limit() {
        assert!((exact_var_lambda(&p(1.0, 0.01, 10_000)) - 0.5).abs() < 0.02);
    }

    #[test]
    fn k4_lambda_diagonal_form() {
        assert_eq!(k4_lambda(&p(1.0, 0.1, 1)), 0.0);
        let q = p(1.0, 0.1, 1000);
        let reference = (1.0 - (-0.2f64).exp()).powi(2) / (16.0 * 0.01);
        let scaled = k4_lambda(&q) * 1000.0;
        assert!(scaled <= reference && scaled >= reference / 2.0);
        assert!(k4_lambda(&q) <= k4_lambda_bound(&q));
    }

    #[test]
    fn lambda_cumulant_routes_agree() {
        for &n in &[1, 2, 3, 17, 128] {
            let q = p(1.0, 0.1, n);
            let reduced = exact_lambda_cumulants(&q).unwrap();
            let dense = exact_lambda_cumulants_dense(&q).unwrap();
            for (a, b) in [(reduced.0, dense.0), (reduced.1, dense.1), (reduced.2, dense.2)] {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lambda_third_cumulant_is_not_zero() {
        let q = p(1.0, 0.1, 256);
        let k3 = exact_k3_lambda(&q).unwrap();
        assert!(k3 > 0.2 && k3 < 0.25, "{k3}");
        assert_eq!(k3_lambda_is_zero(&q), 0.0);
        assert!(exact_k4_lambda(&q).unwrap() > 100.0 * k4_lambda(&q));
    }

    #[test]
    fn report_fields() {
        let q = p(1.0, 0.05, 200);
        for quantity in MomentQuantity::ALL {
            let r = moment_report(quantity, &q).unwrap();
            assert!(r.exact_value.is_finite());
            assert!(r.bound_value > 0.0);
        }
        let v = moment_report(MomentQuantity::VarFnZ, &q).unwrap();
        assert_eq!(v.asymptotic_value, 0.5);
    }
}
