//! Distances from an empirical sample to the standard normal law.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{integral_cdf, integral_cdf_to, integral_sf_from, std_normal_cdf, std_normal_quantile};
use crate::rng::stream_rng;

fn validate(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(index) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    Ok(())
}

fn sorted_copy(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// `int_a^b |c - Phi(x)| dx` for `a <= b <= 0` and `0 < c < 1`.
fn abs_gap_negative(c: f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let q = std_normal_quantile(c);
    if q <= a {
        integral_cdf(a, b) - c * (b - a)
    } else if q >= b {
        c * (b - a) - integral_cdf(a, b)
    } else {
        (c * (q - a) - integral_cdf(a, q)) + (integral_cdf(q, b) - c * (b - q))
    }
}

/// `int_a^b |k/m - Phi(x)| dx`. Positive stretches are reflected through
/// `1 - Phi(x) = Phi(-x)` so every evaluation happens where `Phi` is small.
fn abs_gap(k: usize, m: usize, a: f64, b: f64) -> f64 {
    let level = k as f64 / m as f64;
    let mirrored = (m - k) as f64 / m as f64;
    if b <= 0.0 {
        abs_gap_negative(level, a, b)
    } else if a >= 0.0 {
        abs_gap_negative(mirrored, -b, -a)
    } else {
        abs_gap_negative(level, a, 0.0) + abs_gap_negative(mirrored, -b, 0.0)
    }
}

fn w1_sorted(s: &[f64]) -> f64 {
    let m = s.len();
    let mut total = integral_cdf_to(s[0]);
    for k in 1..m {
        total += abs_gap(k, m, s[k - 1], s[k]);
    }
    total + integral_sf_from(s[m - 1])
}

/// 1-Wasserstein distance between the empirical law of `sample` and
/// `N(0, 1)`, computed as `int |F_hat - Phi|` exactly, tails included.
pub fn w1_to_std_normal(sample: &[f64]) -> Result<f64> {
    validate(sample)?;
    Ok(w1_sorted(&sorted_copy(sample)))
}

fn kolmogorov_sorted(s: &[f64]) -> f64 {
    let m = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = std_normal_cdf(x);
            let above = (i + 1) as f64 / m - phi;
            let below = phi - i as f64 / m;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov distance `sup_x |F_hat(x) - Phi(x)|`.
pub fn kolmogorov_to_std_normal(sample: &[f64]) -> Result<f64> {
    validate(sample)?;
    Ok(kolmogorov_sorted(&sorted_copy(sample)))
}

/// Sample mean and central-moment cumulants with delete-one jackknife
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCumulants {
    pub mean: f64,
    /// `m2`
    pub var: f64,
    /// `m3`
    pub k3: f64,
    /// `m4 - 3 m2^2`
    pub k4: f64,
    pub se_mean: f64,
    pub se_var: f64,
    pub se_k3: f64,
    pub se_k4: f64,
}

impl SampleCumulants {
    pub fn skewness(&self) -> f64 {
        if self.var > 0.0 {
            self.k3 / self.var.powf(1.5)
        } else {
            0.0
        }
    }

    pub fn excess_kurtosis(&self) -> f64 {
        if self.var > 0.0 {
            self.k4 / (self.var * self.var)
        } else {
            0.0
        }
    }
}

/// Cumulants from raw power sums `s_k = sum y^k` of `count` values.
fn cumulants_from_sums(count: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> (f64, f64, f64, f64) {
    let mu = s1 / count;
    let (e2, e3, e4) = (s2 / count, s3 / count, s4 / count);
    let m2 = e2 - mu * mu;
    let m3 = e3 - 3.0 * mu * e2 + 2.0 * mu.powi(3);
    let m4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu.powi(4);
    (mu, m2, m3, m4 - 3.0 * m2 * m2)
}

pub fn sample_cumulants(sample: &[f64]) -> Result<SampleCumulants> {
    const MIN: usize = 4;
    if sample.len() < MIN {
        return Err(Error::TooSmall { size: sample.len(), min: MIN });
    }
    validate(sample)?;
    let n = sample.len() as f64;
    let shift = sample.iter().sum::<f64>() / n;
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for &x in sample {
        let y = x - shift;
        let y2 = y * y;
        s1 += y;
        s2 += y2;
        s3 += y2 * y;
        s4 += y2 * y2;
    }
    let (mu, var, k3, k4) = cumulants_from_sums(n, s1, s2, s3, s4);

    let leave_one_out: Vec<(f64, f64, f64)> = sample
        .iter()
        .map(|&x| {
            let y = x - shift;
            let y2 = y * y;
            let (_, v, c3, c4) = cumulants_from_sums(n - 1.0, s1 - y, s2 - y2, s3 - y2 * y, s4 - y2 * y2);
            (v, c3, c4)
        })
        .collect();
    let jackknife = |f: fn(&(f64, f64, f64)) -> f64| {
        let mean = leave_one_out.iter().map(f).sum::<f64>() / n;
        let ss: f64 = leave_one_out.iter().map(|t| (f(t) - mean).powi(2)).sum();
        ((n - 1.0) / n * ss).sqrt()
    };
    let unbiased_var = if n > 1.0 { var * n / (n - 1.0) } else { 0.0 };
    Ok(SampleCumulants {
        mean: mu + shift,
        var,
        k3,
        k4,
        se_mean: (unbiased_var / n).sqrt(),
        se_var: jackknife(|t| t.0),
        se_k3: jackknife(|t| t.1),
        se_k4: jackknife(|t| t.2),
    })
}

/// Distances plus shape summary of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub w1: f64,
    pub kolmogorov: f64,
    pub sample_size: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn distance_report(sample: &[f64]) -> Result<DistanceReport> {
    validate(sample)?;
    let s = sorted_copy(sample);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let m = |p: i32| s.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (m(2), m(3), m(4));
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(DistanceReport {
        w1: w1_sorted(&s),
        kolmogorov: kolmogorov_sorted(&s),
        sample_size: s.len(),
        mean,
        variance: m2,
        skewness,
        excess_kurtosis,
    })
}

/// Nonparametric bootstrap standard error of [`w1_to_std_normal`]. Resample
/// `b` uses stream `b` of `seed`, so the result does not depend on the
/// thread count.
pub fn bootstrap_w1_se(sample: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    validate(sample)?;
    if resamples < 2 {
        return Err(Error::TooSmall { size: resamples, min: 2 });
    }
    let m = sample.len();
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let mut draw: Vec<f64> = (0..m).map(|_| sample[rng.random_range(0..m)]).collect();
            draw.sort_unstable_by(f64::total_cmp);
            w1_sorted(&draw)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (resamples - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w1_point_mass_at_zero() {
        let w = w1_to_std_normal(&[0.0]).unwrap();
        assert!((w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn w1_grows_with_displacement() {
        assert!(w1_to_std_normal(&[3.0]).unwrap() > w1_to_std_normal(&[0.0]).unwrap());
        // W1(delta_a, N) = E|N - a|
        let a: f64 = 3.0;
        let expected = a * (2.0 * std_normal_cdf(a) - 1.0) + 2.0 * crate::numeric::std_normal_pdf(a);
        assert!((w1_to_std_normal(&[a]).unwrap() - expected).abs() < 1e-14);
        assert!((w1_to_std_normal(&[-a]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn w1_quantile_sample_is_close() {
        let m = 10_000;
        let q: Vec<f64> = (1..=m).map(|i| std_normal_quantile((i as f64 - 0.5) / m as f64)).collect();
        assert!(w1_to_std_normal(&q).unwrap() < 1e-3);
    }

    #[test]
    fn rejects_bad_samples() {
        assert_eq!(w1_to_std_normal(&[]), Err(Error::EmptySample));
        assert_eq!(kolmogorov_to_std_normal(&[1.0, f64::NAN]), Err(Error::NonFiniteValue { index: 1 }));
        assert!(matches!(sample_cumulants(&[1.0, 2.0, 3.0]), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn kolmogorov_point_mass() {
        assert_eq!(kolmogorov_to_std_normal(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn kolmogorov_quantile_sample() {
        let m = 1000;
        let q: Vec<f64> = (1..=m).map(|i| std_normal_quantile((i as f64 - 0.5) / m as f64)).collect();
        let d = kolmogorov_to_std_normal(&q).unwrap();
        assert!((d - 0.5 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn cumulants_constant_sample() {
        let c = sample_cumulants(&[2.5; 10]).unwrap();
        assert_eq!((c.mean, c.var, c.k3, c.k4), (2.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn cumulants_two_point_law() {
        let s: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = sample_cumulants(&s).unwrap();
        assert_eq!(c.mean, 0.0);
        assert!((c.var - 1.0).abs() < 1e-15);
        assert!(c.k3.abs() < 1e-15);
        assert!((c.k4 + 2.0).abs() < 1e-14);
    }

    #[test]
    fn jackknife_mean_se_matches_textbook() {
        let s: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let c = sample_cumulants(&s).unwrap();
        // jackknife SE of the variance estimator is positive and finite
        assert!(c.se_var > 0.0 && c.se_var.is_finite());
        let n = s.len() as f64;
        let sd = (s.iter().map(|x| (x - c.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((c.se_mean - sd / n.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn report_consistent_with_parts() {
        let s = [0.3, -1.2, 0.8, 2.0, -0.1];
        let r = distance_report(&s).unwrap();
        assert_eq!(r.w1, w1_to_std_normal(&s).unwrap());
        assert_eq!(r.kolmogorov, kolmogorov_to_std_normal(&s).unwrap());
        assert_eq!(r.sample_size, 5);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let s: Vec<f64> = (0..200).map(|i| std_normal_quantile((i as f64 + 0.5) / 200.0) * 1.1).collect();
        let a = bootstrap_w1_se(&s, 50, 3).unwrap();
        let b = bootstrap_w1_se(&s, 50, 3).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }
}
