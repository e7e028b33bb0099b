//! Small numerical kernels shared by the oracles and the distance engine.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

/// `1/sqrt(2*pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation (relative
/// error below 1.2e-9) polished by two Halley steps against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = acklam_quantile(p);
    for _ in 0..2 {
        let pdf = std_normal_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        // residual taken on the smaller tail to keep it relative
        let resid = if x <= 0.0 { std_normal_cdf(x) - p } else { (1.0 - p) - std_normal_cdf(-x) };
        let step = resid / pdf;
        x -= step / (1.0 + 0.5 * x * step);
    }
    x
}

fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Antiderivative of the normal CDF on the negative half-line,
/// `Psi(x) = x*Phi(x) + phi(x)`, which vanishes at `-inf`.
/// For positive arguments use `Psi(x) = x + Psi(-x)`.
#[inline]
fn cdf_antiderivative(x: f64) -> f64 {
    if x <= 0.0 {
        x * std_normal_cdf(x) + std_normal_pdf(x)
    } else {
        x + x.mul_add(-std_normal_cdf(-x), std_normal_pdf(x))
    }
}

/// `int_{-inf}^{x} Phi(t) dt`, finite for every real `x`.
#[inline]
pub fn integral_cdf_to(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else {
        cdf_antiderivative(x)
    }
}

/// `int_{x}^{inf} (1 - Phi(t)) dt`, which by symmetry equals `Psi(-x)`.
#[inline]
pub fn integral_sf_from(x: f64) -> f64 {
    integral_cdf_to(-x)
}

/// `int_a^b Phi(t) dt` for finite `a <= b`, arranged so that nothing
/// of order `b` cancels when both endpoints are large and positive.
pub fn integral_cdf(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if b <= 0.0 {
        integral_cdf_to(b) - integral_cdf_to(a)
    } else if a >= 0.0 {
        // int_a^b Phi = (b - a) - int_a^b (1 - Phi)
        (b - a) - (integral_sf_from(a) - integral_sf_from(b))
    } else {
        integral_cdf(a, 0.0) + integral_cdf(0.0, b)
    }
}

/// `e^{-x} - 1 + x` without cancellation for small `x`.
pub fn exp_defect(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // x^2/2 - x^3/6 + x^4/24 - ...
        let mut term = x * x / 2.0;
        let mut acc = term;
        let mut k = 2.0;
        while term.abs() > 1e-18 * acc.abs() {
            k += 1.0;
            term *= -x / k;
            acc += term;
        }
        acc
    } else {
        (-x).exp_m1() + x
    }
}

/// `1 - e^{-x}` computed through `expm1`.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}
