use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::process::OuParams;

/// One `(n, delta_n)` grid of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub delta: f64,
}

impl Cell {
    pub fn new(n: usize, delta: f64) -> Self {
        Self { n, delta }
    }

    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.delta
    }

    pub fn params(&self, theta: f64) -> Result<OuParams> {
        OuParams::new(theta, self.delta, self.n)
    }

    pub fn delta_sq(&self) -> f64 {
        self.delta * self.delta
    }

    /// `1 / sqrt(n delta)`
    pub fn inv_sqrt_horizon(&self) -> f64 {
        1.0 / self.horizon().sqrt()
    }

    /// `sqrt(n delta^3)`
    pub fn sqrt_n_delta_cubed(&self) -> f64 {
        (self.n as f64 * self.delta.powi(3)).sqrt()
    }

    /// `n delta^eta`, the strong-consistency control quantity.
    pub fn n_delta_pow(&self, eta: f64) -> f64 {
        self.n as f64 * self.delta.powf(eta)
    }

    /// The two terms of the Wasserstein rate bound for `estimator`:
    /// AMCE `(delta^2, 1/sqrt(n delta))`, AMLE `(1/sqrt(n delta), sqrt(n delta^3))`.
    pub fn bound_terms(&self, estimator: Estimator) -> (f64, f64) {
        match estimator {
            Estimator::Amce => (self.delta_sq(), self.inv_sqrt_horizon()),
            Estimator::Amle => (self.inv_sqrt_horizon(), self.sqrt_n_delta_cubed()),
        }
    }

    pub fn bound(&self, estimator: Estimator) -> f64 {
        let (a, b) = self.bound_terms(estimator);
        a + b
    }
}

/// Named sequence of cells encoding an asymptotic regime.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    name: String,
    cells: Vec<Cell>,
}

impl Schedule {
    pub fn new(name: impl Into<String>, cells: Vec<Cell>) -> Result<Self> {
        let name = name.into();
        if cells.is_empty() {
            return Err(Error::invalid("schedule.cells", format!("schedule `{name}` has no cells")));
        }
        for c in &cells {
            if c.n < 2 {
                return Err(Error::invalid("schedule.cells.n", format!("n must be >= 2, got {}", c.n)));
            }
            if !(c.delta.is_finite() && c.delta > 0.0) {
                return Err(Error::invalid("schedule.cells.delta", format!("delta must be > 0, got {}", c.delta)));
            }
        }
        Ok(Self { name, cells })
    }

    /// `delta_n = n^{-gamma}` for `n = 2^k`, `k` in `log2_n`.
    pub fn power(name: impl Into<String>, gamma: f64, log2_n: std::ops::RangeInclusive<u32>) -> Result<Self> {
        let cells = log2_n
            .map(|k| {
                let n = 1usize << k;
                Cell::new(n, (n as f64).powf(-gamma))
            })
            .collect();
        Self::new(name, cells)
    }

    /// `delta_n = n^{-gamma}` for explicit `n`.
    pub fn power_of(name: impl Into<String>, gamma: f64, ns: &[usize]) -> Result<Self> {
        Self::new(name, ns.iter().map(|&n| Cell::new(n, (n as f64).powf(-gamma))).collect())
    }

    pub fn fixed_delta(name: impl Into<String>, delta: f64, ns: &[usize]) -> Result<Self> {
        Self::new(name, ns.iter().map(|&n| Cell::new(n, delta)).collect())
    }

    pub fn fixed_horizon(name: impl Into<String>, horizon: f64, ns: &[usize]) -> Result<Self> {
        Self::new(name, ns.iter().map(|&n| Cell::new(n, horizon / n as f64)).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// `delta` strictly decreasing and `T` strictly increasing across cells.
    pub fn clt_violation(&self) -> Option<String> {
        if self.cells.len() < 2 {
            return Some("needs at least two cells".into());
        }
        for (i, w) in self.cells.windows(2).enumerate() {
            if w[1].delta >= w[0].delta {
                return Some(format!("delta does not decrease between cells {i} and {}", i + 1));
            }
            if w[1].horizon() <= w[0].horizon() {
                return Some(format!("T = n delta does not increase between cells {i} and {}", i + 1));
            }
        }
        None
    }

    pub fn is_clt_valid(&self) -> bool {
        self.clt_violation().is_none()
    }

    pub fn require_clt_valid(&self) -> Result<()> {
        match self.clt_violation() {
            None => Ok(()),
            Some(reason) => Err(Error::InvalidSchedule { name: self.name.clone(), reason }),
        }
    }
}

/// Built-in schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `delta = n^{-1/2}`, `n = 2^8 .. 2^14`
    AmceGammaHalf,
    /// `delta = n^{-3/4}`, `n = 2^8 .. 2^14`
    AmleGammaThreeQuarter,
    /// `delta = 0.05`, `n = 2^8, 2^10, 2^12`
    CouplingSweep,
    /// `T = 10`, `n = 2^8 .. 2^12`
    NegativeControlFixedT,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::AmceGammaHalf, Preset::AmleGammaThreeQuarter, Preset::CouplingSweep, Preset::NegativeControlFixedT];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::AmceGammaHalf => "amce-gamma-half",
            Preset::AmleGammaThreeQuarter => "amle-gamma-3q",
            Preset::CouplingSweep => "coupling-sweep",
            Preset::NegativeControlFixedT => "negative-control-fixed-T",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn schedule(&self) -> Schedule {
        let built = match self {
            Preset::AmceGammaHalf => Schedule::power(self.name(), 0.5, 8..=14),
            Preset::AmleGammaThreeQuarter => Schedule::power(self.name(), 0.75, 8..=14),
            Preset::CouplingSweep => Schedule::fixed_delta(self.name(), 0.05, &[1 << 8, 1 << 10, 1 << 12]),
            Preset::NegativeControlFixedT => {
                Schedule::fixed_horizon(self.name(), 10.0, &[1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12])
            }
        };
        built.expect("preset schedules are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        assert_eq!(Preset::AmceGammaHalf.schedule().cells().len(), 7);
        assert!(Preset::AmceGammaHalf.schedule().is_clt_valid());
        assert!(Preset::AmleGammaThreeQuarter.schedule().is_clt_valid());
        assert!(!Preset::NegativeControlFixedT.schedule().is_clt_valid());
        assert!(!Preset::CouplingSweep.schedule().is_clt_valid());
    }

    #[test]
    fn sqrt_schedule_bound_terms() {
        let s = Preset::AmceGammaHalf.schedule();
        for c in s.cells() {
            let n = c.n as f64;
            let (a, b) = c.bound_terms(Estimator::Amce);
            assert!((a - 1.0 / n).abs() < 1e-15);
            assert!((b - n.powf(-0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn three_quarter_schedule_bound_terms() {
        let s = Preset::AmleGammaThreeQuarter.schedule();
        for c in s.cells() {
            let n = c.n as f64;
            let (a, b) = c.bound_terms(Estimator::Amle);
            assert!((a - n.powf(-0.125)).abs() < 1e-14);
            assert!((b - n.powf(-0.625)).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_schedule_rejected() {
        let s = Schedule::new("flat", vec![Cell::new(100, 0.1); 3]).unwrap();
        assert!(matches!(s.require_clt_valid(), Err(Error::InvalidSchedule { .. })));
    }

    #[test]
    fn invalid_cells_rejected() {
        assert!(Schedule::new("x", vec![Cell::new(1, 0.1)]).is_err());
        assert!(Schedule::new("x", vec![Cell::new(4, 0.0)]).is_err());
        assert!(Schedule::new("x", vec![]).is_err());
    }
}
