use crate::error::{Error, Result};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fit `log(distance) = intercept + slope * log(bound)` over `(bound, distance)` pairs.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientCells { got: points.len() });
    }
    for &(x, y) in points {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::NonPositiveValue { what: "bound", value: x });
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::NonPositiveValue { what: "distance", value: y });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &logs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("bound", "all bound values are equal; slope undefined"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(LogLogFit { slope, intercept: my - slope * mx, r2, points: logs.len() })
}
