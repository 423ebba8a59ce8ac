use serde::Serialize;

use crate::{Error, Result};

/// Below this every value is treated as roundoff.
pub const UNDERFLOW_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of `ln|value|` against the abscissa.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    /// Exact zeros removed before fitting.
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DecayVerdict {
    Fit(DecayFit),
    /// Every value is below [`UNDERFLOW_FLOOR`]: consistent with decay too
    /// fast to resolve.
    Underflow { points: usize },
}

impl DecayVerdict {
    pub fn fit(&self) -> Option<&DecayFit> {
        match self {
            DecayVerdict::Fit(f) => Some(f),
            DecayVerdict::Underflow { .. } => None,
        }
    }

    /// Fitted slope `≤ bound + slack`; underflow satisfies any bound.
    pub fn decays_at_least(&self, bound: f64, slack: f64) -> bool {
        match self {
            DecayVerdict::Fit(f) => f.slope <= bound + slack,
            DecayVerdict::Underflow { .. } => true,
        }
    }
}

/// Least-squares fit of `ln|v_k|` against `r_k`.
pub fn decay_fit(r: &[f64], values: &[f64]) -> Result<DecayVerdict> {
    if r.len() != values.len() {
        return Err(Error::Shape(format!("{} abscissae for {} values", r.len(), values.len())));
    }
    if values.iter().chain(r).any(|v| !v.is_finite()) {
        return Err(Error::Domain("decay fit needs finite data".into()));
    }
    if r.len() >= 4 && values.iter().all(|v| v.abs() < UNDERFLOW_FLOOR) {
        return Ok(DecayVerdict::Underflow { points: r.len() });
    }
    let pts: Vec<(f64, f64)> =
        r.iter().zip(values).filter(|(_, v)| **v != 0.0).map(|(x, v)| (*x, v.abs().ln())).collect();
    let dropped = r.len() - pts.len();
    if pts.len() < 4 {
        return Err(Error::Domain(format!("decay fit needs at least 4 nonzero points, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("decay fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(DecayVerdict::Fit(DecayFit { slope, stderr, intercept, points: pts.len(), dropped }))
}
