//! Linear conductivity regimes of a disordered metal: `sigma` linear in `T`
//! at high temperature and linear in `sqrt(T)` at low temperature.

use super::models::{ols, Basis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductivityRegimes {
    pub high_t: LinearFit,
    pub low_t: LinearFit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeWindows {
    /// Inclusive temperature window for `sigma ~ T`, K.
    pub high_t: (f64, f64),
    /// Inclusive temperature window for `sigma ~ sqrt(T)`, K.
    pub low_t: (f64, f64),
}

impl Default for RegimeWindows {
    fn default() -> Self {
        RegimeWindows {
            high_t: (100.0, 300.0),
            low_t: (10.0, 60.0),
        }
    }
}

/// OLS of `sigma` against `g(T)` over the samples with `T` in `window`.
pub fn fit_window(trace: &[(f64, f64)], window: (f64, f64), basis: Basis) -> Result<LinearFit> {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(t, _)| (window.0..=window.1).contains(t))
        .map(|&(t, s)| (basis.apply(t), s))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(format!(
            "{} samples in [{}, {}] K (need 3)",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let (intercept, slope) = ols(pts.iter().copied())?;
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    // Exact data leave only round-off in the residuals.
    let r_squared = if ss_res <= 1e-24 * ss_tot.max(f64::MIN_POSITIVE) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        n_points: pts.len(),
    })
}

pub fn fit_conductivity_regimes(trace: &[(f64, f64)], windows: RegimeWindows) -> Result<ConductivityRegimes> {
    Ok(ConductivityRegimes {
        high_t: fit_window(trace, windows.high_t, Basis::Linear)?,
        low_t: fit_window(trace, windows.low_t, Basis::Sqrt)?,
    })
}
