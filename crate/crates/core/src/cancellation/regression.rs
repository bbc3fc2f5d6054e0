use crate::error::{ensure, invalid, Result};

/// `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least-squares line through `(x, y)` pairs.
pub fn fit_line(pairs: &[(f64, f64)]) -> Result<LinearFit> {
    ensure(pairs.len() >= 2, || {
        format!("need at least 2 pairs, got {}", pairs.len())
    })?;
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return invalid("all pairs share the same abscissa");
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Cancellation (dB) needed at `tx_power_dbm`, from calibration pairs `(tx_power_dbm, cancellation_db)`.
pub fn params_for_power(tx_power_dbm: f64, table: &[(f64, f64)]) -> Result<f64> {
    Ok(fit_line(table)?.eval(tx_power_dbm))
}
