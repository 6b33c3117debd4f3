use std::f64::consts::PI;

use crate::error::{Error, Result};

// B_{2k} / (2k (2k-1))
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// Below this the argument is shifted upward before the Stirling series.
const SHIFT_TO: f64 = 15.0;

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParam(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(lgamma(x))
}

/// Unchecked `ln Gamma(x)`; callers guarantee `x > 0`.
pub(crate) fn lgamma(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut y = x;
    let mut prod = 1.0;
    while y < SHIFT_TO {
        prod *= y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in STIRLING {
        corr += c * p;
        p *= inv2;
    }
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + corr - prod.ln()
}
