//! Special functions: log-gamma, log-domain Bessel functions, complex erfc
//! and the large-order Bessel approximants used in the local kernel limit.

mod bessel;
mod erfc;
mod gamma;

pub use bessel::{
    bessel_i_debye, bessel_i_series, k_regime, log_bessel_k, log_k_with, scaled_bessel_i,
    scaled_bessel_i_flagged, BesselKind, BesselRegime, DEBYE_MIN_ORDER,
};
pub use erfc::{erfc_complex, erfc_complex_flagged, erfc_real, faddeeva, ERFC_ACCURACY_RADIUS};
pub use gamma::log_gamma;
pub(crate) use gamma::lgamma;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::core::{scaled_value, ScaledComplex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticKind {
    /// `K_nu(x) ~ sqrt(pi/(2x)) e^{-x}` for fixed order, `x -> inf`.
    KLargeArg,
    /// Uniform large-order form of `K_nu(x)`; `arg = x = nu |z|`.
    KUniform,
    /// Approximant of `I_nu(sqrt(nu) z)`; `arg = z`.
    ILemma,
    /// Approximant of `K_nu(sqrt(nu) x)`; `arg = x > 0`.
    KLemma,
}

/// Right-hand side of the chosen Bessel asymptotic. Only meant for ratio
/// checks against [`log_bessel_k`] / [`scaled_bessel_i`].
pub fn bessel_asymptotic(kind: AsymptoticKind, order: f64, arg: Complex64) -> Result<ScaledComplex> {
    let real_positive = arg.im == 0.0 && arg.re > 0.0;
    let nu = order;
    match kind {
        AsymptoticKind::KLargeArg => {
            if !real_positive {
                return Err(Error::InvalidParam("K_large_arg needs a positive real argument".into()));
            }
            let x = arg.re;
            Ok(ScaledComplex::from_log(0.5 * (PI / (2.0 * x)).ln() - x))
        }
        AsymptoticKind::KUniform => {
            if !real_positive || !(nu > 0.0) {
                return Err(Error::InvalidParam("K_uniform needs order > 0 and a positive real argument".into()));
            }
            let z = arg.re / nu;
            let r = (1.0 + z * z).sqrt();
            Ok(ScaledComplex::from_log(
                0.5 * (PI / (2.0 * nu)).ln() - 0.25 * (1.0 + z * z).ln() + nu * ((1.0 + r) / z).ln() - nu * r,
            ))
        }
        AsymptoticKind::ILemma => {
            if !(nu > 0.0) {
                return Err(Error::InvalidParam("I_lemma needs order > 0".into()));
            }
            if arg.norm() == 0.0 {
                return Ok(ScaledComplex::ZERO);
            }
            let half = ScaledComplex::from_complex(arg * 0.5);
            let q = arg * arg * 0.25;
            let log_mag =
                -0.5 * (2.0 * PI).ln() - 0.5 * (nu + 1.0) * nu.ln() + nu * half.log_mag + nu + q.re;
            Ok(scaled_value(log_mag, nu * half.phase + q.im))
        }
        AsymptoticKind::KLemma => {
            if !real_positive || !(nu > 0.0) {
                return Err(Error::InvalidParam("K_lemma needs order > 0 and a positive real argument".into()));
            }
            let x = arg.re;
            Ok(ScaledComplex::from_log(
                0.5 * (PI / 2.0).ln() + 0.5 * (nu - 1.0) * nu.ln() - nu * (x / 2.0).ln() - nu - x * x / 4.0,
            ))
        }
    }
}

/// `ratio = exact / approximant` for one of the asymptotic forms, with the
/// exact side evaluated at the matching argument.
pub fn asymptotic_ratio(kind: AsymptoticKind, order: f64, arg: Complex64) -> Result<Complex64> {
    let approx = bessel_asymptotic(kind, order, arg)?;
    let exact = match kind {
        AsymptoticKind::KLargeArg | AsymptoticKind::KUniform => {
            ScaledComplex::from_log(log_bessel_k(order, arg.re)?)
        }
        AsymptoticKind::KLemma => ScaledComplex::from_log(log_bessel_k(order, order.sqrt() * arg.re)?),
        AsymptoticKind::ILemma => scaled_bessel_i(order, arg * order.sqrt()),
    };
    Ok((exact / approx).to_complex())
}
