//! Parameter records, log-polar complex numbers, grids and seeded RNG streams.

use std::f64::consts::PI;
use std::ops::{Div, Mul};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Scalar parameters of the ensemble together with every derived constant.
///
/// Quantities that need `0 < tau < 1` are `None` outside that range, and
/// `delta` is `None` when `alpha_N = 0` (or `tau = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    pub tau: f64,
    #[serde(rename = "alpha_N")]
    pub alpha_n: f64,
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    #[serde(rename = "B")]
    pub big_b: Option<f64>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub tau_c: f64,
}

pub fn make_params(n: usize, nu: f64, tau: f64) -> Result<EnsembleParams> {
    if n == 0 {
        return Err(Error::InvalidParam("N must be positive".into()));
    }
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(Error::InvalidParam(format!("nu must be > -1, got {nu}")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParam(format!("tau must lie in [0,1], got {tau}")));
    }
    let nf = n as f64;
    let alpha_n = nu / nf;
    let open = tau > 0.0 && tau < 1.0;
    let (big_a, big_b, c, a) = if open {
        let s = 1.0 - tau * tau;
        let ab = 2.0 / s;
        let bb = 2.0 * tau / s;
        let c = (ab * ab - bb * bb) * nf / (2.0 * bb);
        (Some(ab), Some(bb), Some(c), Some(s * nu.max(0.0).sqrt() / tau))
    } else {
        (None, None, None, None)
    };
    let delta = if alpha_n > 0.0 && tau < 1.0 {
        let s = 1.0 - tau * tau;
        Some(1.0 / (s * s * alpha_n))
    } else {
        None
    };
    let tau_c = if alpha_n >= 0.0 { 1.0 / (1.0 + alpha_n).sqrt() } else { f64::NAN };
    Ok(EnsembleParams { n, nu, tau, alpha_n, big_a, big_b, c, a, delta, tau_c })
}

impl EnsembleParams {
    /// Builds a record at the critical value `tau_c = 1/sqrt(1 + nu/N)`.
    pub fn critical(n: usize, nu: f64) -> Result<Self> {
        if !(nu >= 0.0) {
            return Err(Error::InvalidParam("critical tau needs nu >= 0".into()));
        }
        make_params(n, nu, 1.0 / (1.0 + nu / n as f64).sqrt())
    }

    /// `(A, B, c, a)` for kernel and potential code, which all need `tau` in (0,1).
    pub fn kernel_constants(&self) -> Result<(f64, f64, f64, f64)> {
        match (self.big_a, self.big_b, self.c, self.a) {
            (Some(ab), Some(bb), Some(c), Some(a)) => Ok((ab, bb, c, a)),
            _ => Err(Error::InvalidParam(format!(
                "operation requires 0 < tau < 1, got tau = {}",
                self.tau
            ))),
        }
    }

    /// Integer `nu` for sampling; rejects fractional or negative values.
    pub fn nu_integer(&self) -> Result<usize> {
        if self.nu < 0.0 || self.nu.fract() != 0.0 {
            return Err(Error::InvalidParam(format!(
                "sampling needs a non-negative integer nu, got {}",
                self.nu
            )));
        }
        Ok(self.nu as usize)
    }
}

#[derive(Deserialize)]
struct RawParams {
    #[serde(rename = "N")]
    n: usize,
    nu: f64,
    tau: f64,
    #[serde(rename = "alpha_N")]
    alpha_n: Option<f64>,
    #[serde(rename = "A")]
    big_a: Option<f64>,
    #[serde(rename = "B")]
    big_b: Option<f64>,
    c: Option<f64>,
    a: Option<f64>,
    delta: Option<f64>,
    tau_c: Option<f64>,
}

fn agrees(stored: Option<f64>, fresh: Option<f64>) -> bool {
    match (stored, fresh) {
        (None, _) => true,
        (Some(s), Some(f)) => (s - f).abs() <= 1e-12 * f.abs().max(1.0),
        (Some(_), None) => false,
    }
}

impl<'de> Deserialize<'de> for EnsembleParams {
    /// Only `N`, `nu`, `tau` are trusted; any derived field present must match
    /// a fresh computation.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        let p = make_params(raw.n, raw.nu, raw.tau).map_err(serde::de::Error::custom)?;
        let checks = [
            ("alpha_N", raw.alpha_n, Some(p.alpha_n)),
            ("A", raw.big_a, p.big_a),
            ("B", raw.big_b, p.big_b),
            ("c", raw.c, p.c),
            ("a", raw.a, p.a),
            ("delta", raw.delta, p.delta),
            ("tau_c", raw.tau_c, Some(p.tau_c)),
        ];
        for (name, stored, fresh) in checks {
            if !agrees(stored, fresh) {
                return Err(serde::de::Error::custom(format!(
                    "derived field {name} = {stored:?} disagrees with recomputed {fresh:?}"
                )));
            }
        }
        Ok(p)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(p: f64) -> f64 {
    if p > -PI && p <= PI {
        return p;
    }
    let mut r = p.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A complex number stored as `exp(log_mag) * exp(i phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub log_mag: f64,
    pub phase: f64,
}

pub fn scaled_value(log_magnitude: f64, phase: f64) -> ScaledComplex {
    if log_magnitude == f64::NEG_INFINITY {
        return ScaledComplex::ZERO;
    }
    ScaledComplex { log_mag: log_magnitude, phase: wrap_phase(phase) }
}

impl ScaledComplex {
    pub const ZERO: Self = Self { log_mag: f64::NEG_INFINITY, phase: 0.0 };
    pub const ONE: Self = Self { log_mag: 0.0, phase: 0.0 };

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        // hypot-free log magnitude that survives |z| near the overflow limit
        let m = z.re.abs().max(z.im.abs());
        let (u, v) = (z.re / m, z.im / m);
        Self { log_mag: m.ln() + 0.5 * (u * u + v * v).ln(), phase: z.im.atan2(z.re) }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `exp(log)` as a positive real.
    pub fn from_log(log: f64) -> Self {
        scaled_value(log, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    pub fn abs(&self) -> f64 {
        self.log_mag.exp()
    }

    /// Real part, assuming the value is (numerically) real.
    pub fn re(&self) -> f64 {
        self.to_complex().re
    }

    pub fn conj(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        scaled_value(self.log_mag, -self.phase)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        scaled_value(self.log_mag, self.phase + PI)
    }

    /// Multiplies by the positive real `exp(log)`.
    pub fn scale_log(&self, log: f64) -> Self {
        if self.is_zero() {
            return *self;
        }
        Self { log_mag: self.log_mag + log, phase: self.phase }
    }

    pub fn powi(&self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::ONE } else { *self };
        }
        scaled_value(self.log_mag * k as f64, self.phase * k as f64)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (big, small) = if self.log_mag >= other.log_mag { (self, other) } else { (other, self) };
        if small.is_zero() {
            return *big;
        }
        let r = (small.log_mag - big.log_mag).exp();
        let d = wrap_phase(small.phase - big.phase);
        // keep real sums exactly real
        let w = if d == 0.0 {
            Complex64::new(1.0 + r, 0.0)
        } else if d == PI {
            Complex64::new(1.0 - r, 0.0)
        } else {
            Complex64::new(1.0, 0.0) + Complex64::from_polar(r, d)
        };
        if w.re == 0.0 && w.im == 0.0 {
            return Self::ZERO;
        }
        let wl = Self::from_complex(w);
        scaled_value(big.log_mag + wl.log_mag, big.phase + wl.phase)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl Mul for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        scaled_value(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Div for ScaledComplex {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        scaled_value(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }
}

/// Running sum of ScaledComplex terms.
///
/// Terms are folded in order; the accumulator keeps the largest magnitude
/// seen so the final cancellation loss can be reported.
#[derive(Debug, Clone, Copy)]
pub struct ScaledSum {
    pub total: ScaledComplex,
    pub max_term_log: f64,
}

impl Default for ScaledSum {
    fn default() -> Self {
        Self { total: ScaledComplex::ZERO, max_term_log: f64::NEG_INFINITY }
    }
}

impl ScaledSum {
    pub fn push(&mut self, t: ScaledComplex) {
        self.max_term_log = self.max_term_log.max(t.log_mag);
        self.total = self.total.add(&t);
    }

    /// Digits (natural-log units) lost to cancellation.
    pub fn loss(&self) -> f64 {
        if self.total.is_zero() {
            return f64::INFINITY;
        }
        (self.max_term_log - self.total.log_mag).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_min < x_max) || !(y_min < y_max) || nx == 0 || ny == 0 {
            return Err(Error::InvalidParam(format!(
                "bad grid [{x_min},{x_max}]x[{y_min},{y_max}] with {nx}x{ny} cells"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Lebesgue area of one cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Cell holding `z` under the half-open convention, if any.
    pub fn cell_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let i = bin(z.re, self.x_min, self.x_max, self.nx)?;
        let j = bin(z.im, self.y_min, self.y_max, self.ny)?;
        Some((i, j))
    }

    /// Left edge of column `i` (`i = nx` gives `x_max`).
    pub fn x_edge(&self, i: usize) -> f64 {
        edge(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y_edge(&self, j: usize) -> f64 {
        edge(self.y_min, self.y_max, self.ny, j)
    }
}

fn edge(min: f64, max: f64, n: usize, i: usize) -> f64 {
    if i == n {
        max
    } else {
        min + (max - min) * i as f64 / n as f64
    }
}

/// Half-open bin index: `edge(i) <= v < edge(i + 1)`.
fn bin(v: f64, min: f64, max: f64, n: usize) -> Option<usize> {
    if !(v >= min && v < max) {
        return None;
    }
    let mut i = (((v - min) / (max - min)) * n as f64).floor() as usize;
    i = i.min(n - 1);
    if v < edge(min, max, n, i) {
        i -= 1;
    } else if i + 1 < n && v >= edge(min, max, n, i + 1) {
        i += 1;
    }
    Some(i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Independent ChaCha stream for this (seed, stream) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// `count` evenly spaced points on `[min, max]`, endpoints included.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    max
                } else {
                    min + (max - min) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}
