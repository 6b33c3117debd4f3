//! Finite-N correlation kernels built from planar Laguerre polynomials, the
//! rescaled kernels at the origin, the `I_k` decomposition with its contour
//! representation, and the limiting kernels.
//!
//! Kernel values are carried as [`ScaledComplex`] since the individual
//! factors (`K_nu`, `|zeta|^nu`, `1/h_j`) over- or underflow for large `nu`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::core::{scaled_value, EnsembleParams, ScaledComplex, ScaledSum};
use crate::error::{Error, Result};
use crate::specialfn::{erfc_complex, lgamma, log_bessel_k};

/// Phase convention of a kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Carries the cocycle `exp(i tau sqrt(nu) (Im z - Im w))` of the `I_k`
    /// decomposition.
    Raw,
    /// Hermitian: `K(w, z) = conj K(z, w)`, real non-negative diagonal.
    CocycleFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub value: ScaledComplex,
    pub gauge: Gauge,
    pub params_snapshot: EnsembleParams,
}

impl KernelEval {
    pub fn modulus(&self) -> f64 {
        self.value.abs()
    }

    pub fn to_complex(&self) -> Complex64 {
        self.value.to_complex()
    }

    /// Removes the `I_k` cocycle from a raw value of the rescaled Wishart
    /// kernel at `(z, w)`. Cocycle-free values are returned unchanged.
    pub fn hermitian(&self, z: Complex64, w: Complex64) -> KernelEval {
        match self.gauge {
            Gauge::CocycleFree => *self,
            Gauge::Raw => {
                let p = &self.params_snapshot;
                let shift = -p.tau * p.nu.sqrt() * (z.im - w.im);
                KernelEval {
                    value: self.value * scaled_value(0.0, shift),
                    gauge: Gauge::CocycleFree,
                    params_snapshot: *p,
                }
            }
        }
    }
}

fn eval(value: ScaledComplex, gauge: Gauge, p: &EnsembleParams) -> KernelEval {
    KernelEval { value, gauge, params_snapshot: *p }
}

/// `L_0^nu(z), ..., L_jmax^nu(z)` by the upward three-term recurrence with a
/// running common scale.
pub fn laguerre_sequence(jmax: usize, nu: f64, z: Complex64) -> Result<Vec<ScaledComplex>> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(Error::InvalidParam(format!("Laguerre order must be > -1, got {nu}")));
    }
    let mut out = Vec::with_capacity(jmax + 1);
    out.push(ScaledComplex::ONE);
    if jmax == 0 {
        return Ok(out);
    }
    let mut prev = Complex64::new(1.0, 0.0);
    let mut cur = Complex64::new(nu + 1.0, 0.0) - z;
    let mut scale = 0.0;
    out.push(ScaledComplex::from_complex(cur));
    for j in 1..jmax {
        let jf = j as f64;
        let next = ((2.0 * jf + nu + 1.0 - z) * cur - (jf + nu) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        let m = cur.norm().max(prev.norm());
        if m > 0.0 && m.is_finite() {
            cur /= m;
            prev /= m;
            scale += m.ln();
        }
        out.push(ScaledComplex::from_complex(cur).scale_log(scale));
    }
    Ok(out)
}

/// Generalised Laguerre polynomial `L_j^nu(z)`.
pub fn laguerre_scaled(j: usize, nu: f64, z: Complex64) -> Result<ScaledComplex> {
    Ok(*laguerre_sequence(j, nu, z)?.last().expect("non-empty"))
}

/// `ln h_j^nu`, the log of the orthogonality norm.
pub fn log_norm_h(j: usize, params: &EnsembleParams) -> Result<f64> {
    let (a, b, _, _) = params.kernel_constants()?;
    Ok(log_h(j, params.n as f64, params.nu, a, b))
}

fn log_h(j: usize, n: f64, nu: f64, a: f64, b: f64) -> f64 {
    let jf = j as f64;
    -(a.ln() + (nu + 2.0) * n.ln()) + (nu + 1.0) * (2.0 * a / (a * a - b * b)).ln() + lgamma(jf + nu + 1.0)
        - lgamma(jf + 1.0)
        + 2.0 * jf * (a / b).ln()
}

/// `-N Q_N(zeta)`, the log of the Wishart weight.
pub fn log_weight_q(zeta: Complex64, params: &EnsembleParams) -> Result<f64> {
    let (a, b, _, _) = params.kernel_constants()?;
    let r = zeta.norm();
    if r == 0.0 {
        return Err(Error::InvalidParam("the weight is not evaluated at 0".into()));
    }
    let n = params.n as f64;
    Ok(log_bessel_k(params.nu, a * n * r)? + params.nu * r.ln() + n * b * zeta.re)
}

/// `-N V_N(zeta)`, the log of the Dirac weight.
pub fn log_weight_v(zeta: Complex64, params: &EnsembleParams) -> Result<f64> {
    Ok(log_weight_q(zeta * zeta, params)? + 2.0 * zeta.norm().ln())
}

// sum_j exp(lw_j) L_j(u) conj(L_j(v)) over j < n
fn pair_sum(lu: &[ScaledComplex], lv: &[ScaledComplex], lw: impl Fn(usize) -> f64) -> ScaledComplex {
    let mut s = ScaledSum::default();
    for (j, (x, y)) in lu.iter().zip(lv).enumerate() {
        s.push((*x * y.conj()).scale_log(lw(j)));
    }
    s.total
}

fn nonzero(z: Complex64, what: &str) -> Result<()> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidParam(format!("{what} is not evaluated at 0")));
    }
    Ok(())
}

/// Exact kernel `K^_N(zeta, eta)` of the Wishart eigenvalues.
pub fn kernel_wishart(zeta: Complex64, eta: Complex64, params: &EnsembleParams) -> Result<KernelEval> {
    nonzero(zeta, "kernel")?;
    nonzero(eta, "kernel")?;
    let (a, b, c, _) = params.kernel_constants()?;
    let (n, nu) = (params.n, params.nu);
    let lu = laguerre_sequence(n - 1, nu, c * zeta)?;
    let lv = if eta == zeta { lu.clone() } else { laguerre_sequence(n - 1, nu, c * eta)? };
    let w = 0.5 * (log_weight_q(zeta, params)? + log_weight_q(eta, params)?);
    let s = pair_sum(&lu, &lv, |j| -log_h(j, n as f64, nu, a, b));
    Ok(eval(s.scale_log(w), Gauge::CocycleFree, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracPath {
    /// Sum over Laguerre polynomials in `c zeta^2` with the Dirac weight.
    Direct,
    /// `2 |zeta eta| K^_N(zeta^2, eta^2)`.
    ViaWishart,
}

/// Exact kernel `K_N(zeta, eta)` of the Dirac eigenvalues.
pub fn kernel_dirac(zeta: Complex64, eta: Complex64, params: &EnsembleParams) -> Result<KernelEval> {
    kernel_dirac_with(DiracPath::Direct, zeta, eta, params)
}

pub fn kernel_dirac_with(
    path: DiracPath,
    zeta: Complex64,
    eta: Complex64,
    params: &EnsembleParams,
) -> Result<KernelEval> {
    nonzero(zeta, "kernel")?;
    nonzero(eta, "kernel")?;
    match path {
        DiracPath::ViaWishart => {
            let k = kernel_wishart(zeta * zeta, eta * eta, params)?;
            let f = (2.0 * zeta.norm() * eta.norm()).ln();
            Ok(eval(k.value.scale_log(f), Gauge::CocycleFree, params))
        }
        DiracPath::Direct => {
            let (a, b, c, _) = params.kernel_constants()?;
            let (n, nu) = (params.n, params.nu);
            let lu = laguerre_sequence(n - 1, nu, c * zeta * zeta)?;
            let lv = if eta * eta == zeta * zeta { lu.clone() } else { laguerre_sequence(n - 1, nu, c * eta * eta)? };
            let w = 0.5 * (log_weight_v(zeta, params)? + log_weight_v(eta, params)?);
            let s = pair_sum(&lu, &lv, |j| LN_2 - log_h(j, n as f64, nu, a, b));
            Ok(eval(s.scale_log(w), Gauge::CocycleFree, params))
        }
    }
}

/// The one-point function of the Dirac eigenvalues in its product form.
pub fn dirac_one_point(zeta: Complex64, params: &EnsembleParams) -> Result<f64> {
    let (a, b, c, _) = params.kernel_constants()?;
    let (n, nu) = (params.n as f64, params.nu);
    let r2 = zeta.norm_sqr();
    if r2 == 0.0 {
        return Ok(0.0);
    }
    let lag = laguerre_sequence(params.n - 1, nu, c * zeta * zeta)?;
    let ratio = (b / a).ln();
    let s = pair_sum(&lag, &lag, |j| {
        let jf = j as f64;
        lgamma(jf + 1.0) - lgamma(jf + nu + 1.0) + 2.0 * jf * ratio
    });
    let pre = LN_2 + a.ln() + (nu + 2.0) * n.ln() + (nu + 1.0) * ((a * a - b * b) / (2.0 * a)).ln()
        + log_bessel_k(nu, a * n * r2)?
        + (nu + 1.0) * r2.ln()
        + b * n * (zeta * zeta).re;
    Ok(s.scale_log(pre).re())
}

fn scale_factor(params: &EnsembleParams) -> Result<f64> {
    params.kernel_constants()?;
    match params.delta {
        Some(d) if params.nu > 0.0 => Ok(params.n as f64 * d),
        _ => Err(Error::InvalidParam("the local scaling needs nu > 0".into())),
    }
}

/// Rescaled Wishart kernel `(N delta)^{-1} K^_N(z / sqrt(N delta), w / sqrt(N delta))`.
pub fn rescaled_kernel_wishart(z: Complex64, w: Complex64, params: &EnsembleParams) -> Result<KernelEval> {
    let nd = scale_factor(params)?;
    let s = nd.sqrt();
    let k = kernel_wishart(z / s, w / s, params)?;
    Ok(eval(k.value.scale_log(-nd.ln()), Gauge::CocycleFree, params))
}

/// Rescaled Dirac kernel `(N delta)^{-1/2} K_N(z / (N delta)^{1/4}, w / (N delta)^{1/4})`.
pub fn rescaled_kernel(z: Complex64, w: Complex64, params: &EnsembleParams) -> Result<KernelEval> {
    let nd = scale_factor(params)?;
    let s = nd.powf(0.25);
    let k = kernel_dirac(z / s, w / s, params)?;
    Ok(eval(k.value.scale_log(-0.5 * nd.ln()), Gauge::CocycleFree, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescalePath {
    /// The closed expression in `a z^2` and `K_nu(2 sqrt(nu) |z|^2)`.
    Closed,
    /// Diagonal of the unscaled kernel at `z / (N delta)^{1/4}`.
    Scaling,
}

/// Rescaled one-point function `R_{N,1}(z)` of the Dirac eigenvalues.
pub fn rescaled_density(z: Complex64, params: &EnsembleParams) -> Result<f64> {
    rescaled_density_with(RescalePath::Closed, z, params)
}

pub fn rescaled_density_with(path: RescalePath, z: Complex64, params: &EnsembleParams) -> Result<f64> {
    let nd = scale_factor(params)?;
    if z.norm() == 0.0 {
        return Ok(0.0);
    }
    match path {
        RescalePath::Scaling => Ok(rescaled_kernel(z, z, params)?.value.re().max(0.0)),
        RescalePath::Closed => {
            let _ = nd;
            let (_, _, _, a) = params.kernel_constants()?;
            let (nu, tau) = (params.nu, params.tau);
            let r2 = z.norm_sqr();
            let lag = laguerre_sequence(params.n - 1, nu, a * z * z)?;
            let lt = 2.0 * tau.ln();
            let s = pair_sum(&lag, &lag, |j| {
                let jf = j as f64;
                jf * lt + lgamma(jf + 1.0) - lgamma(jf + nu + 1.0)
            });
            let sn = nu.sqrt();
            let pre = 4f64.ln() + (0.5 * nu + 1.0) * nu.ln() + (nu + 1.0) * (1.0 - tau * tau).ln()
                + log_bessel_k(nu, 2.0 * sn * r2)?
                + (nu + 1.0) * r2.ln()
                + 2.0 * tau * sn * (z * z).re;
            Ok(s.scale_log(pre).re().max(0.0))
        }
    }
}

/// `k`-point function `det[K(z_i, z_j)]` of the Dirac eigenvalues, rescaled
/// or not. At most 8 points.
pub fn corr_k(points: &[Complex64], params: &EnsembleParams, rescaled: bool) -> Result<f64> {
    let k = points.len();
    if k == 0 || k > 8 {
        return Err(Error::InvalidParam(format!("need between 1 and 8 points, got {k}")));
    }
    for i in 0..k {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Coincident(j, i));
            }
        }
    }
    if k == 1 {
        return if rescaled { rescaled_density(points[0], params) } else { dirac_one_point(points[0], params) };
    }
    let mut m = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in i..k {
            let v = if rescaled {
                rescaled_kernel(points[i], points[j], params)?
            } else {
                kernel_dirac(points[i], points[j], params)?
            }
            .to_complex();
            m[i * k + j] = v;
            m[j * k + i] = v.conj();
        }
        m[i * k + i] = Complex64::new(m[i * k + i].re, 0.0);
    }
    Ok(det(&mut m, k).re)
}

/// Determinant by Gaussian elimination with partial pivoting; destroys `m`.
pub fn det(m: &mut [Complex64], k: usize) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| m[x * k + c].norm().total_cmp(&m[y * k + c].norm())).unwrap();
        if m[p * k + c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            for j in 0..k {
                m.swap(p * k + j, c * k + j);
            }
            d = -d;
        }
        let piv = m[c * k + c];
        d *= piv;
        for r in (c + 1)..k {
            let f = m[r * k + c] / piv;
            for j in c..k {
                let t = m[c * k + j];
                m[r * k + j] -= f * t;
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRegime {
    Bulk,
    Critical,
    Gapped,
}

impl LimitRegime {
    /// Regime of `tau` relative to `tau_c = 1/sqrt(1 + alpha)`; `tau` within
    /// `1e-12` of `tau_c` counts as critical.
    pub fn from_tau(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam("the limit kernels need alpha > 0".into()));
        }
        let tc = 1.0 / (1.0 + alpha).sqrt();
        Ok(if (tau - tc).abs() <= 1e-12 {
            LimitRegime::Critical
        } else if tau < tc {
            LimitRegime::Bulk
        } else {
            LimitRegime::Gapped
        })
    }
}

/// Ginibre kernel `G(z, w) = exp(z wbar - |z|^2/2 - |w|^2/2)`.
pub fn ginibre_kernel(z: Complex64, w: Complex64) -> Complex64 {
    (z * w.conj() - 0.5 * z.norm_sqr() - 0.5 * w.norm_sqr()).exp()
}

/// Limiting rescaled Dirac kernel at the origin.
pub fn limit_kernel(z: Complex64, w: Complex64, alpha: f64, regime: LimitRegime) -> Result<Complex64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("the limit kernels need alpha > 0".into()));
    }
    let zw = z.norm() * w.norm();
    let (z2, w2) = (z * z, w * w);
    Ok(match regime {
        LimitRegime::Bulk => 2.0 * zw * ginibre_kernel(z2, w2),
        LimitRegime::Critical => {
            zw * ginibre_kernel(z2, w2) * erfc_complex(-(z2 + w2.conj()) / 2f64.sqrt())
        }
        LimitRegime::Gapped => Complex64::new(0.0, 0.0),
    })
}

fn ik_check(k: usize, params: &EnsembleParams) -> Result<(f64, f64)> {
    let (_, _, _, a) = params.kernel_constants()?;
    if !(params.nu > 0.0) {
        return Err(Error::InvalidParam("I_k needs nu > 0".into()));
    }
    if k >= params.n {
        return Err(Error::InvalidParam(format!("I_k needs k < N, got k = {k}, N = {}", params.n)));
    }
    Ok((a, params.tau * params.nu.sqrt()))
}

/// `I_k(z) = (1-tau^2)^{nu+2k+1} e^{tau sqrt(nu) z} sum_{j<=N-1-k} tau^{2j} L_j^{nu+2k}(a z)`.
pub fn ik_sum(k: usize, z: Complex64, params: &EnsembleParams) -> Result<ScaledComplex> {
    let (a, ts) = ik_check(k, params)?;
    let order = params.nu + 2.0 * k as f64;
    let lag = laguerre_sequence(params.n - 1 - k, order, a * z)?;
    let lt = 2.0 * params.tau.ln();
    let mut s = ScaledSum::default();
    for (j, l) in lag.iter().enumerate() {
        s.push(l.scale_log(j as f64 * lt));
    }
    let pre = scaled_value((order + 1.0) * (1.0 - params.tau * params.tau).ln() + ts * z.re, ts * z.im);
    Ok(s.total * pre)
}

/// Contour settings for [`ik_contour`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkParams {
    pub k: usize,
    /// Radius of the circular contour; must lie in `(tau^2, 1)`.
    pub contour_radius: f64,
    /// Initial node count, at least 64; doubled until converged.
    pub nodes: usize,
}

pub const IK_MAX_NODES: usize = 1 << 16;

impl IkParams {
    /// Radius `(1 + tau^2)/2`, halfway between the removable point `tau^2`
    /// (the saddle point of the large-N analysis) and the excluded point 1.
    pub fn new(k: usize, tau: f64) -> Self {
        IkParams { k, contour_radius: 0.5 * (1.0 + tau * tau), nodes: 64 }
    }

    /// Radius in `(tau^2, 1)` minimising the peak of `|integrand|` on the
    /// circle, which keeps the trapezoidal sum free of cancellation.
    pub fn for_point(k: usize, z: Complex64, params: &EnsembleParams) -> Result<Self> {
        let (_, ts) = ik_check(k, params)?;
        let t2 = params.tau * params.tau;
        let peak = |rho: f64| -> f64 {
            (0..64)
                .map(|i| {
                    let s = Complex64::from_polar(rho, 2.0 * PI * i as f64 / 64.0);
                    ik_log_integrand(k, s, z, params, ts).re + rho.ln()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut best = (f64::INFINITY, 0.5 * (1.0 + t2));
        for i in 1..48 {
            let rho = t2 + (1.0 - t2) * i as f64 / 48.0;
            let v = peak(rho);
            if v < best.0 {
                best = (v, rho);
            }
        }
        Ok(IkParams { k, contour_radius: best.1, nodes: 64 })
    }
}

/// Integrand of the contour representation of `I_k(z)` at `s`. The point
/// `s = tau^2` is removable and evaluated through its series.
pub fn ik_integrand(k: usize, s: Complex64, z: Complex64, params: &EnsembleParams) -> Result<ScaledComplex> {
    let (_, ts) = ik_check(k, params)?;
    if s.norm() == 0.0 || (s - 1.0).norm() == 0.0 {
        return Err(Error::InvalidParam("the integrand is singular at 0 and 1".into()));
    }
    let l = ik_log_integrand(k, s, z, params, ts);
    Ok(scaled_value(l.re, l.im))
}

// complex log of the integrand; its imaginary part is a phase
fn ik_log_integrand(k: usize, s: Complex64, z: Complex64, params: &EnsembleParams, ts: f64) -> Complex64 {
    let t2 = params.tau * params.tau;
    let power = params.nu + 2.0 * k as f64 + 1.0;
    let m = (params.n - k) as f64;
    let one = Complex64::new(1.0, 0.0);
    let base = -power * ((one - s) / (1.0 - t2)).ln();
    let expo = ts * z * (one - s / (one - s) * ((1.0 - t2) / t2));
    let d = s - t2;
    let frac = if d.norm() < 1e-6 * t2 {
        let e = d / t2;
        (m - m * (m + 1.0) * e / 2.0 + m * (m + 1.0) * (m + 2.0) * e * e / 6.0) / t2
    } else {
        -expm1(-m * ln1p(d / t2)) / d
    };
    base + expo + frac.ln()
}

/// `I_k(z)` as the contour integral around the origin, by the trapezoidal
/// rule on a circle.
pub fn ik_contour(z: Complex64, params: &EnsembleParams, ik: &IkParams) -> Result<ScaledComplex> {
    let k = ik.k;
    let (_, ts) = ik_check(k, params)?;
    let t2 = params.tau * params.tau;
    let rho = ik.contour_radius;
    if !(rho > t2 && rho < 1.0) {
        return Err(Error::InvalidParam(format!("contour radius must lie in ({t2}, 1), got {rho}")));
    }
    if ik.nodes < 64 {
        return Err(Error::InvalidParam("the contour needs at least 64 nodes".into()));
    }
    let log_term = |theta: f64| -> Complex64 {
        let s = Complex64::from_polar(rho, theta);
        ik_log_integrand(k, s, z, params, ts) + s.ln()
    };
    // value and the relative roundoff floor sum|g_i| eps / |sum g_i|
    let trapezoid = |count: usize| -> (ScaledComplex, f64) {
        let logs: Vec<Complex64> = (0..count).map(|i| log_term(2.0 * PI * i as f64 / count as f64)).collect();
        let top = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let terms: Vec<Complex64> = logs.iter().map(|l| (l - top).exp()).collect();
        let sum: Complex64 = terms.iter().sum();
        let mass: f64 = terms.iter().map(|t| t.norm()).sum();
        let value = ScaledComplex::from_complex(sum / count as f64).scale_log(top);
        (value, f64::EPSILON * mass / sum.norm())
    };
    let mut count = ik.nodes;
    let (mut prev, _) = trapezoid(count);
    let mut change = f64::INFINITY;
    while count < IK_MAX_NODES {
        count *= 2;
        let (next, floor) = trapezoid(count);
        change = ((next.sub(&prev)) / next).abs();
        prev = next;
        if floor > 1e-9 {
            // cancellation on this circle swamps the result
            return Err(Error::Contour { nodes: count, change: change.max(floor) });
        }
        if change < 1e-12f64.max(10.0 * floor) {
            return Ok(prev);
        }
    }
    Err(Error::Contour { nodes: count, change })
}

// ln(1 + e) without cancellation for small e
fn ln1p(e: Complex64) -> Complex64 {
    Complex64::new(0.5 * (2.0 * e.re + e.norm_sqr()).ln_1p(), e.im.atan2(1.0 + e.re))
}

// exp(w) - 1 without cancellation for small w
fn expm1(w: Complex64) -> Complex64 {
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
}

/// Default truncation `m = ceil(N^{1/4})` of the `k`-sum.
pub fn default_truncation(n: usize) -> usize {
    ((n as f64).powf(0.25).ceil() as usize).clamp(1, n)
}

/// Rescaled Wishart kernel from the first `m` terms of its `I_k`
/// decomposition, in the raw gauge. `m = N` is exact.
pub fn kernel_via_ik(z: Complex64, w: Complex64, params: &EnsembleParams, m: usize) -> Result<KernelEval> {
    if m == 0 || m > params.n {
        return Err(Error::InvalidParam(format!("truncation must lie in 1..=N, got {m}")));
    }
    nonzero(z, "kernel")?;
    nonzero(w, "kernel")?;
    ik_check(0, params)?;
    let nu = params.nu;
    let sn = nu.sqrt();
    let zw = ScaledComplex::from_complex(z * w.conj());
    let arg = z + w.conj();
    let mut s = ScaledSum::default();
    for k in 0..m {
        let kf = k as f64;
        let coef = zw.powi(k as i32).scale_log(kf * nu.ln() - lgamma(kf + 1.0) - lgamma(kf + nu + 1.0));
        s.push(coef * ik_sum(k, arg, params)?);
    }
    let pre = LN_2 + (0.5 * nu + 1.0) * nu.ln()
        + 0.5 * (log_bessel_k(nu, 2.0 * sn * z.norm())? + log_bessel_k(nu, 2.0 * sn * w.norm())?)
        + 0.5 * nu * (z.norm() * w.norm()).ln();
    Ok(eval(s.total.scale_log(pre), Gauge::Raw, params))
}

/// `Gamma(nu+1) sum_{k>=m} (nu M)^k / (k! Gamma(k+nu+1))`, the tail of the
/// `k`-sum for `|z w| <= M`.
pub fn ik_tail_bound(nu: f64, big_m: f64, m: usize) -> f64 {
    let mut total = 0.0;
    let mut k = m;
    loop {
        let kf = k as f64;
        let t = (lgamma(nu + 1.0) + kf * (nu * big_m).ln() - lgamma(kf + 1.0) - lgamma(kf + nu + 1.0)).exp();
        total += t;
        if t < 1e-18 * total || k > m + 100_000 {
            return total;
        }
        k += 1;
    }
}
