//! Macroscopic laws: limiting densities and droplets, classical limits,
//! potentials, the exterior conformal map, the Cauchy transform and the
//! quadrature checks for the equilibrium problem.
//!
//! All densities are with respect to `dA = d^2 zeta / pi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{breakpoints, integrate, integrate_best, QuadResult};

const MEMBERSHIP_TOL: f64 = 1e-12;

fn check(alpha: f64, tau: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParam(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParam(format!("tau must lie in [0, 1), got {tau}")));
    }
    Ok(())
}

/// `(A, B)` for a given `tau < 1`.
pub fn coefficients(tau: f64) -> (f64, f64) {
    let d = 1.0 - tau * tau;
    (2.0 / d, 2.0 * tau / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropletGeometry {
    pub alpha: f64,
    pub tau: f64,
    pub x0: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub conformal_r: f64,
    pub quartic_rhs: f64,
    pub foci: (f64, f64),
    pub lambda: (f64, f64),
}

pub fn droplet_geometry(alpha: f64, tau: f64) -> Result<DropletGeometry> {
    check(alpha, tau)?;
    let r = (1.0 + alpha).sqrt();
    let t2 = tau * tau;
    let lambda = ((r - 1.0).powi(2), (r + 1.0).powi(2));
    Ok(DropletGeometry {
        alpha,
        tau,
        x0: tau * (2.0 + alpha),
        semi_major: (1.0 + t2) * r,
        semi_minor: (1.0 - t2) * r,
        conformal_r: r,
        quartic_rhs: (1.0 + alpha - t2) * (1.0 - (1.0 + alpha) * t2),
        foci: (tau * lambda.0, tau * lambda.1),
        lambda,
    })
}

impl DropletGeometry {
    /// `((x - x0)/a)^2 + (y/b)^2`; at most 1 on the closed ellipse.
    pub fn ellipse_form(&self, zeta: Complex64) -> f64 {
        let u = (zeta.re - self.x0) / self.semi_major;
        let v = zeta.im / self.semi_minor;
        u * u + v * v
    }

    pub fn contains(&self, zeta: Complex64) -> bool {
        self.ellipse_form(zeta) <= 1.0 + MEMBERSHIP_TOL
    }

    /// Whether the origin lies in the closed ellipse.
    pub fn origin_inside(&self) -> bool {
        self.contains(Complex64::new(0.0, 0.0))
    }

    /// Radial extent `[r_lo, r_hi]` of the ellipse along the ray
    /// `p + r e^{i phi}`, `r >= 0`.
    fn ray_range(&self, p: Complex64, phi: f64) -> Option<(f64, f64)> {
        let (s, c) = phi.sin_cos();
        let a2 = self.semi_major * self.semi_major;
        let b2 = self.semi_minor * self.semi_minor;
        let dx = p.re - self.x0;
        let dy = p.im;
        let qa = c * c / a2 + s * s / b2;
        let qb = 2.0 * (dx * c / a2 + dy * s / b2);
        let qc = dx * dx / a2 + dy * dy / b2 - 1.0;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // stable roots
        let q = -0.5 * (qb + qb.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        if hi <= 0.0 {
            return None;
        }
        Some((lo.max(0.0), hi))
    }
}

pub fn wishart_density(zeta: Complex64, alpha: f64, tau: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    Ok(wishart_density_in(&g, zeta))
}

fn wishart_density_in(g: &DropletGeometry, zeta: Complex64) -> f64 {
    if !g.contains(zeta) {
        return 0.0;
    }
    wishart_profile(g.alpha, g.tau, zeta.norm_sqr())
}

// density as a function of |zeta|^2, without the support indicator
fn wishart_profile(alpha: f64, tau: f64, abs2: f64) -> f64 {
    let d = 1.0 - tau * tau;
    1.0 / (d * (4.0 * abs2 + d * d * alpha * alpha).sqrt())
}

/// `(atom_mass, density)` of the limiting Dirac spectrum.
pub fn dirac_law(zeta: Complex64, alpha: f64, tau: f64) -> Result<(f64, f64)> {
    check(alpha, tau)?;
    let atom = alpha / (2.0 + alpha);
    if quartic_residual(zeta, alpha, tau)? > 0.0 {
        return Ok((atom, 0.0));
    }
    Ok((atom, dirac_profile(alpha, tau, zeta.norm_sqr())))
}

fn dirac_profile(alpha: f64, tau: f64, abs2: f64) -> f64 {
    let d = 1.0 - tau * tau;
    let k = alpha * d;
    (2.0 / (2.0 + alpha)) / d * abs2 / (abs2 * abs2 + 0.25 * k * k).sqrt()
}

/// Left minus right side of the quartic boundary equation; `<= 0` on the
/// closed Dirac droplet.
pub fn quartic_residual(zeta: Complex64, alpha: f64, tau: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    let (x2, y2) = (zeta.re * zeta.re, zeta.im * zeta.im);
    let d = 1.0 - tau * tau;
    let r2 = x2 + y2;
    Ok(r2 * r2 + 16.0 * tau * tau / (d * d) * x2 * y2 - 2.0 * tau * (2.0 + alpha) * (x2 - y2) - g.quartic_rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalLaw {
    /// Marchenko-Pastur law of `x`; parameter `alpha`.
    Mp,
    /// Marchenko-Pastur law of squared variables on both half-lines;
    /// parameter `alpha`. As written, this density has total mass 2 (mass 1
    /// on each half-line).
    MpSquared,
    /// Product of `M` Ginibre matrices on the unit disc; parameter `M`.
    ProductM,
}

/// Closed-form classical density. `point` must be real for the two
/// Marchenko-Pastur laws.
pub fn classical_density(kind: ClassicalLaw, point: Complex64, param: f64) -> Result<f64> {
    match kind {
        ClassicalLaw::Mp | ClassicalLaw::MpSquared => {
            if !(param >= 0.0) || !param.is_finite() {
                return Err(Error::InvalidParam(format!("alpha must be >= 0, got {param}")));
            }
            if point.im != 0.0 {
                return Err(Error::InvalidParam("Marchenko-Pastur laws live on the real line".into()));
            }
            let r = (1.0 + param).sqrt();
            let (lm, lp) = ((r - 1.0).powi(2), (r + 1.0).powi(2));
            let x = point.re;
            if kind == ClassicalLaw::Mp {
                if x < lm || x > lp || x == 0.0 {
                    return Ok(if x == 0.0 && lm == 0.0 { f64::INFINITY } else { 0.0 });
                }
                Ok(((lp - x) * (x - lm)).sqrt() / (2.0 * PI * x))
            } else {
                let s = x * x;
                if s < lm || s > lp {
                    return Ok(0.0);
                }
                if x == 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(((lp - s) * (s - lm)).sqrt() / (PI * x.abs()))
            }
        }
        ClassicalLaw::ProductM => {
            if !(param >= 1.0) || param.fract() != 0.0 {
                return Err(Error::InvalidParam(format!("M must be an integer >= 1, got {param}")));
            }
            let r = point.norm();
            if r > 1.0 {
                return Ok(0.0);
            }
            Ok(1.0 / (param * r.powf(2.0 - 2.0 / param)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePoints {
    /// The droplet meets the real axis at `+-outer`.
    pub outer: f64,
    /// Inner edges `+-inner` when the droplet has split (0 at criticality).
    pub inner: Option<f64>,
}

/// Real-axis edge points of the Dirac droplet, `tau` in `[0, 1]`.
pub fn edge_points(alpha: f64, tau: f64) -> Result<EdgePoints> {
    if !(alpha >= 0.0) || !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParam(format!("need alpha >= 0 and tau in [0, 1], got {alpha}, {tau}")));
    }
    let r = (1.0 + alpha).sqrt();
    let outer = ((1.0 + tau * r) * (r + tau)).sqrt();
    let t = tau * r - 1.0;
    let inner = if t >= -1e-12 { Some((t.max(0.0) * (r - tau)).sqrt()) } else { None };
    Ok(EdgePoints { outer, inner })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialVariant {
    QTilde,
    VTilde,
    QTilde0,
    LaplacianQ,
    LaplacianV,
}

/// Potentials and their Laplacians (`Delta = d dbar`). The `log|zeta|`
/// term of `VTilde` is included only when `n` is given.
pub fn potential(zeta: Complex64, alpha: f64, tau: f64, variant: PotentialVariant, n: Option<usize>) -> Result<f64> {
    check(alpha, tau)?;
    let (a, b) = coefficients(tau);
    let q = |abs2: f64, re: f64| {
        let s = (a * a * abs2 + alpha * alpha).sqrt();
        if alpha == 0.0 {
            s - b * re
        } else {
            s - b * re - alpha * (s + alpha).ln()
        }
    };
    let lap_q = |abs2: f64| 0.25 * a * a / (a * a * abs2 + alpha * alpha).sqrt();
    let abs2 = zeta.norm_sqr();
    Ok(match variant {
        PotentialVariant::QTilde => q(abs2, zeta.re),
        PotentialVariant::VTilde => {
            let v = q(abs2 * abs2, (zeta * zeta).re);
            match n {
                Some(n) if n > 0 => {
                    if abs2 == 0.0 {
                        f64::INFINITY
                    } else {
                        v - abs2.ln() / n as f64
                    }
                }
                Some(_) => return Err(Error::InvalidParam("N must be positive".into())),
                None => v,
            }
        }
        PotentialVariant::QTilde0 => a * abs2.sqrt() - b * zeta.re,
        PotentialVariant::LaplacianQ => lap_q(abs2),
        PotentialVariant::LaplacianV => 4.0 * abs2 * lap_q(abs2 * abs2),
    })
}

/// Exterior conformal map `f(z) = R (z + tau^2/z) + x0` of the ellipse.
pub fn conformal_map(z: Complex64, geometry: &DropletGeometry) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidParam("conformal map is singular at 0".into()));
    }
    let t2 = geometry.tau * geometry.tau;
    Ok(geometry.conformal_r * (z + t2 / z) + geometry.x0)
}

/// Cauchy transform `C(zeta) = int dmu(z) / (zeta - z)` of the Wishart
/// equilibrium measure.
pub fn cauchy_transform(zeta: Complex64, alpha: f64, tau: f64) -> Result<Complex64> {
    let g = droplet_geometry(alpha, tau)?;
    if zeta.norm() == 0.0 {
        return Err(Error::InvalidParam("Cauchy transform is not evaluated at 0".into()));
    }
    if g.contains(zeta) {
        Ok(cauchy_interior(zeta, alpha, tau))
    } else {
        Ok(cauchy_exterior(zeta, &g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub point: Complex64,
    /// `|S(zeta) - conj(zeta)|` with `S` built from the interior transform.
    pub schwarz_interior: f64,
    /// The same with the exterior transform.
    pub schwarz_exterior: f64,
    /// `|C_int - C_ext|` at the point.
    pub continuity: f64,
}

/// Boundary identities at `f(e^{i theta})`: the Schwarz function
/// `S = (zeta/A^2)(2C + B)(2C + B + 2 alpha/zeta)` equals `conj(zeta)` for
/// both closed forms of the Cauchy transform, and the two forms agree.
pub fn boundary_check(theta: f64, alpha: f64, tau: f64) -> Result<BoundaryCheck> {
    let g = droplet_geometry(alpha, tau)?;
    let w = conformal_map(Complex64::from_polar(1.0, theta), &g)?;
    if w.norm() == 0.0 {
        return Err(Error::InvalidParam("boundary point at the origin".into()));
    }
    let (a, b) = coefficients(tau);
    let schwarz = |cv: Complex64| ((w / (a * a)) * (2.0 * cv + b) * (2.0 * cv + b + 2.0 * alpha / w) - w.conj()).norm();
    let (ci, ce) = (cauchy_interior(w, alpha, tau), cauchy_exterior(w, &g));
    Ok(BoundaryCheck { point: w, schwarz_interior: schwarz(ci), schwarz_exterior: schwarz(ce), continuity: (ci - ce).norm() })
}

fn cauchy_interior(zeta: Complex64, alpha: f64, tau: f64) -> Complex64 {
    let (a, b) = coefficients(tau);
    let s = (a * a * zeta.norm_sqr() + alpha * alpha).sqrt();
    (s - alpha) / (2.0 * zeta) - b / 2.0
}

fn cauchy_exterior(zeta: Complex64, g: &DropletGeometry) -> Complex64 {
    // -alpha/(2 zeta) + (zeta - S)/(2 tau zeta) with
    // S = (zeta - x0) sqrt(1 - u), u = 4 tau^2 R^2 / (zeta - x0)^2, rewritten
    // so that tau -> 0 is regular
    let w = zeta - g.x0;
    let r2 = g.conformal_r * g.conformal_r;
    let u = 4.0 * g.tau * g.tau * r2 / (w * w);
    let root = (1.0 - u).sqrt();
    let inner = (2.0 + g.alpha) + 4.0 * g.tau * r2 / (w * (1.0 + root));
    (inner - g.alpha) / (2.0 * zeta)
}

/// `int int f(r, phi) r dr dphi / pi` over `center + r e^{i phi}` with the
/// radial range and radial break points supplied per angle.
fn polar_integral<R, B, F>(
    angle_breaks: &[f64],
    range: R,
    radial_breaks: B,
    f: F,
    tol: f64,
) -> Result<QuadResult>
where
    R: Fn(f64) -> Option<(f64, f64)>,
    B: Fn(f64) -> Vec<f64>,
    F: Fn(f64, f64) -> f64,
{
    let span = angle_breaks[angle_breaks.len() - 1] - angle_breaks[0];
    let inner_tol = 0.05 * tol / span.max(1.0);
    // inner estimates that stall at the roundoff floor are kept; only their
    // accumulated error is checked
    let mut inner_error = 0.0f64;
    let outer = integrate(
        |phi| {
            let Some((lo, hi)) = range(phi) else { return 0.0 };
            if hi <= lo {
                return 0.0;
            }
            let br = breakpoints(lo, hi, radial_breaks(phi));
            let (q, converged) = integrate_best(|r| f(r, phi) * r, &br, inner_tol, 1e-12, 4000);
            if !converged {
                inner_error = inner_error.max(q.error);
            }
            q.value
        },
        angle_breaks,
        0.5 * tol * PI,
        1e-14,
        4000,
    )?;
    let error = (outer.error + 2.0 * PI * inner_error) / PI;
    Ok(QuadResult { value: outer.value / PI, error })
}

fn full_turn(extra: &[f64]) -> Vec<f64> {
    let wrapped = extra.iter().map(|a| a.rem_euclid(2.0 * PI));
    breakpoints(0.0, 2.0 * PI, wrapped.chain([0.5 * PI, PI, 1.5 * PI]))
}

/// `int f dmu` over the ellipse, polar about `center` (which must lie in
/// the closed ellipse). `f` receives the point and the radius from `center`.
fn integrate_droplet<F: Fn(Complex64, f64) -> f64>(
    g: &DropletGeometry,
    center: Complex64,
    extra_angles: &[f64],
    f: F,
    tol: f64,
) -> Result<QuadResult> {
    let to_origin = (-center).arg();
    let mut angles = extra_angles.to_vec();
    let singular = center.norm() > 0.0 && g.alpha == 0.0;
    if singular {
        angles.push(to_origin);
    }
    polar_integral(
        &full_turn(&angles),
        |phi| g.ray_range(center, phi),
        |phi| {
            // closest approach of the ray to the origin
            let t = center.norm() * (phi - to_origin).cos();
            if singular && t > 0.0 {
                vec![t]
            } else {
                Vec::new()
            }
        },
        |r, phi| {
            let z = center + Complex64::from_polar(r, phi);
            wishart_profile(g.alpha, g.tau, z.norm_sqr()) * f(z, r)
        },
        tol,
    )
}

/// Total mass of the Wishart equilibrium measure by 2D quadrature.
pub fn mass_integral(alpha: f64, tau: f64, tol: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    check_tol(tol)?;
    let center = if g.origin_inside() { Complex64::new(0.0, 0.0) } else { Complex64::new(g.x0, 0.0) };
    let q = integrate_droplet(&g, center, &[], |_, _| 1.0, tol)?;
    finish(q, tol, "equilibrium mass")
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 1e-10) {
        return Err(Error::InvalidParam(format!("tolerance must be >= 1e-10, got {tol}")));
    }
    Ok(())
}

fn finish(q: QuadResult, tol: f64, what: &str) -> Result<f64> {
    if q.error > tol {
        return Err(Error::Quadrature { what: what.into(), estimate: q.error });
    }
    Ok(q.value)
}

/// Atom plus the 2D integral of the Dirac density over the quartic droplet.
pub fn dirac_mass_integral(alpha: f64, tau: f64, tol: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    check_tol(tol)?;
    let d = 1.0 - tau * tau;
    let c = g.quartic_rhs;
    // in s = r^2 the region is a(phi) s^2 - b(phi) s - c <= 0
    let coef = |phi: f64| {
        let s2 = (2.0 * phi).sin();
        (1.0 + 4.0 * tau * tau * s2 * s2 / (d * d), 2.0 * tau * (2.0 + alpha) * (2.0 * phi).cos())
    };
    let range = |phi: f64| -> Option<(f64, f64)> {
        let (a, b) = coef(phi);
        let disc = b * b + 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let hi = (b + disc.sqrt()) / (2.0 * a);
        if hi <= 0.0 {
            return None;
        }
        let lo = if c >= 0.0 { 0.0 } else { (-c / (a * hi)).max(0.0) };
        Some((lo.sqrt(), hi.sqrt()))
    };
    let mut angles: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
    if c < 0.0 {
        let disc = |phi: f64| {
            let (a, b) = coef(phi);
            b * b + 4.0 * a * c
        };
        let m = 4096;
        for k in 0..m {
            let (mut x0, mut x1) = (2.0 * PI * k as f64 / m as f64, 2.0 * PI * (k + 1) as f64 / m as f64);
            if (disc(x0) > 0.0) == (disc(x1) > 0.0) {
                continue;
            }
            for _ in 0..80 {
                let mid = 0.5 * (x0 + x1);
                if (disc(mid) > 0.0) == (disc(x0) > 0.0) {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            angles.push(0.5 * (x0 + x1));
        }
    }
    let q = polar_integral(&full_turn(&angles), range, |_| Vec::new(), |r, _| dirac_profile(alpha, tau, r * r), tol)?;
    Ok(alpha / (2.0 + alpha) + finish(q, tol, "Dirac droplet mass")?)
}

/// `mu(|z - x0| <= r)`: the equilibrium measure of the disc of radius `r`
/// about the ellipse centre.
pub fn centered_radial_cdf(alpha: f64, tau: f64, r: f64, tol: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    check_tol(tol)?;
    if !(r > 0.0) {
        return Ok(0.0);
    }
    let center = Complex64::new(g.x0, 0.0);
    let singular = g.alpha == 0.0 && g.x0 > 0.0;
    let angles = if singular { vec![PI] } else { Vec::new() };
    let q = polar_integral(
        &full_turn(&angles),
        |phi| g.ray_range(center, phi).map(|(lo, hi)| (lo, hi.min(r))),
        |phi| if singular && phi.cos() < 0.0 { vec![-g.x0 * phi.cos()] } else { Vec::new() },
        |rr, phi| wishart_profile(g.alpha, g.tau, (center + Complex64::from_polar(rr, phi)).norm_sqr()),
        tol,
    )?;
    Ok(finish(q, tol, "radial distribution")?.min(1.0))
}

/// `H(zeta) = int log(1/|zeta - z|) dmu(z) + Q(zeta)/2`, constant on the
/// droplet and not smaller outside it.
pub fn effective_potential(zeta: Complex64, alpha: f64, tau: f64, tol: f64) -> Result<f64> {
    let g = droplet_geometry(alpha, tau)?;
    check_tol(tol)?;
    let q = if g.contains(zeta) {
        integrate_droplet(&g, zeta, &[], |_, r| -r.ln(), tol)?
    } else {
        let center = Complex64::new(g.x0, 0.0);
        integrate_droplet(&g, center, &[], |z, _| -(zeta - z).norm().ln(), tol)?
    };
    let log_part = finish(q, tol, "logarithmic potential")?;
    Ok(log_part + 0.5 * potential(zeta, alpha, tau, PotentialVariant::QTilde, None)?)
}

/// `int dmu(z) / (zeta - z)` by direct quadrature, as an independent check of
/// [`cauchy_transform`]. Interior points are integrated as principal values
/// about `zeta`.
pub fn cauchy_transform_quadrature(zeta: Complex64, alpha: f64, tau: f64, tol: f64) -> Result<Complex64> {
    let g = droplet_geometry(alpha, tau)?;
    check_tol(tol)?;
    let center = if g.contains(zeta) { zeta } else { Complex64::new(g.x0, 0.0) };
    let part = |k: usize| {
        integrate_droplet(
            &g,
            center,
            &[],
            |z, _| {
                let v = 1.0 / (zeta - z);
                if k == 0 {
                    v.re
                } else {
                    v.im
                }
            },
            tol,
        )
        .and_then(|q| finish(q, tol, "Cauchy transform"))
    };
    Ok(Complex64::new(part(0)?, part(1)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TC: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn geometry_examples() {
        let g = droplet_geometry(1.0, 0.5).unwrap();
        assert!((g.x0 - 1.5).abs() < 1e-15);
        assert!((g.semi_major - 1.25 * 2f64.sqrt()).abs() < 1e-15);
        assert!((g.semi_minor - 0.75 * 2f64.sqrt()).abs() < 1e-15);
        let g = droplet_geometry(0.0, 0.0).unwrap();
        assert_eq!((g.x0, g.semi_major, g.semi_minor), (0.0, 1.0, 1.0));
        let g = droplet_geometry(0.0, 0.4).unwrap();
        assert!((g.x0 - 0.8).abs() < 1e-15 && (g.semi_major - 1.16).abs() < 1e-15);
        let g = droplet_geometry(1.0, TC).unwrap();
        assert!(g.quartic_rhs.abs() < 1e-15);
        assert!((g.x0 - g.semi_major).abs() < 1e-14);
        assert!(g.origin_inside());
        assert!(droplet_geometry(1.0, 1.0).is_err());
        assert!(droplet_geometry(-0.1, 0.5).is_err());
        // foci at tau * lambda_pm
        let g = droplet_geometry(1.0, 0.5).unwrap();
        let f = (g.semi_major.powi(2) - g.semi_minor.powi(2)).sqrt();
        assert!((g.x0 - f - g.foci.0).abs() < 1e-14 && (g.x0 + f - g.foci.1).abs() < 1e-14);
    }

    #[test]
    fn origin_inside_iff_subcritical() {
        for &(alpha, tau) in &[(1.0, 0.6), (1.0, 0.75), (3.0, 0.45), (3.0, 0.55), (0.0, 0.9)] {
            let g = droplet_geometry(alpha, tau).unwrap();
            let tc = 1.0 / (1.0f64 + alpha).sqrt();
            assert_eq!(g.x0 - g.semi_major < 0.0, tau < tc);
        }
    }

    #[test]
    fn density_examples() {
        let d = wishart_density(c(0.0, 0.0), 1.0, TC).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        let d = wishart_density(c(0.5, 0.0), 0.0, 0.0).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let g = droplet_geometry(1.0, 0.5).unwrap();
        assert_eq!(wishart_density(c(g.x0 + 2.0 * g.semi_major, 0.0), 1.0, 0.5).unwrap(), 0.0);
        assert!(wishart_density(c(0.0, 0.0), 0.0, 0.3).unwrap().is_infinite());
    }

    #[test]
    fn dirac_law_examples() {
        let (atom, d) = dirac_law(c(0.0, 0.0), 1.0, 0.5).unwrap();
        assert!((atom - 1.0 / 3.0).abs() < 1e-15 && d == 0.0);
        for &z in &[c(0.2, 0.1), c(-0.7, 0.3), c(0.1, -0.5)] {
            let (atom, d) = dirac_law(z, 0.0, 0.4).unwrap();
            assert_eq!(atom, 0.0);
            assert!((d - 1.0 / 0.84).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_density_is_pushforward_of_wishart() {
        for &(alpha, tau) in &[(1.0, 0.5), (0.0, 0.3), (2.5, 0.8), (1.0, TC)] {
            let g = droplet_geometry(alpha, tau).unwrap();
            for i in 0..30 {
                for j in 0..30 {
                    let z = c(-2.2 + 4.4 * i as f64 / 29.0, -2.2 + 4.4 * j as f64 / 29.0);
                    let (_, d) = dirac_law(z, alpha, tau).unwrap();
                    let w = wishart_density_in(&g, z * z);
                    if (d > 0.0) != (w > 0.0) {
                        continue; // boundary roundoff, checked separately
                    }
                    let want = 2.0 * z.norm_sqr() * w * 2.0 / (2.0 + alpha);
                    assert!((d - want).abs() <= 1e-12 * want.max(1.0), "{z} {d} {want}");
                }
            }
        }
    }

    #[test]
    fn quartic_examples() {
        assert!(quartic_residual(c(0.0, 0.0), 1.0, TC).unwrap().abs() < 1e-14);
        let x = (3.0 * 2f64.sqrt()).sqrt();
        assert!(quartic_residual(c(x, 0.0), 1.0, TC).unwrap().abs() < 1e-12);
        assert!(quartic_residual(c(-x, 0.0), 1.0, TC).unwrap().abs() < 1e-12);
        let e = edge_points(1.0, TC).unwrap();
        assert!((e.outer - x).abs() < 1e-12);
    }

    #[test]
    fn quartic_sign_matches_squared_ellipse() {
        for &(alpha, tau) in &[(1.0, 0.5), (1.0, 0.8), (1.0, TC), (0.0, 0.5), (3.0, 0.2)] {
            let g = droplet_geometry(alpha, tau).unwrap();
            let mut mismatches = 0;
            for i in 0..100 {
                for j in 0..100 {
                    let z = c(-2.5 + 5.0 * (i as f64 + 0.5) / 100.0, -2.5 + 5.0 * (j as f64 + 0.5) / 100.0);
                    let inside_q = quartic_residual(z, alpha, tau).unwrap() <= 0.0;
                    let inside_e = g.ellipse_form(z * z) <= 1.0;
                    if inside_q != inside_e {
                        mismatches += 1;
                    }
                }
            }
            assert_eq!(mismatches, 0, "alpha={alpha} tau={tau}");
        }
    }

    #[test]
    fn droplet_splits_above_criticality() {
        let count = |tau: f64| {
            let xs: Vec<bool> =
                (0..=4000).map(|i| quartic_residual(c(-3.0 + 6.0 * i as f64 / 4000.0, 0.0), 1.0, tau).unwrap() <= 0.0).collect();
            xs.windows(2).filter(|w| !w[0] && w[1]).count()
        };
        assert_eq!(count(0.6), 1);
        assert_eq!(count(0.8), 2);
    }

    #[test]
    fn classical_examples() {
        let r = 2f64.sqrt();
        let eps = 1e-12;
        assert!(classical_density(ClassicalLaw::Mp, c(3.0 - 2.0 * r - eps, 0.0), 1.0).unwrap() == 0.0);
        assert!(classical_density(ClassicalLaw::Mp, c(3.0 - 2.0 * r + 1e-6, 0.0), 1.0).unwrap() > 0.0);
        assert!(classical_density(ClassicalLaw::Mp, c(3.0 + 2.0 * r + eps, 0.0), 1.0).unwrap() == 0.0);
        let v = classical_density(ClassicalLaw::Mp, c(1.0, 0.0), 0.0).unwrap();
        assert!((v - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-15);
        let v = classical_density(ClassicalLaw::ProductM, c(0.3, 0.0), 2.0).unwrap();
        assert!((v - 1.0 / 0.6).abs() < 1e-14);
        assert_eq!(classical_density(ClassicalLaw::ProductM, c(0.8, 0.8), 2.0).unwrap(), 0.0);
        assert!(classical_density(ClassicalLaw::ProductM, c(0.3, 0.0), 2.5).is_err());
        assert!(classical_density(ClassicalLaw::Mp, c(1.0, 0.1), 1.0).is_err());
        assert!(classical_density(ClassicalLaw::MpSquared, c(1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn mp_normalized() {
        for &alpha in &[0.0, 1.0, 3.0] {
            let r = (1.0f64 + alpha).sqrt();
            let (lm, lp) = ((r - 1.0).powi(2), (r + 1.0).powi(2));
            let q = integrate(
                |x| classical_density(ClassicalLaw::Mp, c(x, 0.0), alpha).unwrap(),
                &[lm, 1.0f64.clamp(lm, lp), lp],
                1e-11,
                1e-12,
                4000,
            )
            .unwrap();
            assert!((q.value - 1.0).abs() < 1e-8, "alpha={alpha} {}", q.value);
            let q = integrate(
                |x| classical_density(ClassicalLaw::MpSquared, c(x, 0.0), alpha).unwrap(),
                &[lm.sqrt(), lp.sqrt()],
                1e-11,
                1e-12,
                4000,
            )
            .unwrap();
            assert!((q.value - 1.0).abs() < 1e-8, "half-line mass, alpha={alpha} {}", q.value);
        }
    }

    #[test]
    fn edge_examples() {
        let e = edge_points(0.0, 0.5).unwrap();
        assert!((e.outer - 1.5).abs() < 1e-15 && e.inner.is_none());
        let e = edge_points(3.0, 1.0).unwrap();
        assert!((e.outer - 3.0).abs() < 1e-15);
        assert!((e.inner.unwrap() - 1.0).abs() < 1e-15);
        let e = edge_points(1.0, TC).unwrap();
        assert!(e.inner.unwrap() < 1e-7);
        // Hermitian limit: mp_squared support endpoints
        for &alpha in &[0.5, 2.0] {
            let r = (1.0f64 + alpha).sqrt();
            let e = edge_points(alpha, 1.0).unwrap();
            assert!((e.outer - (r + 1.0)).abs() < 1e-14);
            assert!((e.inner.unwrap() - (r - 1.0)).abs() < 1e-14);
        }
        // edges solve the quartic on the real axis
        for &(alpha, tau) in &[(1.0, 0.5), (1.0, 0.85), (2.0, 0.3)] {
            let e = edge_points(alpha, tau).unwrap();
            assert!(quartic_residual(c(e.outer, 0.0), alpha, tau).unwrap().abs() < 1e-12);
            if let Some(i) = e.inner {
                assert!(quartic_residual(c(i, 0.0), alpha, tau).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn potential_examples() {
        let l = potential(c(0.0, 0.0), 1.0, TC, PotentialVariant::LaplacianQ, None).unwrap();
        assert!((l - 4.0).abs() < 1e-12);
        let q = potential(c(1.0, 0.0), 0.0, 0.0, PotentialVariant::QTilde0, None).unwrap();
        assert!((q - 2.0).abs() < 1e-15);
        assert!(potential(c(0.0, 0.0), 1.0, 0.5, PotentialVariant::VTilde, Some(10)).unwrap().is_infinite());
        // alpha = 0 reduces to the fixed-nu potential
        let z = c(0.3, -0.7);
        let a = potential(z, 0.0, 0.4, PotentialVariant::QTilde, None).unwrap();
        let b = potential(z, 0.0, 0.4, PotentialVariant::QTilde0, None).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn v_and_q_are_related_by_squaring() {
        let mut s = 0.37f64;
        for _ in 0..20 {
            s = (s * 7919.0 + 0.1).fract();
            let t = (s * 104729.0).fract();
            let z = Complex64::from_polar(0.1 + 1.8 * s, 2.0 * PI * t);
            let v = potential(z, 1.3, 0.6, PotentialVariant::VTilde, Some(50)).unwrap();
            let q = potential(z * z, 1.3, 0.6, PotentialVariant::QTilde, None).unwrap();
            assert!((v + (2.0 / 50.0) * z.norm().ln() - q).abs() < 1e-12);
            let lv = potential(z, 1.3, 0.6, PotentialVariant::LaplacianV, None).unwrap();
            let lq = potential(z * z, 1.3, 0.6, PotentialVariant::LaplacianQ, None).unwrap();
            assert!((lv - 4.0 * z.norm_sqr() * lq).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_by_finite_differences() {
        let z = c(0.4, 0.3);
        let h = 1e-3;
        let f = |w: Complex64| potential(w, 1.0, 0.5, PotentialVariant::QTilde, None).unwrap();
        let lap = (f(z + h) + f(z - h) + f(z + c(0.0, h)) + f(z - c(0.0, h)) - 4.0 * f(z)) / (h * h);
        let want = potential(z, 1.0, 0.5, PotentialVariant::LaplacianQ, None).unwrap();
        assert!((lap / 4.0 - want).abs() < 1e-5);
    }

    #[test]
    fn conformal_map_examples() {
        let g = droplet_geometry(1.0, 0.5).unwrap();
        let f1 = conformal_map(c(1.0, 0.0), &g).unwrap();
        assert!((f1 - (g.x0 + g.semi_major)).norm() < 1e-14);
        let fi = conformal_map(c(0.0, 1.0), &g).unwrap();
        assert!((fi - c(g.x0, g.semi_minor)).norm() < 1e-14);
        let g = droplet_geometry(1.0, TC).unwrap();
        assert!(conformal_map(c(-1.0, 0.0), &g).unwrap().norm() < 1e-14);
        assert!(conformal_map(c(0.0, 0.0), &g).is_err());
        for k in 0..16 {
            let w = conformal_map(Complex64::from_polar(1.0, k as f64 * 0.4), &g).unwrap();
            assert!((g.ellipse_form(w) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cauchy_examples() {
        let z = c(1e6, 0.0);
        let v = cauchy_transform(z, 1.0, 0.5).unwrap();
        assert!((v - 1.0 / z).norm() <= 1e-9);
        let v = cauchy_transform(c(1.5, 0.0), 1.0, 0.5).unwrap();
        let want = (17f64.sqrt() - 1.0) / 3.0 - 2.0 / 3.0;
        assert!((v.re - want).abs() < 1e-14 && v.im.abs() < 1e-15);
        assert!(cauchy_transform(c(0.0, 0.0), 1.0, 0.5).is_err());
        // tau = 0 exterior is exactly 1/zeta
        let z = c(2.0, 1.0);
        assert!((cauchy_transform(z, 0.7, 0.0).unwrap() - 1.0 / z).norm() < 1e-15);
    }

    #[test]
    fn cauchy_continuous_across_boundary() {
        for &(alpha, tau) in &[(1.0, 0.5), (0.0, 0.3), (2.0, 0.8)] {
            let g = droplet_geometry(alpha, tau).unwrap();
            for &th in &[0.3, 1.7, 3.0] {
                let w = conformal_map(Complex64::from_polar(1.0, th), &g).unwrap();
                let i = cauchy_interior(w, alpha, tau);
                let e = cauchy_exterior(w, &g);
                assert!((i - e).norm() < 1e-9, "{alpha} {tau} {th}: {i} {e}");
            }
        }
    }

    #[test]
    fn schwarz_function_on_boundary() {
        for &(alpha, tau) in &[(1.0, 0.5), (0.5, 0.3), (2.0, 0.8)] {
            let g = droplet_geometry(alpha, tau).unwrap();
            let (a, b) = coefficients(tau);
            for k in 0..16 {
                let w = conformal_map(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0 + 0.1), &g).unwrap();
                for cv in [cauchy_interior(w, alpha, tau), cauchy_exterior(w, &g)] {
                    let f = (w / (a * a)) * (2.0 * cv + b) * (2.0 * cv + b + 2.0 * alpha / w);
                    assert!((f - w.conj()).norm() < 1e-9, "{w}: {f}");
                }
                let bc = boundary_check(2.0 * PI * k as f64 / 16.0 + 0.1, alpha, tau).unwrap();
                assert_eq!(bc.point, w);
                assert!(bc.schwarz_interior.max(bc.schwarz_exterior).max(bc.continuity) < 1e-9, "{bc:?}");
            }
        }
    }

    #[test]
    fn cauchy_matches_quadrature() {
        let z = c(1.5, 0.0);
        let q = cauchy_transform_quadrature(z, 1.0, 0.5, 1e-7).unwrap();
        let v = cauchy_transform(z, 1.0, 0.5).unwrap();
        assert!((q - v).norm() < 1e-4, "{q} {v}");
        let z = c(4.0, 2.0);
        let q = cauchy_transform_quadrature(z, 1.0, 0.5, 1e-8).unwrap();
        let v = cauchy_transform(z, 1.0, 0.5).unwrap();
        assert!((q - v).norm() < 1e-6, "{q} {v}");
    }

    #[test]
    fn equilibrium_mass_is_one() {
        assert!((mass_integral(1.0, 0.5, 1e-8).unwrap() - 1.0).abs() < 1e-8);
        assert!((mass_integral(0.0, 0.3, 1e-8).unwrap() - 1.0).abs() < 1e-8);
        assert!((mass_integral(1.0, TC, 1e-8).unwrap() - 1.0).abs() < 1e-6);
        assert!((mass_integral(1.0, 0.85, 1e-8).unwrap() - 1.0).abs() < 1e-8);
        assert!(mass_integral(1.0, 0.5, 1e-12).is_err());
    }

    #[test]
    fn dirac_mass_is_one() {
        for &(alpha, tau) in &[(1.0, 0.5), (1.0, 0.8), (1.0, TC), (0.0, 0.4), (3.0, 0.1)] {
            let m = dirac_mass_integral(alpha, tau, 1e-8).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "{alpha} {tau}: {m}");
        }
    }

    #[test]
    fn effective_potential_variational_conditions() {
        let x0 = 1.5;
        let h1 = effective_potential(c(x0, 0.0), 1.0, 0.5, 1e-8).unwrap();
        let h2 = effective_potential(c(x0, 0.3), 1.0, 0.5, 1e-8).unwrap();
        assert!((h1 - h2).abs() < 1e-4, "{h1} {h2}");
        let g = droplet_geometry(1.0, 0.5).unwrap();
        let h3 = effective_potential(c(x0 + 2.0 * g.semi_major, 0.0), 1.0, 0.5, 1e-8).unwrap();
        assert!(h3 - h1 >= 0.0);
        // flat case with the 1/|z| density singularity off-centre
        let a = effective_potential(c(0.3, 0.2), 0.0, 0.4, 1e-8).unwrap();
        let b = effective_potential(c(1.1, -0.1), 0.0, 0.4, 1e-8).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn radial_cdf_limits() {
        let g = droplet_geometry(1.0, 0.5).unwrap();
        assert!((centered_radial_cdf(1.0, 0.5, g.semi_major * 1.01, 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(centered_radial_cdf(1.0, 0.5, 0.0, 1e-9).unwrap(), 0.0);
        // tau = 0, alpha = 0: uniform |z| on [0, 1]
        for &r in &[0.2, 0.5, 0.9] {
            assert!((centered_radial_cdf(0.0, 0.0, r, 1e-9).unwrap() - r).abs() < 1e-8);
        }
        let a = centered_radial_cdf(0.0, 0.4, 0.5, 1e-9).unwrap();
        let b = centered_radial_cdf(0.0, 0.4, 0.7, 1e-9).unwrap();
        assert!(0.0 < a && a < b && b < 1.0);
    }

    #[test]
    fn effective_potential_far_field() {
        let z = c(0.0, 1e3);
        let h = effective_potential(z, 1.0, 0.5, 1e-9).unwrap();
        let q = potential(z, 1.0, 0.5, PotentialVariant::QTilde, None).unwrap();
        assert!((h - (0.5 * q - z.norm().ln())).abs() < 1e-3);
    }
}
