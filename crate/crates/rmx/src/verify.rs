//! Empirical-vs-analytic comparisons: 2D histograms with densities per
//! `dA = d^2 z / pi`, distances to analytic laws, the Berezin mass-one
//! check and finite-N convergence tables.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{make_params, EnsembleParams, Grid2D};
use crate::error::{Error, Result};
use crate::kernels::{limit_kernel, rescaled_density, LimitRegime};
use crate::quadrature::{breakpoints, gauss_legendre, integrate, integrate_best};
use crate::specialfn::{erfc_complex, faddeeva};

/// Cells with fewer expected counts are left out of the sup distance.
pub const SUP_MIN_EXPECTED: f64 = 20.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram2D {
    pub grid: Grid2D,
    /// Row-major by `y`: cell `(i, j)` is at `j * nx + i`.
    pub counts: Vec<u64>,
    /// All points offered, including those outside the grid.
    pub total: u64,
    #[serde(skip)]
    points: Vec<Complex64>,
}

impl Histogram2D {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[j * self.grid.nx + i]
    }

    /// Cell area in `dA` units.
    pub fn cell_area_da(&self) -> f64 {
        self.grid.cell_area() / PI
    }

    pub fn density_per_da(&self, i: usize, j: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(i, j) as f64 / (self.total as f64 * self.cell_area_da())
    }

    /// Piecewise-constant empirical density, zero off the grid.
    pub fn density_at(&self, z: Complex64) -> f64 {
        self.grid.cell_of(z).map_or(0.0, |(i, j)| self.density_per_da(i, j))
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The points the histogram was built from.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
}

/// Bins `points` into half-open cells; points off the grid count towards
/// `total` only.
pub fn histogram2d(points: &[Complex64], grid: &Grid2D) -> Histogram2D {
    let mut counts = vec![0u64; grid.nx * grid.ny];
    for z in points {
        if let Some((i, j)) = grid.cell_of(*z) {
            counts[j * grid.nx + i] += 1;
        }
    }
    Histogram2D { grid: *grid, counts, total: points.len() as u64, points: points.to_vec() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub l1_distance: f64,
    pub sup_distance: f64,
    pub inside_fraction: f64,
    pub n_samples: u64,
    pub params_snapshot: Option<EnsembleParams>,
}

/// Mean of `f` over cell `(i, j)` from a 4x4 split with 6x6 Gauss-Legendre
/// points per piece, which keeps discontinuities at a droplet edge cheap.
fn cell_mean<F: Fn(Complex64) -> f64>(f: &F, grid: &Grid2D, i: usize, j: usize, x: &[f64], w: &[f64]) -> f64 {
    const SPLIT: usize = 4;
    let (x0, y0) = (grid.x_edge(i), grid.y_edge(j));
    let (hx, hy) = (grid.dx() / SPLIT as f64, grid.dy() / SPLIT as f64);
    let mut s = 0.0;
    for a in 0..SPLIT {
        for b in 0..SPLIT {
            let (cx, cy) = (x0 + (a as f64 + 0.5) * hx, y0 + (b as f64 + 0.5) * hy);
            for (xi, wi) in x.iter().zip(w) {
                for (yj, wj) in x.iter().zip(w) {
                    s += wi * wj * f(Complex64::new(cx + 0.5 * hx * xi, cy + 0.5 * hy * yj));
                }
            }
        }
    }
    s / (4.0 * (SPLIT * SPLIT) as f64)
}

/// Distances between the histogram and an analytic density per `dA`.
///
/// L1 is `sum |empirical - analytic| * cell area` in `dA` units, with the
/// analytic side averaged over each cell. The sup distance is taken over
/// cells expecting at least [`SUP_MIN_EXPECTED`] points. `inside_fraction`
/// is the share of the histogram's points accepted by `support`.
pub fn density_distance<L, S>(hist: &Histogram2D, law: L, support: S) -> Result<ComparisonReport>
where
    L: Fn(Complex64) -> f64 + Sync,
    S: Fn(Complex64) -> bool,
{
    if hist.total == 0 {
        return Err(Error::InvalidParam("density_distance needs a non-empty histogram".into()));
    }
    let g = hist.grid;
    let (x, w) = gauss_legendre(6);
    let da = hist.cell_area_da();
    let n = hist.total as f64;
    let cells: Vec<(f64, Option<f64>)> = (0..g.nx * g.ny)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c % g.nx, c / g.nx);
            let analytic = cell_mean(&law, &g, i, j, &x, &w);
            let diff = (hist.density_per_da(i, j) - analytic).abs();
            let sup = (analytic * da * n >= SUP_MIN_EXPECTED).then_some(diff);
            (diff * da, sup)
        })
        .collect();
    let l1 = cells.iter().map(|c| c.0).sum();
    let sup = cells.iter().filter_map(|c| c.1).fold(0.0, f64::max);
    let inside = if hist.points.is_empty() {
        0.0
    } else {
        hist.points.iter().filter(|z| support(**z)).count() as f64 / hist.points.len() as f64
    };
    Ok(ComparisonReport { l1_distance: l1, sup_distance: sup, inside_fraction: inside, n_samples: hist.total, params_snapshot: None })
}

/// Kolmogorov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, x)| {
        let f = cdf(*x);
        d.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs())
    })
}

/// `ln |G(z2, u) erfc(xi)|^2` with `xi = -(z2 + conj u)/sqrt(2)`. Where
/// `e^{-xi^2}` dominates erfc, its modulus cancels against the Gaussian
/// exactly, leaving `exp(-2 (Re z2)^2 - 2 (Re u)^2)` times Faddeeva factors.
fn log_abs2_critical(z2: Complex64, u: Complex64) -> f64 {
    let xi = -(z2 + u.conj()) / 2f64.sqrt();
    let lead = -(xi * xi).re;
    let merged = -2.0 * (z2.re * z2.re + u.re * u.re);
    if xi.re >= 0.0 {
        merged + 2.0 * faddeeva(Complex64::i() * xi).norm().ln()
    } else if lead > 40.0 {
        // erfc(xi) = 2 - e^{-xi^2} w(-i xi) with the 2 below roundoff
        merged + 2.0 * faddeeva(-Complex64::i() * xi).norm().ln()
    } else {
        -(z2 - u).norm_sqr() + 2.0 * erfc_complex(xi).norm().ln()
    }
}

/// `int |K(z, w)|^2 / K(z, z) dA(w)` for the limiting kernel, which is 1 by
/// the reproducing property.
///
/// `|K(z, w)|^2` depends on `w` through `u = w^2` and carries a factor
/// `|w|^2`, so the integral is taken over the `u` plane (two preimages,
/// Jacobian `4|w|^2`). The critical kernel decays only like `1/Im(u)^2`
/// along `Re u = 0`, so `Im u` is compactified by `Im u = Im z^2 + tan t`.
pub fn berezin_mass(z: Complex64, alpha: f64, regime: LimitRegime) -> Result<f64> {
    if regime == LimitRegime::Gapped {
        return Err(Error::InvalidParam("the gapped limit kernel vanishes identically".into()));
    }
    let kzz = limit_kernel(z, z, alpha, regime)?.re;
    if !(kzz > 0.0) {
        return Err(Error::InvalidParam(format!("K(z, z) = {kzz} at z = {z}; need K(z, z) > 0")));
    }
    let z2 = z * z;
    let r2 = z.norm_sqr();
    // |K|^2 / |u| as a log
    let log_g = |u: Complex64| -> f64 {
        match regime {
            LimitRegime::Bulk => 4f64.ln() + r2.ln() - (z2 - u).norm_sqr(),
            _ => r2.ln() + log_abs2_critical(z2, u),
        }
    };
    // in Re u the integrand is below exp(-min((x - a)^2, 2 x^2)) times O(1)
    let half = z2.re.abs() + 7.0;
    let xb = breakpoints(-half, half, [0.0, z2.re, -z2.re]);
    let outer = integrate(
        |t| {
            let y = z2.im + t.tan();
            let jac = 1.0 / t.cos().powi(2);
            let f = |x| (log_g(Complex64::new(x, y)) - kzz.ln()).exp();
            integrate_best(f, &xb, 1e-15, 1e-13, 2000).0.value * jac
        },
        &breakpoints(-0.5 * PI, 0.5 * PI, [0.0, -0.25 * PI, 0.25 * PI]),
        1e-12,
        1e-13,
        4000,
    )?;
    if !outer.value.is_finite() {
        return Err(Error::Numeric(format!("non-finite Berezin integrand at z = {z}")));
    }
    Ok(outer.value / (2.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub jmax: usize,
    /// `G[j][k] = int L_j(c z^2) conj(L_k(c z^2)) e^{-N V_N(z)} dA(z)`.
    pub gram: Vec<Vec<Complex64>>,
    /// `h_j / 2`, the expected diagonal.
    pub expected: Vec<f64>,
    /// Largest `|G_jj - h_j/2| / (h_j/2)`.
    pub max_diag_rel: f64,
    /// Largest `|G_jk| / sqrt(h_j h_k)` over `j != k`.
    pub max_offdiag: f64,
    pub radius: f64,
    /// Change of the Gram matrix under doubling of the quadrature,
    /// relative to `sqrt(h_j h_k)`.
    pub quadrature_change: f64,
}

// radial composite Gauss-Legendre on geometrically graded pieces times a
// periodic trapezoid in angle; returns the Gram matrix
fn gram_matrix(params: &EnsembleParams, jmax: usize, radius: f64, pieces: usize, angles: usize) -> Result<Vec<Vec<Complex64>>> {
    let (_, _, c, _) = params.kernel_constants()?;
    let (x, w) = gauss_legendre(16);
    let mut edges = vec![0.0];
    edges.extend((0..pieces).rev().map(|k| radius * 0.5f64.powi(k as i32)));
    let nodes: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|e| {
            let (lo, hi) = (e[0], e[1]);
            x.iter().zip(&w).map(move |(xi, wi)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * xi, 0.5 * (hi - lo) * wi))
        })
        .collect();
    let dphi = 2.0 * PI / angles as f64;
    let m = jmax + 1;
    let parts: Vec<Result<Vec<Complex64>>> = nodes
        .par_iter()
        .map(|&(r, wr)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
            for a in 0..angles {
                let z = Complex64::from_polar(r, (a as f64 + 0.5) * dphi);
                let half = 0.5 * crate::kernels::log_weight_v(z, params)?;
                let lag = crate::kernels::laguerre_sequence(jmax, params.nu, c * z * z)?;
                let v: Vec<Complex64> = lag.iter().map(|l| l.scale_log(half).to_complex()).collect();
                let wt = wr * r * dphi / PI;
                for j in 0..m {
                    for k in 0..m {
                        acc[j * m + k] += wt * v[j] * v[k].conj();
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for p in parts {
        let p = p?;
        for j in 0..m {
            for k in 0..m {
                g[j][k] += p[j * m + k];
            }
        }
    }
    Ok(g)
}

/// Orthogonality of `L_j^nu(c z^2)` under the Dirac weight `e^{-N V_N}`,
/// integrated over a disc whose complement carries less than `1e-13` of
/// the smallest norm.
pub fn orthogonality_check(params: &EnsembleParams, jmax: usize) -> Result<OrthogonalityReport> {
    if jmax >= params.n {
        return Err(Error::InvalidParam(format!("need jmax < N, got {jmax} >= {}", params.n)));
    }
    let (_, _, c, _) = params.kernel_constants()?;
    let log_h: Vec<f64> = (0..=jmax).map(|j| crate::kernels::log_norm_h(j, params)).collect::<Result<_>>()?;
    let floor = log_h.iter().cloned().fold(f64::INFINITY, f64::min) + (1e-13f64).ln();
    // the weight decays at least like exp(-N (A - B) r^2); walk out until
    // the largest integrand on the circle times its area is below the floor
    let mut radius = 0.25;
    loop {
        let mut top = f64::NEG_INFINITY;
        for a in 0..64 {
            let z = Complex64::from_polar(radius, 2.0 * PI * a as f64 / 64.0);
            let lag = crate::kernels::laguerre_sequence(jmax, params.nu, c * z * z)?;
            let big = lag.iter().map(|l| l.log_mag).fold(f64::NEG_INFINITY, f64::max);
            top = top.max(crate::kernels::log_weight_v(z, params)? + 2.0 * big);
        }
        if top + (2.0 * radius * radius).ln() < floor {
            break;
        }
        radius += 0.25;
        if radius > 1e3 {
            return Err(Error::Numeric("orthogonality weight does not decay".into()));
        }
    }
    let coarse = gram_matrix(params, jmax, radius, 12, 128)?;
    let gram = gram_matrix(params, jmax, radius, 24, 256)?;
    let expected: Vec<f64> = log_h.iter().map(|l| 0.5 * l.exp()).collect();
    let (mut diag, mut off, mut change) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..=jmax {
        for k in 0..=jmax {
            let scale = (0.5 * (log_h[j] + log_h[k])).exp();
            change = change.max((gram[j][k] - coarse[j][k]).norm() / scale);
            if j == k {
                diag = diag.max((gram[j][j].re - expected[j]).abs() / expected[j]).max(gram[j][j].im.abs() / expected[j]);
            } else {
                off = off.max(gram[j][k].norm() / scale);
            }
        }
    }
    Ok(OrthogonalityReport { jmax, gram, expected, max_diag_rel: diag, max_offdiag: off, radius, quadrature_change: change })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    Fixed(f64),
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub z: Complex64,
    pub finite_n: Option<f64>,
    pub limit: f64,
    pub abs_err: Option<f64>,
    /// Kernel failure for this row, if any.
    pub error: Option<String>,
}

/// `R_{N,1}(z)` against its limit along the family `nu = alpha N`. A failed
/// kernel evaluation is recorded in its row and the table continues.
pub fn convergence_table(ns: &[usize], alpha: f64, rule: TauRule, z_grid: &[Complex64]) -> Result<Vec<ConvergenceRow>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("convergence tables need alpha > 0".into()));
    }
    let tau = match rule {
        TauRule::Fixed(t) => t,
        TauRule::Critical => 1.0 / (1.0 + alpha).sqrt(),
    };
    let regime = LimitRegime::from_tau(alpha, tau)?;
    let limits: Vec<f64> = z_grid
        .iter()
        .map(|z| limit_kernel(*z, *z, alpha, regime).map(|k| k.re))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(ns.len() * z_grid.len());
    for &n in ns {
        let params = make_params(n, alpha * n as f64, tau);
        let evals: Vec<Result<f64>> = z_grid
            .par_iter()
            .map(|z| params.as_ref().map_err(Clone::clone).and_then(|p| rescaled_density(*z, p)))
            .collect();
        for ((z, limit), r) in z_grid.iter().zip(&limits).zip(evals) {
            let (finite_n, error) = match r {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            rows.push(ConvergenceRow { n, z: *z, finite_n, limit: *limit, abs_err: finite_n.map(|v| (v - limit).abs()), error });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::SeedSpec;
    use crate::globallaw::{droplet_geometry, wishart_density};
    use rand::Rng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn binning_conventions() {
        let g = Grid2D::new(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let h = histogram2d(&[c(0.5, 0.5)], &g);
        assert_eq!(h.count(2, 2), 1);
        assert_eq!(h.binned(), 1);
        let h = histogram2d(&[c(0.25, 0.5), c(1.0, 0.5), c(-0.1, 0.0)], &g);
        assert_eq!(h.count(1, 2), 1);
        assert_eq!((h.binned(), h.total), (1, 3));
        // density sums to the binned share
        let s: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| h.density_per_da(i, j)).sum();
        assert!((s * h.cell_area_da() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_counts_within_binomial_band() {
        let mut rng = SeedSpec::new(1, 0).rng();
        let pts: Vec<_> = (0..1_000_000).map(|_| c(rng.random(), rng.random())).collect();
        let h = histogram2d(&pts, &Grid2D::new(0.0, 1.0, 0.0, 1.0, 10, 10).unwrap());
        let sigma = (1e6 * 0.01 * 0.99f64).sqrt();
        assert!(h.counts.iter().all(|&k| (k as f64 - 1e4).abs() <= 5.0 * sigma));
    }

    #[test]
    fn self_distances_vanish() {
        let mut rng = SeedSpec::new(2, 0).rng();
        let pts: Vec<_> = (0..5000).map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>())).collect();
        let g = Grid2D::new(-1.0, 1.0, 0.0, 1.0, 8, 5).unwrap();
        let h = histogram2d(&pts, &g);
        let r = density_distance(&h, |z| h.density_at(z), |_| true).unwrap();
        assert!(r.l1_distance < 1e-13 && r.sup_distance < 1e-12);
        // integer expected counts from a piecewise-constant law
        let g = Grid2D::new(0.0, 2.0, 0.0, 1.0, 2, 1).unwrap();
        let pts = [c(0.5, 0.5), c(1.5, 0.2), c(1.5, 0.7), c(1.2, 0.1)];
        let h = histogram2d(&pts, &g);
        let law = |z: Complex64| if z.re < 1.0 { 0.25 * PI } else { 0.75 * PI };
        let r = density_distance(&h, law, |z| z.re < 1.0).unwrap();
        assert!(r.l1_distance < 1e-14);
        assert_eq!(r.inside_fraction, 0.25);
    }

    #[test]
    fn inverse_cdf_samples_match_law() {
        // tau = 0, alpha = 1: radial CDF (sqrt(4 r^2 + 1) - 1) / 2 on r <= sqrt(2)
        let mut rng = SeedSpec::new(3, 0).rng();
        let pts: Vec<_> = (0..100_000)
            .map(|_| {
                let f: f64 = rng.random();
                let r = (((2.0 * f + 1.0).powi(2) - 1.0) / 4.0).sqrt();
                Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
            })
            .collect();
        let s = 2f64.sqrt();
        let h = histogram2d(&pts, &Grid2D::new(-s, s, -s, s, 10, 10).unwrap());
        let geo = droplet_geometry(1.0, 0.0).unwrap();
        let r = density_distance(&h, |z| wishart_density(z, 1.0, 0.0).unwrap(), |z| geo.contains(z)).unwrap();
        assert!(r.l1_distance <= 0.03, "{}", r.l1_distance);
        assert!(r.inside_fraction == 1.0);
    }

    #[test]
    fn ks_examples() {
        let u: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_distance(&u, |x| x) - 0.05).abs() < 1e-15);
        assert_eq!(ks_distance(&[0.5], |x| x), 0.5);
    }

    #[test]
    fn berezin_mass_one() {
        let m = berezin_mass(c(1.0, 0.0), 1.0, LimitRegime::Bulk).unwrap();
        assert!((m - 1.0).abs() <= 1e-6, "{m}");
        for z in [c(1.0, 0.0), c(0.0, 0.5), c(0.7, -0.9)] {
            let m = berezin_mass(z, 1.0, LimitRegime::Critical).unwrap();
            assert!((m - 1.0).abs() <= 1e-4, "{z} {m}");
            let m = berezin_mass(z, 2.0, LimitRegime::Bulk).unwrap();
            assert!((m - 1.0).abs() <= 1e-6, "{z} {m}");
        }
        assert!(berezin_mass(c(0.0, 0.0), 1.0, LimitRegime::Bulk).is_err());
        assert!(berezin_mass(c(1.0, 0.0), 1.0, LimitRegime::Gapped).is_err());
    }

    #[test]
    fn laguerre_orthogonality() {
        let p = make_params(8, 2.0, 0.5).unwrap();
        let r = orthogonality_check(&p, 5).unwrap();
        assert!(r.max_diag_rel <= 1e-6, "{r:?}");
        assert!(r.max_offdiag <= 1e-6, "{r:?}");
        assert!(r.quadrature_change <= 1e-9, "{}", r.quadrature_change);
    }

    #[test]
    fn convergence_table_shapes() {
        let xs = [c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)];
        let rows = convergence_table(&[10, 100, 1000], 1.0, TauRule::Critical, &xs).unwrap();
        assert_eq!(rows.len(), 9);
        for r in rows.iter().filter(|r| r.z == xs[0]) {
            assert_eq!((r.finite_n, r.limit), (Some(0.0), 0.0));
        }
        let err_at = |n: usize| rows.iter().find(|r| r.n == n && r.z == xs[2]).unwrap().abs_err.unwrap();
        assert!(err_at(1000) < err_at(10));
        let ys: Vec<_> = (1..=20).map(|k| c(0.0, 0.1 * k as f64)).collect();
        let rows = convergence_table(&[1000], 1.0, TauRule::Critical, &ys).unwrap();
        for (r, y) in rows.iter().zip(&ys) {
            let want = y.im.powi(2) * crate::specialfn::erfc_real(2f64.sqrt() * y.im.powi(2));
            assert!((r.limit - want).abs() < 1e-12);
        }
        let peak = rows.iter().map(|r| r.limit).enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
        assert!(peak.0 > 0 && peak.0 < rows.len() - 1);
        // bad parameters fail per row, not for the table
        let rows = convergence_table(&[0, 10], 1.0, TauRule::Fixed(0.5), &xs[1..2]).unwrap();
        assert!(rows[0].error.is_some() && rows[1].error.is_none());
    }
}
