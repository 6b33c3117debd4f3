//! Discrete Coulomb gas in the limiting potential: energy, gradient and a
//! descent minimiser producing weighted Fekete points, compared against
//! the analytic droplet.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::globallaw::{conformal_map, coefficients, DropletGeometry};

/// A configuration of `n` charges with its energy and gradient norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasConfig {
    points: Vec<Complex64>,
    alpha: f64,
    tau: f64,
    energy: f64,
    grad_norm: f64,
}

impl GasConfig {
    pub fn new(points: Vec<Complex64>, alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParam(format!("need alpha >= 0 and tau in [0, 1), got {alpha}, {tau}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidParam("a gas needs at least one point".into()));
        }
        let mut c = GasConfig { points, alpha, tau, energy: 0.0, grad_norm: 0.0 };
        c.refresh()?;
        Ok(c)
    }

    fn refresh(&mut self) -> Result<()> {
        self.energy = gas_energy(self)?;
        self.grad_norm = norm(&gas_gradient(self)?);
        Ok(())
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad_norm
    }

    /// Replaces the points and recomputes the cached values.
    pub fn set_points(&mut self, points: Vec<Complex64>) -> Result<()> {
        self.points = points;
        self.refresh()
    }

    pub fn centroid(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }
}

fn norm(g: &[Complex64]) -> f64 {
    g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

// limiting potential and its complex gradient Q_x + i Q_y = 2 conj(dQ)
#[derive(Clone, Copy)]
struct Potential {
    a: f64,
    b: f64,
    alpha: f64,
}

impl Potential {
    fn new(alpha: f64, tau: f64) -> Self {
        let (a, b) = coefficients(tau);
        Potential { a, b, alpha }
    }

    fn s(&self, z: Complex64) -> f64 {
        (self.a * self.a * z.norm_sqr() + self.alpha * self.alpha).sqrt()
    }

    fn value(&self, z: Complex64) -> f64 {
        let s = self.s(z);
        let log = if self.alpha == 0.0 { 0.0 } else { self.alpha * (s + self.alpha).ln() };
        s - self.b * z.re - log
    }

    fn grad(&self, z: Complex64) -> Complex64 {
        let s = self.s(z);
        // dQ = A^2 zbar / (2 (S + alpha)) - B/2
        let radial = if s + self.alpha == 0.0 { Complex64::new(0.0, 0.0) } else { self.a * self.a * z / (s + self.alpha) };
        radial - self.b
    }

    // Q(w) - Q(z) without cancellation for nearby points
    fn diff(&self, z: Complex64, w: Complex64) -> f64 {
        let (sz, sw) = (self.s(z), self.s(w));
        let dn = ((w - z) * (w + z).conj()).re;
        let ds = if sz + sw == 0.0 { 0.0 } else { self.a * self.a * dn / (sz + sw) };
        let log = if self.alpha == 0.0 { 0.0 } else { self.alpha * (ds / (sz + self.alpha)).ln_1p() };
        ds - self.b * (w.re - z.re) - log
    }
}

fn check_distinct(points: &[Complex64], min_sep: f64) -> Result<()> {
    let bad = points.par_iter().enumerate().find_map_first(|(j, p)| {
        points[..j].iter().position(|q| (p - q).norm() <= min_sep).map(|k| (k, j))
    });
    match bad {
        Some((k, j)) => Err(Error::Coincident(k, j)),
        None => Ok(()),
    }
}

/// `sum_{j != k} log(1/|z_j - z_k|) + n sum_j Q(z_j)` over ordered pairs.
pub fn gas_energy(config: &GasConfig) -> Result<f64> {
    let pts = &config.points;
    check_distinct(pts, 0.0)?;
    Ok(plain_energy(pts, &Potential::new(config.alpha, config.tau)))
}

fn plain_energy(pts: &[Complex64], pot: &Potential) -> f64 {
    let n = pts.len() as f64;
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|j| {
            let inter: f64 = pts[j + 1..].iter().map(|q| -(pts[j] - q).norm().ln()).sum();
            2.0 * inter + n * pot.value(pts[j])
        })
        .collect();
    rows.iter().sum()
}

/// Gradient of [`gas_energy`] per point, as `dE/dx + i dE/dy`.
pub fn gas_gradient(config: &GasConfig) -> Result<Vec<Complex64>> {
    let pts = &config.points;
    check_distinct(pts, 0.0)?;
    Ok(gradient(pts, &Potential::new(config.alpha, config.tau)))
}

fn gradient(pts: &[Complex64], pot: &Potential) -> Vec<Complex64> {
    let n = pts.len() as f64;
    (0..pts.len())
        .into_par_iter()
        .map(|j| {
            let mut g = n * pot.grad(pts[j]);
            for (k, q) in pts.iter().enumerate() {
                if k != j {
                    let d = pts[j] - q;
                    g -= 2.0 * d / d.norm_sqr();
                }
            }
            g
        })
        .collect()
}

// E(new) - E(old), summed from per-term differences
fn energy_change(old: &[Complex64], new: &[Complex64], pot: &Potential) -> f64 {
    let n = old.len() as f64;
    // displacements of nearby floats are exact, so pair changes keep full
    // relative accuracy
    let moved: Vec<Complex64> = old.iter().zip(new).map(|(a, b)| b - a).collect();
    let rows: Vec<f64> = (0..old.len())
        .into_par_iter()
        .map(|j| {
            let mut r = n * pot.diff(old[j], new[j]);
            for k in j + 1..old.len() {
                let d0 = old[j] - old[k];
                let e = moved[j] - moved[k];
                let dd = (e * (2.0 * d0 + e).conj()).re / d0.norm_sqr();
                r -= dd.ln_1p();
            }
            r
        })
        .collect();
    rows.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub min_sep: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_iters: 50_000, grad_tol: 1e-8, min_sep: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeStatus {
    Converged,
    MaxIters,
    /// No admissible step decreased the energy.
    Stagnated,
}

/// One accepted step. `energy` is the initial energy plus the accumulated
/// per-step changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimized {
    pub config: GasConfig,
    pub status: MinimizeStatus,
    pub iterations: usize,
    pub log: Vec<LogEntry>,
}

/// Gradient descent with Barzilai-Borwein trial steps, Armijo backtracking
/// by halving and a minimum-separation safeguard.
pub fn gas_minimize(initial: &GasConfig, opts: &MinimizeOptions) -> Result<Minimized> {
    if !(opts.grad_tol > 0.0) || !(opts.min_sep > 0.0) {
        return Err(Error::InvalidParam("grad_tol and min_sep must be positive".into()));
    }
    minimize_in(initial, &Potential::new(initial.alpha, initial.tau), opts)
}

fn minimize_in(initial: &GasConfig, pot: &Potential, opts: &MinimizeOptions) -> Result<Minimized> {
    check_distinct(&initial.points, opts.min_sep)?;
    let mut energy = plain_energy(&initial.points, pot);
    let mut x = initial.points.clone();
    let mut g = gradient(&x, pot);
    let mut gn = norm(&g);
    let mut log = vec![LogEntry { iter: 0, energy, grad_norm: gn, step: 0.0 }];
    let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut t = if gmax > 0.0 { 1e-2 / gmax } else { 1.0 };
    let mut status = MinimizeStatus::MaxIters;
    let mut iter = 0;
    while iter < opts.max_iters {
        if gn <= opts.grad_tol {
            status = MinimizeStatus::Converged;
            break;
        }
        iter += 1;
        let mut step = t;
        let accepted = loop {
            let trial: Vec<Complex64> = x.iter().zip(&g).map(|(p, d)| p - step * d).collect();
            if check_distinct(&trial, opts.min_sep).is_ok() {
                let de = energy_change(&x, &trial, pot);
                if de <= -1e-4 * step * gn * gn {
                    break Some((trial, de));
                }
            }
            step *= 0.5;
            if step * gmax_of(&g) < 1e-300 || step < 1e-40 * t {
                break None;
            }
        };
        let Some((trial, de)) = accepted else {
            status = MinimizeStatus::Stagnated;
            break;
        };
        let g_new = gradient(&trial, pot);
        // Barzilai-Borwein step from the secant pair
        let (mut ss, mut sy) = (0.0, 0.0);
        for j in 0..x.len() {
            let s = trial[j] - x[j];
            let y = g_new[j] - g[j];
            ss += s.norm_sqr();
            sy += (s * y.conj()).re;
        }
        t = if sy > 0.0 { ss / sy } else { 2.0 * step };
        x = trial;
        g = g_new;
        gn = norm(&g);
        energy += de;
        log.push(LogEntry { iter, energy, grad_norm: gn, step });
    }
    if status == MinimizeStatus::MaxIters && gn <= opts.grad_tol {
        status = MinimizeStatus::Converged;
    }
    let config = GasConfig::new(x, initial.alpha, initial.tau)?;
    Ok(Minimized { config, status, iterations: iter, log })
}

fn gmax_of(g: &[Complex64]) -> f64 {
    g.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Share of points with ellipse form at most `1 + tol`.
    pub inside_fraction: f64,
    /// Largest distance from a boundary sample to its nearest point.
    pub hausdorff_proxy: f64,
}

/// How well `points` fill the analytic ellipse; the boundary is sampled at
/// 256 points of the conformal image of the unit circle.
pub fn coverage_metric(points: &[Complex64], geometry: &DropletGeometry, tol: f64) -> Result<Coverage> {
    if points.is_empty() {
        return Err(Error::InvalidParam("coverage needs at least one point".into()));
    }
    let inside = points.iter().filter(|p| geometry.ellipse_form(**p) <= 1.0 + tol).count();
    let mut h: f64 = 0.0;
    for i in 0..256 {
        let b = conformal_map(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / 256.0), geometry)?;
        let d = points.iter().map(|p| (p - b).norm()).fold(f64::INFINITY, f64::min);
        h = h.max(d);
    }
    Ok(Coverage { inside_fraction: inside as f64 / points.len() as f64, hausdorff_proxy: h })
}

/// Mean distance from each point to its nearest neighbour.
pub fn mean_nn_spacing(points: &[Complex64]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let d: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(j, p)| {
            points.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, q)| (p - q).norm()).fold(f64::INFINITY, f64::min)
        })
        .collect();
    d.iter().sum::<f64>() / d.len() as f64
}

/// `n` points uniform on the bounding box of the analytic ellipse.
pub fn bounding_box_start(n: usize, geometry: &DropletGeometry, rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let (a, b) = (geometry.semi_major, geometry.semi_minor);
    (0..n)
        .map(|_| {
            Complex64::new(geometry.x0 + a * (2.0 * rng.random::<f64>() - 1.0), b * (2.0 * rng.random::<f64>() - 1.0))
        })
        .collect()
}
