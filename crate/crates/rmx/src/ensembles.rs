//! Sampling the correlated Gaussian pair `(X1, X2)`, the Wishart product
//! `X = X1 X2^*` and the chiral Dirac matrix, and extracting their spectra.

use ndarray::{s, Array2};
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{EnsembleParams, SeedSpec};
use crate::error::{Error, Result};

/// Largest `N` accepted by [`dirac_eigs_direct`].
pub const DIRECT_MAX_N: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Wishart,
    Dirac,
}

impl SpectrumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumKind::Wishart => "wishart",
            SpectrumKind::Dirac => "dirac",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixPair {
    pub x1: Array2<Complex64>,
    pub x2: Array2<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub kind: SpectrumKind,
    pub eigenvalues: Vec<Complex64>,
    pub zero_mode_count: usize,
    pub seed: SeedSpec,
    pub params_snapshot: EnsembleParams,
}

/// Standard deviation of the real and imaginary parts of each entry of `P`
/// and `Q`, so that `E|P_jk|^2 = 1/(2N)`.
pub fn entry_sigma(n: usize) -> f64 {
    0.5 / (n as f64).sqrt()
}

/// The independent Gaussian matrices `(P, Q)`, each `N x (N + nu)`.
///
/// Entries are drawn row-major from one ChaCha stream, `P` first, real part
/// before imaginary part.
pub fn sample_pq(params: &EnsembleParams, seed: SeedSpec) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let nu = params.nu_integer()?;
    let (rows, cols) = (params.n, params.n + nu);
    let sigma = entry_sigma(params.n);
    let mut rng = seed.rng();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut m = Array2::<Complex64>::zeros((rows, cols));
        for v in m.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(sigma * re, sigma * im);
        }
        m
    };
    let p = draw(&mut rng);
    let q = draw(&mut rng);
    Ok((p, q))
}

pub fn sample_ginibre_pair(params: &EnsembleParams, seed: SeedSpec) -> Result<MatrixPair> {
    let (p, q) = sample_pq(params, seed)?;
    let sp = (1.0 + params.tau).sqrt();
    let sq = (1.0 - params.tau).sqrt();
    let x1 = &p * Complex64::new(sp, 0.0) + &q * Complex64::new(sq, 0.0);
    let x2 = &p * Complex64::new(sp, 0.0) - &q * Complex64::new(sq, 0.0);
    Ok(MatrixPair { x1, x2 })
}

fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|v| v.conj())
}

impl MatrixPair {
    pub fn scaled(&self, u: f64) -> Self {
        let f = Complex64::new(u, 0.0);
        Self { x1: &self.x1 * f, x2: &self.x2 * f }
    }

    /// `X = X1 X2^*`.
    pub fn wishart_matrix(&self) -> Array2<Complex64> {
        self.x1.dot(&adjoint(&self.x2))
    }

    /// The `(2N + nu)`-square matrix `[[0, X1], [X2^*, 0]]`.
    pub fn dirac_matrix(&self) -> Array2<Complex64> {
        let (n, m) = self.x1.dim();
        let mut d = Array2::<Complex64>::zeros((n + m, n + m));
        d.slice_mut(s![..n, n..]).assign(&self.x1);
        d.slice_mut(s![n.., ..n]).assign(&adjoint(&self.x2));
        d
    }

    pub fn wishart_eigenvalues(&self, seed: SeedSpec) -> Result<Vec<Complex64>> {
        eigenvalues(self.wishart_matrix(), seed)
    }
}

/// Dense non-Hermitian eigenvalues (LAPACK `zgeev`).
pub fn eigenvalues(m: Array2<Complex64>, seed: SeedSpec) -> Result<Vec<Complex64>> {
    let ev = m.eigvals().map_err(|e| Error::Eigensolver { seed, msg: e.to_string() })?;
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver { seed, msg: "non-finite eigenvalue".into() });
    }
    Ok(ev.to_vec())
}

pub fn wishart_eigs(params: &EnsembleParams, seed: SeedSpec) -> Result<SpectrumSample> {
    let pair = sample_ginibre_pair(params, seed)?;
    let eigenvalues = pair.wishart_eigenvalues(seed)?;
    Ok(SpectrumSample { kind: SpectrumKind::Wishart, eigenvalues, zero_mode_count: 0, seed, params_snapshot: *params })
}

/// Both square roots of every Wishart eigenvalue: the principal roots first,
/// then their negatives in the same order.
pub fn dirac_from_wishart(wishart: &[Complex64]) -> Vec<Complex64> {
    let roots: Vec<Complex64> = wishart.iter().map(|z| z.sqrt()).collect();
    roots.iter().copied().chain(roots.iter().map(|z| -z)).collect()
}

pub fn dirac_eigs(params: &EnsembleParams, seed: SeedSpec) -> Result<SpectrumSample> {
    let w = wishart_eigs(params, seed)?;
    Ok(SpectrumSample {
        kind: SpectrumKind::Dirac,
        eigenvalues: dirac_from_wishart(&w.eigenvalues),
        zero_mode_count: params.nu_integer()?,
        seed,
        params_snapshot: *params,
    })
}

/// Diagonalizes the full Dirac matrix; a small-N cross-check of
/// [`dirac_eigs`]. All `2N + nu` eigenvalues are returned unmodified.
pub fn dirac_eigs_direct(params: &EnsembleParams, seed: SeedSpec) -> Result<SpectrumSample> {
    if params.n > DIRECT_MAX_N {
        return Err(Error::InvalidParam(format!(
            "direct Dirac diagonalization is limited to N <= {DIRECT_MAX_N}"
        )));
    }
    let pair = sample_ginibre_pair(params, seed)?;
    let eigenvalues = eigenvalues(pair.dirac_matrix(), seed)?;
    Ok(SpectrumSample {
        kind: SpectrumKind::Dirac,
        eigenvalues,
        zero_mode_count: params.nu_integer()?,
        seed,
        params_snapshot: *params,
    })
}

/// Independent trials `stream_id = 0..trials` under one master seed. The
/// result does not depend on the worker count.
pub fn sample_trials(
    kind: SpectrumKind,
    params: &EnsembleParams,
    master_seed: u64,
    trials: usize,
) -> Result<Vec<SpectrumSample>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = SeedSpec::new(master_seed, t);
            match kind {
                SpectrumKind::Wishart => wishart_eigs(params, seed),
                SpectrumKind::Dirac => dirac_eigs(params, seed),
            }
        })
        .collect()
}

/// Greedy nearest matching between two multisets; returns the largest
/// matched distance, or `None` if the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &z in a {
        let (mut best, mut bi) = (f64::INFINITY, usize::MAX);
        for (j, &w) in b.iter().enumerate() {
            if !used[j] {
                let d = (z - w).norm();
                if d < best {
                    (best, bi) = (d, j);
                }
            }
        }
        used[bi] = true;
        worst = worst.max(best);
    }
    Some(worst)
}
