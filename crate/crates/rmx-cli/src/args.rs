//! Flag definitions and value parsers.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "rmx", version, about = "Correlated non-Hermitian Wishart and chiral Dirac random matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub io: Io,
}

#[derive(Debug, Args)]
pub struct Io {
    /// Output file (standard output if omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true, env = "RMX_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample eigenvalues (CSV columns re,im,kind,trial)
    Sample(SampleArgs),
    /// Analytic density on a grid (CSV columns x,y,value; densities per dA = d^2z/pi)
    Density(DensityArgs),
    /// Droplet boundary as the image of the unit circle (CSV columns theta,re,im)
    Droplet(DropletArgs),
    /// Rescaled one-point function along a cut (CSV columns coord,axis,finite_N,limit,abs_err)
    Kernel(KernelArgs),
    /// Minimise the discrete Coulomb-gas energy (CSV columns re,im)
    Equilibrium(EquilibriumArgs),
    /// Run a check suite and report pass/fail as JSON
    Verify(VerifyArgs),
}

/// `tau` as a number in [0, 1] or `crit` for `1/sqrt(1 + alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauArg {
    Crit,
    Value(f64),
}

impl FromStr for TauArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "crit" {
            return Ok(TauArg::Crit);
        }
        let t: f64 = s.parse().map_err(|_| format!("expected a number or 'crit', got '{s}'"))?;
        if !(0.0..=1.0).contains(&t) {
            return Err(format!("tau must lie in [0, 1], got {t}"));
        }
        Ok(TauArg::Value(t))
    }
}

impl TauArg {
    pub fn resolve(self, alpha: f64) -> f64 {
        match self {
            TauArg::Crit => 1.0 / (1.0 + alpha).sqrt(),
            TauArg::Value(t) => t,
        }
    }
}

/// Inclusive range `min:max:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected min:max:count, got '{s}'");
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].parse().map_err(|_| bad())?;
        let max: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite()) || count == 0 || (count > 1 && !(min < max)) {
            return Err(format!("need finite min < max and count >= 1, got '{s}'"));
        }
        Ok(RangeSpec { min, max, count })
    }
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        rmx::core::linspace(self.min, self.max, self.count)
    }
}

/// Cell grid `xmin:xmax:nx,ymin:ymax:ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: RangeSpec,
    pub y: RangeSpec,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (x, y) = s.split_once(',').ok_or_else(|| format!("expected xmin:xmax:nx,ymin:ymax:ny, got '{s}'"))?;
        Ok(GridSpec { x: x.parse()?, y: y.parse()? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Wishart,
    Dirac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Wishart,
    Dirac,
    Mp,
    Mp2,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Global,
    Local,
    Specialfn,
    Oracle,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value_t = Ensemble::Wishart)]
    pub ensemble: Ensemble,
    /// Matrix size N
    #[arg(long)]
    pub n: usize,
    /// Rectangularity nu (number of zero modes of the Dirac matrix)
    #[arg(long, default_value_t = 0)]
    pub nu: usize,
    /// Non-Hermiticity in [0, 1], or `crit`
    #[arg(long)]
    pub tau: TauArg,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit the nu exact zero modes of the Dirac matrix as (0, 0) rows
    #[arg(long)]
    pub zero_modes: bool,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    pub law: Law,
    /// Limiting ratio nu/N (for mp and mp2 the Marchenko-Pastur parameter)
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Non-Hermiticity in [0, 1), or `crit` (wishart and dirac laws)
    #[arg(long, default_value = "0.5")]
    pub tau: TauArg,
    /// Grid points xmin:xmax:nx,ymin:ymax:ny for the planar laws
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Points min:max:count on the real line for mp and mp2
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<RangeSpec>,
}

#[derive(Debug, Args)]
pub struct DropletArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value = "0.5")]
    pub tau: TauArg,
    /// Angles theta as min:max:count
    #[arg(long, default_value = "0:6.283185307179586:256", allow_hyphen_values = true)]
    pub range: RangeSpec,
    /// `wishart` for the ellipse, `dirac` for its square-root preimage
    #[arg(long, value_enum, default_value_t = Law::Wishart)]
    pub law: Law,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub tau: TauArg,
    #[arg(long, value_enum, default_value_t = Cut::X)]
    pub cut: Cut,
    #[arg(long, default_value = "-2:2:201", allow_hyphen_values = true)]
    pub range: RangeSpec,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    /// Number of charges
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub tau: TauArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient-norm tolerance
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature tolerance for the potential-theory checks
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}
