mod args;
mod output;
mod suites;

use std::process::ExitCode;

use clap::Parser;
use num_complex::Complex64;
use serde_json::json;

use rmx::coulomb::{bounding_box_start, gas_minimize, GasConfig, MinimizeOptions};
use rmx::ensembles::{sample_trials, SpectrumKind};
use rmx::globallaw::{classical_density, conformal_map, dirac_law, droplet_geometry, wishart_density, ClassicalLaw};
use rmx::verify::{convergence_table, TauRule};
use rmx::{make_params, SeedSpec};

use args::{Cli, Command, Cut, Ensemble, Format, Law};
use output::{fmt, Sink};

/// A failure after flag parsing: numeric (exit 3) or output (exit 3 too).
struct Failure {
    msg: String,
    seed: Option<u64>,
}

impl From<rmx::Error> for Failure {
    fn from(e: rmx::Error) -> Self {
        Failure { msg: e.to_string(), seed: None }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { msg: format!("output: {e}"), seed: None }
    }
}

fn with_seed(seed: u64) -> impl Fn(rmx::Error) -> Failure {
    move |e| Failure { msg: e.to_string(), seed: Some(seed) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.io.threads {
        if t == 0 || rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: invalid --threads {t}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            match f.seed {
                Some(s) => eprintln!("error: {} (seed {s})", f.msg),
                None => eprintln!("error: {}", f.msg),
            }
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let mut sink = Sink::open(cli.io.out.as_deref())?;
    let format = cli.io.format;
    match &cli.command {
        Command::Sample(a) => {
            let tau = a.tau.resolve(a.nu as f64 / a.n.max(1) as f64);
            let p = make_params(a.n, a.nu as f64, tau).map_err(with_seed(a.seed))?;
            let kind = match a.ensemble {
                Ensemble::Wishart => SpectrumKind::Wishart,
                Ensemble::Dirac => SpectrumKind::Dirac,
            };
            let samples = sample_trials(kind, &p, a.seed, a.trials).map_err(with_seed(a.seed))?;
            let config = json!({
                "command": "sample", "ensemble": a.ensemble, "params": p, "trials": a.trials,
                "seed": a.seed, "zero_modes": a.zero_modes,
            });
            let zero = a.zero_modes && kind == SpectrumKind::Dirac;
            match format {
                Format::Csv => {
                    sink.header(&config, "re,im,kind,trial")?;
                    for (t, s) in samples.iter().enumerate() {
                        for z in &s.eigenvalues {
                            sink.row(&[fmt(z.re), fmt(z.im), kind.as_str().into(), t.to_string()])?;
                        }
                        if zero {
                            for _ in 0..s.zero_mode_count {
                                sink.row(&["0".into(), "0".into(), kind.as_str().into(), t.to_string()])?;
                            }
                        }
                    }
                }
                Format::Json => {
                    let trials: Vec<_> = samples
                        .iter()
                        .map(|s| json!({ "seed": s.seed, "zero_mode_count": s.zero_mode_count, "eigenvalues": s.eigenvalues }))
                        .collect();
                    sink.json(&json!({ "config": config, "trials": trials }))?;
                }
            }
        }
        Command::Density(a) => {
            let tau = a.tau.resolve(a.alpha);
            let mut config = json!({ "command": "density", "law": a.law, "alpha": a.alpha, "measure": "dA = d^2z/pi" });
            let rows: Vec<(f64, f64, f64)> = match a.law {
                Law::Mp | Law::Mp2 => {
                    let (kind, range) = if a.law == Law::Mp {
                        let lp = ((1.0 + a.alpha).sqrt() + 1.0).powi(2);
                        (ClassicalLaw::Mp, a.range.unwrap_or(args::RangeSpec { min: 0.0, max: 1.05 * lp, count: 201 }))
                    } else {
                        let r = (1.0 + a.alpha).sqrt() + 1.0;
                        (ClassicalLaw::MpSquared, a.range.unwrap_or(args::RangeSpec { min: -1.05 * r, max: 1.05 * r, count: 201 }))
                    };
                    config["range"] = json!(range);
                    range
                        .values()
                        .into_iter()
                        .map(|x| Ok((x, 0.0, classical_density(kind, Complex64::new(x, 0.0), a.alpha)?)))
                        .collect::<Result<_, rmx::Error>>()?
                }
                Law::Wishart | Law::Dirac | Law::Product => {
                    let grid = match (a.grid, a.law) {
                        (Some(g), _) => g,
                        (None, Law::Product) => "-1.05:1.05:101,-1.05:1.05:101".parse().expect("static grid"),
                        (None, _) => {
                            let g = droplet_geometry(a.alpha, tau)?;
                            let (xs, ys) = if a.law == Law::Wishart {
                                (g.x0 - g.semi_major..g.x0 + g.semi_major, g.semi_minor)
                            } else {
                                let r = (g.x0 + g.semi_major).sqrt();
                                (-r..r, r)
                            };
                            args::GridSpec {
                                x: args::RangeSpec { min: 1.05 * xs.start, max: 1.05 * xs.end, count: 101 },
                                y: args::RangeSpec { min: -1.05 * ys, max: 1.05 * ys, count: 101 },
                            }
                        }
                    };
                    if a.law != Law::Product {
                        config["tau"] = json!(tau);
                    } else {
                        config["M"] = json!(2);
                    }
                    if a.law == Law::Dirac {
                        config["atom_mass_at_origin"] = json!(dirac_law(Complex64::new(1.0, 0.0), a.alpha, tau)?.0);
                    }
                    config["grid"] = json!(grid);
                    let (xv, yv) = (grid.x.values(), grid.y.values());
                    let mut rows = Vec::with_capacity(xv.len() * yv.len());
                    for y in &yv {
                        for x in &xv {
                            let z = Complex64::new(*x, *y);
                            let v = match a.law {
                                Law::Wishart => wishart_density(z, a.alpha, tau)?,
                                Law::Dirac => dirac_law(z, a.alpha, tau)?.1,
                                _ => classical_density(ClassicalLaw::ProductM, z, 2.0)?,
                            };
                            rows.push((*x, *y, v));
                        }
                    }
                    rows
                }
            };
            match format {
                Format::Csv => {
                    sink.header(&config, "x,y,value")?;
                    for (x, y, v) in rows {
                        sink.row(&[fmt(x), fmt(y), fmt(v)])?;
                    }
                }
                Format::Json => {
                    let pts: Vec<_> = rows.iter().map(|(x, y, v)| [x, y, v]).collect();
                    sink.json(&json!({ "config": config, "columns": ["x", "y", "value"], "rows": pts }))?;
                }
            }
        }
        Command::Droplet(a) => {
            if !matches!(a.law, Law::Wishart | Law::Dirac) {
                eprintln!("error: droplet supports --law wishart or dirac");
                return Ok(ExitCode::from(2));
            }
            let tau = a.tau.resolve(a.alpha);
            let g = droplet_geometry(a.alpha, tau)?;
            let config = json!({ "command": "droplet", "law": a.law, "geometry": g, "range": a.range });
            let mut rows = Vec::new();
            for t in a.range.values() {
                let w = conformal_map(Complex64::from_polar(1.0, t), &g)?;
                rows.push((t, w));
            }
            if a.law == Law::Dirac {
                // preimage of the ellipse under z -> z^2: both square-root branches
                let roots: Vec<_> = rows.iter().map(|(t, w)| (*t, w.sqrt())).collect();
                rows = roots.iter().copied().chain(roots.iter().map(|(t, r)| (*t, -r))).collect();
            }
            match format {
                Format::Csv => {
                    sink.header(&config, "theta,re,im")?;
                    for (t, w) in rows {
                        sink.row(&[fmt(t), fmt(w.re), fmt(w.im)])?;
                    }
                }
                Format::Json => {
                    let pts: Vec<_> = rows.iter().map(|(t, w)| [*t, w.re, w.im]).collect();
                    sink.json(&json!({ "config": config, "columns": ["theta", "re", "im"], "rows": pts }))?;
                }
            }
        }
        Command::Kernel(a) => {
            if a.n == 0 || !(a.nu > 0.0) {
                eprintln!("error: kernel needs --n >= 1 and --nu > 0");
                return Ok(ExitCode::from(2));
            }
            let alpha = a.nu / a.n as f64;
            let tau = a.tau.resolve(alpha);
            let p = make_params(a.n, a.nu, tau)?;
            let dir = match a.cut {
                Cut::X => Complex64::new(1.0, 0.0),
                Cut::Y => Complex64::new(0.0, 1.0),
            };
            let coords = a.range.values();
            let zs: Vec<Complex64> = coords.iter().map(|t| *t * dir).collect();
            let rule = if (tau - p.tau_c).abs() <= 1e-12 { TauRule::Critical } else { TauRule::Fixed(tau) };
            let rows = convergence_table(&[a.n], alpha, rule, &zs)?;
            if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
                return Err(Failure { msg: format!("kernel at z = {}: {}", bad.z, bad.error.as_deref().unwrap_or("")), seed: None });
            }
            let max_err = rows.iter().filter_map(|r| r.abs_err).fold(0.0, f64::max);
            let max_lim = rows.iter().map(|r| r.limit).fold(0.0, f64::max);
            let axis = match a.cut {
                Cut::X => "x",
                Cut::Y => "y",
            };
            let config = json!({
                "command": "kernel", "params": p, "cut": a.cut, "range": a.range,
                "max_abs_err": max_err, "max_limit": max_lim,
            });
            match format {
                Format::Csv => {
                    sink.header(&config, "coord,axis,finite_N,limit,abs_err")?;
                    for (t, r) in coords.iter().zip(&rows) {
                        sink.row(&[
                            fmt(*t),
                            axis.into(),
                            fmt(r.finite_n.unwrap_or(f64::NAN)),
                            fmt(r.limit),
                            fmt(r.abs_err.unwrap_or(f64::NAN)),
                        ])?;
                    }
                }
                Format::Json => {
                    let pts: Vec<_> = coords
                        .iter()
                        .zip(&rows)
                        .map(|(t, r)| json!({ "coord": t, "axis": axis, "finite_N": r.finite_n, "limit": r.limit, "abs_err": r.abs_err }))
                        .collect();
                    sink.json(&json!({ "config": config, "rows": pts }))?;
                }
            }
        }
        Command::Equilibrium(a) => {
            if a.n == 0 {
                eprintln!("error: equilibrium needs --n >= 1");
                return Ok(ExitCode::from(2));
            }
            let tau = a.tau.resolve(a.alpha);
            let g = droplet_geometry(a.alpha, tau).map_err(with_seed(a.seed))?;
            let mut rng = SeedSpec::new(a.seed, 0).rng();
            let start = GasConfig::new(bounding_box_start(a.n, &g, &mut rng), a.alpha, tau).map_err(with_seed(a.seed))?;
            let opts = MinimizeOptions { grad_tol: a.tol, ..MinimizeOptions::default() };
            let m = gas_minimize(&start, &opts).map_err(with_seed(a.seed))?;
            let config = json!({
                "command": "equilibrium", "n": a.n, "alpha": a.alpha, "tau": tau, "seed": a.seed, "options": opts,
                "status": m.status, "iterations": m.iterations, "energy": m.config.energy(), "grad_norm": m.config.grad_norm(),
            });
            match format {
                Format::Csv => {
                    sink.header(&config, "re,im")?;
                    for z in m.config.points() {
                        sink.row(&[fmt(z.re), fmt(z.im)])?;
                    }
                    if let Some(out) = &cli.io.out {
                        let mut log_path = out.clone().into_os_string();
                        log_path.push(".log.json");
                        let mut log = Sink::open(Some(std::path::Path::new(&log_path)))?;
                        log.json(&json!({ "config": config, "log": m.log }))?;
                        log.finish()?;
                    }
                }
                Format::Json => {
                    sink.json(&json!({ "config": config, "points": m.config.points(), "log": m.log }))?;
                }
            }
        }
        Command::Verify(a) => {
            let report = suites::run(a).map_err(with_seed(a.seed))?;
            let config = json!({ "command": "verify", "suite": a.suite, "seed": a.seed, "tol": a.tol });
            sink.json(&json!({ "config": config, "report": report }))?;
            sink.finish()?;
            return Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    sink.finish()?;
    Ok(ExitCode::SUCCESS)
}
