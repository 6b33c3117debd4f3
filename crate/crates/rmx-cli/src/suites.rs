//! Check suites behind `rmx verify`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use rmx::coulomb::{bounding_box_start, coverage_metric, gas_minimize, GasConfig, MinimizeOptions, MinimizeStatus};
use rmx::ensembles::{sample_trials, SpectrumKind};
use rmx::globallaw::{boundary_check, droplet_geometry, effective_potential, mass_integral};
use rmx::kernels::{
    ik_contour, ik_sum, kernel_dirac_with, kernel_via_ik, limit_kernel, rescaled_density, rescaled_kernel_wishart,
    DiracPath, IkParams, LimitRegime,
};
use rmx::specialfn::{asymptotic_ratio, erfc_complex, log_bessel_k, scaled_bessel_i, AsymptoticKind};
use rmx::verify::{berezin_mass, orthogonality_check};
use rmx::{make_params, Result, SeedSpec};

use crate::args::{Suite, VerifyArgs};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn run(args: &VerifyArgs) -> Result<SuiteReport> {
    let checks = match args.suite {
        Suite::Global => global(args)?,
        Suite::Local => local()?,
        Suite::Specialfn => specialfn(args.seed)?,
        Suite::Oracle => oracle()?,
    };
    Ok(SuiteReport { suite: args.suite, pass: checks.iter().all(|c| c.pass), checks })
}

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn global(args: &VerifyArgs) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut mass: f64 = 0.0;
    for alpha in [0.0, 1.0] {
        for tau in [0.3, 0.5, 1.0 / (1.0 + alpha as f64).sqrt()] {
            if tau < 1.0 {
                mass = mass.max((mass_integral(alpha, tau, args.tol)? - 1.0).abs());
            }
        }
    }
    out.push(Check::at_most("mass_integral", mass, 1e-8));

    let g = droplet_geometry(1.0, 0.5)?;
    let inside = [c(g.x0, 0.0), c(g.x0 + 0.5 * g.semi_major, 0.2 * g.semi_minor), c(g.x0 - 0.3, -0.4 * g.semi_minor)];
    let vals: Vec<f64> = inside.iter().map(|z| effective_potential(*z, 1.0, 0.5, args.tol.max(1e-8))).collect::<Result<_>>()?;
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(Check::at_most("effective_potential_flat", spread, 1e-4));
    let outside = effective_potential(c(g.x0 + 1.5 * g.semi_major, 0.3), 1.0, 0.5, args.tol.max(1e-8))?;
    out.push(Check::at_most("effective_potential_outside_deficit", (vals[0] - outside).max(0.0), 0.0));

    let (mut schwarz, mut jump) = (0.0f64, 0.0f64);
    for k in 0..16 {
        let b = boundary_check(2.0 * std::f64::consts::PI * k as f64 / 16.0 + 0.1, 1.0, 0.5)?;
        schwarz = schwarz.max(b.schwarz_interior).max(b.schwarz_exterior);
        jump = jump.max(b.continuity);
    }
    out.push(Check::at_most("schwarz_identity", schwarz, 1e-9));
    out.push(Check::at_most("cauchy_continuity", jump, 1e-9));

    let p = make_params(200, 200.0, 0.5)?;
    let samples = sample_trials(SpectrumKind::Wishart, &p, args.seed, 10)?;
    let dilated = |z: Complex64| g.ellipse_form(z) <= 1.05f64.powi(2);
    let (mut hit, mut all) = (0usize, 0usize);
    for s in &samples {
        all += s.eigenvalues.len();
        hit += s.eigenvalues.iter().filter(|z| dilated(**z)).count();
    }
    out.push(Check::at_most("sampled_outside_fraction", 1.0 - hit as f64 / all as f64, 0.01));
    Ok(out)
}

fn local() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = make_params(1000, 1000.0, 1.0 / 2f64.sqrt())?;
    let grid = rmx::core::linspace(-2.0, 2.0, 201);
    for (name, dir) in [("critical_x_cut", c(1.0, 0.0)), ("critical_y_cut", c(0.0, 1.0))] {
        let (mut err, mut top) = (0.0f64, 0.0f64);
        for t in &grid {
            let z = *t * dir;
            let lim = limit_kernel(z, z, 1.0, LimitRegime::Critical)?.re;
            err = err.max((rescaled_density(z, &p)? - lim).abs());
            top = top.max(lim);
        }
        out.push(Check::at_most(name, err / top, 0.05));
    }
    let spot = rescaled_density(c(1.0, 0.0), &p)?;
    out.push(Check::at_most("critical_spot_value_rel", (spot / 1.9545 - 1.0).abs(), 0.05));
    let z = c(0.8, 0.0);
    let bulk = rescaled_density(z, &make_params(1600, 1600.0, 0.5)?)?;
    out.push(Check::at_most("bulk_classification_rel", (bulk / (2.0 * z.norm_sqr()) - 1.0).abs(), 0.05));
    let gapped = rescaled_density(z, &make_params(1600, 1600.0, 0.85)?)?;
    out.push(Check::at_most("gapped_classification_abs", gapped, 0.05));
    let pts = [c(1.0, 0.0), c(0.0, 0.5), c(0.7, -0.9)];
    let (mut bulk_mass, mut crit_mass) = (0.0f64, 0.0f64);
    for z in pts {
        bulk_mass = bulk_mass.max((berezin_mass(z, 1.0, LimitRegime::Bulk)? - 1.0).abs());
        crit_mass = crit_mass.max((berezin_mass(z, 1.0, LimitRegime::Critical)? - 1.0).abs());
    }
    out.push(Check::at_most("berezin_bulk", bulk_mass, 1e-6));
    out.push(Check::at_most("berezin_critical", crit_mass, 1e-4));
    Ok(out)
}

// erfc reference values computed to 20 digits with an arbitrary-precision library
const ERFC_TABLE: [(f64, f64, f64, f64); 6] = [
    (1.0, 0.0, 0.157_299_207_050_285_13, 0.0),
    (-2.5, 1.0, 1.999_382_685_137_799_8, 8.469_445_433_937_926e-4),
    (0.3, -4.0, -865_229.158_570_568_2, -804_043.169_789_466_5),
    (5.0, 5.0, 0.069_620_396_256_904_884, -0.038_936_190_895_121_379),
    (3.0, -9.0, 2.937_631_018_002_193_9e29, -1.070_747_371_724_485_9e30),
    (9.5, 1.0, 9.863_732_220_770_987e-41, -2.562_901_006_113_600_6e-41),
];

fn specialfn(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut w: f64 = 0.0;
    for nu in [0.0, 0.5, 3.0, 40.0] {
        for x in [0.1, 1.0, 10.0, 100.0] {
            let i0 = scaled_bessel_i(nu, c(x, 0.0));
            let i1 = scaled_bessel_i(nu + 1.0, c(x, 0.0));
            let k0 = log_bessel_k(nu, x)?;
            let k1 = log_bessel_k(nu + 1.0, x)?;
            let s = (i0.log_mag + k1 + x.ln()).exp() + (i1.log_mag + k0 + x.ln()).exp();
            w = w.max((s - 1.0).abs());
        }
    }
    out.push(Check::at_most("bessel_wronskian", w, 1e-9));
    let mut e: f64 = 0.0;
    for (x, y, re, im) in ERFC_TABLE {
        let want = c(re, im);
        e = e.max((erfc_complex(c(x, y)) - want).norm() / want.norm().max(1.0));
    }
    out.push(Check::at_most("erfc_reference", e, 1e-12));
    for (name, kind, arg) in [
        ("ratio_i_lemma_nu500", AsymptoticKind::ILemma, 1.3),
        ("ratio_k_lemma_nu500", AsymptoticKind::KLemma, 0.8),
        ("ratio_k_uniform_nu500", AsymptoticKind::KUniform, 350.0),
    ] {
        let r = asymptotic_ratio(kind, 500.0, c(arg, 0.0))?;
        out.push(Check::at_most(name, (r - 1.0).norm(), 1e-3));
    }
    let p = make_params(30, 10.0, 0.5)?;
    let mut rng = SeedSpec::new(seed, 0).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(0..30);
        let x = -5.0 * rng.random::<f64>() - 1e-3;
        let v = ik_sum(k, c(x, 0.0), &p)?.to_complex().re;
        worst = worst.max(-v).max(v - 1.0);
    }
    out.push(Check::at_most("ik_bound_violation", worst.max(0.0), 1e-14));
    Ok(out)
}

fn oracle() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for k in [0usize, 1, 3] {
        for tau in [0.3, 0.5, 0.7] {
            let p = make_params(30, 10.0, tau)?;
            for z in [c(0.5, 0.0), c(-1.0, 0.5), c(0.0, 1.5)] {
                let s = ik_sum(k, z, &p)?.to_complex();
                let q = ik_contour(z, &p, &IkParams::for_point(k, z, &p)?)?.to_complex();
                worst = worst.max(rel(q, s));
            }
        }
    }
    out.push(Check::at_most("ik_sum_vs_contour", worst, 1e-10));
    let p = make_params(20, 4.0, 0.4)?;
    let mut paths: f64 = 0.0;
    for (z, w) in [(c(0.7, 0.1), c(0.6, -0.2)), (c(-0.3, 0.5), c(0.2, 0.2)), (c(0.9, 0.0), c(0.9, 0.0))] {
        let a = kernel_dirac_with(DiracPath::Direct, z, w, &p)?.to_complex();
        let b = kernel_dirac_with(DiracPath::ViaWishart, z, w, &p)?.to_complex();
        paths = paths.max(rel(a, b));
    }
    out.push(Check::at_most("kernel_dirac_paths", paths, 1e-10));
    let p = make_params(50, 50.0, 0.5)?;
    let mut dec: f64 = 0.0;
    for (z, w) in [(c(0.6, 0.2), c(0.4, -0.3)), (c(1.0, 0.0), c(1.0, 0.0)), (c(0.2, -0.9), c(0.8, 0.1))] {
        let a = kernel_via_ik(z, w, &p, 50)?.hermitian(z, w).to_complex();
        let b = rescaled_kernel_wishart(z, w, &p)?.to_complex();
        dec = dec.max(rel(a, b));
    }
    out.push(Check::at_most("kernel_via_ik_full", dec, 1e-8));
    let o = orthogonality_check(&make_params(8, 2.0, 0.5)?, 5)?;
    out.push(Check::at_most("orthogonality_diagonal", o.max_diag_rel, 1e-6));
    out.push(Check::at_most("orthogonality_offdiagonal", o.max_offdiag, 1e-6));
    // Coulomb-gas oracle for the droplet
    let g = droplet_geometry(1.0, 0.5)?;
    let mut rng = SeedSpec::new(2024, 0).rng();
    let start = GasConfig::new(bounding_box_start(64, &g, &mut rng), 1.0, 0.5)?;
    let m = gas_minimize(&start, &MinimizeOptions::default())?;
    out.push(Check { name: "gas_converged".into(), value: m.config.grad_norm(), tolerance: 1e-8, pass: m.status == MinimizeStatus::Converged });
    let cov = coverage_metric(m.config.points(), &g, 1e-12)?;
    out.push(Check::at_most("gas_outside_fraction", 1.0 - cov.inside_fraction, 0.01));
    Ok(out)
}
