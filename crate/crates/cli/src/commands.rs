//! Sweeps behind the `g1`, `spectrum`, `single`, `cloud` and `contrast` subcommands.

use mbs_core::analysis::{contrast_curve_with, ContrastConvention, CurveOptions};
use mbs_core::cloud::{
    cloud_intensity_montecarlo, cloud_intensity_perp_closed, fringe_pattern, CloudQuadrature, Method,
};
use mbs_core::emitter::{g1_resonant, local_saturation, mollow_spectrum, EmitterDrive};
use mbs_core::polarization::overlap_factors;
use mbs_core::scatterer::intensity_single;
use mbs_core::MbsError;
use rayon::prelude::*;

use crate::config::{Command, MethodName, Resolved, SweepVariable};
use crate::output::Table;
use crate::CliError;

pub fn run(command: Command, r: &Resolved) -> Result<Table, CliError> {
    match command {
        Command::G1 => g1(r),
        Command::Spectrum => spectrum(r),
        Command::Single => single(r),
        Command::Cloud => cloud(r),
        Command::Contrast => contrast(r),
    }
}

/// Attaches the sweep point to a library error.
fn at_point(variable: SweepVariable, value: f64) -> impl Fn(MbsError) -> CliError {
    move |e| CliError::from_core(e, &format!("sweep point {variable:?} = {value}"))
}

fn g1(r: &Resolved) -> Result<Table, CliError> {
    let s = local_saturation(r.z_fixed, r.gamma_wp, &r.geometry, r.config.drive.s0);
    let rows = r.grid.iter().map(|&tau| vec![tau, s, g1_resonant(s, tau)]).collect();
    Ok(Table::new(&["tau_gamma", "saturation", "g1"], rows))
}

fn spectrum(r: &Resolved) -> Result<Table, CliError> {
    let s = local_saturation(r.z_fixed, r.gamma_wp, &r.geometry, r.config.drive.s0);
    let spec = mollow_spectrum(s, &r.grid).map_err(|e| CliError::from_core(e, "spectrum grid"))?;
    let mut table = Table::new(
        &["nu_gamma", "inelastic_density"],
        spec.nu_grid.iter().zip(&spec.density).map(|(&nu, &d)| vec![nu, d]).collect(),
    );
    let drive = EmitterDrive::new(s);
    table.notes = vec![
        format!("saturation s = {s}"),
        format!("Omega_M = {} ({})", drive.omega_m_abs(), if drive.is_underdamped() { "underdamped" } else { "overdamped" }),
        format!("coherent weight = {}", spec.coherent_weight),
        format!("captured inelastic weight = {}", spec.captured_weight),
    ];
    Ok(table)
}

fn single(r: &Resolved) -> Result<Table, CliError> {
    let s0 = r.config.drive.s0;
    let (g, gamma) = (&r.geometry, r.gamma_wp);
    // Signed single-atom contrast g̃¹_z(τ)·(ε_l†·L[ε_l]); zero for an undriven scatterer.
    let contrast = |z: f64, tau: f64| -> (f64, f64) {
        let s = local_saturation(z, gamma, g, s0);
        match overlap_factors(z, gamma, g) {
            Ok(f) if s > 0.0 => (s, g1_resonant(s, tau) * f.cross_overlap),
            _ => (s, 0.0),
        }
    };
    match r.variable {
        SweepVariable::Tau => {
            let z = r.z_fixed;
            let rows = r
                .grid
                .iter()
                .map(|&tau| {
                    let (s, c) = contrast(z, tau);
                    vec![tau, z, s, g1_resonant(s, tau), c, 2.0 * c]
                })
                .collect();
            Ok(Table::new(&["tau_gamma", "z_m", "saturation", "g1", "contrast_michelson", "contrast_p2p"], rows))
        }
        SweepVariable::Z => {
            let tau = r.config.fixed.tau_gamma;
            let rows = r
                .grid
                .iter()
                .map(|&z| {
                    let (s, c) = contrast(z, tau);
                    vec![z, tau, s, c, 2.0 * c]
                })
                .collect();
            Ok(Table::new(&["z_m", "tau_gamma", "saturation", "contrast_michelson", "contrast_p2p"], rows))
        }
        SweepVariable::Theta => {
            let (z, tau) = (r.z_fixed, r.config.fixed.tau_gamma);
            let rows = r
                .grid
                .iter()
                .map(|&theta| vec![theta, intensity_single(z, theta, tau, gamma, g, s0).intensity])
                .collect();
            Ok(Table::new(&["theta_rad", "intensity_norm"], rows))
        }
        other => Err(CliError::Config(format!("sweep.variable: `{other:?}` cannot be swept by `single`"))),
    }
}

fn cloud_method(r: &Resolved) -> Method {
    match r.method {
        MethodName::Montecarlo => Method::MonteCarlo { n_samples: r.config.samples, seed: r.config.seed },
        MethodName::ClosedPerp => Method::ClosedPerp,
        _ => Method::Quadrature { tol: r.config.tol },
    }
}

/// Cloud intensity and its uncertainty at one (θ, τ, γ).
fn cloud_point(r: &Resolved, theta: f64, tau: f64, gamma: f64) -> Result<(f64, f64), MbsError> {
    let (g, c, s0) = (&r.geometry, &r.cloud, r.config.drive.s0);
    match cloud_method(r) {
        Method::Quadrature { tol } => {
            CloudQuadrature::new(tau, gamma, g, c, s0)?.intensity(theta, tol).map(|q| (q.value, q.est_error))
        }
        Method::MonteCarlo { n_samples, seed } => {
            cloud_intensity_montecarlo(theta, tau, gamma, g, c, s0, n_samples, seed).map(|m| (m.value, m.std_error))
        }
        Method::ClosedPerp => {
            if (2.0 * gamma).cos().abs() > 1e-12 {
                return Err(MbsError::Domain(format!("closed form needs gamma_wp = 45 deg, got {}", gamma.to_degrees())));
            }
            cloud_intensity_perp_closed(theta, tau, g, c, s0).map(|v| (v, 0.0))
        }
    }
}

fn cloud(r: &Resolved) -> Result<Table, CliError> {
    let (tau, gamma, theta) = (r.config.fixed.tau_gamma, r.gamma_wp, r.theta_fixed);
    match r.variable {
        SweepVariable::Theta => {
            let p = fringe_pattern(&r.grid, tau, gamma, &r.geometry, &r.cloud, r.config.drive.s0, &cloud_method(r))
                .map_err(|e| CliError::from_core(e, "theta sweep"))?;
            let rows = (0..p.theta_grid.len())
                .map(|i| vec![p.theta_grid[i], tau, gamma, p.intensity[i], p.uncertainty[i]])
                .collect();
            Ok(Table::new(&["theta_rad", "tau_gamma", "gamma_rad", "intensity_norm", "uncertainty"], rows))
        }
        SweepVariable::Tau | SweepVariable::Gamma => {
            let points: Vec<Result<Vec<f64>, CliError>> = r
                .grid
                .par_iter()
                .map(|&x| {
                    let (tau, gamma) = if r.variable == SweepVariable::Tau { (x, gamma) } else { (tau, x) };
                    let (value, err) = cloud_point(r, theta, tau, gamma).map_err(at_point(r.variable, x))?;
                    Ok(vec![theta, tau, gamma, value, err])
                })
                .collect();
            let rows = points.into_iter().collect::<Result<_, _>>()?;
            Ok(Table::new(&["theta_rad", "tau_gamma", "gamma_rad", "intensity_norm", "uncertainty"], rows))
        }
        other => Err(CliError::Config(format!("sweep.variable: `{other:?}` cannot be swept by `cloud`"))),
    }
}

fn contrast(r: &Resolved) -> Result<Table, CliError> {
    let options = CurveOptions { method: Some(cloud_method(r)), ..CurveOptions::default() };
    let (g, c, s0) = (&r.geometry, &r.cloud, r.config.drive.s0);
    let michelson = ContrastConvention::Michelson;
    let (taus, gammas): (Vec<f64>, Vec<f64>) = match r.variable {
        SweepVariable::Tau => (r.grid.clone(), vec![r.gamma_wp; r.grid.len()]),
        SweepVariable::Gamma => (vec![r.config.fixed.tau_gamma; r.grid.len()], r.grid.clone()),
        other => return Err(CliError::Config(format!("sweep.variable: `{other:?}` cannot be swept by `contrast`"))),
    };
    let results = if r.variable == SweepVariable::Tau {
        contrast_curve_with(&taus, r.gamma_wp, g, c, s0, michelson, &options)
            .map_err(|e| CliError::from_core(e, "tau grid"))?
    } else {
        gammas
            .par_iter()
            .zip(&taus)
            .map(|(&gamma, &tau)| {
                contrast_curve_with(&[tau], gamma, g, c, s0, michelson, &options)
                    .and_then(|mut v| v.pop().expect("one delay gives one result"))
            })
            .collect()
    };
    let mut rows = Vec::with_capacity(results.len());
    for (i, result) in results.into_iter().enumerate() {
        let x = r.grid[i];
        let fit = result.map_err(at_point(r.variable, x))?;
        let tau = taus[i];
        rows.push(vec![tau, gammas[i], fit.contrast, 2.0 * fit.contrast, g1_resonant(2.0 * s0, tau), fit.fit_residual_rms]);
    }
    Ok(Table::new(
        &["tau_gamma", "gamma_rad", "contrast_michelson", "contrast_p2p", "g1", "fit_residual_rms"],
        rows,
    ))
}
