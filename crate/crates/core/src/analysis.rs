//! Contrast, envelope width and fringe period from angular fringe patterns.
//!
//! Patterns are fitted with I(x) = a[1 + c·e^{−2w²x²}·cos(p·x + φ₀)], where x is
//! the angular offset from the mirror direction θ₀. The fit keeps c signed: an
//! inverted fringe comes out as c < 0 with φ₀ near zero, not as c > 0 with φ₀ ≈ π.

use std::f64::consts::{FRAC_PI_2, PI};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{Dyn, Matrix5, OMatrix, OVector, Vector5, U5};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cloud::{centered_theta_grid, fringe_pattern, FringePattern, Method};
use crate::error::{MbsError, Result};
use crate::model::{CloudSpec, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastConvention {
    /// (I_max − I_min)/mean at the fringe center, in [−2, 2].
    PeakToPeakOverMean,
    /// (I_max − I_min)/(I_max + I_min) at the fringe center, in [−1, 1].
    Michelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub contrast: f64,
    pub convention: ContrastConvention,
    pub fit_residual_rms: f64,
    pub converged: bool,
}

impl ContrastResult {
    /// The same fit expressed in the other convention.
    pub fn to_convention(&self, convention: ContrastConvention) -> ContrastResult {
        let michelson = match self.convention {
            ContrastConvention::Michelson => self.contrast,
            ContrastConvention::PeakToPeakOverMean => 0.5 * self.contrast,
        };
        let contrast = match convention {
            ContrastConvention::Michelson => michelson,
            ContrastConvention::PeakToPeakOverMean => 2.0 * michelson,
        };
        ContrastResult { contrast, convention, ..*self }
    }
}

/// Variable the fringe model is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// x = θ − θ₀.
    Linear,
    /// x = (cosθ₀ − cosθ)/θ₀, which equals θ − θ₀ to first order and makes
    /// the cloud fringes exactly periodic (no chirp away from θ₀).
    #[default]
    MirrorPhase,
}

impl Abscissa {
    pub fn coordinate(self, theta: f64, theta0: f64) -> f64 {
        match self {
            Abscissa::Linear => theta - theta0,
            Abscissa::MirrorPhase => (theta0.cos() - theta.cos()) / theta0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub abscissa: Abscissa,
    /// Bound on the number of Levenberg–Marquardt starts.
    pub max_starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { abscissa: Abscissa::MirrorPhase, max_starts: 9 }
    }
}

/// Fitted parameters of the fringe model, with one-sigma uncertainties from
/// the Gauss–Newton covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub contrast: f64,
    /// w, in 1/rad.
    pub width: f64,
    /// p, in 1/rad.
    pub frequency: f64,
    /// φ₀ in (−π/2, π/2].
    pub phase: f64,
    /// σ of (a, c, w, p, φ₀); zero for an exactly flat pattern.
    pub sigma: [f64; 5],
    pub residual_rms: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// rms half-width of the envelope, 1/(2w).
    pub s_theta: f64,
    /// Fringe period 2π/p.
    pub period: f64,
    pub center: f64,
    pub phase: f64,
    pub s_theta_sigma: f64,
    pub period_sigma: f64,
    /// 1/(2θ₀k·s_z)
    pub predicted_s_theta: f64,
    /// π/(θ₀k·h)
    pub predicted_period: f64,
}

/// Fit problem on normalized data: y = I/mean, x scaled to order one.
struct FringeProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    params: Vector5<f64>,
}

impl FringeProblem<'_> {
    fn terms(&self, x: f64) -> (f64, f64, f64) {
        let (w, p, phi) = (self.params[2], self.params[3], self.params[4]);
        let envelope = (-2.0 * w * w * x * x).exp();
        let (sin, cos) = (p * x + phi).sin_cos();
        (envelope, cos, sin)
    }

    fn model(&self, x: f64) -> f64 {
        let (a, c) = (self.params[0], self.params[1]);
        let (env, cos, _) = self.terms(x);
        a * (1.0 + c * env * cos)
    }
}

impl LeastSquaresProblem<f64, Dyn, U5> for FringeProblem<'_> {
    type ResidualStorage = nalgebra::VecStorage<f64, Dyn, nalgebra::U1>;
    type JacobianStorage = nalgebra::VecStorage<f64, Dyn, U5>;
    type ParameterStorage = nalgebra::ArrayStorage<f64, 5, 1>;

    fn set_params(&mut self, p: &Vector5<f64>) {
        self.params = *p;
    }

    fn params(&self) -> Vector5<f64> {
        self.params
    }

    fn residuals(&self) -> Option<OVector<f64, Dyn>> {
        let r = OVector::<f64, Dyn>::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| self.model(x) - y),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U5>> {
        let (a, c, w) = (self.params[0], self.params[1], self.params[2]);
        let mut jac = OMatrix::<f64, Dyn, U5>::zeros(self.x.len());
        for (i, &x) in self.x.iter().enumerate() {
            let (env, cos, sin) = self.terms(x);
            jac[(i, 0)] = 1.0 + c * env * cos;
            jac[(i, 1)] = a * env * cos;
            jac[(i, 2)] = -4.0 * a * c * w * x * x * env * cos;
            jac[(i, 3)] = -a * c * env * sin * x;
            jac[(i, 4)] = -a * c * env * sin;
        }
        Some(jac)
    }
}

/// Maps (c, p, φ₀) to the canonical representative with p > 0 and φ₀ ∈ (−π/2, π/2].
fn canonical(mut c: f64, mut p: f64, mut phi: f64) -> (f64, f64, f64) {
    if p < 0.0 {
        p = -p;
        phi = -phi;
    }
    phi = phi.rem_euclid(2.0 * PI);
    if phi > PI {
        phi -= 2.0 * PI;
    }
    if phi > FRAC_PI_2 {
        phi -= PI;
        c = -c;
    } else if phi <= -FRAC_PI_2 {
        phi += PI;
        c = -c;
    }
    (c, p, phi)
}

/// Angular frequency of the strongest spectral line of `y` sampled at `x`.
fn fft_peak_frequency(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    let padded = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..padded / 2].iter().map(|z| z.norm_sqr()).collect();
    // Skip the lowest bins, which carry the residual envelope pedestal.
    let skip = (2 * padded / n).max(1);
    let (peak, _) = power
        .iter()
        .enumerate()
        .skip(skip)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak + 1 >= power.len() {
        return None;
    }
    let (l, m, r) = (power[peak - 1], power[peak], power[peak + 1]);
    let denom = l - 2.0 * m + r;
    let shift = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    Some(2.0 * PI * (peak as f64 + shift) / (padded as f64 * dx))
}

/// Linear sub-fit of y − 1 = E(x)[α cos(px) + β sin(px)] at fixed (w, p).
fn linear_subfit(x: &[f64], y: &[f64], w: f64, p: f64) -> (f64, f64) {
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let env = (-2.0 * w * w * xi * xi).exp();
        let (c, s) = ((p * xi).cos() * env, (p * xi).sin() * env);
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += (yi - 1.0) * c;
        sys += (yi - 1.0) * s;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-300 {
        return (0.0, 0.0);
    }
    let alpha = (syc * sss - sys * scs) / det;
    let beta = (sys * scc - syc * scs) / det;
    // α = c·cosφ₀, β = −c·sinφ₀
    (alpha.hypot(beta), (-beta).atan2(alpha))
}

fn check_pattern(pattern: &FringePattern) -> Result<()> {
    let g = &pattern.meta.geometry;
    let grid = &pattern.theta_grid;
    let span = grid[grid.len() - 1] - grid[0];
    let period = g.fringe_period();
    let s_theta = g.envelope_rms(&pattern.meta.cloud);
    if span < 3.0 * period * (1.0 - 1e-9) {
        return Err(MbsError::domain(format!(
            "pattern spans {:.2} fringe periods, need >= 3",
            span / period
        )));
    }
    if span < 2.0 * s_theta * (1.0 - 1e-9) {
        return Err(MbsError::domain(format!(
            "pattern spans {:.2} envelope widths, need >= 2",
            span / s_theta
        )));
    }
    if pattern.intensity.iter().any(|v| !v.is_finite()) {
        return Err(MbsError::domain("pattern contains non-finite intensities"));
    }
    Ok(())
}

/// Least-squares fit of the fringe model to `pattern`.
///
/// Starts from the pattern mean, the FFT peak and the analytic envelope width,
/// with (c, φ₀) from a linear sub-fit, then restarts from a small grid of
/// (w, p) around those values and keeps the best converged fit.
pub fn fit_fringes(pattern: &FringePattern, options: &FitOptions) -> Result<FringeFit> {
    check_pattern(pattern)?;
    let g = &pattern.meta.geometry;
    let mean = pattern.mean_intensity();
    if !(mean > 0.0) {
        return Err(MbsError::Fit("pattern mean intensity must be positive".into()));
    }
    let x_raw: Vec<f64> = pattern
        .theta_grid
        .iter()
        .map(|&t| options.abscissa.coordinate(t, g.theta0))
        .collect();
    let scale = x_raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let x: Vec<f64> = x_raw.iter().map(|v| v / scale).collect();
    let y: Vec<f64> = pattern.intensity.iter().map(|v| v / mean).collect();
    let n = x.len() as f64;

    let spread = (y.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / n).sqrt();
    if spread < 1e-12 {
        return Ok(FringeFit {
            amplitude: mean,
            contrast: 0.0,
            width: 0.0,
            frequency: 0.0,
            phase: 0.0,
            sigma: [0.0; 5],
            residual_rms: spread * mean,
            converged: true,
        });
    }

    let w_analytic = g.theta0 * g.k * pattern.meta.cloud.s_z * scale;
    let p_analytic = 2.0 * PI / g.fringe_period() * scale;
    let centered: Vec<f64> = y.iter().map(|v| v - 1.0).collect();
    let p_fft = fft_peak_frequency(&x, &centered).unwrap_or(p_analytic);

    let mut starts = Vec::new();
    for p in [p_fft, p_analytic] {
        for w_factor in [1.0, 0.6, 1.6, 0.3] {
            starts.push((w_analytic * w_factor, p));
        }
    }
    starts.push((0.0, p_fft));

    let solver = LevenbergMarquardt::new().with_patience(400);
    let mut best: Option<(f64, Vector5<f64>, bool)> = None;
    for &(w0, p0) in starts.iter().take(options.max_starts.max(1)) {
        let (c0, phi0) = linear_subfit(&x, &y, w0, p0);
        let problem = FringeProblem { x: &x, y: &y, params: Vector5::new(1.0, c0, w0, p0, phi0) };
        let (problem, report) = solver.minimize(problem);
        let params = problem.params;
        if !params.iter().all(|v| v.is_finite()) {
            continue;
        }
        let ok = report.termination.was_successful();
        let objective = report.objective_function;
        let better = match &best {
            None => true,
            Some((b, _, b_ok)) => (ok && !b_ok) || (ok == *b_ok && objective < *b),
        };
        if better {
            best = Some((objective, params, ok));
        }
        // A fit at the noise floor of f64 cannot be improved by restarts.
        if ok && (2.0 * objective / n).sqrt() < 1e-12 {
            break;
        }
    }
    let (_, params, converged) =
        best.ok_or_else(|| MbsError::Fit("no start produced a finite fit".into()))?;
    if !converged {
        return Err(MbsError::Fit(format!(
            "Levenberg–Marquardt did not converge after {} starts",
            options.max_starts
        )));
    }

    let problem = FringeProblem { x: &x, y: &y, params };
    let residuals = problem.residuals().expect("finite parameters give finite residuals");
    let rss = residuals.norm_squared();
    let residual_rms = (rss / n).sqrt() * mean;
    let sigma_norm = covariance_sigmas(&problem, rss);

    let (a, w) = (params[0], params[2].abs());
    let (c, p, phi) = canonical(params[1], params[3], params[4]);
    Ok(FringeFit {
        amplitude: a * mean,
        contrast: c,
        width: w / scale,
        frequency: p / scale,
        phase: phi,
        sigma: [
            sigma_norm[0] * mean,
            sigma_norm[1],
            sigma_norm[2] / scale,
            sigma_norm[3] / scale,
            sigma_norm[4],
        ],
        residual_rms,
        converged,
    })
}

/// Standard deviations from σ²(JᵀJ)⁻¹ with σ² = RSS/(m − 5).
fn covariance_sigmas(problem: &FringeProblem<'_>, rss: f64) -> [f64; 5] {
    let dof = problem.x.len().saturating_sub(5).max(1) as f64;
    let Some(jac) = problem.jacobian() else {
        return [f64::NAN; 5];
    };
    let jtj: Matrix5<f64> = jac.transpose() * &jac;
    match jtj.try_inverse() {
        Some(inv) => std::array::from_fn(|i| (rss / dof * inv[(i, i)]).max(0.0).sqrt()),
        None => [f64::NAN; 5],
    }
}

/// Signed fringe contrast at the pattern center under `convention`.
pub fn extract_contrast(pattern: &FringePattern, convention: ContrastConvention) -> Result<ContrastResult> {
    extract_contrast_with(pattern, convention, &FitOptions::default())
}

pub fn extract_contrast_with(
    pattern: &FringePattern,
    convention: ContrastConvention,
    options: &FitOptions,
) -> Result<ContrastResult> {
    let fit = fit_fringes(pattern, options)?;
    let michelson = ContrastResult {
        contrast: fit.contrast,
        convention: ContrastConvention::Michelson,
        fit_residual_rms: fit.residual_rms,
        converged: fit.converged,
    };
    Ok(michelson.to_convention(convention))
}

/// Envelope rms width and fringe period, next to their analytic predictions.
pub fn fit_envelope_period(pattern: &FringePattern) -> Result<EnvelopeFit> {
    fit_envelope_period_with(pattern, &FitOptions::default())
}

pub fn fit_envelope_period_with(pattern: &FringePattern, options: &FitOptions) -> Result<EnvelopeFit> {
    let fit = fit_fringes(pattern, options)?;
    if !(fit.width > 0.0 && fit.frequency > 0.0) {
        return Err(MbsError::Fit("pattern carries no fringes to measure".into()));
    }
    let g = &pattern.meta.geometry;
    Ok(EnvelopeFit {
        s_theta: 0.5 / fit.width,
        period: 2.0 * PI / fit.frequency,
        center: g.theta0,
        phase: fit.phase,
        s_theta_sigma: 0.5 * fit.sigma[2] / (fit.width * fit.width),
        period_sigma: 2.0 * PI * fit.sigma[3] / (fit.frequency * fit.frequency),
        predicted_s_theta: g.envelope_rms(&pattern.meta.cloud),
        predicted_period: g.fringe_period(),
    })
}

/// Angular window and sampling used to synthesize patterns for contrast curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    /// Half-width of the θ window, in units of s_θ.
    pub half_width: f64,
    pub points_per_period: f64,
    /// Backend; `None` picks the closed form for crossed polarizations and quadrature otherwise.
    pub method: Option<Method>,
    pub fit: FitOptions,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { half_width: 4.0, points_per_period: 16.0, method: None, fit: FitOptions::default() }
    }
}

/// Fitted contrast versus delay. Each τ is synthesized and fitted independently;
/// a failed fit is reported in its slot without stopping the sweep.
pub fn contrast_curve(
    tau_grid: &[f64],
    gamma_wp: f64,
    geometry: &Geometry,
    cloud: &CloudSpec,
    s0: f64,
    convention: ContrastConvention,
) -> Result<Vec<Result<ContrastResult>>> {
    contrast_curve_with(tau_grid, gamma_wp, geometry, cloud, s0, convention, &CurveOptions::default())
}

pub fn contrast_curve_with(
    tau_grid: &[f64],
    gamma_wp: f64,
    geometry: &Geometry,
    cloud: &CloudSpec,
    s0: f64,
    convention: ContrastConvention,
    options: &CurveOptions,
) -> Result<Vec<Result<ContrastResult>>> {
    if tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(MbsError::domain("tau grid values must be finite and >= 0"));
    }
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MbsError::domain("tau grid must be strictly ascending"));
    }
    let method = options.method.unwrap_or(if (2.0 * gamma_wp).cos().abs() < 1e-12 {
        Method::ClosedPerp
    } else {
        Method::Quadrature { tol: 1e-9 }
    });
    let grid = centered_theta_grid(geometry, cloud, options.half_width, options.points_per_period);
    Ok(tau_grid
        .par_iter()
        .map(|&tau| {
            let pattern = fringe_pattern(&grid, tau, gamma_wp, geometry, cloud, s0, &method)?;
            extract_contrast_with(&pattern, convention, &options.fit)
        })
        .collect())
}
