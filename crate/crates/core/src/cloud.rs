//! Fringes of an extended Gaussian cloud, as the incoherent sum of single-atom
//! intensities weighted by the longitudinal density profile.
//!
//! Every scatterer shares the delay τ_c = 2L/c, so the integrand factorizes
//! into a Gaussian times functions that are exactly periodic in the grating
//! phase u = 2k cosθ₀ z (saturation, g̃¹ and the polarization overlap), times
//! the slowly varying beat between the mirror phase 2kz cosθ and u. The
//! quadrature exploits this: the periodic content is averaged over one grating
//! period and the slow envelope is integrated with composite Gauss–Legendre.
//! Monte Carlo sampling of the cloud and the closed form for crossed
//! polarizations give two independent checks.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::g1_resonant;
use crate::error::{MbsError, Result};
use crate::model::{CloudSpec, Geometry};
use crate::polarization::{cross_overlap_from_phase, FIELD_NULL_THRESHOLD};
use crate::quadrature::CompositeRule;
use crate::scatterer::intensity_single;

/// Half-width of the integration window in units of s_z.
pub const WINDOW_SIGMAS: f64 = 6.0;
/// Fewest inner points per grating period.
pub const MIN_INNER_POINTS: usize = 64;
/// Gauss–Legendre order of each outer panel.
const PANEL_ORDER: usize = 8;
/// Fewest grid points per fringe period accepted by [`fringe_pattern`].
pub const MIN_POINTS_PER_PERIOD: f64 = 12.0;
/// Largest |θ − θ₀| where the crossed-polarization closed form is trusted.
pub const CLOSED_FORM_MAX_OFFSET: f64 = 0.05;
/// Fewest Monte Carlo samples accepted.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Samples per independent random stream.
const MC_CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    /// I/(N·I_a)
    pub value: f64,
    /// |difference| against the evaluation at doubled resolution.
    pub est_error: f64,
    pub n_outer: usize,
    pub n_inner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    /// I/(N·I_a)
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Grating-period averages of the fast factors.
#[derive(Debug, Clone, Copy)]
struct PeriodAverages {
    /// ⟨s/(1+s)⟩
    mean: f64,
    /// ⟨s/(1+s)·g̃¹·X·cos u⟩
    fringe_cos: f64,
    /// ⟨s/(1+s)·g̃¹·X·sin u⟩
    fringe_sin: f64,
}

fn period_averages(tau: f64, gamma_wp: f64, s0: f64, n_inner: usize) -> PeriodAverages {
    let c2 = (2.0 * gamma_wp).cos();
    let (mut mean, mut fc, mut fs) = (0.0, 0.0, 0.0);
    for m in 0..n_inner {
        // Midpoint nodes never land on the field node u = π.
        let u = 2.0 * PI * (m as f64 + 0.5) / n_inner as f64;
        let drive = 2.0 * (1.0 + c2 * u.cos());
        if drive < FIELD_NULL_THRESHOLD {
            continue;
        }
        let s = s0 * drive;
        let weight = s / (1.0 + s);
        let overlap = match cross_overlap_from_phase(u, gamma_wp) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let fringe = weight * g1_resonant(s, tau) * overlap;
        mean += weight;
        fc += fringe * u.cos();
        fs += fringe * u.sin();
    }
    let n = n_inner as f64;
    PeriodAverages { mean: mean / n, fringe_cos: fc / n, fringe_sin: fs / n }
}

/// Reusable two-scale integrator for a fixed (τ, γ, s₀) and cloud.
#[derive(Debug, Clone)]
pub struct CloudQuadrature {
    geometry: Geometry,
    cloud: CloudSpec,
    /// Averages at n_inner, 2·n_inner and 4·n_inner.
    levels: [PeriodAverages; 3],
    n_inner: usize,
}

impl CloudQuadrature {
    pub fn new(tau: f64, gamma_wp: f64, geometry: &Geometry, cloud: &CloudSpec, s0: f64) -> Result<Self> {
        check_drive(tau, s0)?;
        let n_inner = MIN_INNER_POINTS;
        let levels = [
            period_averages(tau, gamma_wp, s0, n_inner),
            period_averages(tau, gamma_wp, s0, 2 * n_inner),
            period_averages(tau, gamma_wp, s0, 4 * n_inner),
        ];
        Ok(CloudQuadrature { geometry: *geometry, cloud: *cloud, levels, n_inner })
    }

    /// Number of panels resolving both the Gaussian and the beat at `theta`.
    fn base_panels(&self, beat: f64) -> usize {
        let window = 2.0 * WINDOW_SIGMAS * self.cloud.s_z;
        let by_gaussian = 2.0 * WINDOW_SIGMAS * 2.0;
        // At most one radian of beat phase per panel.
        let by_beat = window * beat.abs();
        by_gaussian.max(by_beat).ceil() as usize
    }

    fn evaluate(&self, theta: f64, panels: usize, level: usize) -> f64 {
        let g = &self.geometry;
        let (center, sz) = (-g.h, self.cloud.s_z);
        let beat = 2.0 * g.k * (theta.cos() - g.theta0.cos());
        let rule = CompositeRule::new(center - WINDOW_SIGMAS * sz, center + WINDOW_SIGMAS * sz, panels, PANEL_ORDER);
        let avg = self.levels[level];
        let norm = 1.0 / ((2.0 * PI).sqrt() * sz);
        rule.integrate(|z| {
            let d = (z - center) / sz;
            let density = norm * (-0.5 * d * d).exp();
            let (sin_b, cos_b) = (beat * z).sin_cos();
            density * (avg.mean + avg.fringe_cos * cos_b - avg.fringe_sin * sin_b)
        })
    }

    /// I/(N·I_a) at detection angle `theta`, refined until two consecutive
    /// resolutions agree within `tol` (at most two doublings).
    pub fn intensity(&self, theta: f64, tol: f64) -> Result<QuadratureReport> {
        check_tol(tol)?;
        let beat = 2.0 * self.geometry.k * (theta.cos() - self.geometry.theta0.cos());
        let panels = self.base_panels(beat);
        let mut previous = self.evaluate(theta, panels, 0);
        let mut est_error = f64::INFINITY;
        for doubling in 1..=2 {
            let value = self.evaluate(theta, panels << doubling, doubling);
            est_error = (value - previous).abs();
            if est_error <= tol * value.abs().max(1.0) {
                return Ok(QuadratureReport {
                    value,
                    est_error,
                    n_outer: (panels << doubling) * PANEL_ORDER,
                    n_inner: self.n_inner << doubling,
                });
            }
            previous = value;
        }
        Err(MbsError::Convergence {
            est_error,
            tol,
            context: format!("theta = {theta}"),
        })
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-10..=1e-2).contains(&tol) {
        return Err(MbsError::domain(format!("tol must lie in [1e-10, 1e-2], got {tol}")));
    }
    Ok(())
}

fn check_drive(tau: f64, s0: f64) -> Result<()> {
    if !(s0.is_finite() && s0 >= 0.0) {
        return Err(MbsError::domain(format!("s0 must be >= 0, got {s0}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(MbsError::domain(format!("tau must be >= 0, got {tau}")));
    }
    Ok(())
}

/// Cloud intensity I/(N·I_a) by two-scale quadrature.
pub fn cloud_intensity_quadrature(
    theta: f64,
    tau: f64,
    gamma_wp: f64,
    geometry: &Geometry,
    cloud: &CloudSpec,
    s0: f64,
    tol: f64,
) -> Result<QuadratureReport> {
    CloudQuadrature::new(tau, gamma_wp, geometry, cloud, s0)?.intensity(theta, tol)
}

/// Cloud intensity I/(N·I_a) by sampling scatterer positions.
///
/// Samples are split into fixed chunks, each drawn from its own ChaCha stream
/// keyed by (seed, chunk index), and chunk statistics are merged in chunk order,
/// so the result does not depend on the number of threads. Transverse
/// coordinates are drawn to keep the streams three-dimensional but do not
/// enter the intensity.
#[allow(clippy::too_many_arguments)]
pub fn cloud_intensity_montecarlo(
    theta: f64,
    tau: f64,
    gamma_wp: f64,
    geometry: &Geometry,
    cloud: &CloudSpec,
    s0: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_drive(tau, s0)?;
    if n_samples < MIN_MC_SAMPLES {
        return Err(MbsError::domain(format!("n_samples must be >= {MIN_MC_SAMPLES}, got {n_samples}")));
    }
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let chunks: Vec<ChunkStats> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
            let mut stats = ChunkStats::default();
            for _ in 0..len {
                let _x = cloud.s_r * Distribution::<f64>::sample(&StandardNormal, &mut rng);
                let _y = cloud.s_r * Distribution::<f64>::sample(&StandardNormal, &mut rng);
                let dz: f64 = StandardNormal.sample(&mut rng);
                let z = -geometry.h + cloud.s_z * dz;
                stats.push(intensity_single(z, theta, tau, gamma_wp, geometry, s0).intensity);
            }
            stats
        })
        .collect();
    let total = chunks.into_iter().fold(ChunkStats::default(), ChunkStats::merge);
    let variance = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { 0.0 };
    Ok(MonteCarloEstimate {
        value: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        n_samples,
    })
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl ChunkStats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: ChunkStats, b: ChunkStats) -> ChunkStats {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        ChunkStats {
            n,
            mean: a.mean + delta * b.n as f64 / n as f64,
            m2: a.m2 + b.m2 + delta * delta * (a.n as f64 * b.n as f64) / n as f64,
        }
    }
}

/// Which terms of the Gaussian average of cos(2kz cosθ₀)·cos(2kz cosθ) to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendixTerms {
    /// Both the sum- and the difference-frequency terms, exact.
    Full,
    /// Only the difference-frequency term with cosθ − cosθ₀ ≈ θ₀(θ − θ₀).
    RetainedSmallAngle,
}

/// Closed-form Gaussian average of cos(2kz cosθ₀)·cos(2kz cosθ) over the cloud.
pub fn appendix_integral_closed(theta: f64, geometry: &Geometry, cloud: &CloudSpec, terms: AppendixTerms) -> f64 {
    let (k, h, sz) = (geometry.k, geometry.h, cloud.s_z);
    let term = |q: f64| 0.5 * (-2.0 * k * k * sz * sz * q * q).exp() * (2.0 * k * h * q).cos();
    match terms {
        AppendixTerms::Full => {
            let (c, c0) = (theta.cos(), geometry.theta0.cos());
            term(c + c0) + term(c - c0)
        }
        AppendixTerms::RetainedSmallAngle => term(geometry.theta0 * (theta - geometry.theta0)),
    }
}

fn check_closed_form_offset(theta: f64, geometry: &Geometry) -> Result<()> {
    let offset = (theta - geometry.theta0).abs();
    if !(offset <= CLOSED_FORM_MAX_OFFSET) {
        return Err(MbsError::domain(format!(
            "|theta - theta0| = {offset} exceeds {CLOSED_FORM_MAX_OFFSET} rad"
        )));
    }
    Ok(())
}

/// Closed-form cloud intensity for crossed polarizations (γ = π/4):
/// s/(1+s)·[1 + g̃¹(τ)·⟨cos(2kz cosθ₀)·cos(2kz cosθ)⟩] with s = 2s₀.
///
/// The Gaussian average peaks at 1/2 at θ = θ₀, so the fringe there has a
/// peak-to-peak over mean contrast of g̃¹(τ).
pub fn cloud_intensity_perp_closed(theta: f64, tau: f64, geometry: &Geometry, cloud: &CloudSpec, s0: f64) -> Result<f64> {
    perp_closed(theta, tau, geometry, cloud, s0, AppendixTerms::Full)
}

/// As [`cloud_intensity_perp_closed`], keeping only the small-angle difference term.
pub fn cloud_intensity_perp_small_angle(theta: f64, tau: f64, geometry: &Geometry, cloud: &CloudSpec, s0: f64) -> Result<f64> {
    perp_closed(theta, tau, geometry, cloud, s0, AppendixTerms::RetainedSmallAngle)
}

fn perp_closed(theta: f64, tau: f64, geometry: &Geometry, cloud: &CloudSpec, s0: f64, terms: AppendixTerms) -> Result<f64> {
    check_drive(tau, s0)?;
    check_closed_form_offset(theta, geometry)?;
    let s = 2.0 * s0;
    let mean = s / (1.0 + s);
    Ok(mean * (1.0 + g1_resonant(s, tau) * appendix_integral_closed(theta, geometry, cloud, terms)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Quadrature { tol: f64 },
    MonteCarlo { n_samples: usize, seed: u64 },
    ClosedPerp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMeta {
    pub tau: f64,
    pub gamma_wp: f64,
    pub s0: f64,
    pub geometry: Geometry,
    pub cloud: CloudSpec,
}

/// Normalized cloud intensity I/(N·I_a) on an angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern {
    pub theta_grid: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Per-point error estimate (quadrature) or standard error (Monte Carlo); zero for closed forms.
    pub uncertainty: Vec<f64>,
    pub meta: PatternMeta,
}

impl FringePattern {
    pub fn new(theta_grid: Vec<f64>, intensity: Vec<f64>, meta: PatternMeta) -> Result<Self> {
        if theta_grid.len() < 2 || theta_grid.len() != intensity.len() {
            return Err(MbsError::domain("pattern needs >= 2 points and matching lengths"));
        }
        if intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(MbsError::domain("pattern intensities must be finite and >= 0"));
        }
        let n = theta_grid.len();
        Ok(FringePattern { theta_grid, intensity, uncertainty: vec![0.0; n], meta })
    }

    pub fn mean_intensity(&self) -> f64 {
        self.intensity.iter().sum::<f64>() / self.intensity.len() as f64
    }
}

/// Evenly spaced grid over θ₀ ± `half_width` (in units of s_θ) with
/// `points_per_period` points per fringe period Θ.
pub fn centered_theta_grid(geometry: &Geometry, cloud: &CloudSpec, half_width: f64, points_per_period: f64) -> Vec<f64> {
    let span = 2.0 * half_width * geometry.envelope_rms(cloud);
    let step = geometry.fringe_period() / points_per_period;
    let n = (span / step).ceil() as usize + 1;
    let start = geometry.theta0 - 0.5 * (n - 1) as f64 * step;
    (0..n).map(|i| start + step * i as f64).collect()
}

fn check_grid(theta_grid: &[f64], geometry: &Geometry) -> Result<()> {
    if theta_grid.len() < 2 {
        return Err(MbsError::domain("theta grid needs at least 2 points"));
    }
    if theta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MbsError::domain("theta grid must be strictly ascending"));
    }
    let max_step = theta_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let per_period = geometry.fringe_period() / max_step;
    // Slack for grids built with exactly 12 points per period.
    if per_period < MIN_POINTS_PER_PERIOD * (1.0 - 1e-9) {
        return Err(MbsError::domain(format!(
            "theta grid resolves the fringe period with {per_period:.2} points, need >= {MIN_POINTS_PER_PERIOD}"
        )));
    }
    Ok(())
}

fn is_crossed(gamma_wp: f64) -> bool {
    (2.0 * gamma_wp).cos().abs() < 1e-12
}

/// Sweeps the detection angle with the selected backend.
pub fn fringe_pattern(
    theta_grid: &[f64],
    tau: f64,
    gamma_wp: f64,
    geometry: &Geometry,
    cloud: &CloudSpec,
    s0: f64,
    method: &Method,
) -> Result<FringePattern> {
    check_grid(theta_grid, geometry)?;
    check_drive(tau, s0)?;
    let points: Vec<(f64, f64)> = match *method {
        Method::Quadrature { tol } => {
            check_tol(tol)?;
            let quad = CloudQuadrature::new(tau, gamma_wp, geometry, cloud, s0)?;
            theta_grid
                .par_iter()
                .map(|&theta| quad.intensity(theta, tol).map(|r| (r.value, r.est_error)))
                .collect::<Result<_>>()?
        }
        Method::MonteCarlo { n_samples, seed } => theta_grid
            .iter()
            .map(|&theta| {
                cloud_intensity_montecarlo(theta, tau, gamma_wp, geometry, cloud, s0, n_samples, seed)
                    .map(|r| (r.value, r.std_error))
            })
            .collect::<Result<_>>()?,
        Method::ClosedPerp => {
            if !is_crossed(gamma_wp) {
                return Err(MbsError::domain(format!(
                    "closed form needs crossed polarizations (gamma_wp = pi/4), got {gamma_wp}"
                )));
            }
            theta_grid
                .iter()
                .map(|&theta| cloud_intensity_perp_closed(theta, tau, geometry, cloud, s0).map(|v| (v, 0.0)))
                .collect::<Result<_>>()?
        }
    };
    let meta = PatternMeta { tau, gamma_wp, s0, geometry: *geometry, cloud: *cloud };
    let (intensity, uncertainty): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let mut pattern = FringePattern::new(theta_grid.to_vec(), intensity, meta)?;
    pattern.uncertainty = uncertainty;
    Ok(pattern)
}

/// Waveplate angle giving crossed polarizations.
pub const CROSSED: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Geometry, CloudSpec) {
        (Geometry::reference_setup(), CloudSpec::new(100_000, 5e-4, 5e-4).unwrap())
    }

    #[test]
    fn crossed_quadrature_matches_closed_form() {
        let (g, c) = setup();
        let s_theta = g.envelope_rms(&c);
        let quad = CloudQuadrature::new(1.3, CROSSED, &g, &c, 5.0).unwrap();
        for i in 0..=80 {
            let theta = g.theta0 + s_theta * (-4.0 + 0.1 * i as f64);
            let q = quad.intensity(theta, 1e-9).unwrap();
            let closed = cloud_intensity_perp_closed(theta, 1.3, &g, &c, 5.0).unwrap();
            assert!(((q.value - closed) / closed).abs() < 1e-6, "theta offset {}", theta - g.theta0);
        }
    }

    #[test]
    fn far_off_fringe_is_mean_term() {
        let (g, c) = setup();
        let theta = g.theta0 + 20.0 * g.envelope_rms(&c);
        let q = cloud_intensity_quadrature(theta, 0.0, CROSSED, &g, &c, 5.0, 1e-8).unwrap();
        assert!((q.value - 10.0 / 11.0).abs() < 1e-8);
    }

    #[test]
    fn crossed_center_values() {
        let (g, c) = setup();
        let center = cloud_intensity_perp_closed(g.theta0, 0.0, &g, &c, 5.0).unwrap();
        assert!((center - 15.0 / 11.0).abs() < 1e-12);
        let quarter = g.theta0 + std::f64::consts::PI / (4.0 * g.k * g.h * g.theta0);
        let v = cloud_intensity_perp_small_angle(quarter, 0.0, &g, &c, 5.0).unwrap();
        assert!((v - 10.0 / 11.0).abs() < 1e-12);
        assert!(cloud_intensity_perp_closed(g.theta0 + 0.06, 0.0, &g, &c, 5.0).is_err());
    }

    #[test]
    fn appendix_terms() {
        let (g, c) = setup();
        assert!((appendix_integral_closed(g.theta0, &g, &c, AppendixTerms::Full) - 0.5).abs() < 1e-15);
        assert_eq!(appendix_integral_closed(g.theta0, &g, &c, AppendixTerms::RetainedSmallAngle), 0.5);
        // The sum-frequency term underflows for k·s_z ≫ 1.
        let k = g.k;
        let sum_bound = (-2.0 * k * k * c.s_z * c.s_z * (2.0 * g.theta0.cos()).powi(2)).exp();
        assert_eq!(sum_bound, 0.0);
    }

    #[test]
    fn weak_drive_shape_is_gaussian_times_cosine() {
        // For s0 → 0 and γ = 0 the pattern is a[1 + C·env·cos] with the small-angle envelope.
        let (g, c) = setup();
        let s0 = 1e-8;
        let quad = CloudQuadrature::new(0.0, 0.0, &g, &c, s0).unwrap();
        let center = quad.intensity(g.theta0, 1e-9).unwrap().value;
        let mean = 2.0 * s0;
        let contrast = center / mean - 1.0;
        assert!((contrast - 0.5).abs() < 1e-6);
        let s_theta = g.envelope_rms(&c);
        for i in 0..=20 {
            let dtheta = s_theta * (-1.0 + 0.1 * i as f64);
            let theta = g.theta0 + dtheta;
            let v = quad.intensity(theta, 1e-9).unwrap().value;
            let (ci, c0) = (theta.cos(), g.theta0.cos());
            let q = 2.0 * g.k * (ci - c0);
            let shape = mean * (1.0 + contrast * (-0.5 * (q * c.s_z).powi(2)).exp() * (q * g.h).cos());
            assert!(((v - shape) / shape).abs() < 1e-6);
            let small = mean
                * (1.0
                    + contrast
                        * (-2.0 * (g.theta0 * g.k * c.s_z).powi(2) * dtheta * dtheta).exp()
                        * (2.0 * g.k * g.h * g.theta0 * dtheta).cos());
            // The small-angle form drifts by the fringe chirp only.
            assert!(((v - small) / small).abs() < 0.1);
        }
    }

    #[test]
    fn montecarlo_is_deterministic_and_unbiased() {
        let (g, c) = setup();
        let a = cloud_intensity_montecarlo(g.theta0, 0.5, 0.3, &g, &c, 5.0, 50_000, 11).unwrap();
        let b = cloud_intensity_montecarlo(g.theta0, 0.5, 0.3, &g, &c, 5.0, 50_000, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| cloud_intensity_montecarlo(g.theta0, 0.5, 0.3, &g, &c, 5.0, 50_000, 11).unwrap());
        assert_eq!(a.value.to_bits(), single.value.to_bits());
        let q = cloud_intensity_quadrature(g.theta0, 0.5, 0.3, &g, &c, 5.0, 1e-9).unwrap();
        assert!((a.value - q.value).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn montecarlo_undriven_and_guards() {
        let (g, c) = setup();
        let r = cloud_intensity_montecarlo(g.theta0, 0.0, 0.0, &g, &c, 0.0, 10_000, 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(cloud_intensity_montecarlo(g.theta0, 0.0, 0.0, &g, &c, 1.0, 9_999, 1).is_err());
    }

    #[test]
    fn quadrature_guards() {
        let (g, c) = setup();
        assert!(cloud_intensity_quadrature(g.theta0, 0.0, 0.0, &g, &c, 5.0, 1e-12).is_err());
        assert!(cloud_intensity_quadrature(g.theta0, 0.0, 0.0, &g, &c, 5.0, 0.1).is_err());
        assert!(cloud_intensity_quadrature(g.theta0, -1.0, 0.0, &g, &c, 5.0, 1e-6).is_err());
    }

    #[test]
    fn grid_resolution_guard() {
        let (g, c) = setup();
        let coarse = centered_theta_grid(&g, &c, 4.0, 8.0);
        let err = fringe_pattern(&coarse, 0.0, CROSSED, &g, &c, 5.0, &Method::ClosedPerp).unwrap_err();
        assert!(matches!(err, MbsError::Domain(_)));
        let fine = centered_theta_grid(&g, &c, 4.0, 12.0);
        assert!(fringe_pattern(&fine, 0.0, CROSSED, &g, &c, 5.0, &Method::ClosedPerp).is_ok());
        assert!(fringe_pattern(&fine, 0.0, 0.0, &g, &c, 5.0, &Method::ClosedPerp).is_err());
    }

    #[test]
    fn crossed_pattern_backends_agree() {
        let (g, c) = setup();
        let grid = centered_theta_grid(&g, &c, 4.0, 16.0);
        let quad = fringe_pattern(&grid, 0.8, CROSSED, &g, &c, 5.0, &Method::Quadrature { tol: 1e-9 }).unwrap();
        let closed = fringe_pattern(&grid, 0.8, CROSSED, &g, &c, 5.0, &Method::ClosedPerp).unwrap();
        let mean = closed.mean_intensity();
        for (a, b) in quad.intensity.iter().zip(&closed.intensity) {
            assert!((a - b).abs() <= 1e-6 * mean);
        }
    }
}
