//! Resonantly driven two-level emitter in steady state.
//!
//! All rates are in units of the natural linewidth Γ. The first-order
//! correlation function is taken in the frame rotating at the laser frequency
//! and normalized by the excited-state population, so it starts at 1 and
//! relaxes to the coherent fraction 1/(1+s).

use std::sync::atomic::{AtomicU8, Ordering};

use crate::error::{MbsError, Result};
use crate::model::Geometry;
use crate::polarization::drive_intensity;

/// Decay rate of the central (unshifted) inelastic component.
const CENTRAL_DECAY: f64 = 0.5;
/// Decay rate of the Mollow sidebands.
const SIDEBAND_DECAY: f64 = 0.75;

/// Fraction of the inelastic weight a frequency grid must capture.
pub const MIN_CAPTURED_WEIGHT: f64 = 0.999;

/// Local saturation s(z) = 2s₀[1 + cos2γ·cos(2k cosθ₀ z)].
pub fn local_saturation(z: f64, gamma_wp: f64, geometry: &Geometry, s0: f64) -> f64 {
    s0 * drive_intensity(z, gamma_wp, geometry)
}

/// Drive strength seen by one scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterDrive {
    pub s: f64,
    /// Ω_l = Γ√(s/2)
    pub omega_l: f64,
    /// Ω_M² = Ω_l² − Γ²/16; negative in the overdamped regime.
    pub omega_m_sq: f64,
}

impl EmitterDrive {
    pub fn new(s: f64) -> Self {
        let omega_l_sq = 0.5 * s;
        EmitterDrive {
            s,
            omega_l: omega_l_sq.sqrt(),
            omega_m_sq: omega_l_sq - 1.0 / 16.0,
        }
    }

    /// |Ω_M|; imaginary in the overdamped regime.
    pub fn omega_m_abs(&self) -> f64 {
        self.omega_m_sq.abs().sqrt()
    }

    pub fn is_underdamped(&self) -> bool {
        self.omega_m_sq > 0.0
    }
}

/// Excited-state population ⟨σ†σ⟩ = s/(2(1+s)).
pub fn steady_population(s: f64) -> f64 {
    s / (2.0 * (1.0 + s))
}

/// Test hook that perturbs the correlation function, used to check that the
/// validation suite detects a wrong model.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Fault {
    None = 0,
    /// Sidebands decay at Γ/2 instead of 3Γ/4.
    SidebandDecay = 1,
}

static FAULT: AtomicU8 = AtomicU8::new(Fault::None as u8);

#[doc(hidden)]
pub fn inject_fault(fault: Fault) {
    FAULT.store(fault as u8, Ordering::SeqCst);
}

#[doc(hidden)]
pub fn active_fault() -> Fault {
    match FAULT.load(Ordering::Relaxed) {
        1 => Fault::SidebandDecay,
        _ => Fault::None,
    }
}

fn sideband_decay() -> f64 {
    match active_fault() {
        Fault::None => SIDEBAND_DECAY,
        Fault::SidebandDecay => CENTRAL_DECAY,
    }
}

/// cos(√x) continued to cosh(√−x) for x < 0.
fn cos_sqrt(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x / 2.0 + x * x / 24.0
    } else if x > 0.0 {
        x.sqrt().cos()
    } else {
        (-x).sqrt().cosh()
    }
}

/// sin(√x)/√x continued to sinh(√−x)/√−x for x < 0.
fn sinc_sqrt(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x / 6.0 + x * x / 120.0
    } else if x > 0.0 {
        let r = x.sqrt();
        r.sin() / r
    } else {
        let r = (-x).sqrt();
        r.sinh() / r
    }
}

/// Normalized first-order correlation g̃¹(τ) of a resonantly driven two-level
/// emitter with saturation `s`, at delay `tau` (units of 1/Γ).
///
/// Real for every s ≥ 0: when Ω_l < Γ/4 the oscillation is continued to its
/// hyperbolic form, and Ω_M = 0 is handled through the series of sin(Ω_M τ)/Ω_M.
pub fn g1_resonant(s: f64, tau: f64) -> f64 {
    let drive = EmitterDrive::new(s);
    let phase_sq = drive.omega_m_sq * tau * tau;
    let sideband = (-sideband_decay() * tau).exp();
    let ratio = (s - 1.0) / (s + 1.0);
    let quadrature = 0.25 * (5.0 * s - 1.0) / (s + 1.0);
    1.0 / (1.0 + s)
        + 0.5
            * ((-CENTRAL_DECAY * tau).exp()
                + ratio * cos_sqrt(phase_sq) * sideband
                + quadrature * tau * sinc_sqrt(phase_sq) * sideband)
}

/// g̃¹ sampled on a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct G1Curve {
    pub tau_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub s: f64,
}

impl G1Curve {
    pub fn compute(s: f64, tau_grid: &[f64]) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(MbsError::domain(format!("saturation must be >= 0, got {s}")));
        }
        if tau_grid.iter().any(|&t| !(t.is_finite() && t >= 0.0)) {
            return Err(MbsError::domain("delays must be finite and >= 0"));
        }
        if tau_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(MbsError::domain("delay grid must be ascending"));
        }
        Ok(G1Curve {
            tau_grid: tau_grid.to_vec(),
            values: tau_grid.iter().map(|&t| g1_resonant(s, t)).collect(),
            s,
        })
    }
}

/// One damped component e^{−rate·τ}·{cos, sin}(freq·τ) of the inelastic part of g̃¹,
/// or τ·e^{−rate·τ} at the critical point Ω_M = 0.
#[derive(Debug, Clone, Copy)]
enum Component {
    Cos { weight: f64, rate: f64, freq: f64 },
    Sin { weight: f64, rate: f64, freq: f64 },
    TauExp { weight: f64, rate: f64 },
}

fn lorentz(rate: f64, x: f64) -> f64 {
    rate / (rate * rate + x * x)
}

impl Component {
    /// Two-sided spectral density (1/2π)∫ c(|τ|) e^{iντ} dτ.
    fn density(&self, nu: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Component::Cos { weight, rate, freq } => {
                weight / (2.0 * PI) * (lorentz(rate, nu - freq) + lorentz(rate, nu + freq))
            }
            Component::Sin { weight, rate, freq } => {
                let (p, m) = (freq + nu, freq - nu);
                weight / (2.0 * PI) * (p / (rate * rate + p * p) + m / (rate * rate + m * m))
            }
            Component::TauExp { weight, rate } => {
                let (r2, n2) = (rate * rate, nu * nu);
                weight / PI * (r2 - n2) / ((r2 + n2) * (r2 + n2))
            }
        }
    }

    /// Antiderivative of `density` in ν.
    fn cumulative(&self, nu: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Component::Cos { weight, rate, freq } => {
                weight / (2.0 * PI) * (((nu - freq) / rate).atan() + ((nu + freq) / rate).atan())
            }
            Component::Sin { weight, rate, freq } => {
                let (p, m) = (freq + nu, freq - nu);
                weight / (4.0 * PI) * ((rate * rate + p * p).ln() - (rate * rate + m * m).ln())
            }
            Component::TauExp { weight, rate } => weight / PI * nu / (rate * rate + nu * nu),
        }
    }
}

fn inelastic_components(s: f64) -> Vec<Component> {
    let drive = EmitterDrive::new(s);
    let ratio = (s - 1.0) / (s + 1.0);
    let quadrature = 0.25 * (5.0 * s - 1.0) / (s + 1.0);
    let sb = sideband_decay();
    let mut out = vec![Component::Cos { weight: 0.5, rate: CENTRAL_DECAY, freq: 0.0 }];
    let om = drive.omega_m_abs();
    if om < 1e-6 {
        out.push(Component::Cos { weight: 0.5 * ratio, rate: sb, freq: 0.0 });
        out.push(Component::TauExp { weight: 0.5 * quadrature, rate: sb });
    } else if drive.is_underdamped() {
        out.push(Component::Cos { weight: 0.5 * ratio, rate: sb, freq: om });
        out.push(Component::Sin { weight: 0.5 * quadrature / om, rate: sb, freq: om });
    } else {
        // cosh and sinh split into two real exponentials; om < 1/4 < sb keeps both decaying.
        let a = 0.25 * ratio;
        let b = 0.25 * quadrature / om;
        out.push(Component::Cos { weight: a + b, rate: sb - om, freq: 0.0 });
        out.push(Component::Cos { weight: a - b, rate: sb + om, freq: 0.0 });
    }
    out
}

/// Inelastic spectral density (per unit ν, in units of Γ) at offset `nu` from the laser.
pub fn mollow_density(s: f64, nu: f64) -> f64 {
    inelastic_components(s).iter().map(|c| c.density(nu)).sum()
}

/// Inelastic weight between two frequency offsets, from the exact antiderivative.
pub fn inelastic_weight_between(s: f64, nu_lo: f64, nu_hi: f64) -> f64 {
    inelastic_components(s)
        .iter()
        .map(|c| c.cumulative(nu_hi) - c.cumulative(nu_lo))
        .sum()
}

/// Total inelastic weight over the whole frequency axis.
pub fn inelastic_weight_total(s: f64) -> f64 {
    // Every antiderivative is odd in ν, so the limit is twice the value far out.
    let far = 1e12;
    inelastic_weight_between(s, -far, far)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub s: f64,
    /// Weight of the elastic delta peak at ν = 0, 1/(1+s).
    pub coherent_weight: f64,
    pub nu_grid: Vec<f64>,
    /// Inelastic density on `nu_grid`; its integral over ℝ is 1 − `coherent_weight`.
    pub density: Vec<f64>,
    /// Inelastic weight inside the grid span.
    pub captured_weight: f64,
}

impl SpectrumResult {
    pub fn total_weight(&self) -> f64 {
        self.coherent_weight + inelastic_weight_total(self.s)
    }

    /// Grid points of local density maxima.
    pub fn local_maxima(&self) -> Vec<f64> {
        self.density
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] && w[1] >= w[2])
            .map(|(i, _)| self.nu_grid[i + 1])
            .collect()
    }
}

/// Mollow spectrum obtained as the analytic Fourier transform of the inelastic
/// part of g̃¹. The elastic peak is reported as a separate weight.
pub fn mollow_spectrum(s: f64, nu_grid: &[f64]) -> Result<SpectrumResult> {
    if !(s.is_finite() && s > 0.0) {
        return Err(MbsError::domain(format!("spectrum needs s > 0, got {s}")));
    }
    if nu_grid.len() < 3 || nu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MbsError::domain("frequency grid must be strictly ascending with >= 3 points"));
    }
    let (lo, hi) = (nu_grid[0], nu_grid[nu_grid.len() - 1]);
    let drive = EmitterDrive::new(s);
    let min_span = drive.omega_m_abs() * f64::from(drive.is_underdamped()) + 10.0;
    if lo > -min_span || hi < min_span {
        return Err(MbsError::domain(format!(
            "frequency grid [{lo}, {hi}] must span at least ±{min_span} (Ω_M + 10Γ)"
        )));
    }
    let total = inelastic_weight_total(s);
    let captured = inelastic_weight_between(s, lo, hi);
    if captured < MIN_CAPTURED_WEIGHT * total {
        return Err(MbsError::domain(format!(
            "frequency grid [{lo}, {hi}] captures only {:.4}% of the inelastic weight",
            100.0 * captured / total
        )));
    }
    let components = inelastic_components(s);
    let density = nu_grid
        .iter()
        .map(|&nu| components.iter().map(|c| c.density(nu)).sum())
        .collect();
    Ok(SpectrumResult {
        s,
        coherent_weight: 1.0 / (1.0 + s),
        nu_grid: nu_grid.to_vec(),
        density,
        captured_weight: captured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn saturation_special_cases() {
        let g = Geometry::reference_setup();
        assert!((local_saturation(0.0, 0.0, &g, 5.0) - 20.0).abs() < 1e-12);
        for z in [-5e-3, -1.234e-4, 0.0, 3e-7] {
            assert!((local_saturation(z, FRAC_PI_4, &g, 5.0) - 10.0).abs() < 1e-12);
        }
        assert!(local_saturation(g.lambda_star() / 4.0, 0.0, &g, 5.0).abs() < 1e-9);
    }

    #[test]
    fn drive_relations() {
        let d = EmitterDrive::new(20.0);
        assert!((d.omega_l - 10f64.sqrt()).abs() < 1e-15);
        assert!((d.omega_l - 3.162).abs() < 5e-4);

        let d = EmitterDrive::new(0.0);
        assert_eq!(d.omega_l, 0.0);
        assert_eq!(d.omega_m_sq, -1.0 / 16.0);

        let d = EmitterDrive::new(10.0);
        assert!((d.omega_l - 2.236_067_977_499_79).abs() < 1e-13);
        assert!((d.omega_m_abs() - 2.222_048_604_328_897).abs() < 1e-13);
        assert!((d.omega_l * d.omega_l - 5.0).abs() < 1e-12);
    }

    #[test]
    fn population_limits() {
        assert_eq!(steady_population(0.0), 0.0);
        assert_eq!(steady_population(1.0), 0.25);
        assert!((steady_population(1e9) - 0.5).abs() < 1e-9);
        let mut last = 0.0;
        for i in 1..200 {
            let p = steady_population(0.1 * i as f64);
            assert!(p > last && p < 0.5);
            last = p;
        }
    }

    // Reference values evaluated with 50-digit arithmetic.
    #[allow(clippy::excessive_precision)]
    const G1_REFERENCE: &[(f64, f64, f64)] = &[
        (2.0, 1.0, 0.831_945_814_901_007_933_73),
        (20.0, 4.0, 0.138_189_909_831_451_207_35),
        (10.0, 6.0, 0.121_007_830_062_806_202_04),
        (10.0, 1.0, 0.371_177_205_931_782_156_68),
        (10.0, 3.0, 0.252_337_915_355_882_710_64),
    ];

    #[test]
    fn g1_matches_high_precision_reference() {
        for &(s, tau, expected) in G1_REFERENCE {
            assert!((g1_resonant(s, tau) - expected).abs() < 1e-14, "s={s} tau={tau}");
        }
    }

    #[test]
    fn g1_limits() {
        for s in [0.0, 0.01, 0.125, 1.0, 2.0, 10.0, 100.0] {
            assert!((g1_resonant(s, 0.0) - 1.0).abs() < 1e-12);
            assert!((g1_resonant(s, 60.0) - 1.0 / (1.0 + s)).abs() < 1e-12);
        }
    }

    #[test]
    fn g1_continuous_at_critical_drive() {
        for tau in [0.5, 2.0, 8.0] {
            let below = g1_resonant(0.125 - 1e-9, tau);
            let at = g1_resonant(0.125, tau);
            let above = g1_resonant(0.125 + 1e-9, tau);
            assert!((below - above).abs() <= 1e-6);
            assert!((below - at).abs() <= 1e-6);
        }
    }

    #[test]
    fn g1_weak_drive_is_elastic() {
        let s = 1e-6;
        for i in 0..400 {
            let tau = 0.05 * i as f64;
            assert!((g1_resonant(s, tau) - 1.0).abs() <= 2.0 * s);
        }
    }

    #[test]
    fn g1_pseudo_period() {
        // Successive maxima of g̃¹ at s = 20 sit one beat period apart.
        let s = 20.0;
        let step = 1e-4;
        let vals: Vec<f64> = (0..100_000).map(|i| g1_resonant(s, step * i as f64)).collect();
        let extrema: Vec<f64> = (1..vals.len() - 1)
            .filter(|&i| (vals[i] - vals[i - 1]) * (vals[i + 1] - vals[i]) < 0.0)
            .map(|i| step * i as f64)
            .take(3)
            .collect();
        let period = 2.0 * std::f64::consts::PI / EmitterDrive::new(s).omega_m_abs();
        let gap = extrema[2] - extrema[0];
        assert!(((gap - period) / period).abs() < 0.05, "gap {gap} vs {period}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn g1_is_bounded(s in 0.0..100.0f64, tau in 0.0..20.0f64) {
            prop_assert!(g1_resonant(s, tau).abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn curve_validates_grid() {
        let c = G1Curve::compute(10.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.values[0], 1.0);
        assert!(G1Curve::compute(10.0, &[1.0, 0.5]).is_err());
        assert!(G1Curve::compute(-1.0, &[0.0]).is_err());
        assert!(G1Curve::compute(1.0, &[-0.1]).is_err());
    }

    fn wide_grid(step: f64, half: f64) -> Vec<f64> {
        let n = (half / step).round() as i64;
        (-n..=n).map(|i| step * i as f64).collect()
    }

    #[test]
    fn spectrum_weights() {
        for s in [0.05, 0.125, 0.5, 2.0, 10.0, 50.0] {
            let total = 1.0 / (1.0 + s) + inelastic_weight_total(s);
            assert!((total - 1.0).abs() < 1e-9, "s={s}");
        }
        let spec = mollow_spectrum(10.0, &wide_grid(0.02, 600.0)).unwrap();
        assert_eq!(spec.coherent_weight, 1.0 / 11.0);
        assert!((spec.total_weight() - 1.0).abs() < 1e-6);
        assert!(spec.captured_weight / inelastic_weight_total(10.0) >= MIN_CAPTURED_WEIGHT);
    }

    #[test]
    fn spectrum_is_symmetric_and_positive() {
        for s in [0.05, 0.125, 1.0, 10.0, 40.0] {
            let spec = mollow_spectrum(s, &wide_grid(0.05, 1000.0)).unwrap();
            for (i, &d) in spec.density.iter().enumerate() {
                assert!(d >= 0.0, "s={s} nu={}", spec.nu_grid[i]);
                assert!((d - mollow_density(s, -spec.nu_grid[i])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_rejects_narrow_grids() {
        assert!(matches!(mollow_spectrum(10.0, &wide_grid(0.02, 5.0)), Err(MbsError::Domain(_))));
        // The inelastic density falls off as ν⁻⁴, so ±20Γ already captures the weight.
        let spec = mollow_spectrum(10.0, &wide_grid(0.02, 20.0)).unwrap();
        assert!(spec.captured_weight / inelastic_weight_total(10.0) > 0.9999);
        assert!(mollow_spectrum(0.0, &wide_grid(0.02, 600.0)).is_err());
    }

    #[test]
    fn density_integrates_to_antiderivative() {
        // Midpoint quadrature over a finite band against the closed antiderivative.
        for s in [0.1, 0.125, 3.0, 10.0] {
            let (lo, hi, n) = (-30.0, 30.0, 300_000);
            let h = (hi - lo) / n as f64;
            let sum: f64 = (0..n).map(|i| mollow_density(s, lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((sum - inelastic_weight_between(s, lo, hi)).abs() < 1e-7, "s={s}");
        }
    }
}
