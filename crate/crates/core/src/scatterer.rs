//! Fringes produced by a single scatterer in front of the mirror.

use num_complex::Complex64;

use crate::emitter::{g1_resonant, local_saturation};
use crate::error::{MbsError, Result};
use crate::model::{tau_c, DelayModel, Geometry};
use crate::polarization::{
    drive_intensity, overlap_factors, rotated_polarization, waveplate_map, JonesVector,
    FIELD_NULL_THRESHOLD,
};

/// Largest s₀ accepted by the linear-regime path decomposition.
pub const LINEAR_REGIME_MAX_S0: f64 = 1e-3;

/// Intensity of one scatterer normalized to I_a, split as
/// `mean_term · (1 + interference_term)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleAtomResult {
    pub intensity: f64,
    /// s/(1+s)
    pub mean_term: f64,
    /// g̃¹·(ε_l†·L[ε_l])·cos(2kz cosθ)
    pub interference_term: f64,
}

impl SingleAtomResult {
    const UNDRIVEN: SingleAtomResult = SingleAtomResult {
        intensity: 0.0,
        mean_term: 0.0,
        interference_term: 0.0,
    };
}

/// Phase difference between the direct and the mirror path, 2kz·cosθ.
pub fn mirror_phase(z: f64, theta: f64, geometry: &Geometry) -> f64 {
    2.0 * geometry.k * z * theta.cos()
}

/// Steady-state intensity I₁/I_a of a scatterer at `z`, detected at `theta`,
/// for a delay `tau` in units of 1/Γ.
pub fn intensity_single(
    z: f64,
    theta: f64,
    tau: f64,
    gamma_wp: f64,
    geometry: &Geometry,
    s0: f64,
) -> SingleAtomResult {
    let s = local_saturation(z, gamma_wp, geometry, s0);
    if s <= 0.0 {
        return SingleAtomResult::UNDRIVEN;
    }
    let overlap = match overlap_factors(z, gamma_wp, geometry) {
        Ok(f) => f,
        Err(_) => return SingleAtomResult::UNDRIVEN,
    };
    let mean_term = s / (1.0 + s);
    let interference_term =
        g1_resonant(s, tau) * overlap.cross_overlap * mirror_phase(z, theta, geometry).cos();
    SingleAtomResult {
        intensity: mean_term * (1.0 + interference_term),
        mean_term,
        interference_term,
    }
}

/// Same as [`intensity_single`] with the delay taken from the exact
/// position-dependent round trip, τ_c = 2(z cosθ + L)/c, for a linewidth in rad/s.
pub fn intensity_single_retarded(
    z: f64,
    theta: f64,
    gamma_wp: f64,
    geometry: &Geometry,
    s0: f64,
    linewidth: f64,
) -> SingleAtomResult {
    let geometry_at_theta = Geometry { theta, ..*geometry };
    let tau = tau_c(&geometry_at_theta, z, DelayModel::Exact) * linewidth;
    intensity_single(z, theta, tau, gamma_wp, geometry, s0)
}

/// Parallel polarizations (γ = 0): s/(1+s)·[1 + g̃¹ cos(2kz cosθ)] with s = 4s₀cos²(k cosθ₀ z).
pub fn intensity_single_parallel(z: f64, theta: f64, tau: f64, geometry: &Geometry, s0: f64) -> f64 {
    let s = 4.0 * s0 * (geometry.k * geometry.theta0.cos() * z).cos().powi(2);
    s / (1.0 + s) * (1.0 + g1_resonant(s, tau) * mirror_phase(z, theta, geometry).cos())
}

/// Crossed polarizations (γ = π/4): s/(1+s)·[1 + g̃¹ cos(2kz cosθ₀) cos(2kz cosθ)] with s = 2s₀.
pub fn intensity_single_perp(z: f64, theta: f64, tau: f64, geometry: &Geometry, s0: f64) -> f64 {
    let s = 2.0 * s0;
    let grating = geometry.grating_phase(z).cos();
    s / (1.0 + s) * (1.0 + g1_resonant(s, tau) * grating * mirror_phase(z, theta, geometry).cos())
}

/// Peak-to-peak over mean contrast of a single-atom fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleContrast {
    pub value: f64,
    /// The scatterer sits on a node of the intensity grating and does not radiate.
    pub undriven: bool,
}

/// Contrast 2|g̃¹_z(τ)| for parallel polarizations, with s = 4s₀cos²(k cosθ₀ z).
pub fn contrast_single_parallel(z: f64, tau: f64, s0: f64, geometry: &Geometry) -> SingleContrast {
    let drive = drive_intensity(z, 0.0, geometry);
    if drive < FIELD_NULL_THRESHOLD {
        return SingleContrast { value: 0.0, undriven: true };
    }
    let s = s0 * drive;
    SingleContrast {
        value: 2.0 * g1_resonant(s, tau).abs(),
        undriven: false,
    }
}

/// Contrast 2|g̃¹(τ)·cos(2kz cosθ₀)| for crossed polarizations, with s = 2s₀.
pub fn contrast_single_perp(z: f64, tau: f64, s0: f64, geometry: &Geometry) -> f64 {
    2.0 * (g1_resonant(2.0 * s0, tau) * geometry.grating_phase(z).cos()).abs()
}

/// The four scattering paths of the linear regime.
///
/// Drive and emission each reach the scatterer/detector either directly or
/// through the mirror, and every mirror passage crosses the waveplate.
/// Amplitudes are relative to the common direct-direct propagation phase and
/// to one beam of unit field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPaths {
    /// Direct drive, direct emission (no waveplate).
    pub direct_direct: JonesVector,
    /// Reflected drive, direct emission (waveplate once).
    pub reflected_direct: JonesVector,
    /// Direct drive, reflected emission (waveplate once).
    pub direct_reflected: JonesVector,
    /// Reflected drive, reflected emission (waveplate twice).
    pub reflected_reflected: JonesVector,
}

impl FourPaths {
    pub fn as_array(&self) -> [JonesVector; 4] {
        [
            self.direct_direct,
            self.reflected_direct,
            self.direct_reflected,
            self.reflected_reflected,
        ]
    }

    pub fn sum(&self) -> JonesVector {
        self.direct_direct + self.reflected_direct + self.direct_reflected + self.reflected_reflected
    }

    /// Detected intensity in units of I_a for a weakly driven scatterer,
    /// s₀/2·|Σ amplitudes|², valid to first order in s₀.
    pub fn linear_intensity(&self, s0: f64) -> Result<f64> {
        if !(s0.is_finite() && (0.0..=LINEAR_REGIME_MAX_S0).contains(&s0)) {
            return Err(MbsError::domain(format!(
                "path decomposition needs 0 <= s0 <= {LINEAR_REGIME_MAX_S0}, got {s0}"
            )));
        }
        Ok(0.5 * s0 * self.sum().norm_sqr())
    }
}

pub fn four_path_amplitudes(z: f64, theta: f64, gamma_wp: f64, geometry: &Geometry) -> FourPaths {
    let kc0 = geometry.k * geometry.theta0.cos();
    let incoming = JonesVector::X * Complex64::from_polar(1.0, kc0 * z);
    let reflected = rotated_polarization(gamma_wp) * Complex64::from_polar(1.0, -kc0 * z);
    let mirror = Complex64::from_polar(1.0, mirror_phase(z, theta, geometry));
    FourPaths {
        direct_direct: incoming,
        reflected_direct: reflected,
        direct_reflected: waveplate_map(gamma_wp, &incoming) * mirror,
        reflected_reflected: waveplate_map(gamma_wp, &reflected) * mirror,
    }
}
