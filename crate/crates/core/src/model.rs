//! Shared data model: interferometer geometry, cloud shape and drive settings.
//!
//! Time and frequency are in reduced units with the natural linewidth Γ = 1,
//! so delays are expressed in 1/Γ and Rabi frequencies in Γ. Lengths stay
//! dimensional (meters) and always enter the optics through products with
//! the wavenumber `k`.

use serde::{Deserialize, Serialize};

use crate::error::{MbsError, Result};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Upper bound of the small-angle regime for the incidence and detection angles.
pub const SMALL_ANGLE_LIMIT: f64 = 0.2;

/// Mirror/cloud/detector geometry.
///
/// `phi` is carried for completeness but never read: under the small-angle
/// approximation every observable depends on the polar angle alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Incidence angle on the mirror, rad.
    pub theta0: f64,
    /// Nominal detection polar angle, rad.
    pub theta: f64,
    /// Detection azimuth, rad (unused).
    pub phi: f64,
    /// Wavenumber 2π/λ, rad/m.
    pub k: f64,
    /// Distance from the cloud center to the virtual mirror, m.
    pub h: f64,
    /// Path length between the virtual and the real mirror, m.
    pub path_length: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
}

impl Geometry {
    pub fn new(
        theta0: f64,
        theta: f64,
        phi: f64,
        k: f64,
        h: f64,
        path_length: f64,
        c_light: f64,
    ) -> Result<Self> {
        check_angle("theta0", theta0)?;
        check_angle("theta", theta)?;
        if !phi.is_finite() {
            return Err(MbsError::domain("phi must be finite"));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(MbsError::domain(format!("k must be > 0, got {k}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(MbsError::domain(format!("h must be > 0, got {h}")));
        }
        if !(path_length.is_finite() && path_length >= 0.0) {
            return Err(MbsError::domain(format!("L must be >= 0, got {path_length}")));
        }
        if !(c_light.is_finite() && c_light > 0.0) {
            return Err(MbsError::domain(format!("c_light must be > 0, got {c_light}")));
        }
        Ok(Geometry { theta0, theta, phi, k, h, path_length, c_light })
    }

    /// Builds a geometry from laboratory units, detecting at `theta = theta0`.
    pub fn from_lab_units(theta0_deg: f64, lambda_nm: f64, h_mm: f64, path_length_m: f64) -> Result<Self> {
        if !(lambda_nm.is_finite() && lambda_nm > 0.0) {
            return Err(MbsError::domain(format!("lambda must be > 0, got {lambda_nm} nm")));
        }
        let theta0 = theta0_deg.to_radians();
        let k = 2.0 * std::f64::consts::PI / (lambda_nm * 1e-9);
        Geometry::new(theta0, theta0, 0.0, k, h_mm * 1e-3, path_length_m, C_LIGHT)
    }

    /// θ₀ = 4.3°, λ = 780 nm, h = 5 mm, L = 0.5 m.
    pub fn reference_setup() -> Self {
        Geometry::from_lab_units(4.3, 780.0, 5.0, 0.5).expect("reference geometry is valid")
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_angle("theta", theta)?;
        self.theta = theta;
        Ok(self)
    }

    pub fn with_h(self, h: f64) -> Result<Self> {
        Geometry::new(self.theta0, self.theta, self.phi, self.k, h, self.path_length, self.c_light)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }

    /// Effective wavelength along the mirror normal, λ* = λ / cos θ₀.
    pub fn lambda_star(&self) -> f64 {
        self.wavelength() / self.theta0.cos()
    }

    /// Spatial period of the intensity/polarization grating, λ*/2.
    pub fn grating_period(&self) -> f64 {
        0.5 * self.lambda_star()
    }

    /// Grating phase 2k·cosθ₀·z.
    pub fn grating_phase(&self, z: f64) -> f64 {
        2.0 * self.k * self.theta0.cos() * z
    }

    /// Angular period of the cloud fringes, Θ = π/(θ₀ k h).
    pub fn fringe_period(&self) -> f64 {
        std::f64::consts::PI / (self.theta0 * self.k * self.h)
    }

    /// Angular rms half-width of the cloud fringe envelope, s_θ = 1/(2 θ₀ k s_z).
    pub fn envelope_rms(&self, cloud: &CloudSpec) -> f64 {
        1.0 / (2.0 * self.theta0 * self.k * cloud.s_z)
    }
}

fn check_angle(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0 && value < SMALL_ANGLE_LIMIT) {
        return Err(MbsError::domain(format!(
            "{name} = {value} rad outside the small-angle range (0, {SMALL_ANGLE_LIMIT})"
        )));
    }
    Ok(())
}

/// How the mirror round-trip delay depends on the scatterer position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayModel {
    /// τ_c = 2(z·cosθ + L)/c.
    Exact,
    /// τ_c = 2L/c for every scatterer, valid when s_z ≪ L.
    Cloud,
}

/// Round-trip delay between the direct and the mirror-reflected emission, in seconds.
pub fn tau_c(geometry: &Geometry, z: f64, model: DelayModel) -> f64 {
    let optical = match model {
        DelayModel::Exact => z * geometry.theta.cos() + geometry.path_length,
        DelayModel::Cloud => geometry.path_length,
    };
    2.0 * optical / geometry.c_light
}

/// Converts a delay in seconds to reduced units given the linewidth Γ in rad/s.
pub fn delay_in_linewidths(tau_seconds: f64, linewidth: f64) -> f64 {
    tau_seconds * linewidth
}

/// Gaussian atomic cloud centered at z = −h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub n_atoms: u64,
    /// Transverse rms size, m.
    pub s_r: f64,
    /// Longitudinal rms size, m.
    pub s_z: f64,
}

/// Conditions under which the incoherent-sum cloud model loses validity.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidityWarning {
    /// k·s_z too small for interferences between atoms to average out.
    ShortCloud { k_s_z: f64 },
    /// Peak density is not small compared to k³.
    DenseCloud { peak_density_k3: f64 },
    /// On-axis resonant optical depth is not small.
    OpticallyThick { optical_depth: f64 },
}

impl CloudSpec {
    pub const MIN_K_S_Z: f64 = 100.0;
    pub const MAX_DENSITY_K3: f64 = 0.01;
    pub const MAX_OPTICAL_DEPTH: f64 = 0.1;

    pub fn new(n_atoms: u64, s_r: f64, s_z: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(MbsError::domain("n_atoms must be positive"));
        }
        if !(s_r.is_finite() && s_r > 0.0) {
            return Err(MbsError::domain(format!("s_r must be > 0, got {s_r}")));
        }
        if !(s_z.is_finite() && s_z > 0.0) {
            return Err(MbsError::domain(format!("s_z must be > 0, got {s_z}")));
        }
        Ok(CloudSpec { n_atoms, s_r, s_z })
    }

    /// Peak density in units of k³.
    pub fn peak_density_k3(&self, geometry: &Geometry) -> f64 {
        let peak = self.n_atoms as f64
            / ((2.0 * std::f64::consts::PI).powf(1.5) * self.s_z * self.s_r * self.s_r);
        peak / geometry.k.powi(3)
    }

    /// Resonant optical depth through the cloud center along z, with the
    /// two-level cross-section 6π/k².
    pub fn optical_depth(&self, geometry: &Geometry) -> f64 {
        let sigma0 = 6.0 * std::f64::consts::PI / (geometry.k * geometry.k);
        let column = self.n_atoms as f64 / (2.0 * std::f64::consts::PI * self.s_r * self.s_r);
        sigma0 * column
    }

    pub fn validity_warnings(&self, geometry: &Geometry) -> Vec<ValidityWarning> {
        let mut warnings = Vec::new();
        let k_s_z = geometry.k * self.s_z;
        if k_s_z <= Self::MIN_K_S_Z {
            warnings.push(ValidityWarning::ShortCloud { k_s_z });
        }
        let peak_density_k3 = self.peak_density_k3(geometry);
        if peak_density_k3 > Self::MAX_DENSITY_K3 {
            warnings.push(ValidityWarning::DenseCloud { peak_density_k3 });
        }
        let optical_depth = self.optical_depth(geometry);
        if optical_depth > Self::MAX_OPTICAL_DEPTH {
            warnings.push(ValidityWarning::OpticallyThick { optical_depth });
        }
        warnings
    }
}

/// Drive settings shared by all scatterers. The drive is always resonant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Single-beam saturation parameter s₀ = 2(dE₀/ħΓ)².
    pub s0: f64,
    /// Angle of the waveplate proper axis with the incident polarization, rad.
    pub gamma_wp: f64,
    /// Natural linewidth; 1 in reduced units.
    pub linewidth: f64,
}

impl DriveSpec {
    pub fn new(s0: f64, gamma_wp: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 >= 0.0) {
            return Err(MbsError::domain(format!("s0 must be >= 0, got {s0}")));
        }
        if !gamma_wp.is_finite() {
            return Err(MbsError::domain("gamma_wp must be finite"));
        }
        Ok(DriveSpec { s0, gamma_wp, linewidth: 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    proptest::proptest! {
        #[test]
        fn construction_is_total_on_the_domain(
            theta0 in 1e-6..0.2f64,
            theta in 1e-6..0.2f64,
            k in 1.0..1e9f64,
            h in 1e-9..1.0f64,
            path_length in 0.0..10.0f64,
            bad in proptest::sample::select(vec![f64::NAN, f64::INFINITY, -1.0, 0.0]),
            which in 0usize..4,
        ) {
            let ok = Geometry::new(theta0, theta, 0.0, k, h, path_length, C_LIGHT);
            proptest::prop_assert!(ok.is_ok());
            let mut args = [theta0, k, h, path_length];
            // L = 0 is allowed, every other zero is not.
            if !(which == 3 && bad == 0.0) {
                args[which] = bad;
                let err = Geometry::new(args[0], theta, 0.0, args[1], args[2], args[3], C_LIGHT);
                proptest::prop_assert!(matches!(err, Err(MbsError::Domain(_))));
            }
        }
    }

    fn lab() -> Geometry {
        Geometry::new(0.075, 0.075, 0.0, 8.0553e6, 5e-3, 0.5, C_LIGHT).unwrap()
    }

    #[test]
    fn accepts_in_range_geometry() {
        let g = lab();
        assert_eq!(g.theta0, 0.075);
        assert_eq!(g.k, 8.0553e6);
    }

    #[test]
    fn rejects_out_of_range_angles() {
        for theta0 in [0.0, -0.01, 0.2, 0.3, f64::NAN] {
            let err = Geometry::new(theta0, 0.075, 0.0, 8.0553e6, 5e-3, 0.5, C_LIGHT).unwrap_err();
            assert!(matches!(err, MbsError::Domain(ref m) if m.contains("theta0")), "{theta0}: {err}");
        }
        assert!(Geometry::new(0.075, 0.25, 0.0, 8.0553e6, 5e-3, 0.5, C_LIGHT).is_err());
        assert!(Geometry::new(0.075, 0.075, 0.0, 0.0, 5e-3, 0.5, C_LIGHT).is_err());
        assert!(Geometry::new(0.075, 0.075, 0.0, 8e6, 0.0, 0.5, C_LIGHT).is_err());
        assert!(Geometry::new(0.075, 0.075, 0.0, 8e6, 5e-3, -1.0, C_LIGHT).is_err());
    }

    #[test]
    fn tau_c_at_mirror_plane() {
        let tau = tau_c(&lab(), 0.0, DelayModel::Exact);
        assert!((tau - 2.0 * 0.5 / C_LIGHT).abs() < 1e-24);
        assert!((tau * 1e9 - 3.3356).abs() < 1e-4);
    }

    #[test]
    fn cloud_delay_ignores_position() {
        let g = lab();
        let near = tau_c(&g, -g.h, DelayModel::Cloud);
        let far = tau_c(&g.with_h(0.2).unwrap(), -0.2, DelayModel::Cloud);
        assert_eq!(near, 2.0 * g.path_length / g.c_light);
        assert_eq!(near, far);
    }

    #[test]
    fn tau_c_without_relay_path() {
        let g = Geometry::new(0.075, 0.075, 0.0, 8.0553e6, 5e-3, 0.0, C_LIGHT).unwrap();
        // cos(0.075) = 0.99718881811220...
        let expected = 2.0 * 1e-3 * 0.997_188_818_112_207_5 / C_LIGHT;
        let got = tau_c(&g, 1e-3, DelayModel::Exact);
        assert!(((got - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn tau_c_is_affine_in_z() {
        let g = lab();
        let slope = 2.0 * g.theta.cos() / g.c_light;
        let h = 1e-4;
        for i in 0..20 {
            let z = -0.01 + 1e-3 * i as f64;
            let fd = (tau_c(&g, z + h, DelayModel::Exact) - tau_c(&g, z - h, DelayModel::Exact)) / (2.0 * h);
            assert!(((fd - slope) / slope).abs() < 1e-8);
        }
        assert!((tau_c(&g, 0.0, DelayModel::Exact) - 2.0 * g.path_length / g.c_light).abs() < 1e-24);
    }

    #[test]
    fn reference_setup_scales() {
        let g = Geometry::reference_setup();
        assert!((g.theta0 - 0.075_049_157_835_756_2).abs() < 1e-15);
        let cloud = CloudSpec::new(1, 5e-4, 5e-4).unwrap();
        let s_theta = g.envelope_rms(&cloud);
        assert!((s_theta - 1.0 / (2.0 * g.theta0 * g.k * 5e-4)).abs() < 1e-18);
        assert!((g.grating_period() - 0.5 * 780e-9 / g.theta0.cos()).abs() < 1e-18);
    }

    #[test]
    fn cloud_validity_flags() {
        let g = Geometry::reference_setup();
        let dilute = CloudSpec::new(1_000, 5e-4, 5e-4).unwrap();
        assert!(dilute.validity_warnings(&g).is_empty());
        let short = CloudSpec::new(1_000, 5e-4, 1e-6).unwrap();
        assert!(short.validity_warnings(&g).iter().any(|w| matches!(w, ValidityWarning::ShortCloud { .. })));
        let thick = CloudSpec::new(1_000_000_000, 5e-4, 5e-4).unwrap();
        assert!(thick.validity_warnings(&g).iter().any(|w| matches!(w, ValidityWarning::OpticallyThick { .. })));
        assert!(CloudSpec::new(0, 1e-3, 1e-3).is_err());
        assert!(CloudSpec::new(10, -1e-3, 1e-3).is_err());
    }

    #[test]
    fn drive_rejects_negative_saturation() {
        assert!(DriveSpec::new(-1.0, 0.0).is_err());
        assert_eq!(DriveSpec::new(5.0, 0.3).unwrap().linewidth, 1.0);
    }
}
