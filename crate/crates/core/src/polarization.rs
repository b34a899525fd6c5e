//! Jones calculus for the transverse laser field.
//!
//! Under the small-angle approximation the field has no component along the
//! mirror normal, so a polarization is a complex 2-vector on (ε_x, ε_y).
//! The waveplate sits on the path between the scatterers and the mirror and is
//! therefore crossed once by the reflected drive and once by every scattered
//! photon that reaches the detector through the mirror.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{MbsError, Result};
use crate::model::Geometry;

/// Below this value of 2[1 + cos2γ·cos(2k cosθ₀ z)] the drive is treated as an exact null.
pub const FIELD_NULL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub ex: Complex64,
    pub ey: Complex64,
}

impl JonesVector {
    pub const X: JonesVector = JonesVector {
        ex: Complex64::new(1.0, 0.0),
        ey: Complex64::new(0.0, 0.0),
    };
    pub const Y: JonesVector = JonesVector {
        ex: Complex64::new(0.0, 0.0),
        ey: Complex64::new(1.0, 0.0),
    };

    pub fn new(ex: Complex64, ey: Complex64) -> Self {
        JonesVector { ex, ey }
    }

    pub fn real(ex: f64, ey: f64) -> Self {
        JonesVector::new(Complex64::new(ex, 0.0), Complex64::new(ey, 0.0))
    }

    /// Hermitian product `self† · other`.
    pub fn dot(&self, other: &JonesVector) -> Complex64 {
        self.ex.conj() * other.ex + self.ey.conj() * other.ey
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        JonesVector::new(self.ex * factor, self.ey * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.ex.is_finite() && self.ey.is_finite()
    }
}

impl Add for JonesVector {
    type Output = JonesVector;

    fn add(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(self.ex + rhs.ex, self.ey + rhs.ey)
    }
}

impl Mul<Complex64> for JonesVector {
    type Output = JonesVector;

    fn mul(self, rhs: Complex64) -> JonesVector {
        self.scale(rhs)
    }
}

/// Polarization after the half waveplate, ε₁ = cos2γ ε_x + sin2γ ε_y.
pub fn rotated_polarization(gamma_wp: f64) -> JonesVector {
    let (s, c) = (2.0 * gamma_wp).sin_cos();
    JonesVector::real(c, s)
}

/// Half-waveplate with proper axis at angle `gamma_wp` from ε_x.
///
/// The real Jones matrix [[cos2γ, sin2γ], [sin2γ, −cos2γ]] is an involution
/// exchanging ε_x and ε₁.
pub fn waveplate_map(gamma_wp: f64, v: &JonesVector) -> JonesVector {
    let (s, c) = (2.0 * gamma_wp).sin_cos();
    JonesVector::new(c * v.ex + s * v.ey, s * v.ex - c * v.ey)
}

/// Total laser field at a scatterer, split into amplitude and polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveField {
    /// E_l(z)/E₀, in [0, 2].
    pub amplitude: f64,
    /// Unit polarization ε_l including the common plane-wave phase.
    pub direction: JonesVector,
    /// Set at an exact field null, where `direction` is the conventional ε_x.
    pub is_null: bool,
}

/// 2[1 + cos2γ·cos(2k cosθ₀ z)], the squared drive amplitude in units of E₀².
pub fn drive_intensity(z: f64, gamma_wp: f64, geometry: &Geometry) -> f64 {
    2.0 * (1.0 + (2.0 * gamma_wp).cos() * geometry.grating_phase(z).cos())
}

/// Drive field at (y, z). The transverse coordinate only enters the common phase.
pub fn total_drive_at(y: f64, z: f64, gamma_wp: f64, geometry: &Geometry) -> DriveField {
    let kc = geometry.k * geometry.theta0.cos();
    let ks = geometry.k * geometry.theta0.sin();
    let common = Complex64::from_polar(1.0, kc * z - ks * y);
    let intensity = drive_intensity(z, gamma_wp, geometry);
    if intensity < FIELD_NULL_THRESHOLD {
        return DriveField {
            amplitude: 0.0,
            direction: JonesVector::X * common,
            is_null: true,
        };
    }
    let reflected = rotated_polarization(gamma_wp) * Complex64::from_polar(1.0, -2.0 * kc * z);
    let raw = JonesVector::X + reflected;
    // Normalizing by the vector's own norm keeps ε_l a unit vector near nulls.
    let amplitude = raw.norm();
    DriveField {
        amplitude,
        direction: raw * (common / amplitude),
        is_null: false,
    }
}

pub fn total_drive(z: f64, gamma_wp: f64, geometry: &Geometry) -> DriveField {
    total_drive_at(0.0, z, gamma_wp, geometry)
}

/// Polarization overlaps entering the single-atom intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapFactors {
    /// ε_l†·ε_l
    pub self_overlap: f64,
    /// L[ε_l]†·L[ε_l]
    pub rotated_overlap: f64,
    /// ε_l†·L[ε_l], real and within [−1, 1].
    pub cross_overlap: f64,
}

impl OverlapFactors {
    fn from_direction(direction: &JonesVector, gamma_wp: f64) -> Self {
        let rotated = waveplate_map(gamma_wp, direction);
        OverlapFactors {
            self_overlap: direction.norm_sqr(),
            rotated_overlap: rotated.norm_sqr(),
            cross_overlap: direction.dot(&rotated).re,
        }
    }
}

pub fn overlap_factors(z: f64, gamma_wp: f64, geometry: &Geometry) -> Result<OverlapFactors> {
    overlap_factors_at(0.0, z, gamma_wp, geometry)
}

pub fn overlap_factors_at(y: f64, z: f64, gamma_wp: f64, geometry: &Geometry) -> Result<OverlapFactors> {
    let drive = total_drive_at(y, z, gamma_wp, geometry);
    if drive.is_null {
        return Err(MbsError::numerical(format!(
            "drive field null at z = {z:e} m (gamma_wp = {gamma_wp}); scatterer is undriven"
        )));
    }
    Ok(OverlapFactors::from_direction(&drive.direction, gamma_wp))
}

/// Closed form of ε_l†·L[ε_l] = (cos2γ + cos u)/(1 + cos2γ·cos u), u = 2k cosθ₀ z.
pub fn cross_overlap_closed(z: f64, gamma_wp: f64, geometry: &Geometry) -> Result<f64> {
    cross_overlap_from_phase(geometry.grating_phase(z), gamma_wp)
}

pub(crate) fn cross_overlap_from_phase(grating_phase: f64, gamma_wp: f64) -> Result<f64> {
    let c2 = (2.0 * gamma_wp).cos();
    let cu = grating_phase.cos();
    let denom = 1.0 + c2 * cu;
    if 2.0 * denom < FIELD_NULL_THRESHOLD {
        return Err(MbsError::numerical("drive field null; cross overlap undefined"));
    }
    Ok((c2 + cu) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn geom() -> Geometry {
        Geometry::reference_setup()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn waveplate_special_angles() {
        let out = waveplate_map(0.0, &JonesVector::X);
        assert!(close(out.ex, 1.0.into(), 1e-15) && close(out.ey, 0.0.into(), 1e-15));

        let out = waveplate_map(FRAC_PI_4, &JonesVector::X);
        assert!(close(out.ex, 0.0.into(), 1e-15) && close(out.ey, 1.0.into(), 1e-15));

        let out = waveplate_map(FRAC_PI_8, &JonesVector::X);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(out.ex, r.into(), 1e-15) && close(out.ey, r.into(), 1e-15));
    }

    #[test]
    fn waveplate_exchanges_x_and_rotated() {
        for gamma in [0.1, 0.3, 0.7, 1.3] {
            let e1 = rotated_polarization(gamma);
            let a = waveplate_map(gamma, &JonesVector::X);
            let b = waveplate_map(gamma, &e1);
            assert!(close(a.ex, e1.ex, 1e-14) && close(a.ey, e1.ey, 1e-14));
            assert!(close(b.ex, 1.0.into(), 1e-14) && close(b.ey, 0.0.into(), 1e-14));
        }
    }

    fn jones() -> impl Strategy<Value = JonesVector> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(a, b, c, d)| JonesVector::new(Complex64::new(a, b), Complex64::new(c, d)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn waveplate_is_unitary_involution(v in jones(), gamma in -PI..PI) {
            let once = waveplate_map(gamma, &v);
            prop_assert!((once.norm() - v.norm()).abs() <= 1e-12);
            let twice = waveplate_map(gamma, &once);
            prop_assert!((twice.ex - v.ex).norm() <= 1e-12);
            prop_assert!((twice.ey - v.ey).norm() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cross_overlap_is_bounded_and_matches_closed_form(
            z in -1e-2..0.0f64,
            gamma in 0.0..FRAC_PI_4,
            y in -1e-3..1e-3f64,
        ) {
            let g = geom();
            if let Ok(f) = overlap_factors_at(y, z, gamma, &g) {
                prop_assert!(f.cross_overlap.abs() <= 1.0 + 1e-12);
                prop_assert!((f.self_overlap - 1.0).abs() < 1e-12);
                prop_assert!((f.rotated_overlap - 1.0).abs() < 1e-12);
                let closed = cross_overlap_closed(z, gamma, &g).unwrap();
                // Near-null points lose digits in the Jones route.
                let denom = drive_intensity(z, gamma, &g);
                prop_assert!((f.cross_overlap - closed).abs() < 1e-12 / denom.min(1.0));
            }
        }
    }

    #[test]
    fn overlap_is_real_and_phase_independent() {
        let g = geom();
        for i in 0..50 {
            let z = -5e-3 + 1.7e-8 * i as f64;
            let drive = total_drive(z, 0.4, &g);
            let rotated = waveplate_map(0.4, &drive.direction);
            assert!(drive.direction.dot(&rotated).im.abs() < 1e-12);
            let a = overlap_factors_at(0.0, z, 0.4, &g).unwrap();
            let b = overlap_factors_at(3.3e-4, z, 0.4, &g).unwrap();
            assert!((a.cross_overlap - b.cross_overlap).abs() < 1e-13);
        }
    }

    #[test]
    fn drive_amplitude_special_cases() {
        let g = geom();
        assert!((total_drive(0.0, 0.0, &g).amplitude - 2.0).abs() < 1e-15);
        for z in [-3e-3, -1e-6, 0.0, 2.5e-7] {
            assert!((total_drive(z, FRAC_PI_4, &g).amplitude - 2f64.sqrt()).abs() < 1e-12);
        }
        let node = total_drive(g.lambda_star() / 4.0, 0.0, &g);
        assert!(node.is_null);
        assert_eq!(node.amplitude, 0.0);
    }

    #[test]
    fn drive_reproduces_two_beam_sum() {
        let g = geom();
        let (kc, ks) = (g.k * g.theta0.cos(), g.k * g.theta0.sin());
        for &(y, z, gamma) in &[(0.0, -5e-3, 0.2), (1e-4, 1.3e-6, 0.7), (-2e-4, -4.1e-3, 1.1)] {
            let incoming = JonesVector::X * Complex64::from_polar(1.0, kc * z - ks * y);
            let reflected = rotated_polarization(gamma) * Complex64::from_polar(1.0, -(kc * z + ks * y));
            let expected = incoming + reflected;
            let drive = total_drive_at(y, z, gamma, &g);
            let got = drive.direction * Complex64::new(drive.amplitude, 0.0);
            assert!((got.ex - expected.ex).norm() < 1e-12);
            assert!((got.ey - expected.ey).norm() < 1e-12);
        }
    }

    #[test]
    fn parallel_grating_intensity() {
        let g = geom();
        for i in 0..200 {
            let z = -5e-3 + 3.1e-9 * i as f64;
            let a = total_drive(z, 0.0, &g).amplitude;
            let expected = 4.0 * (g.k * g.theta0.cos() * z).cos().powi(2);
            assert!((a * a - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_overlap_special_cases() {
        let g = geom();
        for i in 0..100 {
            let z = -5e-3 + 1.3e-8 * i as f64;
            if let Ok(f) = overlap_factors(z, 0.0, &g) {
                assert!((f.cross_overlap - 1.0).abs() < 1e-9, "z = {z}");
            }
        }
        let f = overlap_factors(0.0, FRAC_PI_4, &g).unwrap();
        assert!((f.cross_overlap - 1.0).abs() < 1e-14);
        let f = overlap_factors(g.lambda_star() / 8.0, FRAC_PI_4, &g).unwrap();
        assert!(f.cross_overlap.abs() < 1e-12);
    }

    #[test]
    fn null_is_numerical_error() {
        let g = geom();
        let err = overlap_factors(g.lambda_star() / 4.0, 0.0, &g).unwrap_err();
        assert!(matches!(err, MbsError::Numerical(_)));
        assert!(cross_overlap_closed(g.lambda_star() / 4.0, 0.0, &g).is_err());
    }

    #[test]
    fn cross_overlap_has_grating_period() {
        let g = geom();
        let period = PI / (g.k * g.theta0.cos());
        for i in 0..40 {
            let z = -4e-3 + 7.3e-9 * i as f64;
            let a = cross_overlap_closed(z, 0.3, &g).unwrap();
            let b = cross_overlap_closed(z + period, 0.3, &g).unwrap();
            assert!((a - b).abs() < 1e-6);
        }
    }
}
