//! Cloud contrast curves for several waveplate angles.
//!
//! Reference values are grating averages ⟨f·g̃¹·X·cos u⟩/⟨f⟩ (f = s/(1+s),
//! X the polarization cross overlap) computed independently with an 8192-point
//! periodic rule in double precision.

use std::f64::consts::{FRAC_PI_4, PI};

use mbs_core::analysis::{contrast_curve, contrast_curve_with, ContrastConvention, CurveOptions};
use mbs_core::cloud::Method;
use mbs_core::emitter::g1_resonant;
use mbs_core::{CloudSpec, Geometry};

fn setup() -> (Geometry, CloudSpec) {
    (Geometry::reference_setup(), CloudSpec::new(100_000, 5e-4, 5e-4).unwrap())
}

fn curve(gamma: f64, s0: f64, taus: &[f64], convention: ContrastConvention) -> Vec<f64> {
    let (g, c) = setup();
    contrast_curve(taus, gamma, &g, &c, s0, convention)
        .unwrap()
        .into_iter()
        .map(|r| {
            let r = r.unwrap();
            assert!(r.converged);
            r.contrast
        })
        .collect()
}

#[test]
fn michelson_contrast_matches_grating_average() {
    let cases = [
        (0.0, 0.0, 0.179_128_784_747_791_92),
        (0.0, 1.0, -0.090_025_505_229_447_66),
        (0.0, 3.0, -0.035_037_235_378_225_326),
        (PI / 12.0, 0.0, 0.340_389_776_027_805_5),
        (PI / 12.0, 1.0, 0.079_038_164_712_541_69),
        (PI / 12.0, 3.0, 0.068_186_032_284_305_09),
    ];
    for (gamma, tau, expected) in cases {
        let got = curve(gamma, 5.0, &[tau], ContrastConvention::Michelson)[0];
        assert!((got - expected).abs() < 1e-6, "gamma={gamma} tau={tau}: {got} vs {expected}");
    }
}

#[test]
fn crossed_curve_is_half_of_g1_in_michelson_and_g1_in_peak_to_peak() {
    let taus: Vec<f64> = (0..=12).map(|i| 0.5 * i as f64).collect();
    let m = curve(FRAC_PI_4, 5.0, &taus, ContrastConvention::Michelson);
    let p = curve(FRAC_PI_4, 5.0, &taus, ContrastConvention::PeakToPeakOverMean);
    for (i, &tau) in taus.iter().enumerate() {
        let g = g1_resonant(10.0, tau);
        assert!((p[i] - g).abs() < 1e-6, "tau={tau}");
        assert!((m[i] - 0.5 * g).abs() < 1e-6);
    }
}

#[test]
fn uncrossed_curves_depart_from_g1() {
    let taus: Vec<f64> = (1..30).map(|i| 0.1 * i as f64).collect();
    for gamma in [0.0, PI / 12.0] {
        for convention in [ContrastConvention::Michelson, ContrastConvention::PeakToPeakOverMean] {
            let c = curve(gamma, 5.0, &taus, convention);
            let dev = taus.iter().zip(&c).map(|(&t, &v)| (v - g1_resonant(10.0, t)).abs()).fold(0.0, f64::max);
            assert!(dev > 0.02, "gamma={gamma} {convention:?}: {dev}");
        }
    }
}

#[test]
fn weak_drive_curves_are_fully_coherent_in_peak_to_peak() {
    // Without saturation every waveplate angle gives the same grating-averaged
    // fringe: ⟨(cos2γ + cos u)·cos u⟩ = 1/2 against a unit mean.
    for gamma in [0.0, PI / 12.0, 0.3, FRAC_PI_4] {
        let c = curve(gamma, 1e-8, &[0.0, 0.01], ContrastConvention::PeakToPeakOverMean);
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-6), "gamma={gamma}: {c:?}");
    }
}

#[test]
fn montecarlo_patterns_give_consistent_contrast() {
    let (g, c) = setup();
    let options = CurveOptions {
        method: Some(Method::MonteCarlo { n_samples: 20_000, seed: 5 }),
        ..CurveOptions::default()
    };
    let r = contrast_curve_with(&[1.0], FRAC_PI_4, &g, &c, 5.0, ContrastConvention::PeakToPeakOverMean, &options)
        .unwrap()
        .pop()
        .unwrap()
        .unwrap();
    assert!((r.contrast - g1_resonant(10.0, 1.0)).abs() < 0.05);
}
