//! Scenario configuration: a single JSON document, validated at load time.
//!
//! Every optional key is filled in by [`ScenarioConfig::resolve`], and the
//! resolved document is what gets echoed next to the CSV, so feeding the echo
//! back reproduces the run.

use std::path::Path;

use mbs_core::{CloudSpec, Geometry};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    G1,
    Spectrum,
    Single,
    Cloud,
    Contrast,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::G1 => "g1",
            Command::Spectrum => "spectrum",
            Command::Single => "single",
            Command::Cloud => "cloud",
            Command::Contrast => "contrast",
        }
    }

    fn variables(self) -> &'static [SweepVariable] {
        use SweepVariable::*;
        match self {
            Command::G1 => &[Tau],
            Command::Spectrum => &[Nu],
            Command::Single => &[Tau, Z, Theta],
            Command::Cloud => &[Theta, Tau, Gamma],
            Command::Contrast => &[Tau, Gamma],
        }
    }

    fn methods(self) -> &'static [MethodName] {
        use MethodName::*;
        match self {
            Command::G1 | Command::Spectrum | Command::Single => &[SingleAtom],
            Command::Cloud | Command::Contrast => &[Quadrature, Montecarlo, ClosedPerp],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Delay, in 1/Γ.
    Tau,
    /// Detection angle, in degrees.
    Theta,
    /// Waveplate angle, in degrees.
    Gamma,
    /// Scatterer position, in μm.
    Z,
    /// Frequency offset from the laser, in Γ.
    Nu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Quadrature,
    Montecarlo,
    ClosedPerp,
    SingleAtom,
}

impl MethodName {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("method: unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub theta0_deg: f64,
    pub lambda_nm: f64,
    pub h_mm: f64,
    #[serde(rename = "L_m", default = "default_path_length")]
    pub path_length_m: f64,
}

fn default_path_length() -> f64 {
    0.5
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { theta0_deg: 4.3, lambda_nm: 780.0, h_mm: 5.0, path_length_m: default_path_length() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub n_atoms: u64,
    pub s_r_um: f64,
    pub s_z_um: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig { n_atoms: 100_000, s_r_um: 500.0, s_z_um: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub s0: f64,
    pub gamma_wp_deg: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig { s0: 5.0, gamma_wp_deg: 45.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Values of the quantities that are not swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedConfig {
    #[serde(default)]
    pub tau_gamma: f64,
    /// Defaults to the mirror direction θ₀.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(default)]
    pub z_um: f64,
}

impl Default for FixedConfig {
    fn default() -> Self {
        FixedConfig { tau_gamma: 0.0, theta_deg: None, z_um: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub cloud: CloudConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub fixed: FixedConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Monte Carlo samples per point.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_seed() -> u64 {
    1
}

fn default_tol() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    100_000
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every key has a default")
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<String>,
    pub method: Option<MethodName>,
}

/// Validated scenario with physical objects built and every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub geometry: Geometry,
    pub cloud: CloudSpec,
    pub gamma_wp: f64,
    pub theta_fixed: f64,
    pub z_fixed: f64,
    pub grid: Vec<f64>,
    pub variable: SweepVariable,
    pub method: MethodName,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn resolve(mut self, command: Command, overrides: &Overrides) -> Result<Resolved, CliError> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(tol) = overrides.tol {
            self.tol = tol;
        }
        if let Some(out) = &overrides.out {
            self.output = Some(out.clone());
        }
        if let Some(method) = overrides.method {
            self.method = Some(method);
        }

        let bad = |key: &str, msg: String| CliError::Config(format!("{key}: {msg}"));
        let g = &self.geometry;
        let geometry = Geometry::from_lab_units(g.theta0_deg, g.lambda_nm, g.h_mm, g.path_length_m)
            .map_err(|e| bad("geometry", e.to_string()))?;
        let c = &self.cloud;
        let cloud = CloudSpec::new(c.n_atoms, c.s_r_um * 1e-6, c.s_z_um * 1e-6).map_err(|e| bad("cloud", e.to_string()))?;
        if !(self.drive.s0.is_finite() && self.drive.s0 >= 0.0) {
            return Err(bad("drive.s0", format!("must be finite and >= 0, got {}", self.drive.s0)));
        }
        if !self.drive.gamma_wp_deg.is_finite() {
            return Err(bad("drive.gamma_wp_deg", "must be finite".into()));
        }
        if !(1e-10..=1e-2).contains(&self.tol) {
            return Err(bad("tol", format!("must lie in [1e-10, 1e-2], got {}", self.tol)));
        }
        if self.samples < mbs_core::cloud::MIN_MC_SAMPLES {
            return Err(bad("samples", format!("must be >= {}, got {}", mbs_core::cloud::MIN_MC_SAMPLES, self.samples)));
        }
        if !(self.fixed.tau_gamma.is_finite() && self.fixed.tau_gamma >= 0.0) {
            return Err(bad("fixed.tau_gamma", format!("must be >= 0, got {}", self.fixed.tau_gamma)));
        }
        if !self.fixed.z_um.is_finite() {
            return Err(bad("fixed.z_um", "must be finite".into()));
        }
        let theta_fixed_deg = self.fixed.theta_deg.unwrap_or(g.theta0_deg);
        let theta_fixed = theta_fixed_deg.to_radians();
        if !(theta_fixed.is_finite() && theta_fixed > 0.0 && theta_fixed < 0.5 * std::f64::consts::PI) {
            return Err(bad("fixed.theta_deg", format!("must lie in (0, 90), got {theta_fixed_deg}")));
        }
        self.fixed.theta_deg = Some(theta_fixed_deg);

        let method = self.method.unwrap_or(command.methods()[0]);
        if !command.methods().contains(&method) {
            return Err(bad("method", format!("`{method:?}` is not available for `{}`", command.name())));
        }
        self.method = Some(method);

        let sweep = self.sweep.take().unwrap_or(SweepConfig {
            variable: command.variables()[0],
            range: None,
            points: None,
        });
        if !command.variables().contains(&sweep.variable) {
            return Err(bad(
                "sweep.variable",
                format!("`{:?}` cannot be swept by `{}`", sweep.variable, command.name()),
            ));
        }
        let (range, points) = default_sweep(sweep.variable, &geometry, &cloud);
        let range = sweep.range.unwrap_or(range);
        let points = sweep.points.unwrap_or(points);
        if points < 2 {
            return Err(bad("sweep.points", format!("must be >= 2, got {points}")));
        }
        if !(range[0].is_finite() && range[1].is_finite() && range[1] > range[0]) {
            return Err(bad("sweep.range", format!("must be finite and ascending, got {range:?}")));
        }
        if sweep.variable == SweepVariable::Tau && range[0] < 0.0 {
            return Err(bad("sweep.range", "delays must be >= 0".into()));
        }
        let grid: Vec<f64> = (0..points)
            .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (points - 1) as f64)
            .collect();
        let grid = match sweep.variable {
            SweepVariable::Theta | SweepVariable::Gamma => grid.into_iter().map(f64::to_radians).collect(),
            SweepVariable::Z => grid.into_iter().map(|z| z * 1e-6).collect(),
            SweepVariable::Tau | SweepVariable::Nu => grid,
        };
        let variable = sweep.variable;
        self.sweep = Some(SweepConfig { variable, range: Some(range), points: Some(points) });

        Ok(Resolved {
            gamma_wp: self.drive.gamma_wp_deg.to_radians(),
            z_fixed: self.fixed.z_um * 1e-6,
            theta_fixed,
            config: self,
            geometry,
            cloud,
            grid,
            variable,
            method,
        })
    }
}

/// Range (in config units) and number of points used when the sweep leaves them out.
fn default_sweep(variable: SweepVariable, geometry: &Geometry, cloud: &CloudSpec) -> ([f64; 2], usize) {
    match variable {
        SweepVariable::Tau => ([0.0, 6.0], 121),
        SweepVariable::Nu => ([-40.0, 40.0], 4001),
        SweepVariable::Gamma => ([0.0, 90.0], 91),
        SweepVariable::Z => ([0.0, geometry.lambda_star() * 1e6], 201),
        SweepVariable::Theta => {
            // θ₀ ± 4s_θ at 16 points per fringe period.
            let half = 4.0 * geometry.envelope_rms(cloud);
            let points = (2.0 * half / geometry.fringe_period() * 16.0).ceil() as usize + 1;
            let t0 = geometry.theta0;
            ([(t0 - half).to_degrees(), (t0 + half).to_degrees()], points)
        }
    }
}
