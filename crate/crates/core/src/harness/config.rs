//! Experiment configuration, loaded from JSON.
//!
//! Powers are configured in dBm and lengths in wavelengths; everything is
//! converted to linear units / meters at this boundary.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, wavelength};
use crate::position::LineSearchConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// FP beamforming with movable antennas.
    FpMa,
    /// ZF beamforming with movable antennas.
    ZfMa,
    /// FP beamforming on the fixed half-wavelength ULA.
    FpFpa,
    /// ZF beamforming on the fixed half-wavelength ULA.
    ZfFpa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::FpMa,
        Algorithm::ZfMa,
        Algorithm::FpFpa,
        Algorithm::ZfFpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FpMa => "fp-ma",
            Algorithm::ZfMa => "zf-ma",
            Algorithm::FpFpa => "fp-fpa",
            Algorithm::ZfFpa => "zf-fpa",
        }
    }

    pub fn uses_zf(self) -> bool {
        matches!(self, Algorithm::ZfMa | Algorithm::ZfFpa)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Parse a comma-separated algorithm list such as `fp-ma,zf-fpa`.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algos = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if algos.is_empty() {
        return Err(Error::Config("empty algorithm list".into()));
    }
    Ok(algos)
}

/// How user distances from the base station are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DropModel {
    /// Uniform over a disc around the BS, excluding a small inner radius.
    Disc { radius_m: f64, exclusion_m: f64 },
    /// Every user at the same distance.
    Fixed { distance_m: f64 },
}

impl Default for DropModel {
    fn default() -> Self {
        DropModel::Disc {
            radius_m: 500.0,
            exclusion_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PowerDbm,
    RegionWavelengths,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PowerDbm => "power_dbm",
            SweepVariable::RegionWavelengths => "region_wavelengths",
        }
    }

    /// Default grid: transmit powers at A = 2λ, or region sizes at 10 dBm.
    pub fn default_spec(self) -> SweepSpec {
        match self {
            SweepVariable::PowerDbm => SweepSpec {
                variable: self,
                values: vec![0.0, 5.0, 10.0, 15.0],
                fixed_power_dbm: None,
                fixed_region_wavelengths: Some(2.0),
            },
            SweepVariable::RegionWavelengths => SweepSpec {
                variable: self,
                values: vec![1.0, 2.0, 3.0, 4.0],
                fixed_power_dbm: Some(10.0),
                fixed_region_wavelengths: None,
            },
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_dbm" | "power" => Ok(SweepVariable::PowerDbm),
            "region_wavelengths" | "region" => Ok(SweepVariable::RegionWavelengths),
            other => Err(Error::Config(format!("unknown sweep variable `{other}`"))),
        }
    }
}

/// Parameter grid for a Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Overrides `power_dbm` for every point of a region sweep.
    #[serde(default)]
    pub fixed_power_dbm: Option<f64>,
    /// Overrides `region_wavelengths` for every point of a power sweep.
    #[serde(default)]
    pub fixed_region_wavelengths: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepVariable::PowerDbm.default_spec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_antennas: usize,
    pub num_users: usize,
    pub paths_per_user: usize,
    /// Side of the square movement region, in wavelengths.
    pub region_wavelengths: f64,
    /// Minimum inter-antenna distance, in wavelengths.
    pub min_spacing_wavelengths: f64,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub carrier_ghz: f64,
    pub u_ini: f64,
    pub u_min: f64,
    /// Sweeps of the position optimizer per call.
    pub max_sweeps: usize,
    /// Outer iterations of the FP algorithm.
    pub max_fp_iters: usize,
    /// Relative objective change below which an iteration loop stops.
    pub tolerance: f64,
    pub realizations: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub drop_model: DropModel,
    pub sweep: SweepSpec,
    pub max_init_attempts: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_antennas: 4,
            num_users: 4,
            paths_per_user: 4,
            region_wavelengths: 2.0,
            min_spacing_wavelengths: 0.5,
            power_dbm: 5.0,
            noise_dbm: -100.0,
            carrier_ghz: 5.0,
            u_ini: 10.0,
            u_min: 1e-3,
            max_sweeps: 20,
            max_fp_iters: 50,
            tolerance: 1e-4,
            realizations: 100,
            seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            drop_model: DropModel::default(),
            sweep: SweepSpec::default(),
            max_init_attempts: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_antennas == 0 || self.num_users == 0 || self.paths_per_user == 0 {
            return fail("antenna, user and path counts must be positive".into());
        }
        for (name, v) in [
            ("region_wavelengths", self.region_wavelengths),
            ("min_spacing_wavelengths", self.min_spacing_wavelengths),
            ("carrier_ghz", self.carrier_ghz),
            ("u_ini", self.u_ini),
            ("u_min", self.u_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return fail("power and noise levels must be finite".into());
        }
        if !(self.tolerance >= 0.0) {
            return fail("tolerance must be non-negative".into());
        }
        if self.u_ini <= self.u_min {
            return fail(format!("u_ini ({}) must exceed u_min ({})", self.u_ini, self.u_min));
        }
        if self.realizations == 0 {
            return fail("need at least one realization".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms selected".into());
        }
        if self.algorithms.iter().any(|a| a.uses_zf()) && self.num_antennas < self.num_users {
            return fail("zero forcing needs at least as many antennas as users".into());
        }
        if self.num_antennas >= 2
            && self.min_spacing_wavelengths > self.region_wavelengths * std::f64::consts::SQRT_2
        {
            return fail("minimum spacing exceeds the region diagonal".into());
        }
        match self.drop_model {
            DropModel::Disc {
                radius_m,
                exclusion_m,
            } if !(exclusion_m > 0.0 && radius_m > exclusion_m) => {
                return fail("disc drop needs 0 < exclusion_m < radius_m".into());
            }
            DropModel::Fixed { distance_m } if !(distance_m > 0.0) => {
                return fail("fixed drop distance must be positive".into());
            }
            _ => {}
        }
        if self.sweep.values.is_empty() {
            return fail("sweep grid is empty".into());
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_ghz)
    }

    pub fn region_m(&self) -> f64 {
        self.region_wavelengths * self.wavelength()
    }

    pub fn min_spacing_m(&self) -> f64 {
        self.min_spacing_wavelengths * self.wavelength()
    }

    pub fn power_w(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }

    /// Line search with positions measured in wavelengths.
    pub fn line_search(&self) -> Result<LineSearchConfig> {
        Ok(
            LineSearchConfig::new(self.u_ini, self.u_min, self.max_sweeps, self.wavelength())?
                .with_tolerance(self.tolerance),
        )
    }

    /// Copy of this config at one grid point of its sweep.
    pub fn at_sweep_point(&self, value: f64) -> Self {
        let mut cfg = self.clone();
        match self.sweep.variable {
            SweepVariable::PowerDbm => {
                cfg.power_dbm = value;
                if let Some(a) = self.sweep.fixed_region_wavelengths {
                    cfg.region_wavelengths = a;
                }
            }
            SweepVariable::RegionWavelengths => {
                cfg.region_wavelengths = value;
                if let Some(p) = self.sweep.fixed_power_dbm {
                    cfg.power_dbm = p;
                }
            }
        }
        cfg
    }

    /// Stable SHA-256 of the canonical JSON encoding.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
