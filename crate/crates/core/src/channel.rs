//! Field-response multipath channel model.
//!
//! Each user sees `L_k` planar paths. Path `ℓ` has a complex gain `σ_{k,ℓ}`
//! and a direction vector `ρ_{k,ℓ} = [sin θ cos φ, cos θ]`, so the response
//! at a transmit position `t` is
//!
//! ```text
//! h_k(t) = Σ_ℓ σ_{k,ℓ} exp(-j (2π/λ) tᵀ ρ_{k,ℓ})
//! ```
//!
//! The channel matrix `H` stacks `h_k(t_n)` with antennas on rows and users
//! on columns.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::invalid;
use crate::harness::config::{DropModel, ExperimentConfig};
use crate::{CMatrix, Complex64, Point, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength in meters for a carrier given in GHz.
pub fn wavelength(carrier_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (carrier_ghz * 1e9)
}

/// Convert a level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Direction vector `[sin θ cos φ, cos θ]` for elevation `θ` and azimuth `φ`,
/// both in `[0, π]`.
pub fn direction_vector(elevation: f64, azimuth: f64) -> Result<Point> {
    let in_range = |a: f64| (0.0..=PI).contains(&a);
    if !in_range(elevation) || !in_range(azimuth) {
        return Err(invalid(format!(
            "angles must lie in [0, π], got θ={elevation}, φ={azimuth}"
        )));
    }
    Ok(Point::new(elevation.sin() * azimuth.cos(), elevation.cos()))
}

/// Multipath description of a single user.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    gains: Vec<Complex64>,
    elevations: Vec<f64>,
    azimuths: Vec<f64>,
    directions: Vec<Point>,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, elevations: Vec<f64>, azimuths: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(invalid("a user needs at least one path"));
        }
        if gains.len() != elevations.len() || gains.len() != azimuths.len() {
            return Err(invalid(format!(
                "path arrays disagree: {} gains, {} elevations, {} azimuths",
                gains.len(),
                elevations.len(),
                azimuths.len()
            )));
        }
        let directions = elevations
            .iter()
            .zip(&azimuths)
            .map(|(&th, &ph)| direction_vector(th, ph))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gains,
            elevations,
            azimuths,
            directions,
        })
    }

    /// Build a path set straight from direction vectors, bypassing the angle
    /// parameterization. Each direction must have components in `[-1, 1]`.
    pub fn from_directions(gains: Vec<Complex64>, directions: Vec<Point>) -> Result<Self> {
        if gains.is_empty() || gains.len() != directions.len() {
            return Err(invalid("gains and directions must be non-empty and equal length"));
        }
        if directions.iter().any(|d| d.x.abs() > 1.0 || d.y.abs() > 1.0) {
            return Err(invalid("direction components must lie in [-1, 1]"));
        }
        let elevations = directions.iter().map(|d| d.y.clamp(-1.0, 1.0).acos()).collect();
        let azimuths = directions
            .iter()
            .zip(&elevations)
            .map(|(d, th): (&Point, &f64)| {
                let s = th.sin();
                if s > 0.0 {
                    (d.x / s).clamp(-1.0, 1.0).acos()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            gains,
            elevations,
            azimuths,
            directions,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn directions(&self) -> &[Point] {
        &self.directions
    }

    /// Total path power `Σ_ℓ |σ_ℓ|²`.
    pub fn power(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }

    /// `Σ_ℓ |σ_ℓ|`, an upper bound on `|h(t)|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).sum()
    }
}

/// Response `h(t)` of one user at transmit position `t`.
pub fn channel_response(t: &Point, paths: &PathSet, wavelength: f64) -> Complex64 {
    let k = 2.0 * PI / wavelength;
    paths
        .gains
        .iter()
        .zip(&paths.directions)
        .map(|(g, rho)| g * Complex64::from_polar(1.0, -k * t.dot(rho)))
        .sum()
}

/// `h(t)` together with its gradient `[∂h/∂x, ∂h/∂y]` with respect to `t`.
pub fn response_and_gradient(
    t: &Point,
    paths: &PathSet,
    wavelength: f64,
) -> (Complex64, [Complex64; 2]) {
    let k = 2.0 * PI / wavelength;
    let mut h = Complex64::new(0.0, 0.0);
    let mut grad = [Complex64::new(0.0, 0.0); 2];
    for (g, rho) in paths.gains.iter().zip(&paths.directions) {
        let term = g * Complex64::from_polar(1.0, -k * t.dot(rho));
        h += term;
        // d/dt exp(-j k tᵀρ) = -j k ρ exp(-j k tᵀρ)
        let d = term * Complex64::new(0.0, -k);
        grad[0] += d * rho.x;
        grad[1] += d * rho.y;
    }
    (h, grad)
}

/// Transmit antenna positions inside the square region `[0, A]²` with a
/// minimum pairwise spacing `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout {
    positions: Vec<Point>,
    region: f64,
    min_spacing: f64,
}

impl AntennaLayout {
    /// Validating constructor: every position must be in the region and
    /// pairwise at least `min_spacing` apart.
    pub fn new(positions: Vec<Point>, region: f64, min_spacing: f64) -> Result<Self> {
        let layout = Self::new_unchecked(positions, region, min_spacing)?;
        layout.validate()?;
        Ok(layout)
    }

    /// Build without the feasibility check (parameters are still checked).
    pub fn new_unchecked(positions: Vec<Point>, region: f64, min_spacing: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("layout needs at least one antenna"));
        }
        if !(region > 0.0) || !(min_spacing >= 0.0) {
            return Err(invalid(format!(
                "region size must be positive and spacing non-negative (A={region}, D={min_spacing})"
            )));
        }
        Ok(Self {
            positions,
            region,
            min_spacing,
        })
    }

    /// Uniform linear array along the x axis: `t_n = (n·spacing, 0)`.
    pub fn uniform_linear(n: usize, spacing: f64, region: f64, min_spacing: f64) -> Result<Self> {
        let positions = (0..n).map(|i| Point::new(i as f64 * spacing, 0.0)).collect();
        Self::new(positions, region, min_spacing)
    }

    /// Uniformly random feasible layout by rejection sampling, falling back
    /// to a jittered grid if rejection does not succeed within `max_attempts`.
    pub fn random_feasible(
        n: usize,
        region: f64,
        min_spacing: f64,
        max_attempts: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if n >= 2 && min_spacing > region * std::f64::consts::SQRT_2 {
            return Err(invalid(format!(
                "minimum spacing {min_spacing} exceeds the region diagonal for {n} antennas"
            )));
        }
        for _ in 0..max_attempts {
            let mut positions: Vec<Point> = Vec::with_capacity(n);
            let mut ok = true;
            for _ in 0..n {
                let p = Point::new(rng.random::<f64>() * region, rng.random::<f64>() * region);
                if positions.iter().any(|q| (p - q).norm() < min_spacing) {
                    ok = false;
                    break;
                }
                positions.push(p);
            }
            if ok {
                return Self::new(positions, region, min_spacing);
            }
        }
        Self::jittered_grid(n, region, min_spacing, rng)
    }

    fn jittered_grid(n: usize, region: f64, min_spacing: f64, rng: &mut impl Rng) -> Result<Self> {
        let side = (n as f64).sqrt().ceil() as usize;
        let pitch = if side > 1 { region / (side - 1) as f64 } else { 0.0 };
        let slack = (pitch - min_spacing).max(0.0) / 2.0;
        let mut positions = Vec::with_capacity(n);
        for i in 0..n {
            let (r, c) = (i / side, i % side);
            let base = Point::new(c as f64 * pitch, r as f64 * pitch);
            let jitter = Point::new(
                (rng.random::<f64>() - 0.5) * slack,
                (rng.random::<f64>() - 0.5) * slack,
            );
            let p = base + jitter;
            positions.push(Point::new(p.x.clamp(0.0, region), p.y.clamp(0.0, region)));
        }
        Self::new(positions, region, min_spacing)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, n: usize) -> Point {
        self.positions[n]
    }

    pub fn set_position(&mut self, n: usize, t: Point) {
        self.positions[n] = t;
    }

    pub fn region(&self) -> f64 {
        self.region
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn validate(&self) -> Result<()> {
        for n in 0..self.len() {
            if !crate::position::is_feasible(&self.positions[n], n, self) {
                return Err(invalid(format!(
                    "antenna {n} at ({:.4e}, {:.4e}) violates the region or spacing constraint",
                    self.positions[n].x, self.positions[n].y
                )));
            }
        }
        Ok(())
    }
}

/// One random propagation environment: per-user paths, noise and path loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub paths: Vec<PathSet>,
    /// Noise power per user, watts.
    pub noise: Vec<f64>,
    /// Wavelength, meters.
    pub wavelength: f64,
    /// Linear path-loss gain `μ_k`.
    pub path_loss: Vec<f64>,
    /// BS-user distances, km.
    pub distances_km: Vec<f64>,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.paths.len()
    }

    /// Build a scenario from explicit paths with a common noise power. Path
    /// loss and distances are left at unity.
    pub fn from_paths(paths: Vec<PathSet>, noise: f64, wavelength: f64) -> Result<Self> {
        if !(noise > 0.0) || !(wavelength > 0.0) {
            return Err(invalid("noise power and wavelength must be positive"));
        }
        let k = paths.len();
        Ok(Self {
            paths,
            noise: vec![noise; k],
            wavelength,
            path_loss: vec![1.0; k],
            distances_km: vec![1.0; k],
        })
    }
}

/// Free-space path loss in dB for distance `d_km` and carrier `f0_ghz`.
pub fn path_loss_db(d_km: f64, f0_ghz: f64) -> Result<f64> {
    if !(d_km > 0.0) || !(f0_ghz > 0.0) {
        return Err(invalid(format!(
            "distance and carrier must be positive (d={d_km} km, f0={f0_ghz} GHz)"
        )));
    }
    Ok(92.5 + 20.0 * f0_ghz.log10() + 20.0 * d_km.log10())
}

/// RNG stream identifiers within one realization seed.
pub mod streams {
    pub const SCENARIO: u64 = 0;
    pub const LAYOUT_INIT: u64 = 1;
}

/// Deterministic generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw a random scenario. A pure function of `(config, seed)`.
///
/// Users are dropped according to `config.drop_model`; each path gets an
/// independent `CN(0, μ_k / L_k)` gain and independent uniform angles in `[0, π]`.
pub fn sample_scenario(config: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    let mut rng = stream_rng(seed, streams::SCENARIO);
    let k_users = config.num_users;
    let l = config.paths_per_user;
    let noise_w = dbm_to_watts(config.noise_dbm);
    let mut paths = Vec::with_capacity(k_users);
    let mut path_loss = Vec::with_capacity(k_users);
    let mut distances_km = Vec::with_capacity(k_users);
    for _ in 0..k_users {
        let d_m = match config.drop_model {
            DropModel::Disc {
                radius_m,
                exclusion_m,
            } => {
                let u: f64 = rng.random();
                (u * (radius_m * radius_m - exclusion_m * exclusion_m) + exclusion_m * exclusion_m)
                    .sqrt()
            }
            DropModel::Fixed { distance_m } => distance_m,
        };
        let d_km = d_m / 1000.0;
        let mu = 10f64.powf(-path_loss_db(d_km, config.carrier_ghz)? / 10.0);
        let per_path_std = (mu / l as f64 / 2.0).sqrt();
        let normal = Normal::new(0.0, per_path_std)
            .map_err(|e| invalid(format!("bad gain distribution: {e}")))?;
        let mut gains = Vec::with_capacity(l);
        let mut elevations = Vec::with_capacity(l);
        let mut azimuths = Vec::with_capacity(l);
        for _ in 0..l {
            gains.push(Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)));
            elevations.push(rng.random::<f64>() * PI);
            azimuths.push(rng.random::<f64>() * PI);
        }
        paths.push(PathSet::new(gains, elevations, azimuths)?);
        path_loss.push(mu);
        distances_km.push(d_km);
    }
    Ok(Scenario {
        paths,
        noise: vec![noise_w; k_users],
        wavelength: wavelength(config.carrier_ghz),
        path_loss,
        distances_km,
    })
}

/// Channel matrix `H` (N×K): entry `(n, k)` is `h_k(t_n)`.
pub fn channel_matrix(layout: &AntennaLayout, scenario: &Scenario) -> CMatrix {
    CMatrix::from_fn(layout.len(), scenario.num_users(), |n, k| {
        channel_response(&layout.positions[n], &scenario.paths[k], scenario.wavelength)
    })
}
