//! Random topologies from a Matérn type-I hard-core process.
//!
//! A realization draws a homogeneous Poisson parent set over the square and
//! deletes every point that has a neighbour closer than the hard-core
//! distance (both members of a close pair go). To hit an exact node count,
//! whole realizations are redrawn until one keeps at least `n_target`
//! points, and a uniform random subset of that size is returned.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{invert_path_loss, EnvironmentParams, Position3D};
use crate::error::{invalid, io_err, Error, Result};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Substream ids of the seeded generator.
const STREAM_SC: u64 = 1;
const STREAM_NFP: u64 = 2;
const STREAM_RATES: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Side of the square region, m.
    pub area_side: f64,
    pub n_sc: usize,
    pub n_d: usize,
    /// Parent intensity of the hard-core process, points/m².
    pub density: f64,
    /// Parent intensity used for NFPs. When unset, `density` capped at
    /// `1 / (π s_D²)`, the intensity that maximizes the retained density.
    pub nfp_density: Option<f64>,
    /// Minimum separation between small cells, m.
    pub sc_min_sep: f64,
    /// Minimum separation between NFPs, m. Derived from `pl_max` when unset.
    pub nfp_min_sep: Option<f64>,
    /// Common NFP height, m.
    pub nfp_height: f64,
    /// Candidate requested rates, bit/s.
    pub rate_choices: Vec<f64>,
    /// Maximum path loss, dB.
    pub pl_max: f64,
    pub seed: u64,
    /// Realizations tried before giving up on one placement.
    pub max_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side: 4000.0,
            n_sc: 30,
            n_d: 3,
            density: 5e-6,
            nfp_density: None,
            sc_min_sep: 300.0,
            nfp_min_sep: None,
            nfp_height: 300.0,
            rate_choices: vec![30e6, 60e6, 90e6, 120e6, 150e6],
            pl_max: 115.0,
            seed: 0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return Err(invalid("area_side", format!("must be > 0, got {}", self.area_side)));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(invalid("density", format!("must be > 0, got {}", self.density)));
        }
        if let Some(d) = self.nfp_density {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("nfp_density", format!("must be > 0, got {d}")));
            }
        }
        if !(self.sc_min_sep.is_finite() && self.sc_min_sep >= 0.0) {
            return Err(invalid("sc_min_sep", "must be >= 0"));
        }
        if let Some(s) = self.nfp_min_sep {
            if !(s.is_finite() && s >= 0.0) {
                return Err(invalid("nfp_min_sep", "must be >= 0"));
            }
        }
        if !(self.nfp_height.is_finite() && self.nfp_height > 0.0) {
            return Err(invalid("nfp_height", "must be > 0"));
        }
        if self.rate_choices.is_empty() {
            return Err(invalid("rate_choices", "must not be empty"));
        }
        if let Some(r) = self.rate_choices.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(invalid("rate_choices", format!("rates must be > 0, got {r}")));
        }
        if !self.pl_max.is_finite() {
            return Err(invalid("pl_max", "must be finite"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts", "must be >= 1"));
        }
        Ok(())
    }

    /// NFP separation, explicit or from the maximum path loss.
    pub fn resolved_nfp_min_sep(&self, env: &EnvironmentParams) -> Result<f64> {
        match self.nfp_min_sep {
            Some(s) => Ok(s),
            None => invert_path_loss(self.pl_max, self.nfp_height, env),
        }
    }

    pub fn resolved_nfp_density(&self, nfp_min_sep: f64) -> f64 {
        match self.nfp_density {
            Some(d) => d,
            None if nfp_min_sep > 0.0 => self.density.min(1.0 / (PI * nfp_min_sep * nfp_min_sep)),
            None => self.density,
        }
    }
}

/// One static snapshot: node positions and per-cell requested rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub sc_positions: Vec<Position3D>,
    pub nfp_positions: Vec<Position3D>,
    /// bit/s
    pub sc_rates: Vec<f64>,
    pub seed_used: u64,
}

impl Scenario {
    pub fn n_sc(&self) -> usize {
        self.sc_positions.len()
    }

    pub fn n_d(&self) -> usize {
        self.nfp_positions.len()
    }

    pub fn total_rate(&self) -> f64 {
        self.sc_rates.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let scenario: Scenario = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        if scenario.sc_rates.len() != scenario.sc_positions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rates for {} small cells",
                scenario.sc_rates.len(),
                scenario.sc_positions.len()
            )));
        }
        Ok(scenario)
    }
}

/// Matérn type-I thinning: keeps only points whose nearest neighbour is at
/// least `min_sep` away.
pub fn thin_type_one(points: &[Position3D], min_sep: f64) -> Vec<Position3D> {
    let n = points.len();
    let mut keep = vec![true; n];
    for a in 0..n {
        for b in a + 1..n {
            if points[a].horizontal_distance(&points[b]) < min_sep {
                keep[a] = false;
                keep[b] = false;
            }
        }
    }
    points.iter().zip(keep).filter_map(|(p, k)| k.then_some(*p)).collect()
}

/// Draws exactly `n_target` points (at `z = 0`) from a Matérn type-I process
/// over `[0, area_side]²`.
pub fn sample_hardcore<R: Rng + ?Sized>(
    n_target: usize,
    area_side: f64,
    min_sep: f64,
    density: f64,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Vec<Position3D>> {
    if n_target == 0 {
        return Ok(Vec::new());
    }
    let area = area_side * area_side;
    let disk = PI * (min_sep / 2.0).powi(2);
    if n_target as f64 * disk >= 0.5 * area {
        return Err(Error::Packing {
            n_target,
            min_sep,
            area_side,
        });
    }
    let mean = density * area;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid("density", "expected parent count must be positive"));
    }
    let poisson = Poisson::new(mean).map_err(|e| invalid("density", e.to_string()))?;

    for _ in 0..max_attempts {
        let n_parent = poisson.sample(rng) as usize;
        if n_parent < n_target {
            continue;
        }
        let parents: Vec<Position3D> = (0..n_parent)
            .map(|_| {
                Position3D::new(
                    rng.random_range(0.0..=area_side),
                    rng.random_range(0.0..=area_side),
                    0.0,
                )
            })
            .collect();
        let survivors = thin_type_one(&parents, min_sep);
        if survivors.len() >= n_target {
            let mut picked = index::sample(rng, survivors.len(), n_target).into_vec();
            picked.sort_unstable();
            return Ok(picked.into_iter().map(|k| survivors[k]).collect());
        }
    }
    Err(Error::GenerationFailed {
        n_target,
        attempts: max_attempts,
    })
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Places small cells and NFPs and assigns requested rates. Deterministic
/// in `config.seed`.
pub fn build_scenario(config: &ScenarioConfig, env: &EnvironmentParams) -> Result<Scenario> {
    config.validate()?;
    let nfp_min_sep = config.resolved_nfp_min_sep(env)?;

    let sc_positions = sample_hardcore(
        config.n_sc,
        config.area_side,
        config.sc_min_sep,
        config.density,
        &mut substream(config.seed, STREAM_SC),
        config.max_attempts,
    )?;

    let nfp_positions = sample_hardcore(
        config.n_d,
        config.area_side,
        nfp_min_sep,
        config.resolved_nfp_density(nfp_min_sep),
        &mut substream(config.seed, STREAM_NFP),
        config.max_attempts,
    )?
    .into_iter()
    .map(|p| Position3D::new(p.x, p.y, config.nfp_height))
    .collect();

    let mut rate_rng = substream(config.seed, STREAM_RATES);
    let sc_rates = (0..config.n_sc)
        .map(|_| config.rate_choices[rate_rng.random_range(0..config.rate_choices.len())])
        .collect();

    Ok(Scenario {
        sc_positions,
        nfp_positions,
        sc_rates,
        seed_used: config.seed,
    })
}
