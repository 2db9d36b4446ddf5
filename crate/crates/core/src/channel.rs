//! Air-to-ground propagation model.
//!
//! The LoS probability is a sigmoid in the elevation angle (degrees). The
//! average path loss mixes a free-space term with LoS/NLoS excess losses
//! weighted by that probability. Received powers feed an interference-limited
//! SINR where every NFP other than the serving one counts as an interferer.
//!
//! All matrices hold linear quantities; dB only appears in path loss and at
//! configuration boundaries.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::scenario::Scenario;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Channel constants. Defaults are the urban setting used throughout the
/// experiments (2 GHz carrier, 5 W transmit power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentParams {
    /// S-curve constant `a`.
    pub alpha: f64,
    /// S-curve constant `b`, per degree.
    pub beta: f64,
    /// Excess loss of LoS links, dB.
    pub eta_los: f64,
    /// Excess loss of NLoS links, dB.
    pub eta_nlos: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Free-space path loss exponent.
    pub pl_exponent: f64,
    /// NFP transmit power, W.
    pub tx_power: f64,
    /// Receiver noise power, W.
    pub noise_floor: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            alpha: 9.61,
            beta: 0.16,
            eta_los: 1.0,
            eta_nlos: 20.0,
            carrier_freq: 2e9,
            pl_exponent: 2.0,
            tx_power: 5.0,
            // -100 dBm
            noise_floor: 1e-13,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eta_los", self.eta_los),
            ("eta_nlos", self.eta_nlos),
            ("carrier_freq", self.carrier_freq),
            ("pl_exponent", self.pl_exponent),
            ("tx_power", self.tx_power),
            ("noise_floor", self.noise_floor),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(invalid("alpha", "must be > 0"));
        }
        if self.beta <= 0.0 {
            return Err(invalid("beta", "must be > 0"));
        }
        if self.eta_los < 0.0 {
            return Err(invalid("eta_los", "must be >= 0"));
        }
        if self.eta_nlos < self.eta_los {
            return Err(invalid("eta_nlos", "must be >= eta_los"));
        }
        if self.carrier_freq <= 0.0 {
            return Err(invalid("carrier_freq", "must be > 0"));
        }
        if self.pl_exponent < 2.0 {
            return Err(invalid("pl_exponent", "must be >= 2"));
        }
        if self.tx_power <= 0.0 {
            return Err(invalid("tx_power", "must be > 0"));
        }
        if self.noise_floor <= 0.0 {
            return Err(invalid("noise_floor", "must be > 0"));
        }
        Ok(())
    }
}

/// Cartesian position in meters. Small cells sit at `z = 0`, NFPs at their
/// hovering height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Probability of a line-of-sight link at the given elevation angle (degrees).
pub fn los_probability(elevation_deg: f64, env: &EnvironmentParams) -> Result<f64> {
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return Err(Error::ElevationDomain(elevation_deg));
    }
    Ok(1.0 / (1.0 + env.alpha * (-env.beta * (elevation_deg - env.alpha)).exp()))
}

/// Free-space term `10·log10((4π f d / c)^γ)` in dB.
pub fn free_space_loss_db(distance: f64, env: &EnvironmentParams) -> f64 {
    10.0 * env.pl_exponent * (4.0 * PI * env.carrier_freq * distance / SPEED_OF_LIGHT).log10()
}

/// Elevation angle in degrees seen from the ground at horizontal offset
/// `horizontal` from a platform at `height`. Directly below is 90°.
pub fn elevation_deg(horizontal: f64, height: f64) -> f64 {
    if horizontal == 0.0 {
        90.0
    } else {
        height.atan2(horizontal).to_degrees().min(90.0)
    }
}

/// Average path loss (dB) at horizontal offset `horizontal` from an NFP
/// hovering at `height`.
pub fn path_loss_at(horizontal: f64, height: f64, env: &EnvironmentParams) -> Result<f64> {
    let d = height.hypot(horizontal);
    if d == 0.0 {
        return Err(Error::Colocated);
    }
    let p_los = los_probability(elevation_deg(horizontal, height), env)?;
    Ok(free_space_loss_db(d, env) + p_los * env.eta_los + (1.0 - p_los) * env.eta_nlos)
}

/// Average path loss (dB) between a small cell and an NFP.
pub fn path_loss_db(sc: &Position3D, nfp: &Position3D, env: &EnvironmentParams) -> Result<f64> {
    let s = sc.horizontal_distance(nfp);
    let h = nfp.z - sc.z;
    if h <= 0.0 && s == 0.0 {
        return Err(Error::Colocated);
    }
    if h <= 0.0 {
        return Err(invalid("nfp.z", "NFP must hover above the small cell"));
    }
    path_loss_at(s, h, env)
}

/// Horizontal distance at which the path loss from an NFP at height `h_d`
/// reaches `pl_target`.
///
/// Path loss is increasing in the horizontal offset whenever
/// `eta_nlos >= eta_los`, so the root is bracketed by doubling and refined by
/// bisection.
pub fn invert_path_loss(pl_target: f64, h_d: f64, env: &EnvironmentParams) -> Result<f64> {
    if h_d.is_nan() || h_d <= 0.0 {
        return Err(invalid("h_d", "height must be > 0"));
    }
    let floor = path_loss_at(0.0, h_d, env)?;
    if pl_target < floor {
        return Err(Error::NoPathLossSolution {
            target: pl_target,
            floor,
        });
    }
    if pl_target == floor {
        return Ok(0.0);
    }

    let mut lo = 0.0_f64;
    let mut hi = h_d.max(1.0);
    while path_loss_at(hi, h_d, env)? < pl_target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(invalid("pl_target", "path loss target unreachable"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if path_loss_at(mid, h_d, env)? < pl_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Received power (W) after `pl_db` of path loss, isotropic antennas.
pub fn received_power_watts(pl_db: f64, env: &EnvironmentParams) -> f64 {
    env.tx_power / 10f64.powf(pl_db / 10.0)
}

/// SINR of small cell `sc` served by NFP `nfp`. Every other NFP interferes.
pub fn sinr_linear(sc: usize, nfp: usize, rx_power: &Matrix<f64>, env: &EnvironmentParams) -> f64 {
    let row = rx_power.row(sc);
    let interference: f64 = row.iter().enumerate().filter(|&(j, _)| j != nfp).map(|(_, p)| p).sum();
    row[nfp] / (interference + env.noise_floor)
}

/// `log2(1 + sinr)` computed without cancellation for small SINR.
#[inline]
pub fn spectral_efficiency(sinr: f64) -> f64 {
    sinr.ln_1p() / LN_2
}

/// Per-pair link quantities. Rows are small cells, columns NFPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub n_sc: usize,
    pub n_d: usize,
    /// Requested rate r_ij, bit/s.
    pub rate: Matrix<f64>,
    /// Linear SINR.
    pub sinr: Matrix<f64>,
    /// Spectral efficiency, bit/s/Hz.
    pub spectral_eff: Matrix<f64>,
    /// Bandwidth b_ij = r_ij / η_ij, Hz. `+∞` where η_ij = 0.
    pub bandwidth: Matrix<f64>,
    /// SINR_ij ≥ SINR_min (and η_ij > 0).
    pub eligible: Matrix<bool>,
}

impl LinkMetrics {
    /// Builds metrics from a rate matrix and a SINR matrix.
    pub fn from_rate_and_sinr(rate: Matrix<f64>, sinr: Matrix<f64>, sinr_min: f64) -> Result<Self> {
        if rate.rows() != sinr.rows() || rate.cols() != sinr.cols() {
            return Err(Error::DimensionMismatch(format!(
                "rate is {}x{}, sinr is {}x{}",
                rate.rows(),
                rate.cols(),
                sinr.rows(),
                sinr.cols()
            )));
        }
        if let Some(v) = rate.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("rate", format!("entries must be finite and >= 0, got {v}")));
        }
        if let Some(v) = sinr.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("sinr", format!("entries must be finite and >= 0, got {v}")));
        }
        let (n_sc, n_d) = (rate.rows(), rate.cols());
        let spectral_eff = Matrix::from_fn(n_sc, n_d, |i, j| spectral_efficiency(sinr[(i, j)]));
        let bandwidth = Matrix::from_fn(n_sc, n_d, |i, j| {
            let eta = spectral_eff[(i, j)];
            if eta > 0.0 {
                rate[(i, j)] / eta
            } else {
                f64::INFINITY
            }
        });
        let eligible = Matrix::from_fn(n_sc, n_d, |i, j| sinr[(i, j)] >= sinr_min && spectral_eff[(i, j)] > 0.0);
        Ok(Self {
            n_sc,
            n_d,
            rate,
            sinr,
            spectral_eff,
            bandwidth,
            eligible,
        })
    }

    /// Builds metrics where small cell `i` requests `sc_rates[i]` from every NFP.
    pub fn from_sc_rates(sc_rates: &[f64], sinr: Matrix<f64>, sinr_min: f64) -> Result<Self> {
        if sc_rates.len() != sinr.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} rates for {} small cells",
                sc_rates.len(),
                sinr.rows()
            )));
        }
        let rate = Matrix::from_fn(sinr.rows(), sinr.cols(), |i, _| sc_rates[i]);
        Self::from_rate_and_sinr(rate, sinr, sinr_min)
    }
}

/// Received power matrix (W) for every small cell / NFP pair.
pub fn received_power_matrix(scenario: &Scenario, env: &EnvironmentParams) -> Result<Matrix<f64>> {
    let n_sc = scenario.sc_positions.len();
    let n_d = scenario.nfp_positions.len();
    let mut rx = Matrix::filled(n_sc, n_d, 0.0);
    for (i, sc) in scenario.sc_positions.iter().enumerate() {
        for (j, nfp) in scenario.nfp_positions.iter().enumerate() {
            rx[(i, j)] = received_power_watts(path_loss_db(sc, nfp, env)?, env);
        }
    }
    Ok(rx)
}

/// SINR, spectral efficiency, bandwidth and eligibility for every pair of a
/// scenario. Rates are per small cell and identical towards every NFP.
pub fn compute_link_metrics(scenario: &Scenario, env: &EnvironmentParams, sinr_min: f64) -> Result<LinkMetrics> {
    env.validate()?;
    let rx = received_power_matrix(scenario, env)?;
    let sinr = Matrix::from_fn(rx.rows(), rx.cols(), |i, j| sinr_linear(i, j, &rx, env));
    LinkMetrics::from_sc_rates(&scenario.sc_rates, sinr, sinr_min)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
