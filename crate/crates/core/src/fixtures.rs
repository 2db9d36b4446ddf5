//! Hand-built reference instances.
//!
//! `backhaul_limited` has 30 cells on 3 NFPs requesting 3.18 Gbps in total
//! (8 × 150, 6 × 120, 10 × 90 and 6 × 60 Mbps). Every link is eligible.
//! Each cell has a strong home NFP (`i % 3`, 20 dB) except three weak cells
//! (one 150 and two 120 Mbps, 0 dB at home). The weak cells carry the
//! highest scores, so under a 2.9 Gbps backhaul both greedy algorithms drop
//! exactly those three (27 served), whereas dropping two 150 Mbps cells
//! (28 served) is optimal.

use crate::channel::db_to_linear;
use crate::instance::{AssociationInstance, InstanceFile, NetworkLimits};

const MBPS: f64 = 1e6;

const RATES_MBPS: [f64; 30] = [
    90.0, 60.0, 150.0, 120.0, 150.0, 90.0, 60.0, 150.0, 90.0, 120.0, //
    120.0, 90.0, 150.0, 60.0, 90.0, 150.0, 120.0, 120.0, 90.0, 60.0, //
    150.0, 90.0, 120.0, 60.0, 90.0, 150.0, 90.0, 60.0, 150.0, 90.0,
];

/// Cells whose home link is weak.
pub const WEAK_CELLS: [usize; 3] = [4, 10, 17];

const N_D: usize = 3;
const HOME_SINR: f64 = 100.0;
const WEAK_HOME_SINR: f64 = 1.0;
const AWAY_SINR: f64 = 0.5;

pub fn backhaul_limited_rates() -> Vec<f64> {
    RATES_MBPS.iter().map(|r| r * MBPS).collect()
}

pub fn backhaul_limited_file() -> InstanceFile {
    let sinr = (0..RATES_MBPS.len())
        .map(|i| {
            (0..N_D)
                .map(|j| match (j == i % N_D, WEAK_CELLS.contains(&i)) {
                    (true, false) => HOME_SINR,
                    (true, true) => WEAK_HOME_SINR,
                    (false, _) => AWAY_SINR,
                })
                .collect()
        })
        .collect();
    InstanceFile {
        sc_rates: backhaul_limited_rates(),
        sinr,
    }
}

/// R = 2.9 Gbps, B = 1 GHz, N_l = 16, SINR_min = −5 dB.
pub fn backhaul_limited_limits() -> NetworkLimits {
    NetworkLimits::uniform(N_D, 2.9e9, 1e9, 16, db_to_linear(-5.0))
}

/// R = 2.9 Gbps with bandwidth and link limits that never bind.
pub fn backhaul_limited_ample_limits() -> NetworkLimits {
    NetworkLimits::uniform(N_D, 2.9e9, 1e15, 30, db_to_linear(-5.0))
}

pub fn backhaul_limited(limits: NetworkLimits) -> AssociationInstance {
    let metrics = backhaul_limited_file()
        .to_metrics(limits.sinr_min)
        .expect("fixture metrics are well formed");
    AssociationInstance::new(metrics, limits).expect("fixture limits match")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition() {
        let rates = backhaul_limited_rates();
        assert_eq!(rates.len(), 30);
        assert_eq!(rates.iter().sum::<f64>(), 3.18e9);
        let count = |r: f64| RATES_MBPS.iter().filter(|&&x| x == r).count();
        assert_eq!((count(150.0), count(120.0), count(90.0), count(60.0)), (8, 6, 10, 6));
        let weak: Vec<f64> = WEAK_CELLS.iter().map(|&i| RATES_MBPS[i]).collect();
        assert_eq!(weak, vec![150.0, 120.0, 120.0]);
    }

    #[test]
    fn every_link_eligible() {
        let inst = backhaul_limited(backhaul_limited_limits());
        assert!(inst.metrics.eligible.iter().all(|&e| e));
    }
}
