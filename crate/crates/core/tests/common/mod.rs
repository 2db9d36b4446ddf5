#![allow(dead_code)]

use nfp_assoc::channel::{db_to_linear, LinkMetrics};
use nfp_assoc::instance::{AssociationInstance, NetworkLimits};
use nfp_assoc::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE_CHOICES: [f64; 5] = [30e6, 60e6, 90e6, 120e6, 150e6];

/// Random instance with `n_sc` cells and `n_d` NFPs. Limits are drawn so that
/// every constraint binds some of the time.
pub fn random_instance(seed: u64, n_sc: usize, n_d: usize) -> AssociationInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sc_rates: Vec<f64> = (0..n_sc).map(|_| RATE_CHOICES[rng.random_range(0..5)]).collect();
    let sinr = Matrix::from_fn(n_sc, n_d, |_, _| db_to_linear(rng.random_range(-10.0..25.0)));
    let total: f64 = sc_rates.iter().sum();
    let limits = NetworkLimits {
        backhaul_rate: (total * rng.random_range(0.2..1.2)).max(1e6),
        nfp_bandwidth: (0..n_d).map(|_| rng.random_range(20e6..600e6)).collect(),
        nfp_max_links: (0..n_d).map(|_| rng.random_range(1..=n_sc.max(1))).collect(),
        sinr_min: db_to_linear(-5.0),
    };
    let metrics = LinkMetrics::from_sc_rates(&sc_rates, sinr, limits.sinr_min).unwrap();
    AssociationInstance::new(metrics, limits).unwrap()
}

/// Feasibility written from the constraint definitions, independent of the
/// library checker.
pub fn oracle_feasible(inst: &AssociationInstance, assign: &[Option<usize>]) -> bool {
    let m = &inst.metrics;
    let lim = &inst.limits;
    let tol = |cap: f64| cap * (1.0 + 1e-6);
    let mut rate = 0.0;
    let mut bw = vec![0.0; m.n_d];
    let mut links = vec![0usize; m.n_d];
    for (i, a) in assign.iter().enumerate() {
        if let Some(j) = *a {
            if m.sinr[(i, j)] < lim.sinr_min || !m.bandwidth[(i, j)].is_finite() {
                return false;
            }
            rate += m.rate[(i, j)];
            bw[j] += m.bandwidth[(i, j)];
            links[j] += 1;
        }
    }
    rate <= tol(lim.backhaul_rate)
        && (0..m.n_d).all(|j| bw[j] <= tol(lim.nfp_bandwidth[j]) && links[j] <= lim.nfp_max_links[j])
}

/// Optimum by enumerating all `(n_d + 1)^n_sc` assignments.
pub fn enumerate_optimum(inst: &AssociationInstance) -> usize {
    let (n_sc, n_d) = (inst.n_sc(), inst.n_d());
    let mut assign = vec![None; n_sc];
    let mut best = 0;
    fn rec(inst: &AssociationInstance, i: usize, n_d: usize, assign: &mut Vec<Option<usize>>, best: &mut usize) {
        if i == assign.len() {
            if oracle_feasible(inst, assign) {
                *best = (*best).max(assign.iter().flatten().count());
            }
            return;
        }
        for choice in (0..n_d).map(Some).chain(std::iter::once(None)) {
            assign[i] = choice;
            rec(inst, i + 1, n_d, assign, best);
        }
        assign[i] = None;
    }
    rec(inst, 0, n_d, &mut assign, &mut best);
    best
}
