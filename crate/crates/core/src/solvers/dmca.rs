//! Distributed maximal-cells greedy, in four steps.
//!
//! 1. Every small cell requests its single cheapest eligible NFP.
//! 2. Every NFP grants its requests in ascending score while it has link and
//!    bandwidth room.
//! 3. If backhaul capacity remains, the cheapest unassociated (cell, NFP)
//!    pair that still fits every limit is associated, repeatedly.
//! 4. If the backhaul is overrun, associated pairs are dropped until it fits.

use serde::{Deserialize, Serialize};

use crate::instance::{AssociationInstance, AssociationMatrix};

use super::{score, sorted_eligible_links_of, ScoreWeights, ScoredLink, Tracker};

/// What an NFP does in step 2 when the next request does not fit its
/// bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step2Rule {
    /// Stop granting.
    #[default]
    Break,
    /// Try the next request.
    Skip,
}

/// Which associated pair step 4 drops next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step4Rule {
    /// Highest score first, until the backhaul fits.
    #[default]
    Pseudocode,
    /// Highest rate `r` with `C_r − r ≥ R` first; when no cell qualifies, the
    /// lowest-rate cell (whose removal always ends the step).
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmcaOptions {
    pub step2: Step2Rule,
    pub step4: Step4Rule,
}

pub fn solve_dmca(inst: &AssociationInstance, weights: &ScoreWeights, opts: &DmcaOptions) -> AssociationMatrix {
    run(inst, weights, opts, cfg!(debug_assertions))
}

pub(super) fn run(
    inst: &AssociationInstance,
    weights: &ScoreWeights,
    opts: &DmcaOptions,
    audit: bool,
) -> AssociationMatrix {
    let m = &inst.metrics;
    let mut t = Tracker::new(inst, audit);

    // Step 1: one request per cell.
    let mut requests: Vec<ScoredLink> = Vec::with_capacity(m.n_sc);
    for i in 0..m.n_sc {
        let (elig, bw, rate) = (m.eligible.row(i), m.bandwidth.row(i), m.rate.row(i));
        let mut best: Option<ScoredLink> = None;
        for j in 0..m.n_d {
            let s = weights.w_bandwidth * bw[j] + weights.w_rate * rate[j];
            // Strict comparison keeps the lowest NFP index on ties.
            if elig[j] && best.is_none_or(|b| s < b.score) {
                best = Some(ScoredLink {
                    score: s,
                    sc: i,
                    nfp: j,
                });
            }
        }
        requests.extend(best);
    }

    // Step 2: each NFP serves its own queue in ascending score.
    let lim = &inst.limits;
    requests.sort_unstable_by(|a, b| a.nfp.cmp(&b.nfp).then_with(|| a.cmp_min(b)));
    for queue in requests.chunk_by(|a, b| a.nfp == b.nfp) {
        let j = queue[0].nfp;
        for link in queue {
            if !(t.counters.links_used[j] < lim.nfp_max_links[j] && t.counters.bandwidth_used[j] < lim.nfp_bandwidth[j])
            {
                break;
            }
            if t.counters.bandwidth_used[j] + m.bandwidth[(link.sc, j)] <= lim.nfp_bandwidth[j] {
                t.associate(link.sc, j);
            } else if opts.step2 == Step2Rule::Break {
                break;
            }
        }
    }

    // Step 3: top up while backhaul remains. Counters only grow here, so a
    // pair that does not fit now never will; one ordered pass is the same as
    // repeatedly picking the cheapest fitting pair.
    if t.counters.total_rate < lim.backhaul_rate {
        let waiting = (0..m.n_sc).filter(|&i| t.a.serving(i).is_none());
        for link in sorted_eligible_links_of(inst, weights, waiting) {
            let (i, j) = (link.sc, link.nfp);
            if t.a.serving(i).is_none() && t.nfp_fits(i, j) && t.rate_fits(i, j) {
                t.associate(i, j);
            }
        }
    }

    // Step 4: shed load until the backhaul fits.
    if t.counters.total_rate > lim.backhaul_rate {
        let mut held: Vec<ScoredLink> = (0..m.n_sc)
            .filter_map(|i| {
                t.a.serving(i).map(|j| ScoredLink {
                    score: score(i, j, m, weights),
                    sc: i,
                    nfp: j,
                })
            })
            .collect();
        match opts.step4 {
            Step4Rule::Pseudocode => {
                held.sort_unstable_by(ScoredLink::cmp_max);
                for link in held {
                    if t.counters.total_rate <= lim.backhaul_rate {
                        break;
                    }
                    t.release(link.sc, link.nfp);
                }
            }
            Step4Rule::Prose => {
                let rate = |l: &ScoredLink| m.rate[(l.sc, l.nfp)];
                // Descending rate, lowest index first among equals.
                held.sort_by(|a, b| rate(b).total_cmp(&rate(a)).then(a.sc.cmp(&b.sc)));
                while t.counters.total_rate > lim.backhaul_rate && !held.is_empty() {
                    let c_r = t.counters.total_rate;
                    let k = held
                        .iter()
                        .position(|l| c_r - rate(l) >= lim.backhaul_rate)
                        .unwrap_or(held.len() - 1);
                    let link = held.remove(k);
                    t.release(link.sc, link.nfp);
                }
            }
        }
    }

    t.a
}
