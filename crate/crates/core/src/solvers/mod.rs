//! Association solvers.
//!
//! Both greedy algorithms rank candidate links by a weighted sum of the
//! requested bandwidth and rate (lower is better). The exact solver is a
//! depth-first branch-and-bound used as the optimal reference.
//!
//! Ties are always broken by lowest small-cell index, then lowest NFP index.

mod cmca;
mod dmca;
mod exact;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::LinkMetrics;
use crate::error::{invalid, Error, Result};
use crate::instance::{AssociationInstance, AssociationMatrix};

pub use cmca::solve_cmca;
pub use dmca::{solve_dmca, DmcaOptions, Step2Rule, Step4Rule};
pub use exact::{solve_exact, ExactOutcome, DEFAULT_NODE_BUDGET};

/// Weights of the link score `w_b·b_ij + w_r·r_ij` (Hz and bit/s as raw
/// magnitudes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreWeights {
    pub w_bandwidth: f64,
    pub w_rate: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            w_bandwidth: 1.0,
            w_rate: 1.0,
        }
    }
}

impl ScoreWeights {
    pub fn new(w_bandwidth: f64, w_rate: f64) -> Result<Self> {
        let w = Self { w_bandwidth, w_rate };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.w_bandwidth) || !ok(self.w_rate) {
            return Err(invalid("weights", "weights must be finite and >= 0"));
        }
        if self.w_bandwidth == 0.0 && self.w_rate == 0.0 {
            return Err(invalid("weights", "weights must not both be 0"));
        }
        Ok(())
    }
}

impl FromStr for ScoreWeights {
    type Err = Error;

    /// Parses `WB,WR`.
    fn from_str(s: &str) -> Result<Self> {
        let (wb, wr) = s
            .split_once(',')
            .ok_or_else(|| invalid("weights", format!("expected WB,WR, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| invalid("weights", format!("`{v}`: {e}")))
        };
        Self::new(parse(wb)?, parse(wr)?)
    }
}

/// Score of the link between small cell `i` and NFP `j`.
#[inline]
pub fn score(i: usize, j: usize, metrics: &LinkMetrics, weights: &ScoreWeights) -> f64 {
    weights.w_bandwidth * metrics.bandwidth[(i, j)] + weights.w_rate * metrics.rate[(i, j)]
}

/// A candidate link and its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScoredLink {
    pub score: f64,
    pub sc: usize,
    pub nfp: usize,
}

impl ScoredLink {
    /// Ascending score, then lowest SC, then lowest NFP.
    pub fn cmp_min(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.sc.cmp(&other.sc))
            .then(self.nfp.cmp(&other.nfp))
    }

    /// Descending score, ties still towards the lowest SC, then NFP.
    pub fn cmp_max(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.sc.cmp(&other.sc))
            .then(self.nfp.cmp(&other.nfp))
    }
}

/// Running resource usage of a partial association.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverCounters {
    /// Links in use per NFP.
    pub links_used: Vec<usize>,
    /// Bandwidth in use per NFP, Hz.
    pub bandwidth_used: Vec<f64>,
    /// Total associated rate, bit/s.
    pub total_rate: f64,
}

impl SolverCounters {
    pub fn new(n_d: usize) -> Self {
        Self {
            links_used: vec![0; n_d],
            bandwidth_used: vec![0.0; n_d],
            total_rate: 0.0,
        }
    }

    /// Counters recomputed from scratch for `a`.
    pub fn recompute(metrics: &LinkMetrics, a: &AssociationMatrix) -> Self {
        let mut c = Self::new(metrics.n_d);
        for i in 0..metrics.n_sc {
            for j in 0..metrics.n_d {
                if a.get(i, j) {
                    c.add(metrics, i, j);
                }
            }
        }
        c
    }

    fn add(&mut self, m: &LinkMetrics, i: usize, j: usize) {
        self.links_used[j] += 1;
        self.bandwidth_used[j] += m.bandwidth[(i, j)];
        self.total_rate += m.rate[(i, j)];
    }

    fn remove(&mut self, m: &LinkMetrics, i: usize, j: usize) {
        self.links_used[j] -= 1;
        self.bandwidth_used[j] -= m.bandwidth[(i, j)];
        self.total_rate -= m.rate[(i, j)];
    }

    /// Equality up to floating-point drift relative to the instance limits.
    pub fn agrees_with(&self, other: &Self, inst: &AssociationInstance) -> bool {
        let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale.max(a.abs()).max(b.abs());
        self.links_used == other.links_used
            && close(self.total_rate, other.total_rate, inst.limits.backhaul_rate)
            && self
                .bandwidth_used
                .iter()
                .zip(&other.bandwidth_used)
                .zip(&inst.limits.nfp_bandwidth)
                .all(|((a, b), lim)| close(*a, *b, *lim))
    }
}

/// Association matrix plus counters kept in lock-step, with an optional
/// audit that recomputes the counters after every mutation.
pub(crate) struct Tracker<'a> {
    inst: &'a AssociationInstance,
    pub a: AssociationMatrix,
    pub counters: SolverCounters,
    audit: bool,
}

impl<'a> Tracker<'a> {
    pub fn new(inst: &'a AssociationInstance, audit: bool) -> Self {
        Self {
            inst,
            a: AssociationMatrix::zeros(inst.n_sc(), inst.n_d()),
            counters: SolverCounters::new(inst.n_d()),
            audit,
        }
    }

    /// Whether NFP `j` can take cell `i` without breaking its link or
    /// bandwidth limit.
    pub fn nfp_fits(&self, i: usize, j: usize) -> bool {
        let lim = &self.inst.limits;
        self.counters.links_used[j] < lim.nfp_max_links[j]
            && self.counters.bandwidth_used[j] + self.inst.metrics.bandwidth[(i, j)] <= lim.nfp_bandwidth[j]
    }

    pub fn rate_fits(&self, i: usize, j: usize) -> bool {
        self.counters.total_rate + self.inst.metrics.rate[(i, j)] <= self.inst.limits.backhaul_rate
    }

    pub fn associate(&mut self, i: usize, j: usize) {
        debug_assert!(!self.a.get(i, j));
        self.a.set(i, j, true);
        self.counters.add(&self.inst.metrics, i, j);
        self.check();
    }

    pub fn release(&mut self, i: usize, j: usize) {
        debug_assert!(self.a.get(i, j));
        self.a.set(i, j, false);
        self.counters.remove(&self.inst.metrics, i, j);
        self.check();
    }

    fn check(&self) {
        if self.audit {
            let fresh = SolverCounters::recompute(&self.inst.metrics, &self.a);
            assert!(
                self.counters.agrees_with(&fresh, self.inst),
                "counter audit failed: incremental {:?} vs recomputed {fresh:?}",
                self.counters
            );
        }
    }
}

/// Eligible links sorted by ascending score.
pub(crate) fn sorted_eligible_links(inst: &AssociationInstance, weights: &ScoreWeights) -> Vec<ScoredLink> {
    sorted_eligible_links_of(inst, weights, 0..inst.n_sc())
}

/// Eligible links of the given cells, ascending score.
pub(crate) fn sorted_eligible_links_of(
    inst: &AssociationInstance,
    weights: &ScoreWeights,
    cells: impl IntoIterator<Item = usize>,
) -> Vec<ScoredLink> {
    let m = &inst.metrics;
    let mut links = Vec::with_capacity(m.n_sc * m.n_d);
    for i in cells {
        let (elig, bw, rate) = (m.eligible.row(i), m.bandwidth.row(i), m.rate.row(i));
        for j in 0..m.n_d {
            if elig[j] {
                links.push(ScoredLink {
                    score: weights.w_bandwidth * bw[j] + weights.w_rate * rate[j],
                    sc: i,
                    nfp: j,
                });
            }
        }
    }
    links.sort_unstable_by(ScoredLink::cmp_min);
    links
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cmca,
    Dmca,
    Exact,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Cmca, SolverKind::Dmca, SolverKind::Exact];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Cmca => "cmca",
            SolverKind::Dmca => "dmca",
            SolverKind::Exact => "exact",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cmca" => Ok(SolverKind::Cmca),
            "dmca" => Ok(SolverKind::Dmca),
            "exact" => Ok(SolverKind::Exact),
            other => Err(invalid("solver", format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub weights: ScoreWeights,
    pub dmca: DmcaOptions,
    pub node_budget: u64,
    /// Recompute counters after every greedy mutation.
    #[serde(skip)]
    pub audit: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            weights: ScoreWeights::default(),
            dmca: DmcaOptions::default(),
            node_budget: DEFAULT_NODE_BUDGET,
            audit: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub matrix: AssociationMatrix,
    /// `Some` for the exact solver: whether the search finished within budget.
    pub proven_optimal: Option<bool>,
}

/// Runs the chosen solver.
pub fn solve(kind: SolverKind, inst: &AssociationInstance, opts: &SolverOptions) -> Solution {
    match kind {
        SolverKind::Cmca => Solution {
            matrix: cmca::run(inst, &opts.weights, opts.audit),
            proven_optimal: None,
        },
        SolverKind::Dmca => Solution {
            matrix: dmca::run(inst, &opts.weights, &opts.dmca, opts.audit),
            proven_optimal: None,
        },
        SolverKind::Exact => {
            let out = solve_exact(inst, opts.node_budget);
            Solution {
                matrix: out.matrix,
                proven_optimal: Some(out.proven_optimal),
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::channel::LinkMetrics;
    use crate::instance::{AssociationInstance, NetworkLimits};
    use crate::matrix::Matrix;

    /// Instance with a per-pair SINR and uniform limits.
    pub fn instance(rates: &[f64], sinr: &[&[f64]], r: f64, b: f64, n_l: usize, sinr_min: f64) -> AssociationInstance {
        let n_d = sinr.first().map_or(0, |row| row.len());
        let m =
            LinkMetrics::from_sc_rates(rates, Matrix::from_fn(rates.len(), n_d, |i, j| sinr[i][j]), sinr_min).unwrap();
        AssociationInstance::new(m, NetworkLimits::uniform(n_d, r, b, n_l, sinr_min)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn score_examples() {
        let sinr_min = 10f64.powf(-0.5);
        let m = LinkMetrics::from_sc_rates(&[30e6], Matrix::filled(1, 1, sinr_min), sinr_min).unwrap();
        let b = m.bandwidth[(0, 0)];
        let s = score(0, 0, &m, &ScoreWeights::default());
        assert!((s - (b + 30e6)).abs() < 1e-6);
        assert!((s - 105.679_381e6).abs() < 1.0, "{s}");
        assert_eq!(score(0, 0, &m, &ScoreWeights::new(1.0, 0.0).unwrap()), b);
        assert_eq!(score(0, 0, &m, &ScoreWeights::new(0.0, 1.0).unwrap()), 30e6);
    }

    #[test]
    fn weights_parse_and_validate() {
        let w: ScoreWeights = "2,0.5".parse().unwrap();
        assert_eq!(w, ScoreWeights::new(2.0, 0.5).unwrap());
        assert!("0,0".parse::<ScoreWeights>().is_err());
        assert!("-1,1".parse::<ScoreWeights>().is_err());
        assert!("1".parse::<ScoreWeights>().is_err());
    }

    #[test]
    fn solver_kind_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.as_str().parse::<SolverKind>().unwrap(), k);
        }
        assert!("bnb".parse::<SolverKind>().is_err());
    }
}
