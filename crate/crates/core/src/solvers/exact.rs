//! Exact solver: depth-first branch-and-bound over small cells in index
//! order.
//!
//! Each node decides one cell: one child per eligible NFP that still fits
//! every limit (cheapest bandwidth first), then a child leaving the cell
//! unassociated. A node is pruned when its associated count plus an upper
//! bound on what the undecided cells can still add does not beat the
//! incumbent. The bound is the smallest of
//!
//! * the number of undecided cells that fit on some NFP right now,
//! * how many of their smallest rates fit in the remaining backhaul,
//! * the sum over NFPs of how many of their smallest bandwidths fit in the
//!   NFP's remaining bandwidth and link room.
//!
//! Each is a relaxation of the remaining problem, so pruning never discards
//! an optimum.

use crate::instance::{AssociationInstance, AssociationMatrix};

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Relative slack on bound arithmetic so summation order never makes a
/// bound undercount.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub matrix: AssociationMatrix,
    /// False when the node budget ran out before the search finished.
    pub proven_optimal: bool,
    pub nodes: u64,
}

pub fn solve_exact(inst: &AssociationInstance, node_budget: u64) -> ExactOutcome {
    let mut search = Search::new(inst, node_budget);
    search.root_bound = search.bound(0);
    search.dfs(0);
    ExactOutcome {
        matrix: AssociationMatrix::from_assignment(inst.n_d(), &search.best),
        proven_optimal: !search.exhausted,
        nodes: search.nodes,
    }
}

struct Search<'a> {
    inst: &'a AssociationInstance,
    n_sc: usize,
    /// Eligible NFPs per cell, ascending bandwidth.
    children: Vec<Vec<usize>>,
    /// Eligible cells per NFP, ascending bandwidth.
    by_bandwidth: Vec<Vec<usize>>,
    /// Cells with at least one eligible NFP, ascending minimum rate.
    by_rate: Vec<usize>,
    min_rate: Vec<f64>,

    assign: Vec<Option<usize>>,
    links: Vec<usize>,
    bandwidth: Vec<f64>,
    rate: f64,
    count: usize,

    placeable: Vec<bool>,

    best: Vec<Option<usize>>,
    best_count: usize,
    root_bound: usize,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(inst: &'a AssociationInstance, budget: u64) -> Self {
        let m = &inst.metrics;
        let (n_sc, n_d) = (m.n_sc, m.n_d);
        let bw = |i: usize, j: usize| m.bandwidth[(i, j)];

        let children: Vec<Vec<usize>> = (0..n_sc)
            .map(|i| {
                let mut js: Vec<usize> = (0..n_d).filter(|&j| m.eligible[(i, j)]).collect();
                js.sort_by(|&a, &b| bw(i, a).total_cmp(&bw(i, b)).then(a.cmp(&b)));
                js
            })
            .collect();
        let by_bandwidth = (0..n_d)
            .map(|j| {
                let mut is: Vec<usize> = (0..n_sc).filter(|&i| m.eligible[(i, j)]).collect();
                is.sort_by(|&a, &b| bw(a, j).total_cmp(&bw(b, j)).then(a.cmp(&b)));
                is
            })
            .collect();
        let min_rate: Vec<f64> = (0..n_sc)
            .map(|i| {
                children[i]
                    .iter()
                    .map(|&j| m.rate[(i, j)])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut by_rate: Vec<usize> = (0..n_sc).filter(|&i| !children[i].is_empty()).collect();
        by_rate.sort_by(|&a, &b| min_rate[a].total_cmp(&min_rate[b]).then(a.cmp(&b)));

        Self {
            inst,
            n_sc,
            children,
            by_bandwidth,
            by_rate,
            min_rate,
            assign: vec![None; n_sc],
            links: vec![0; n_d],
            bandwidth: vec![0.0; n_d],
            rate: 0.0,
            count: 0,
            placeable: vec![false; n_sc],
            best: vec![None; n_sc],
            best_count: 0,
            root_bound: usize::MAX,
            nodes: 0,
            budget,
            exhausted: false,
        }
    }

    #[inline]
    fn fits(&self, i: usize, j: usize) -> bool {
        let m = &self.inst.metrics;
        let lim = &self.inst.limits;
        self.links[j] < lim.nfp_max_links[j]
            && self.bandwidth[j] + m.bandwidth[(i, j)] <= lim.nfp_bandwidth[j]
            && self.rate + m.rate[(i, j)] <= lim.backhaul_rate
    }

    /// Upper bound on how many of cells `depth..` can still be associated.
    fn bound(&mut self, depth: usize) -> usize {
        let m = &self.inst.metrics;
        let lim = &self.inst.limits;

        let mut placeable = 0;
        for i in 0..self.n_sc {
            let ok = i >= depth && self.children[i].iter().any(|&j| self.fits(i, j));
            self.placeable[i] = ok;
            placeable += ok as usize;
        }
        if placeable == 0 {
            return 0;
        }

        let rate_room = (lim.backhaul_rate - self.rate) * (1.0 + BOUND_SLACK) + BOUND_SLACK;
        let mut rate_count = 0;
        let mut acc = 0.0;
        for &i in &self.by_rate {
            if !self.placeable[i] {
                continue;
            }
            if acc + self.min_rate[i] > rate_room {
                break;
            }
            acc += self.min_rate[i];
            rate_count += 1;
        }

        let mut nfp_count = 0;
        for (j, cells) in self.by_bandwidth.iter().enumerate() {
            let slots = lim.nfp_max_links[j] - self.links[j];
            let room = (lim.nfp_bandwidth[j] - self.bandwidth[j]) * (1.0 + BOUND_SLACK) + BOUND_SLACK;
            let mut acc = 0.0;
            let mut n = 0;
            for &i in cells {
                if n == slots {
                    break;
                }
                if !self.placeable[i] || !self.fits(i, j) {
                    continue;
                }
                let b = m.bandwidth[(i, j)];
                if acc + b > room {
                    break;
                }
                acc += b;
                n += 1;
            }
            nfp_count += n;
        }

        placeable.min(rate_count).min(nfp_count)
    }

    fn dfs(&mut self, depth: usize) {
        if self.exhausted || self.best_count >= self.root_bound {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if self.count > self.best_count {
            self.best_count = self.count;
            self.best.copy_from_slice(&self.assign);
        }
        if depth == self.n_sc || self.count + (self.n_sc - depth) <= self.best_count {
            return;
        }
        if self.count + self.bound(depth) <= self.best_count {
            return;
        }

        let m = &self.inst.metrics;
        for k in 0..self.children[depth].len() {
            let j = self.children[depth][k];
            if !self.fits(depth, j) {
                continue;
            }
            let (b, r) = (m.bandwidth[(depth, j)], m.rate[(depth, j)]);
            let saved = (self.bandwidth[j], self.rate);
            self.assign[depth] = Some(j);
            self.links[j] += 1;
            self.bandwidth[j] += b;
            self.rate += r;
            self.count += 1;

            self.dfs(depth + 1);

            self.count -= 1;
            self.links[j] -= 1;
            (self.bandwidth[j], self.rate) = saved;
            self.assign[depth] = None;
            if self.exhausted || self.best_count >= self.root_bound {
                return;
            }
        }
        self.dfs(depth + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{check_feasibility, objective};
    use crate::solvers::test_support::instance;

    #[test]
    fn everything_fits() {
        let inst = instance(
            &[30e6, 60e6, 90e6],
            &[&[3.0, 1.0], &[1.0, 3.0], &[2.0, 2.0]],
            1e12,
            1e12,
            5,
            0.5,
        );
        let out = solve_exact(&inst, DEFAULT_NODE_BUDGET);
        assert!(out.proven_optimal);
        assert_eq!(objective(&out.matrix), 3);
    }

    #[test]
    fn picks_the_two_small_rates() {
        // Only two of {100, 40, 50} Mbps fit in 95 Mbps: 40 + 50.
        let inst = instance(&[100e6, 40e6, 50e6], &[&[3.0], &[3.0], &[3.0]], 95e6, 1e12, 5, 0.5);
        let out = solve_exact(&inst, DEFAULT_NODE_BUDGET);
        assert_eq!(out.matrix.assignment(), vec![None, Some(0), Some(0)]);
        assert!(check_feasibility(&inst, &out.matrix).unwrap().feasible);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let rates: Vec<f64> = (0..14).map(|k| 10e6 + k as f64 * 7e6).collect();
        let sinr: Vec<[f64; 2]> = (0..14).map(|k| [1.0 + k as f64 * 0.3, 3.0 - k as f64 * 0.1]).collect();
        let rows: Vec<&[f64]> = sinr.iter().map(|r| r.as_slice()).collect();
        let inst = instance(&rates, &rows, 500e6, 150e6, 6, 0.5);
        let out = solve_exact(&inst, 3);
        assert!(!out.proven_optimal);
        assert!(out.nodes <= 4);
        assert!(check_feasibility(&inst, &out.matrix).unwrap().feasible);
    }

    #[test]
    fn empty_instance() {
        let inst = instance(&[], &[], 1e9, 1e9, 1, 0.5);
        let out = solve_exact(&inst, 10);
        assert!(out.proven_optimal);
        assert_eq!(objective(&out.matrix), 0);
    }
}
