//! Centralized maximal-cells greedy.
//!
//! Walks the eligible links in ascending score. The first link whose rate no
//! longer fits the backhaul ends the run. A link that fails its NFP's
//! bandwidth or link limit retires that NFP entirely.

use crate::instance::{AssociationInstance, AssociationMatrix};

use super::{sorted_eligible_links, ScoreWeights, Tracker};

pub fn solve_cmca(inst: &AssociationInstance, weights: &ScoreWeights) -> AssociationMatrix {
    run(inst, weights, cfg!(debug_assertions))
}

pub(super) fn run(inst: &AssociationInstance, weights: &ScoreWeights, audit: bool) -> AssociationMatrix {
    let links = sorted_eligible_links(inst, weights);
    let mut t = Tracker::new(inst, audit);
    let mut sc_done = vec![false; inst.n_sc()];
    let mut nfp_retired = vec![false; inst.n_d()];

    // Skipping links of associated cells and retired NFPs is the same as
    // deleting them from the list, so one ordered pass suffices.
    for link in &links {
        let (i, j) = (link.sc, link.nfp);
        if sc_done[i] || nfp_retired[j] {
            continue;
        }
        if !t.rate_fits(i, j) {
            break;
        }
        if t.nfp_fits(i, j) {
            t.associate(i, j);
            sc_done[i] = true;
        } else {
            nfp_retired[j] = true;
        }
    }
    t.a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{check_feasibility, objective};
    use crate::solvers::test_support::instance;

    #[test]
    fn no_eligible_links() {
        let inst = instance(&[30e6, 60e6], &[&[0.1, 0.2], &[0.05, 0.1]], 1e9, 1e9, 4, 0.5);
        assert_eq!(objective(&solve_cmca(&inst, &ScoreWeights::default())), 0);
    }

    #[test]
    fn two_links_three_cells() {
        let inst = instance(
            &[30e6, 60e6, 90e6],
            &[&[3.0, 3.0], &[3.0, 3.0], &[3.0, 3.0]],
            1e12,
            1e12,
            1,
            0.5,
        );
        let a = solve_cmca(&inst, &ScoreWeights::default());
        assert_eq!(a.assignment(), vec![Some(0), Some(1), None]);
        assert!(check_feasibility(&inst, &a).unwrap().feasible);
    }

    #[test]
    fn stops_at_first_rate_overflow() {
        // Cell 1 is cheaper than cell 2 but does not fit; cell 2 would.
        let inst = instance(&[50e6, 60e6, 40e6], &[&[100.0], &[100.0], &[1.0]], 100e6, 1e12, 10, 0.5);
        let a = solve_cmca(&inst, &ScoreWeights::default());
        assert_eq!(a.assignment(), vec![Some(0), None, None]);
    }

    #[test]
    fn bandwidth_failure_retires_the_nfp() {
        // b = 10 MHz on NFP 0 and 14.75 MHz on NFP 1; each NFP holds one cell.
        let inst = instance(
            &[10e6, 10e6, 10e6],
            &[&[1.0, 0.6], &[1.0, 0.6], &[1.0, 0.6]],
            1e12,
            15e6,
            10,
            0.5,
        );
        let a = solve_cmca(&inst, &ScoreWeights::default());
        assert_eq!(a.assignment(), vec![Some(0), Some(1), None]);
    }
}
