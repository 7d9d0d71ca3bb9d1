//! Reinsertion of one problematic item and one sampled item per other bin
//! through a linear assignment problem.
//!
//! Every selected item leaves a hole in its bin. Since each bin contributes
//! at most one selected item and receives exactly one back, the cost of
//! filling a hole depends only on the item put there, and any matching of
//! items to holes is priced exactly by the sum of its entries.

use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use super::hungarian::{self, CostMatrix};
use crate::solution::Solution;
use crate::Rng;

/// Tie-break penalty on the problematic item staying in its own hole.
pub const EPSILON: i64 = 1;

#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    /// Selected items; the problematic item comes first.
    pub nodes: Vec<usize>,
    /// `homes[a]` is the bin of `nodes[a]`.
    pub homes: Vec<usize>,
    /// `cost[a][b]`: penalty change of bin `homes[b]` when `nodes[b]` is
    /// replaced by `nodes[a]`, plus [`EPSILON`] on entry `(0, 0)`.
    pub cost: CostMatrix,
}

impl AssignmentProblem {
    /// Builds the problem around a random problematic item, or returns
    /// `None` when the solution has none. `max_nodes` caps the number of
    /// selected items.
    pub fn sample(sol: &Solution, rng: &mut Rng, max_nodes: Option<usize>) -> Option<Self> {
        let problematic = sol.problematic_items();
        let &k = problematic.choose(rng)?;
        let home = sol.bin_of(k);

        let mut bins: Vec<usize> = (0..sol.bin_count())
            .filter(|&b| b != home && !sol.bin(b).is_empty())
            .collect();
        if let Some(cap) = max_nodes {
            let keep = cap.saturating_sub(1).min(bins.len());
            let mut picked: Vec<usize> = index::sample(rng, bins.len(), keep).into_iter().map(|p| bins[p]).collect();
            picked.sort_unstable();
            bins = picked;
        }

        let mut nodes = Vec::with_capacity(bins.len() + 1);
        let mut homes = Vec::with_capacity(bins.len() + 1);
        nodes.push(k);
        homes.push(home);
        for b in bins {
            let items = sol.bin(b).items();
            nodes.push(items[rng.gen_range(0..items.len())]);
            homes.push(b);
        }

        let size = nodes.len();
        let mut cost = CostMatrix::filled(size, 0);
        for (b, (&hole, &bin)) in nodes.iter().zip(&homes).enumerate() {
            let w_out = sol.instance().weight(hole) as i64;
            let c_out = sol.conf(hole, bin);
            let base = sol.bin_penalty(bin);
            for (a, &item) in nodes.iter().enumerate() {
                if a == b {
                    continue;
                }
                let gained = sol.conf(item, bin) - sol.is_conflict(item, hole) as i64;
                let w_in = sol.instance().weight(item) as i64;
                cost.set(a, b, sol.bin_penalty_after(bin, w_in - w_out, gained - c_out) - base);
            }
        }
        cost.set(0, 0, EPSILON);
        Some(AssignmentProblem { nodes, homes, cost })
    }
}

/// One exploration of the assignment neighborhood. The optimal matching
/// is applied when it moves at least one item and does not increase the
/// penalty; returns the applied penalty change.
pub fn assignment_step(sol: &mut Solution, rng: &mut Rng, max_nodes: Option<usize>) -> Option<i64> {
    let problem = AssignmentProblem::sample(sol, rng, max_nodes)?;
    let matching = hungarian::solve(&problem.cost);
    if matching.iter().enumerate().all(|(a, &b)| a == b) {
        return None;
    }
    let mut delta = problem.cost.cost_of(&matching);
    if matching[0] == 0 {
        delta -= EPSILON;
    }
    if delta > 0 {
        return None;
    }
    let before = sol.total_penalty();
    for (a, &b) in matching.iter().enumerate() {
        if a != b {
            sol.relocate(problem.nodes[a], problem.homes[b]);
        }
    }
    debug_assert_eq!(sol.total_penalty() - before, delta);
    Some(delta)
}
