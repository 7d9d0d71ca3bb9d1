//! Grenade moves: throw a problematic item into another bin and push every
//! item it conflicts with there to its cheapest other bin.
//!
//! Candidate moves are priced by performing them on the solution and
//! undoing them, so relocations that interact (two ejected items landing
//! in the same bin) are costed exactly.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::solution::{Relocation, Solution};
use crate::Rng;

/// Cheapest bin for `item` other than its own and `excluded`, with the
/// penalty change of moving it there. Lowest index wins ties; `None` if no
/// bin qualifies.
pub fn best_insertion(sol: &Solution, item: usize, excluded: usize) -> Option<(usize, i64)> {
    let own = sol.bin_of(item);
    let mut best: Option<(usize, i64)> = None;
    for b in 0..sol.bin_count() {
        if b == own || b == excluded {
            continue;
        }
        let d = sol.relocation_delta(item, b);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((b, d));
        }
    }
    best
}

/// Performs the grenade move of `item` into `target`; returns the undo log,
/// or `None` (with the solution restored) if an ejected item has nowhere
/// to go.
fn throw(sol: &mut Solution, item: usize, target: usize, rng: &mut Rng) -> Option<Vec<Relocation>> {
    let mut log = Vec::new();
    log.push(sol.relocate(item, target));
    let mut ejected: Vec<usize> = sol
        .bin(target)
        .items()
        .iter()
        .copied()
        .filter(|&i| i != item && sol.instance().conflicts().is_conflict(item, i))
        .collect();
    ejected.shuffle(rng);
    for i in ejected {
        match best_insertion(sol, i, target) {
            Some((b, _)) => log.push(sol.relocate(i, b)),
            None => {
                rollback(sol, log);
                return None;
            }
        }
    }
    Some(log)
}

fn rollback(sol: &mut Solution, log: Vec<Relocation>) {
    for r in log.into_iter().rev() {
        sol.undo(r);
    }
}

/// One pass over the problematic items in random order, applying for each
/// the best grenade move when it strictly lowers the penalty. Returns the
/// total applied change, `None` if nothing was applied.
pub fn grenade_step(sol: &mut Solution, rng: &mut Rng) -> Option<i64> {
    if sol.bin_count() < 2 {
        return None;
    }
    let mut problematic = sol.problematic_items();
    problematic.shuffle(rng);
    let mut total = 0;
    let mut applied = false;
    for k in problematic {
        let mut best: Option<(i64, Vec<(usize, usize)>)> = None;
        for target in 0..sol.bin_count() {
            if target == sol.bin_of(k) {
                continue;
            }
            let before = sol.total_penalty();
            let Some(log) = throw(sol, k, target, rng) else { continue };
            let delta = sol.total_penalty() - before;
            let plan: Vec<(usize, usize)> = log.iter().map(|r| (r.item, r.to)).collect();
            rollback(sol, log);
            debug_assert_eq!(sol.total_penalty(), before);
            if best.as_ref().is_none_or(|(d, _)| delta < *d) {
                best = Some((delta, plan));
            }
        }
        if let Some((delta, plan)) = best {
            if delta < 0 {
                let before = sol.total_penalty();
                for (item, bin) in plan {
                    sol.relocate(item, bin);
                }
                debug_assert_eq!(sol.total_penalty() - before, delta);
                total += delta;
                applied = true;
            }
        }
    }
    applied.then_some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConflictGraph, GeneratorSpec, GraphKind, Instance, InstanceClass};
    use crate::rng_from_seed;
    use crate::solution::{BinRemoval, FfdOrder, PenaltyWeights};
    use alloc::vec;

    #[test]
    fn insertion_prefers_free_compatible_bin() {
        let graph = ConflictGraph::from_edges(4, [(0, 2)]).unwrap();
        let inst = Instance::new("t", 10, vec![5, 6, 4, 1], graph).unwrap();
        let w = PenaltyWeights::for_instance(&inst);
        let sol = Solution::from_bins(&inst, w, vec![vec![0, 1], vec![2], vec![3]]);
        let (bin, delta) = best_insertion(&sol, 0, 1).unwrap();
        assert_eq!(bin, 2);
        assert_eq!(delta, -1);
        let mut copy = sol.clone();
        copy.relocate(0, bin);
        assert_eq!(copy.total_penalty() - sol.total_penalty(), delta);
        // Only bin 1 is left and it holds a conflicting item.
        let (bin, delta) = best_insertion(&sol, 0, 2).unwrap();
        assert_eq!(bin, 1);
        assert!(delta > 0);
    }

    #[test]
    fn clears_two_conflicts_at_once() {
        // Item 0 conflicts with 1 in bin 0. Bin 1 holds 2 and 3, both in
        // conflict with 0 but free to move to the empty bins 2 and 3.
        let graph = ConflictGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let inst = Instance::new("t", 10, vec![3, 3, 3, 3], graph).unwrap();
        let w = PenaltyWeights::for_instance(&inst);
        let mut sol = Solution::from_bins(&inst, w, vec![vec![0, 1], vec![2, 3], vec![], vec![]]);
        let before = sol.total_penalty();
        let d = grenade_step(&mut sol, &mut rng_from_seed(1)).unwrap();
        assert!(d < 0);
        assert_eq!(sol.total_penalty(), before + d);
        assert!(sol.is_feasible());
        sol.check_invariants().unwrap();
    }

    #[test]
    fn no_room_means_no_move() {
        // Item 0 is problematic only through overload, and every other bin
        // is full.
        let inst = Instance::new("t", 10, vec![6, 5, 10, 10], ConflictGraph::empty(4)).unwrap();
        let w = PenaltyWeights::for_instance(&inst);
        let mut sol = Solution::from_bins(&inst, w, vec![vec![0, 1], vec![2], vec![3]]);
        let before = sol.packing();
        assert_eq!(grenade_step(&mut sol, &mut rng_from_seed(0)), None);
        assert_eq!(sol.packing(), before);
    }

    #[test]
    fn never_worsens() {
        let mut rng = rng_from_seed(9);
        for seed in 0..40 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Interval, n: 60, density: 0.4, seed }
                .generate()
                .unwrap();
            let mut sol = Solution::first_fit(&inst, PenaltyWeights::for_instance(&inst), FfdOrder::Decreasing);
            sol.remove_bin(BinRemoval::MinLoad, &mut rng);
            sol.remove_bin(BinRemoval::MinLoad, &mut rng);
            let before = sol.total_penalty();
            let applied = grenade_step(&mut sol, &mut rng);
            assert_eq!(applied.unwrap_or(0), sol.total_penalty() - before);
            assert!(sol.total_penalty() <= before);
            sol.check_invariants().unwrap();
        }
    }
}
