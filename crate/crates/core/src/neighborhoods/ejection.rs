//! Ejection chains restricted to a random bin order.
//!
//! Given an order of the bins, the auxiliary graph has one node per item,
//! one "zero" node per bin and a source. Arcs only go from a bin to a later
//! bin in the order, so the graph is acyclic and any path touches each bin
//! at most once. An arc into item `j` means `j` leaves its bin (replaced by
//! the arc's tail item, if the tail is an item); an arc from item `i` into
//! the zero node of bin `k` inserts `i` into `k` and closes a chain. Arc
//! costs are single-bin penalty changes, so a path's cost is exactly the
//! penalty change of performing all its relocations.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::solution::Solution;
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Source,
    Item(usize),
    /// End-of-chain node of a bin.
    Zero(usize),
}

/// Shortest source-to-zero path and its cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub cost: i64,
    /// Starts with [`Node::Source`], ends with a [`Node::Zero`].
    pub nodes: Vec<Node>,
}

impl Chain {
    /// `(item, destination bin)` for every relocation on the path.
    pub fn relocations(&self, sol: &Solution) -> Vec<(usize, usize)> {
        self.nodes
            .windows(2)
            .filter_map(|arc| match (arc[0], arc[1]) {
                (Node::Item(i), Node::Item(j)) => Some((i, sol.bin_of(j))),
                (Node::Item(i), Node::Zero(k)) => Some((i, k)),
                _ => None,
            })
            .collect()
    }
}

const UNREACHED: i64 = i64::MAX / 4;

pub struct EjectionGraph<'s, 'a> {
    sol: &'s Solution<'a>,
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl<'s, 'a> EjectionGraph<'s, 'a> {
    /// Graph over a uniformly random bin order.
    pub fn random(sol: &'s Solution<'a>, rng: &mut Rng) -> Self {
        let mut order: Vec<usize> = (0..sol.bin_count()).collect();
        order.shuffle(rng);
        Self::with_order(sol, order)
    }

    /// Panics unless `order` is a permutation of the bins.
    pub fn with_order(sol: &'s Solution<'a>, order: Vec<usize>) -> Self {
        let mut rank = vec![usize::MAX; sol.bin_count()];
        for (r, &b) in order.iter().enumerate() {
            assert_eq!(rank[b], usize::MAX, "bin {b} repeated in order");
            rank[b] = r;
        }
        assert!(rank.iter().all(|&r| r != usize::MAX), "order misses a bin");
        EjectionGraph { sol, order, rank }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn rank_of(&self, node: Node) -> Option<usize> {
        match node {
            Node::Source => None,
            Node::Item(i) => Some(self.rank[self.sol.bin_of(i)]),
            Node::Zero(k) => Some(self.rank[k]),
        }
    }

    /// Penalty change of bin `B(j)` when `j` leaves it.
    pub fn removal_cost(&self, j: usize) -> i64 {
        let sol = self.sol;
        let b = sol.bin_of(j);
        let w = sol.instance().weight(j) as i64;
        sol.bin_penalty_after(b, -w, -sol.conf(j, b)) - sol.bin_penalty(b)
    }

    /// Penalty change of bin `B(j)` when `i` takes the place of `j`.
    pub fn replacement_cost(&self, i: usize, j: usize) -> i64 {
        let sol = self.sol;
        let b = sol.bin_of(j);
        let dw = sol.instance().weight(i) as i64 - sol.instance().weight(j) as i64;
        let dc = sol.conf(i, b) - sol.is_conflict(i, j) as i64 - sol.conf(j, b);
        sol.bin_penalty_after(b, dw, dc) - sol.bin_penalty(b)
    }

    /// Penalty change of bin `k` when `i` is inserted.
    pub fn insertion_cost(&self, i: usize, k: usize) -> i64 {
        let sol = self.sol;
        sol.bin_penalty_after(k, sol.instance().weight(i) as i64, sol.conf(i, k)) - sol.bin_penalty(k)
    }

    /// Cost of arc `from -> to`, or `None` if the arc does not exist.
    pub fn arc_cost(&self, from: Node, to: Node) -> Option<i64> {
        if let Some(r) = self.rank_of(from) {
            if r >= self.rank_of(to)? {
                return None;
            }
        }
        match (from, to) {
            (_, Node::Source) => None,
            (Node::Source | Node::Zero(_), Node::Item(j)) => Some(self.removal_cost(j)),
            (Node::Item(i), Node::Item(j)) => Some(self.replacement_cost(i, j)),
            (Node::Item(i), Node::Zero(k)) => Some(self.insertion_cost(i, k)),
            (Node::Source | Node::Zero(_), Node::Zero(_)) => None,
        }
    }

    /// All nodes other than the source.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.sol.instance().len())
            .map(Node::Item)
            .chain((0..self.sol.bin_count()).map(Node::Zero))
    }

    /// Cheapest path from the source to any zero node, by dynamic
    /// programming over the bins in order. `None` if no such path exists
    /// (fewer than two non-empty-reachable bins).
    pub fn shortest_path(&self) -> Option<Chain> {
        let sol = self.sol;
        let n = sol.instance().len();
        let k = sol.bin_count();
        let mut dist_item = vec![UNREACHED; n];
        let mut pred_item = vec![Node::Source; n];
        let mut dist_zero = vec![UNREACHED; k];
        let mut pred_zero = vec![Node::Source; k];

        // Best start for a chain: the source or an earlier closed chain.
        let mut best_start = (0i64, Node::Source);
        let mut earlier: Vec<usize> = Vec::with_capacity(n);

        for &b in &self.order {
            for &j in sol.bin(b).items() {
                let mut best = (best_start.0 + self.removal_cost(j), best_start.1);
                for &i in &earlier {
                    if dist_item[i] >= UNREACHED {
                        continue;
                    }
                    let d = dist_item[i] + self.replacement_cost(i, j);
                    if d < best.0 {
                        best = (d, Node::Item(i));
                    }
                }
                dist_item[j] = best.0;
                pred_item[j] = best.1;
            }
            for &i in &earlier {
                if dist_item[i] >= UNREACHED {
                    continue;
                }
                let d = dist_item[i] + self.insertion_cost(i, b);
                if d < dist_zero[b] {
                    dist_zero[b] = d;
                    pred_zero[b] = Node::Item(i);
                }
            }
            earlier.extend_from_slice(sol.bin(b).items());
            if dist_zero[b] < best_start.0 {
                best_start = (dist_zero[b], Node::Zero(b));
            }
        }

        let end = (0..k).filter(|&b| dist_zero[b] < UNREACHED).min_by_key(|&b| (dist_zero[b], self.rank[b]))?;
        let mut nodes = vec![Node::Zero(end)];
        let mut at = Node::Zero(end);
        loop {
            let prev = match at {
                Node::Item(i) => pred_item[i],
                Node::Zero(z) => pred_zero[z],
                Node::Source => break,
            };
            nodes.push(prev);
            at = prev;
        }
        nodes.reverse();
        Some(Chain { cost: dist_zero[end], nodes })
    }
}

/// Builds the graph over a random order and applies the shortest chain if
/// it improves the penalty. Returns the applied change.
pub fn ejection_step(sol: &mut Solution, rng: &mut Rng) -> Option<i64> {
    if sol.bin_count() < 2 {
        return None;
    }
    let (cost, moves) = {
        let graph = EjectionGraph::random(sol, rng);
        let chain = graph.shortest_path()?;
        if chain.cost >= 0 {
            return None;
        }
        (chain.cost, chain.relocations(sol))
    };
    let before = sol.total_penalty();
    for (item, bin) in moves {
        sol.relocate(item, bin);
    }
    debug_assert_eq!(sol.total_penalty() - before, cost);
    Some(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConflictGraph, GeneratorSpec, GraphKind, Instance, InstanceClass};
    use crate::rng_from_seed;
    use crate::solution::{bin_penalty, FfdOrder, PenaltyWeights};
    use rand::Rng as _;

    fn recount_bin(sol: &Solution, items: &[usize]) -> i64 {
        let inst = sol.instance();
        let mut c = 0;
        for a in 0..items.len() {
            for b in a + 1..items.len() {
                c += inst.conflicts().is_conflict(items[a], items[b]) as u64;
            }
        }
        bin_penalty(c, items.iter().map(|&i| inst.weight(i)).sum(), inst.capacity(), sol.weights())
    }

    fn random_state<'a>(inst: &'a Instance, k: usize, rng: &mut Rng) -> Solution<'a> {
        let mut bins = vec![Vec::new(); k];
        for i in 0..inst.len() {
            bins[rng.gen_range(0..k)].push(i);
        }
        Solution::from_bins(inst, PenaltyWeights::for_instance(inst), bins)
    }

    #[test]
    fn zero_cost_arcs() {
        let graph = ConflictGraph::from_edges(3, [(1, 2)]).unwrap();
        let inst = Instance::new("t", 10, vec![3, 4, 5], graph).unwrap();
        let sol = Solution::from_bins(&inst, PenaltyWeights::for_instance(&inst), vec![vec![0, 1], vec![2], vec![]]);
        let g = EjectionGraph::with_order(&sol, vec![0, 1, 2]);
        assert_eq!(g.arc_cost(Node::Source, Node::Item(0)), Some(0));
        assert_eq!(g.arc_cost(Node::Item(0), Node::Zero(2)), Some(0));
        assert_eq!(g.arc_cost(Node::Item(2), Node::Item(0)), None);
        assert_eq!(g.arc_cost(Node::Zero(0), Node::Zero(2)), None);
        assert_eq!(g.arc_cost(Node::Zero(0), Node::Item(2)), Some(0));
    }

    #[test]
    fn arc_costs_match_recount() {
        let mut rng = rng_from_seed(1);
        for seed in 0..20 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 12, density: 0.4, seed }
                .generate()
                .unwrap();
            let sol = random_state(&inst, 4, &mut rng);
            let g = EjectionGraph::random(&sol, &mut rng);
            let sources: Vec<Node> = core::iter::once(Node::Source).chain(g.nodes()).collect();
            for &u in &sources {
                for v in g.nodes() {
                    let Some(cost) = g.arc_cost(u, v) else { continue };
                    let (bin, content): (usize, Vec<usize>) = match (u, v) {
                        (Node::Item(i), Node::Item(j)) => {
                            let b = sol.bin_of(j);
                            (b, sol.bin(b).items().iter().copied().filter(|&x| x != j).chain([i]).collect())
                        }
                        (_, Node::Item(j)) => {
                            let b = sol.bin_of(j);
                            (b, sol.bin(b).items().iter().copied().filter(|&x| x != j).collect())
                        }
                        (Node::Item(i), Node::Zero(k)) => (k, sol.bin(k).items().iter().copied().chain([i]).collect()),
                        _ => unreachable!(),
                    };
                    assert_eq!(cost, recount_bin(&sol, &content) - recount_bin(&sol, sol.bin(bin).items()));
                }
            }
        }
    }

    #[test]
    fn nonnegative_arcs_leave_solution_unchanged() {
        let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Interval, n: 40, density: 0.3, seed: 4 }
            .generate()
            .unwrap();
        let mut sol = Solution::first_fit(&inst, PenaltyWeights::for_instance(&inst), FfdOrder::Decreasing);
        let before = sol.packing();
        assert_eq!(ejection_step(&mut sol, &mut rng_from_seed(0)), None);
        assert_eq!(sol.packing(), before);
    }

    #[test]
    fn applied_chain_cost_is_exact() {
        let mut rng = rng_from_seed(2);
        let mut applied = 0;
        for seed in 0..200 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 30, density: 0.3, seed }
                .generate()
                .unwrap();
            let mut sol = random_state(&inst, 8, &mut rng);
            let before = sol.total_penalty();
            if let Some(cost) = ejection_step(&mut sol, &mut rng) {
                assert!(cost < 0);
                assert_eq!(sol.total_penalty() - before, cost);
                sol.check_invariants().unwrap();
                applied += 1;
            }
        }
        assert!(applied > 50);
    }
}
