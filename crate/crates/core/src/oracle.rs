//! Independent checks: an exact branch and bound for small instances and
//! a from-scratch feasibility validator.

use alloc::vec;
use alloc::vec::Vec;

use crate::instance::Instance;

/// Minimum number of bins of a feasible packing, or `None` if the search
/// needed more than `node_budget` nodes.
///
/// Items are placed heaviest first into an open bin or into one new bin,
/// so bins are opened in index order and symmetric packings are skipped.
pub fn exact_optimum(instance: &Instance, node_budget: u64) -> Option<usize> {
    let n = instance.len();
    if n == 0 {
        return Some(0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (core::cmp::Reverse(instance.weight(i)), i));
    let mut search = Exact {
        instance,
        order,
        loads: Vec::with_capacity(n),
        contents: Vec::with_capacity(n),
        best: n,
        lower: instance.lower_bound(),
        nodes: 0,
        budget: node_budget,
        exhausted: false,
    };
    search.place(0);
    (!search.exhausted).then_some(search.best)
}

struct Exact<'a> {
    instance: &'a Instance,
    order: Vec<usize>,
    loads: Vec<u64>,
    contents: Vec<Vec<usize>>,
    best: usize,
    lower: usize,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Exact<'_> {
    fn place(&mut self, depth: usize) {
        if self.exhausted || self.best == self.lower {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if depth == self.order.len() {
            self.best = self.best.min(self.loads.len());
            return;
        }
        let item = self.order[depth];
        let w = self.instance.weight(item);
        let graph = self.instance.conflicts();
        for b in 0..self.loads.len() {
            if self.loads[b] + w <= self.instance.capacity()
                && self.contents[b].iter().all(|&j| !graph.is_conflict(item, j))
            {
                self.loads[b] += w;
                self.contents[b].push(item);
                self.place(depth + 1);
                self.contents[b].pop();
                self.loads[b] -= w;
            }
        }
        if self.loads.len() + 1 < self.best {
            self.loads.push(w);
            self.contents.push(vec![item]);
            self.place(depth + 1);
            self.contents.pop();
            self.loads.pop();
        }
    }
}

/// Packing problems that make a candidate solution unusable.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("item {0} is out of range")]
    UnknownItem(usize),
    #[error("item {0} appears in more than one place")]
    Duplicated(usize),
    #[error("item {0} is not packed")]
    Missing(usize),
}

/// Constraint violations of a structurally valid packing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FeasibilityReport {
    pub bins: usize,
    /// `(bin, load)` of every bin above capacity.
    pub overloads: Vec<(usize, u64)>,
    /// `(bin, a, b)` for every conflicting pair sharing a bin, `a < b`.
    pub conflicts: Vec<(usize, usize, usize)>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.overloads.is_empty() && self.conflicts.is_empty()
    }
}

/// Recomputes loads and conflicts of `bins` from scratch.
pub fn validate_packing(instance: &Instance, bins: &[Vec<usize>]) -> Result<FeasibilityReport, StructureError> {
    let n = instance.len();
    let mut seen = vec![false; n];
    for bin in bins {
        for &i in bin {
            if i >= n {
                return Err(StructureError::UnknownItem(i));
            }
            if seen[i] {
                return Err(StructureError::Duplicated(i));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(StructureError::Missing(i));
    }

    let graph = instance.conflicts();
    let mut report = FeasibilityReport { bins: bins.len(), ..Default::default() };
    for (b, bin) in bins.iter().enumerate() {
        let load: u64 = bin.iter().map(|&i| instance.weight(i)).sum();
        if load > instance.capacity() {
            report.overloads.push((b, load));
        }
        for (p, &i) in bin.iter().enumerate() {
            for &j in &bin[p + 1..] {
                if graph.is_conflict(i, j) {
                    report.conflicts.push((b, i.min(j), i.max(j)));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ConflictGraph;
    use crate::solution::{FfdOrder, PenaltyWeights, Solution};

    #[test]
    fn simple_optima() {
        let inst = Instance::new("t", 4, vec![3, 3, 3], ConflictGraph::empty(3)).unwrap();
        assert_eq!(exact_optimum(&inst, u64::MAX), Some(3));

        let n = 6;
        let clique = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        let inst = Instance::new("t", 100, vec![1; n], ConflictGraph::from_edges(n, clique).unwrap()).unwrap();
        assert_eq!(exact_optimum(&inst, u64::MAX), Some(n));

        let inst = Instance::new("t", 10, vec![5, 5, 5, 5], ConflictGraph::from_edges(4, [(0, 1)]).unwrap()).unwrap();
        assert_eq!(exact_optimum(&inst, u64::MAX), Some(2));
    }

    #[test]
    fn tiny_budget_gives_up() {
        let inst = Instance::new("t", 10, vec![4, 3, 3, 3, 3, 2, 2], ConflictGraph::empty(7)).unwrap();
        assert_eq!(exact_optimum(&inst, 2), None);
    }

    #[test]
    fn validator_names_violations() {
        let inst = Instance::new("t", 10, vec![5, 6, 3], ConflictGraph::from_edges(3, [(0, 2)]).unwrap()).unwrap();
        let sol = Solution::first_fit(&inst, PenaltyWeights::for_instance(&inst), FfdOrder::Decreasing);
        assert!(validate_packing(&inst, &sol.packing()).unwrap().is_feasible());

        let report = validate_packing(&inst, &[vec![0, 2], vec![1]]).unwrap();
        assert_eq!(report.conflicts, vec![(0, 0, 2)]);
        assert!(report.overloads.is_empty());

        let report = validate_packing(&inst, &[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(report.overloads, vec![(0, 11)]);

        assert_eq!(validate_packing(&inst, &[vec![0, 1]]), Err(StructureError::Missing(2)));
        assert_eq!(validate_packing(&inst, &[vec![0, 1, 2, 1]]), Err(StructureError::Duplicated(1)));
        assert_eq!(validate_packing(&inst, &[vec![0, 1, 2, 7]]), Err(StructureError::UnknownItem(7)));
    }
}
