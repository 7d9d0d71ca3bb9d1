//! Complete, possibly infeasible packings with incremental penalty
//! bookkeeping.
//!
//! Besides bin contents, a [`Solution`] keeps a dense item-by-bin matrix
//! holding, for every item `i` and bin `k`, the number of items of `k`
//! conflicting with `i`. Every modification is a sequence of single-item
//! relocations, each updating that matrix in `O(degree)`, which lets move
//! evaluation read conflict changes in constant time.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::instance::Instance;
use crate::Rng;

/// Cost of one unit of each kind of violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PenaltyWeights {
    conflict: i64,
    excess: i64,
}

impl PenaltyWeights {
    /// Both weights must be strictly positive.
    pub fn new(conflict: i64, excess: i64) -> Option<Self> {
        (conflict > 0 && excess > 0).then_some(PenaltyWeights { conflict, excess })
    }

    /// One conflict costs `Q`, one unit of overload costs 1.
    pub fn for_instance(instance: &Instance) -> Self {
        PenaltyWeights { conflict: instance.capacity() as i64, excess: 1 }
    }

    pub fn conflict(&self) -> i64 {
        self.conflict
    }

    pub fn excess(&self) -> i64 {
        self.excess
    }

    #[inline]
    pub fn cost(&self, conflicts: i64, excess: i64) -> i64 {
        self.conflict * conflicts + self.excess * excess
    }
}

#[inline]
pub(crate) fn excess(load: u64, capacity: u64) -> i64 {
    load.saturating_sub(capacity) as i64
}

/// Penalty of a bin with the given content statistics.
#[inline]
pub fn bin_penalty(conflicts: u64, load: u64, capacity: u64, weights: PenaltyWeights) -> i64 {
    weights.cost(conflicts as i64, excess(load, capacity))
}

/// Item processing order of the constructive heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FfdOrder {
    /// Heaviest item first.
    #[default]
    Decreasing,
    /// Lightest item first.
    Increasing,
}

/// Which bin [`Solution::remove_bin`] deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BinRemoval {
    /// The bin with the smallest load, lowest index on ties.
    #[default]
    MinLoad,
    Random,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bin {
    items: Vec<usize>,
    load: u64,
    conflicts: u64,
    stamp: u64,
}

impl Bin {
    /// Items in insertion order.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn load(&self) -> u64 {
        self.load
    }

    /// Number of conflicting pairs inside the bin.
    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Value of the solution's modification counter at the last change.
    pub fn stamp(&self) -> u64 {
        self.stamp
    }
}

/// Record of a relocation, enough to undo it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relocation {
    pub item: usize,
    pub from: usize,
    pub to: usize,
    /// Position the item occupied in its source bin.
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<'a> {
    instance: &'a Instance,
    weights: PenaltyWeights,
    bins: Vec<Bin>,
    bin_of: Vec<usize>,
    // conf[item * stride + bin]
    conf: Vec<u32>,
    stride: usize,
    penalty: i64,
    clock: u64,
    touches: Cell<u64>,
}

impl<'a> Solution<'a> {
    /// Builds a solution from explicit bin contents. Panics unless `bins`
    /// is a partition of the instance's items.
    pub fn from_bins(instance: &'a Instance, weights: PenaltyWeights, bins: Vec<Vec<usize>>) -> Self {
        let n = instance.len();
        let k = bins.len();
        let mut bin_of = vec![usize::MAX; n];
        for (b, items) in bins.iter().enumerate() {
            for &i in items {
                assert!(i < n, "item {i} out of range");
                assert_eq!(bin_of[i], usize::MAX, "item {i} packed twice");
                bin_of[i] = b;
            }
        }
        assert!(bin_of.iter().all(|&b| b != usize::MAX), "some item is not packed");

        let stride = k.max(1);
        let conf = vec![0u32; n * stride];
        let mut sol = Solution {
            instance,
            weights,
            bins: bins
                .into_iter()
                .map(|items| Bin { items, ..Bin::default() })
                .collect(),
            bin_of,
            conf,
            stride,
            penalty: 0,
            clock: 0,
            touches: Cell::new((n * k) as u64),
        };
        sol.rebuild();
        sol
    }

    /// Recomputes the conflict matrix, bin statistics and penalty.
    fn rebuild(&mut self) {
        let graph = self.instance.conflicts();
        let mut touches = 0u64;
        for (i, &b) in self.bin_of.iter().enumerate() {
            for &j in graph.neighbors(i) {
                self.conf[j * self.stride + b] += 1;
                touches += 1;
            }
        }
        self.touches.set(self.touches.get() + touches);
        let mut penalty = 0;
        for (b, bin) in self.bins.iter_mut().enumerate() {
            bin.load = bin.items.iter().map(|&i| self.instance.weight(i)).sum();
            // Each internal pair is seen from both ends.
            let twice: u64 = bin
                .items
                .iter()
                .map(|&i| u64::from(self.conf[i * self.stride + b]))
                .sum();
            bin.conflicts = twice / 2;
            penalty += bin_penalty(bin.conflicts, bin.load, self.instance.capacity(), self.weights);
        }
        self.penalty = penalty;
    }

    /// Modified first fit: items are taken by weight and each goes into the
    /// first bin, in creation order, with enough residual capacity and no
    /// conflicting item; a new bin is opened when none qualifies.
    pub fn first_fit(instance: &'a Instance, weights: PenaltyWeights, order: FfdOrder) -> Self {
        let mut items: Vec<usize> = (0..instance.len()).collect();
        match order {
            FfdOrder::Decreasing => items.sort_by_key(|&i| core::cmp::Reverse(instance.weight(i))),
            FfdOrder::Increasing => items.sort_by_key(|&i| instance.weight(i)),
        }
        let graph = instance.conflicts();
        let mut bins: Vec<(Vec<usize>, u64)> = Vec::new();
        for i in items {
            let w = instance.weight(i);
            let slot = bins.iter().position(|(content, load)| {
                load + w <= instance.capacity() && content.iter().all(|&j| !graph.is_conflict(i, j))
            });
            match slot {
                Some(b) => {
                    bins[b].0.push(i);
                    bins[b].1 += w;
                }
                None => bins.push((vec![i], w)),
            }
        }
        Self::from_bins(instance, weights, bins.into_iter().map(|(c, _)| c).collect())
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn weights(&self) -> PenaltyWeights {
        self.weights
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn bin(&self, b: usize) -> &Bin {
        &self.bins[b]
    }

    /// Number of bins, empty ones included.
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn used_bins(&self) -> usize {
        self.bins.iter().filter(|b| !b.is_empty()).count()
    }

    #[inline]
    pub fn bin_of(&self, item: usize) -> usize {
        self.bin_of[item]
    }

    /// Conflicts between `item` and the items currently in `bin`.
    #[inline]
    pub fn conf(&self, item: usize, bin: usize) -> i64 {
        self.touches.set(self.touches.get() + 1);
        i64::from(self.conf[item * self.stride + bin])
    }

    #[inline]
    pub fn is_conflict(&self, a: usize, b: usize) -> bool {
        self.touches.set(self.touches.get() + 1);
        self.instance.conflicts().is_conflict(a, b)
    }

    /// Counter of conflict-matrix reads and adjacency tests, including
    /// the cells written while building the matrix.
    pub fn touches(&self) -> u64 {
        self.touches.get()
    }

    pub fn reset_touches(&self) {
        self.touches.set(0);
    }

    pub fn total_penalty(&self) -> i64 {
        self.penalty
    }

    pub fn is_feasible(&self) -> bool {
        self.penalty == 0
    }

    /// Current modification counter; every bin stamp is at most this.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn bin_penalty(&self, b: usize) -> i64 {
        let bin = &self.bins[b];
        bin_penalty(bin.conflicts, bin.load, self.instance.capacity(), self.weights)
    }

    /// Penalty of bin `b` if its load and conflict count changed by the
    /// given amounts.
    #[inline]
    pub fn bin_penalty_after(&self, b: usize, load_delta: i64, conflict_delta: i64) -> i64 {
        let bin = &self.bins[b];
        let load = (bin.load as i64 + load_delta) as u64;
        self.weights.cost(
            bin.conflicts as i64 + conflict_delta,
            excess(load, self.instance.capacity()),
        )
    }

    /// Whether `item` is in conflict within its bin or sits in an
    /// overloaded bin.
    pub fn is_problematic(&self, item: usize) -> bool {
        let b = self.bin_of[item];
        self.conf[item * self.stride + b] > 0 || self.bins[b].load > self.instance.capacity()
    }

    pub fn problematic_items(&self) -> Vec<usize> {
        (0..self.instance.len()).filter(|&i| self.is_problematic(i)).collect()
    }

    /// Penalty change of moving `item` into `to`.
    pub fn relocation_delta(&self, item: usize, to: usize) -> i64 {
        let from = self.bin_of[item];
        debug_assert_ne!(from, to);
        let w = self.instance.weight(item) as i64;
        let out = self.bin_penalty_after(from, -w, -self.conf(item, from)) - self.bin_penalty(from);
        let into = self.bin_penalty_after(to, w, self.conf(item, to)) - self.bin_penalty(to);
        out + into
    }

    /// Moves `item` into bin `to`, appending it there.
    ///
    /// Panics if the item already is in `to`.
    pub fn relocate(&mut self, item: usize, to: usize) -> Relocation {
        self.relocate_at(item, to, None)
    }

    /// Restores the state preceding `relocation`, item order included.
    /// Relocations must be undone in reverse order.
    pub fn undo(&mut self, relocation: Relocation) {
        debug_assert_eq!(self.bin_of[relocation.item], relocation.to);
        self.relocate_at(relocation.item, relocation.from, Some(relocation.position));
    }

    fn relocate_at(&mut self, item: usize, to: usize, position: Option<usize>) -> Relocation {
        let from = self.bin_of[item];
        assert_ne!(from, to, "item {item} is already in bin {to}");
        let capacity = self.instance.capacity();
        let w = self.instance.weight(item);
        let stride = self.stride;
        let before = self.bin_penalty(from) + self.bin_penalty(to);

        self.clock += 1;
        let src = &mut self.bins[from];
        let pos = src
            .items
            .iter()
            .position(|&i| i == item)
            .expect("item present in its bin");
        src.items.remove(pos);
        src.load -= w;
        src.conflicts -= u64::from(self.conf[item * stride + from]);
        src.stamp = self.clock;

        let dst = &mut self.bins[to];
        match position {
            Some(p) => dst.items.insert(p, item),
            None => dst.items.push(item),
        }
        dst.load += w;
        dst.conflicts += u64::from(self.conf[item * stride + to]);
        dst.stamp = self.clock;

        for &j in self.instance.conflicts().neighbors(item) {
            self.conf[j * stride + from] -= 1;
            self.conf[j * stride + to] += 1;
        }
        self.bin_of[item] = to;

        let after = bin_penalty(self.bins[from].conflicts, self.bins[from].load, capacity, self.weights)
            + bin_penalty(self.bins[to].conflicts, self.bins[to].load, capacity, self.weights);
        self.penalty += after - before;
        Relocation { item, from, to, position: pos }
    }

    /// Index of the bin [`remove_bin`](Self::remove_bin) would delete
    /// under the min-load rule.
    pub fn lightest_bin(&self) -> usize {
        (0..self.bins.len())
            .min_by_key(|&b| self.bins[b].load)
            .expect("at least one bin")
    }

    /// Deletes one bin and sends each of its items to a uniformly random
    /// remaining bin. Panics with fewer than two bins.
    ///
    /// The last bin takes the index of the deleted one.
    pub fn remove_bin(&mut self, rule: BinRemoval, rng: &mut Rng) -> usize {
        assert!(self.bins.len() >= 2, "cannot remove the only bin");
        let victim = match rule {
            BinRemoval::MinLoad => self.lightest_bin(),
            BinRemoval::Random => rng.gen_range(0..self.bins.len()),
        };
        let survivors = self.bins.len() - 1;
        let items = self.bins[victim].items.clone();
        for item in items {
            let mut target = rng.gen_range(0..survivors);
            if target >= victim {
                target += 1;
            }
            self.relocate(item, target);
        }
        self.drop_empty_bin(victim);
        victim
    }

    /// Removes an empty bin; the last bin moves into its slot.
    pub fn drop_empty_bin(&mut self, b: usize) {
        assert!(self.bins[b].is_empty(), "bin {b} is not empty");
        let last = self.bins.len() - 1;
        if b != last {
            for i in 0..self.instance.len() {
                let row = i * self.stride;
                self.conf[row + b] = self.conf[row + last];
                self.conf[row + last] = 0;
            }
            for &i in &self.bins[last].items {
                self.bin_of[i] = b;
            }
        }
        self.bins.swap_remove(b);
        self.clock += 1;
        if b < self.bins.len() {
            self.bins[b].stamp = self.clock;
        }
    }

    /// Bin contents as plain item lists, empty bins omitted.
    pub fn packing(&self) -> Vec<Vec<usize>> {
        self.bins
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.items.clone())
            .collect()
    }

    /// Moves `count` random items (half of them, rounded up, drawn among
    /// problematic items when enough exist) to uniformly random other bins.
    pub fn shake(&mut self, count: usize, rng: &mut Rng) {
        let k = self.bins.len();
        if k < 2 || self.instance.is_empty() {
            return;
        }
        let problematic = self.problematic_items();
        let from_problematic = count.div_ceil(2).min(problematic.len());
        let mut chosen: Vec<usize> = problematic
            .choose_multiple(rng, from_problematic)
            .copied()
            .collect();
        while chosen.len() < count {
            chosen.push(rng.gen_range(0..self.instance.len()));
        }
        for item in chosen {
            let from = self.bin_of[item];
            let mut to = rng.gen_range(0..k - 1);
            if to >= from {
                to += 1;
            }
            self.relocate(item, to);
        }
    }

    /// Checks every cached quantity against a from-scratch recount.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        let graph = self.instance.conflicts();
        let mut seen = vec![false; self.instance.len()];
        let mut penalty = 0;
        for (b, bin) in self.bins.iter().enumerate() {
            let mut load = 0;
            let mut conflicts = 0;
            for (p, &i) in bin.items.iter().enumerate() {
                if seen[i] {
                    return Err("item packed twice");
                }
                seen[i] = true;
                if self.bin_of[i] != b {
                    return Err("assignment disagrees with bin contents");
                }
                load += self.instance.weight(i);
                conflicts += bin.items[p + 1..]
                    .iter()
                    .filter(|&&j| graph.is_conflict(i, j))
                    .count() as u64;
            }
            if load != bin.load {
                return Err("stale bin load");
            }
            if conflicts != bin.conflicts {
                return Err("stale bin conflict count");
            }
            penalty += bin_penalty(conflicts, load, self.instance.capacity(), self.weights);
        }
        if seen.iter().any(|s| !s) {
            return Err("item missing");
        }
        if penalty != self.penalty {
            return Err("stale total penalty");
        }
        for i in 0..self.instance.len() {
            for b in 0..self.bins.len() {
                let expected = graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&j| self.bin_of[j] == b)
                    .count() as u32;
                if self.conf[i * self.stride + b] != expected {
                    return Err("stale conflict matrix entry");
                }
            }
        }
        Ok(())
    }
}
