//! Swap, Relocate and Swap2vs1 descent between pairs of bins.
//!
//! Every move exchanges a set of at most two items of one bin with a set
//! of at most one item of another. Its conflict delta is read from the
//! solution's conflict matrix plus a constant number of adjacency tests
//! inside the exchanged sets, so evaluation cost does not depend on bin
//! sizes.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::solution::{excess, Solution};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Relocate,
    Swap,
    Swap2vs1,
}

/// Up to two items taken out of one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pick {
    items: [usize; 2],
    len: u8,
}

impl Pick {
    pub const NONE: Pick = Pick { items: [0; 2], len: 0 };

    pub fn one(item: usize) -> Self {
        Pick { items: [item, 0], len: 1 }
    }

    pub fn two(a: usize, b: usize) -> Self {
        Pick { items: [a, b], len: 2 }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.items[..self.len as usize]
    }
}

/// Change of a move, split by violation type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoveDelta {
    /// Change in the number of conflicting pairs.
    pub conflicts: i64,
    /// Change in total capacity excess.
    pub excess: i64,
    /// Resulting change of the total penalty.
    pub penalty: i64,
}

/// Exchange of `out_a` (leaving `bin_a`) with `out_b` (leaving `bin_b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub bin_a: usize,
    pub bin_b: usize,
    pub out_a: Pick,
    pub out_b: Pick,
    pub delta: i64,
}

impl Move {
    pub fn apply(&self, sol: &mut Solution) {
        for &i in self.out_a.as_slice() {
            sol.relocate(i, self.bin_b);
        }
        for &j in self.out_b.as_slice() {
            sol.relocate(j, self.bin_a);
        }
    }
}

fn weight_of(sol: &Solution, items: &[usize]) -> i64 {
    items.iter().map(|&i| sol.instance().weight(i) as i64).sum()
}

fn intra(sol: &Solution, items: &[usize]) -> i64 {
    let mut count = 0;
    for (p, &i) in items.iter().enumerate() {
        for &j in &items[p + 1..] {
            count += sol.is_conflict(i, j) as i64;
        }
    }
    count
}

/// Delta of exchanging `out_a ⊆ bin_a` with `out_b ⊆ bin_b`.
///
/// With `conf` the conflict matrix before the move, the conflict change is
/// `Σ_{i∈out_a} (conf[i][b] - conf[i][a]) + Σ_{j∈out_b} (conf[j][a] - conf[j][b])
///  + 2 (intra(out_a) + intra(out_b) - inter(out_a, out_b))`.
pub fn exchange_delta(sol: &Solution, bin_a: usize, bin_b: usize, out_a: &[usize], out_b: &[usize]) -> MoveDelta {
    assert_ne!(bin_a, bin_b, "exchange within a single bin");
    debug_assert!(out_a.iter().all(|&i| sol.bin_of(i) == bin_a));
    debug_assert!(out_b.iter().all(|&j| sol.bin_of(j) == bin_b));

    let intra_a = intra(sol, out_a);
    let intra_b = intra(sol, out_b);
    let mut inter = 0;
    for &i in out_a {
        for &j in out_b {
            inter += sol.is_conflict(i, j) as i64;
        }
    }
    let shared = intra_a + intra_b - inter;

    // Per-bin conflict changes; their sum is the formula above.
    let mut dc_a = shared;
    let mut dc_b = shared;
    for &i in out_a {
        dc_a -= sol.conf(i, bin_a);
        dc_b += sol.conf(i, bin_b);
    }
    for &j in out_b {
        dc_a += sol.conf(j, bin_a);
        dc_b -= sol.conf(j, bin_b);
    }

    let flow = weight_of(sol, out_b) - weight_of(sol, out_a);
    let capacity = sol.instance().capacity();
    let (load_a, load_b) = (sol.bin(bin_a).load() as i64, sol.bin(bin_b).load() as i64);
    let excess_delta = excess((load_a + flow) as u64, capacity) + excess((load_b - flow) as u64, capacity)
        - excess(load_a as u64, capacity)
        - excess(load_b as u64, capacity);

    let penalty = sol.bin_penalty_after(bin_a, flow, dc_a) + sol.bin_penalty_after(bin_b, -flow, dc_b)
        - sol.bin_penalty(bin_a)
        - sol.bin_penalty(bin_b);
    MoveDelta { conflicts: dc_a + dc_b, excess: excess_delta, penalty }
}

/// Delta of swapping `i` and `j`, which must sit in different bins.
pub fn swap_delta(sol: &Solution, i: usize, j: usize) -> MoveDelta {
    exchange_delta(sol, sol.bin_of(i), sol.bin_of(j), &[i], &[j])
}

/// Starting offsets for the enumeration between two bins.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rotation {
    pub a: usize,
    pub b: usize,
}

/// Best Relocate, Swap or Swap2vs1 move between two distinct bins.
///
/// Items are scanned cyclically from the offsets in `rotation`; among
/// moves of equal delta the first one found wins. Returns `None` only when
/// both bins are empty.
pub fn best_move_between(sol: &Solution, bin_a: usize, bin_b: usize, rotation: Rotation) -> Option<Move> {
    assert_ne!(bin_a, bin_b);
    let a = sol.bin(bin_a).items();
    let b = sol.bin(bin_b).items();
    let at = |items: &[usize], offset: usize, p: usize| items[(offset % items.len() + p) % items.len()];

    let mut best: Option<Move> = None;
    let mut consider = |kind, out_a: Pick, out_b: Pick| {
        let delta = exchange_delta(sol, bin_a, bin_b, out_a.as_slice(), out_b.as_slice()).penalty;
        if best.is_none_or(|m| delta < m.delta) {
            best = Some(Move { kind, bin_a, bin_b, out_a, out_b, delta });
        }
    };

    for p in 0..a.len() {
        consider(MoveKind::Relocate, Pick::one(at(a, rotation.a, p)), Pick::NONE);
    }
    for q in 0..b.len() {
        consider(MoveKind::Relocate, Pick::NONE, Pick::one(at(b, rotation.b, q)));
    }
    for p in 0..a.len() {
        for q in 0..b.len() {
            consider(MoveKind::Swap, Pick::one(at(a, rotation.a, p)), Pick::one(at(b, rotation.b, q)));
        }
    }
    // Consecutive positions in insertion order, no wrap-around.
    for p in 0..a.len().saturating_sub(1) {
        let s = (rotation.a % (a.len() - 1) + p) % (a.len() - 1);
        for q in 0..b.len() {
            consider(MoveKind::Swap2vs1, Pick::two(a[s], a[s + 1]), Pick::one(at(b, rotation.b, q)));
        }
    }
    for q in 0..b.len().saturating_sub(1) {
        let s = (rotation.b % (b.len() - 1) + q) % (b.len() - 1);
        for p in 0..a.len() {
            consider(MoveKind::Swap2vs1, Pick::one(at(a, rotation.a, p)), Pick::two(b[s], b[s + 1]));
        }
    }
    best
}

/// Last evaluation stamp of every ordered bin pair.
#[derive(Debug, Clone, Default)]
pub struct PairEvaluationCache {
    bins: usize,
    stamps: Vec<u64>,
}

impl PairEvaluationCache {
    pub fn reset(&mut self, bins: usize) {
        self.bins = bins;
        self.stamps.clear();
        self.stamps.resize(bins * bins, 0);
    }

    /// True if either bin changed after the pair was last evaluated.
    pub fn is_dirty(&self, sol: &Solution, a: usize, b: usize) -> bool {
        let seen = self.stamps[a * self.bins + b];
        sol.bin(a).stamp() > seen || sol.bin(b).stamp() > seen
    }

    pub fn mark(&mut self, sol: &Solution, a: usize, b: usize) {
        self.stamps[a * self.bins + b] = sol.clock();
    }
}

/// Counters of one descent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DescentStats {
    pub loops: usize,
    pub pairs_evaluated: usize,
    pub moves_applied: usize,
}

/// Reusable local search state.
#[derive(Debug, Clone)]
pub struct LocalSearch {
    cache: PairEvaluationCache,
    use_cache: bool,
    order: Vec<usize>,
    inner: Vec<usize>,
}

impl Default for LocalSearch {
    fn default() -> Self {
        LocalSearch { cache: PairEvaluationCache::default(), use_cache: true, order: vec![], inner: vec![] }
    }
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl LocalSearch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Re-evaluates every visited pair, ignoring modification stamps
    /// after the first loop. Only useful to cross-check the cache.
    pub fn without_cache() -> Self {
        LocalSearch { use_cache: false, ..Self::default() }
    }

    /// Descends until no bin pair involving a penalized bin admits an
    /// improving move.
    ///
    /// Zero-delta moves are accepted during the first loop only. Bins are
    /// visited in random order; a pair is evaluated in later loops only
    /// if one of its bins changed since its last evaluation.
    pub fn descend(&mut self, sol: &mut Solution, rng: &mut Rng) -> DescentStats {
        let k = sol.bin_count();
        let mut stats = DescentStats::default();
        if k < 2 || sol.is_feasible() {
            return stats;
        }
        self.cache.reset(k);
        // Enumeration offsets derive from this salt and the bins' stamps, so
        // an unchanged pair is always scanned the same way.
        let salt: u64 = rng.gen();

        loop {
            stats.loops += 1;
            let first = stats.loops == 1;
            let mut improved = false;

            self.order.clear();
            self.order.extend(0..k);
            self.order.shuffle(rng);
            for oi in 0..k {
                let a = self.order[oi];
                if sol.bin_penalty(a) == 0 {
                    continue;
                }
                self.inner.clear();
                self.inner.extend((0..k).filter(|&b| b != a));
                self.inner.shuffle(rng);
                for ii in 0..k - 1 {
                    let b = self.inner[ii];
                    if !(first || !self.use_cache || self.cache.is_dirty(sol, a, b)) {
                        continue;
                    }
                    let seed = mix(salt ^ mix(((a as u64) << 32 | b as u64) ^ mix(sol.bin(a).stamp() ^ mix(sol.bin(b).stamp()))));
                    let rotation = Rotation { a: seed as u32 as usize, b: (seed >> 32) as usize };
                    let best = best_move_between(sol, a, b, rotation);
                    self.cache.mark(sol, a, b);
                    stats.pairs_evaluated += 1;
                    if let Some(m) = best {
                        if m.delta < 0 || (m.delta == 0 && first) {
                            m.apply(sol);
                            stats.moves_applied += 1;
                            improved |= m.delta < 0;
                            if sol.bin_penalty(a) == 0 {
                                break;
                            }
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConflictGraph, GeneratorSpec, GraphKind, Instance, InstanceClass};
    use crate::rng_from_seed;
    use crate::solution::{BinRemoval, FfdOrder, PenaltyWeights};

    fn instance(weights: &[u64], capacity: u64, edges: &[(usize, usize)]) -> Instance {
        let graph = ConflictGraph::from_edges(weights.len(), edges.iter().copied()).unwrap();
        Instance::new("t", capacity, weights.to_vec(), graph).unwrap()
    }

    fn recount(sol: &Solution) -> (i64, i64) {
        let inst = sol.instance();
        let mut conflicts = 0;
        let mut over = 0;
        for bin in sol.bins() {
            let items = bin.items();
            for a in 0..items.len() {
                for b in a + 1..items.len() {
                    conflicts += inst.conflicts().is_conflict(items[a], items[b]) as i64;
                }
            }
            over += excess(items.iter().map(|&i| inst.weight(i)).sum(), inst.capacity());
        }
        (conflicts, over)
    }

    /// All Relocate, Swap and Swap2vs1 moves of a pair, scored by applying
    /// them to a copy and recounting.
    fn brute_force_best(sol: &Solution, a: usize, b: usize) -> Option<i64> {
        let ia = sol.bin(a).items().to_vec();
        let ib = sol.bin(b).items().to_vec();
        let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = vec![];
        for &i in &ia {
            candidates.push((vec![i], vec![]));
        }
        for &j in &ib {
            candidates.push((vec![], vec![j]));
        }
        for &i in &ia {
            for &j in &ib {
                candidates.push((vec![i], vec![j]));
            }
        }
        for w in ia.windows(2) {
            for &j in &ib {
                candidates.push((w.to_vec(), vec![j]));
            }
        }
        for w in ib.windows(2) {
            for &i in &ia {
                candidates.push((vec![i], w.to_vec()));
            }
        }
        candidates
            .into_iter()
            .map(|(sa, sb)| {
                let mut copy = sol.clone();
                for &i in &sa {
                    copy.relocate(i, b);
                }
                for &j in &sb {
                    copy.relocate(j, a);
                }
                let (c, e) = recount(&copy);
                sol.weights().cost(c, e) - sol.total_penalty()
            })
            .min()
    }

    fn random_state<'a>(inst: &'a Instance, k: usize, rng: &mut Rng) -> Solution<'a> {
        let mut bins = vec![Vec::new(); k];
        for i in 0..inst.len() {
            bins[rng.gen_range(0..k)].push(i);
        }
        Solution::from_bins(inst, PenaltyWeights::for_instance(inst), bins)
    }

    #[test]
    fn swap_of_non_adjacent_items_between_empty_bins() {
        let inst = instance(&[3, 4], 10, &[]);
        let sol = Solution::from_bins(&inst, PenaltyWeights::for_instance(&inst), vec![vec![0], vec![1]]);
        assert_eq!(swap_delta(&sol, 0, 1).conflicts, 0);
    }

    #[test]
    fn swap_correction_term_for_adjacent_pair() {
        // conf[0][B(1)] = conf[1][B(0)] = 1, corrected by -2.
        let inst = instance(&[3, 4], 10, &[(0, 1)]);
        let sol = Solution::from_bins(&inst, PenaltyWeights::for_instance(&inst), vec![vec![0], vec![1]]);
        assert_eq!(sol.conf(0, 1), 1);
        assert_eq!(swap_delta(&sol, 0, 1), MoveDelta { conflicts: 0, excess: 0, penalty: 0 });
    }

    #[test]
    fn intra_term_for_conflicting_pair() {
        let inst = instance(&[3, 4, 5, 2], 10, &[(0, 1), (0, 3), (1, 2)]);
        let w = PenaltyWeights::for_instance(&inst);
        let sol = Solution::from_bins(&inst, w, vec![vec![0, 1], vec![2, 3]]);
        let d = exchange_delta(&sol, 0, 1, &[0, 1], &[2]);
        let mut copy = sol.clone();
        copy.relocate(0, 1);
        copy.relocate(1, 1);
        copy.relocate(2, 0);
        let (c, e) = recount(&copy);
        let (c0, e0) = recount(&sol);
        assert_eq!(d.conflicts, c - c0);
        assert_eq!(d.excess, e - e0);
        assert_eq!(d.penalty, copy.total_penalty() - sol.total_penalty());
    }

    #[test]
    fn generalized_delta_reduces_to_swap() {
        let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 30, density: 0.5, seed: 1 }
            .generate()
            .unwrap();
        let mut rng = rng_from_seed(2);
        let sol = random_state(&inst, 4, &mut rng);
        for i in 0..30 {
            for j in 0..30 {
                if sol.bin_of(i) != sol.bin_of(j) {
                    let formula = sol.conf(i, sol.bin_of(j)) + sol.conf(j, sol.bin_of(i))
                        - sol.conf(i, sol.bin_of(i))
                        - sol.conf(j, sol.bin_of(j))
                        - 2 * inst.conflicts().is_conflict(i, j) as i64;
                    assert_eq!(swap_delta(&sol, i, j).conflicts, formula);
                }
            }
        }
    }

    #[test]
    fn random_exchanges_match_recount() {
        let mut rng = rng_from_seed(3);
        for seed in 0..20 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 40, density: 0.3, seed }
                .generate()
                .unwrap();
            let sol = random_state(&inst, 6, &mut rng);
            let (c0, e0) = recount(&sol);
            for _ in 0..100 {
                let a = rng.gen_range(0..6);
                let b = (a + rng.gen_range(1..6)) % 6;
                let (ia, ib) = (sol.bin(a).items(), sol.bin(b).items());
                if ia.len() < 2 || ib.is_empty() {
                    continue;
                }
                let sa: Vec<usize> = ia.choose_multiple(&mut rng, 2).copied().collect();
                let sb = [ib[rng.gen_range(0..ib.len())]];
                let d = exchange_delta(&sol, a, b, &sa, &sb);
                let mut copy = sol.clone();
                Move { kind: MoveKind::Swap2vs1, bin_a: a, bin_b: b, out_a: Pick::two(sa[0], sa[1]), out_b: Pick::one(sb[0]), delta: 0 }
                    .apply(&mut copy);
                let (c, e) = recount(&copy);
                assert_eq!((d.conflicts, d.excess), (c - c0, e - e0));
                assert_eq!(d.penalty, copy.total_penalty() - sol.total_penalty());
            }
        }
    }

    #[test]
    fn overloaded_bin_relocates_exact_excess() {
        // Bin 0 is overloaded by exactly the weight of item 2.
        let inst = instance(&[6, 4, 3, 2], 10, &[]);
        let w = PenaltyWeights::for_instance(&inst);
        let sol = Solution::from_bins(&inst, w, vec![vec![0, 1, 2], vec![3]]);
        let m = best_move_between(&sol, 0, 1, Rotation::default()).unwrap();
        assert_eq!(m.delta, -w.excess() * 3);
    }

    #[test]
    fn best_move_matches_exhaustive_enumeration() {
        let mut rng = rng_from_seed(4);
        for seed in 0..60 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 14, density: 0.35, seed }
                .generate()
                .unwrap();
            let sol = random_state(&inst, 3, &mut rng);
            for a in 0..3 {
                for b in 0..3 {
                    if a == b {
                        continue;
                    }
                    let rotation = Rotation { a: rng.gen(), b: rng.gen() };
                    let got = best_move_between(&sol, a, b, rotation).map(|m| m.delta);
                    assert_eq!(got, brute_force_best(&sol, a, b));
                    if let Some(m) = best_move_between(&sol, a, b, rotation) {
                        let mut copy = sol.clone();
                        m.apply(&mut copy);
                        assert_eq!(copy.total_penalty() - sol.total_penalty(), m.delta);
                    }
                }
            }
        }
    }

    #[test]
    fn evaluation_cost_is_bounded() {
        let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 200, density: 0.3, seed: 5 }
            .generate()
            .unwrap();
        let mut rng = rng_from_seed(5);
        // Few large bins and many small ones give the same per-move cost.
        for k in [2, 5, 40] {
            let sol = random_state(&inst, k, &mut rng);
            sol.reset_touches();
            let mut evaluations = 0u64;
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        let (na, nb) = (sol.bin(a).len() as u64, sol.bin(b).len() as u64);
                        evaluations += na + nb + na * nb + na.saturating_sub(1) * nb + nb.saturating_sub(1) * na;
                        best_move_between(&sol, a, b, Rotation::default());
                    }
                }
            }
            let mean = sol.touches() as f64 / evaluations as f64;
            assert!(mean <= 16.0, "mean touches {mean}");
        }
    }

    #[test]
    fn feasible_input_is_untouched() {
        let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Interval, n: 60, density: 0.3, seed: 6 }
            .generate()
            .unwrap();
        let mut sol = Solution::first_fit(&inst, PenaltyWeights::for_instance(&inst), FfdOrder::Decreasing);
        let before = sol.packing();
        let stats = LocalSearch::new().descend(&mut sol, &mut rng_from_seed(0));
        assert_eq!(stats.pairs_evaluated, 0);
        assert_eq!(sol.packing(), before);
    }

    #[test]
    fn descent_reaches_local_minimum() {
        let mut rng = rng_from_seed(8);
        for seed in 0..40 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Arbitrary, n: 12, density: 0.3, seed }
                .generate()
                .unwrap();
            let k = rng.gen_range(2..5);
            let mut sol = random_state(&inst, k, &mut rng);
            let before = sol.total_penalty();
            LocalSearch::new().descend(&mut sol, &mut rng);
            sol.check_invariants().unwrap();
            assert!(sol.total_penalty() <= before);
            for a in 0..k {
                for b in 0..k {
                    if a != b && (sol.bin_penalty(a) > 0 || sol.bin_penalty(b) > 0) {
                        if let Some(best) = brute_force_best(&sol, a, b) {
                            assert!(best >= 0, "improving move left between {a} and {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cache_never_hides_an_improvement() {
        for seed in 0..30 {
            let inst = GeneratorSpec { class: InstanceClass::Uniform, graph: GraphKind::Interval, n: 80, density: 0.4, seed }
                .generate()
                .unwrap();
            let w = PenaltyWeights::for_instance(&inst);
            let mut base = Solution::first_fit(&inst, w, FfdOrder::Decreasing);
            base.remove_bin(BinRemoval::MinLoad, &mut rng_from_seed(seed));
            base.remove_bin(BinRemoval::MinLoad, &mut rng_from_seed(seed));

            let mut cached = base.clone();
            let s1 = LocalSearch::new().descend(&mut cached, &mut rng_from_seed(seed + 100));
            let mut plain = base.clone();
            let s2 = LocalSearch::without_cache().descend(&mut plain, &mut rng_from_seed(seed + 100));
            assert_eq!(cached.total_penalty(), plain.total_penalty());
            assert_eq!(cached.packing(), plain.packing());
            assert!(s1.pairs_evaluated <= s2.pairs_evaluated);
        }
    }
}
