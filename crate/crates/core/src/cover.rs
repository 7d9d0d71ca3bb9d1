//! Column pool and restricted set covering recombination.
//!
//! Bins of local minima are stored as columns (item set plus penalty). The
//! restricted model picks at most `K` pool columns covering every item at
//! minimum total cost; it is solved by a depth-first branch and bound that
//! reports whether it finished within its budget, which drives the
//! adaptation of the pool size.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::clock::{Clock, Deadline};
use crate::instance::Instance;
use crate::solution::{bin_penalty, PenaltyWeights, Solution};

/// A set of items that could form a bin, with its penalty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    items: Vec<usize>,
    cost: i64,
    key: u64,
}

/// FNV-1a over the sorted item ids.
fn column_key(items: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in items {
        for byte in (i as u64).to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl Column {
    pub fn new(instance: &Instance, weights: PenaltyWeights, items: &[usize]) -> Self {
        let mut items = items.to_vec();
        items.sort_unstable();
        items.dedup();
        let cost = set_penalty(instance, weights, &items);
        let key = column_key(&items);
        Column { items, cost, key }
    }

    /// Sorted items.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn cost(&self) -> i64 {
        self.cost
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

fn set_penalty(instance: &Instance, weights: PenaltyWeights, items: &[usize]) -> i64 {
    let graph = instance.conflicts();
    let mut conflicts = 0;
    for (p, &i) in items.iter().enumerate() {
        conflicts += items[p + 1..].iter().filter(|&&j| graph.is_conflict(i, j)).count() as u64;
    }
    let load = items.iter().map(|&i| instance.weight(i)).sum();
    bin_penalty(conflicts, load, instance.capacity(), weights)
}

/// Deduplicated FIFO-bounded column store.
#[derive(Debug, Clone)]
pub struct ColumnPool {
    columns: VecDeque<Column>,
    limit: usize,
    index: BTreeMap<u64, Vec<u64>>,
    // insertion number of columns.front()
    first_age: u64,
}

impl ColumnPool {
    pub const MIN_LIMIT: usize = 100;
    pub const MAX_LIMIT: usize = 100_000;

    pub fn new(limit: usize) -> Self {
        ColumnPool { columns: VecDeque::new(), limit: limit.max(1), index: BTreeMap::new(), first_age: 0 }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Columns from oldest to newest.
    pub fn columns(&self) -> impl ExactSizeIterator<Item = &Column> + '_ {
        self.columns.iter()
    }

    /// Position of a column with exactly these (sorted) items.
    pub fn position(&self, items: &[usize]) -> Option<usize> {
        let key = column_key(items);
        self.index.get(&key)?.iter().find_map(|&age| {
            let p = (age - self.first_age) as usize;
            (self.columns[p].items == items).then_some(p)
        })
    }

    /// Inserts a column unless an identical item set is present, evicting
    /// the oldest columns beyond the limit. Returns whether it was new.
    pub fn insert(&mut self, column: Column) -> bool {
        if column.items.is_empty() || self.position(&column.items).is_some() {
            return false;
        }
        let age = self.first_age + self.columns.len() as u64;
        self.index.entry(column.key).or_default().push(age);
        self.columns.push_back(column);
        self.evict();
        true
    }

    fn evict(&mut self) {
        while self.columns.len() > self.limit {
            let old = self.columns.pop_front().expect("non-empty");
            let ages = self.index.get_mut(&old.key).expect("indexed");
            ages.retain(|&a| a != self.first_age);
            if ages.is_empty() {
                self.index.remove(&old.key);
            }
            self.first_age += 1;
        }
    }

    /// Adds every non-empty bin of `sol`; returns how many were new.
    pub fn add_solution(&mut self, sol: &Solution) -> usize {
        let instance = sol.instance();
        sol.bins()
            .iter()
            .filter(|b| !b.is_empty())
            .filter(|b| self.insert(Column::new(instance, sol.weights(), b.items())))
            .count()
    }

    pub fn set_limit(&mut self, limit: usize) {
        self.limit = limit.max(1);
        self.evict();
    }

    /// Grows the limit by 15% after a solve proven optimal, shrinks it by
    /// 15% otherwise, rounding to nearest and clamping to
    /// `[MIN_LIMIT, MAX_LIMIT]`.
    pub fn adapt_limit(&mut self, proven_optimal: bool) -> usize {
        let limit = adapted_limit(self.limit, proven_optimal);
        self.set_limit(limit);
        limit
    }
}

/// Pool limit after one set covering solve.
pub fn adapted_limit(limit: usize, proven_optimal: bool) -> usize {
    let percent = if proven_optimal { 115 } else { 85 };
    let scaled = (limit * percent + 50) / 100;
    scaled.clamp(ColumnPool::MIN_LIMIT, ColumnPool::MAX_LIMIT)
}

/// Whether items may be covered more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CoverMode {
    /// Every item covered at least once.
    #[default]
    Covering,
    /// Every item covered exactly once.
    Partition,
}

/// Search budget of one set covering solve.
#[derive(Debug, Clone, Copy)]
pub struct CoverBudget {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
}

impl CoverBudget {
    pub const UNLIMITED: CoverBudget = CoverBudget { time: None, nodes: None };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverOutcome {
    /// Indices into the column slice given to the solver.
    pub selection: Vec<usize>,
    pub cost: i64,
    /// True iff the search tree was exhausted (or a zero-cost cover found).
    pub proven_optimal: bool,
    pub nodes: u64,
}

/// Selects at most `max_columns` of `columns` covering items `0..n` at
/// minimum total cost.
///
/// `incumbent`, when given, must be a valid selection; it seeds the upper
/// bound and is returned if nothing better is found (also when the budget
/// is zero). Returns `None` only if no valid selection was found at all.
pub fn solve_cover(
    columns: &[Column],
    n: usize,
    max_columns: usize,
    mode: CoverMode,
    incumbent: Option<&[usize]>,
    budget: CoverBudget,
    clock: &dyn Clock,
) -> Option<CoverOutcome> {
    let mut search = CoverSearch::new(columns, n, max_columns, mode, budget, clock);
    if let Some(sel) = incumbent {
        debug_assert!(is_valid_cover(columns, n, max_columns, mode, sel));
        search.best_cost = sel.iter().map(|&c| columns[c].cost).sum();
        search.best = Some(sel.to_vec());
    }
    let exhausted = if budget.time == Some(Duration::ZERO) || budget.nodes == Some(0) {
        false
    } else {
        search.run()
    };
    let selection = search.best?;
    Some(CoverOutcome {
        cost: search.best_cost,
        proven_optimal: exhausted,
        nodes: search.nodes,
        selection,
    })
}

/// Checks that `selection` has at most `max_columns` distinct columns
/// covering every item (exactly once in partition mode).
pub fn is_valid_cover(columns: &[Column], n: usize, max_columns: usize, mode: CoverMode, selection: &[usize]) -> bool {
    if selection.len() > max_columns {
        return false;
    }
    let mut sorted = selection.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    let mut covered = vec![0u32; n];
    for &c in selection {
        for &i in &columns[c].items {
            covered[i] += 1;
        }
    }
    match mode {
        CoverMode::Covering => covered.iter().all(|&c| c >= 1),
        CoverMode::Partition => covered.iter().all(|&c| c == 1),
    }
}

struct CoverSearch<'c> {
    columns: &'c [Column],
    max_columns: usize,
    mode: CoverMode,
    /// Columns containing each item, cheapest first.
    by_item: Vec<Vec<usize>>,
    /// Cheapest column cost per item.
    min_cost: Vec<i64>,
    max_size: usize,
    covered: Vec<u32>,
    uncovered: usize,
    chosen: Vec<usize>,
    /// Columns already explored by an ancestor's earlier sibling; excluding
    /// them makes every column set appear at most once in the tree.
    banned: Vec<bool>,
    acc: i64,
    best: Option<Vec<usize>>,
    best_cost: i64,
    nodes: u64,
    node_limit: Option<u64>,
    deadline: Deadline<'c>,
    aborted: bool,
}

impl<'c> CoverSearch<'c> {
    fn new(
        columns: &'c [Column],
        n: usize,
        max_columns: usize,
        mode: CoverMode,
        budget: CoverBudget,
        clock: &'c dyn Clock,
    ) -> Self {
        let mut by_item = vec![Vec::new(); n];
        for (c, col) in columns.iter().enumerate() {
            for &i in &col.items {
                by_item[i].push(c);
            }
        }
        for list in &mut by_item {
            list.sort_by_key(|&c| (columns[c].cost, c));
        }
        let min_cost = by_item
            .iter()
            .map(|l| l.first().map_or(i64::MAX / 4, |&c| columns[c].cost))
            .collect();
        CoverSearch {
            columns,
            max_columns,
            mode,
            by_item,
            min_cost,
            max_size: columns.iter().map(|c| c.items.len()).max().unwrap_or(0),
            covered: vec![0; n],
            uncovered: n,
            chosen: Vec::new(),
            banned: vec![false; columns.len()],
            acc: 0,
            best: None,
            best_cost: i64::MAX,
            nodes: 0,
            node_limit: budget.nodes,
            deadline: Deadline::after(clock, budget.time),
            aborted: false,
        }
    }

    /// Returns true if the tree was exhausted.
    fn run(&mut self) -> bool {
        if self.best_cost == 0 {
            return true;
        }
        self.branch();
        !self.aborted
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.node_limit.is_some_and(|limit| self.nodes >= limit)
            || (self.nodes.is_multiple_of(256) && self.deadline.expired())
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn take(&mut self, c: usize) {
        for &i in &self.columns[c].items {
            if self.covered[i] == 0 {
                self.uncovered -= 1;
            }
            self.covered[i] += 1;
        }
        self.chosen.push(c);
        self.acc += self.columns[c].cost;
    }

    fn give_back(&mut self, c: usize) {
        for &i in &self.columns[c].items {
            self.covered[i] -= 1;
            if self.covered[i] == 0 {
                self.uncovered += 1;
            }
        }
        self.chosen.pop();
        self.acc -= self.columns[c].cost;
    }

    fn branch(&mut self) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if self.uncovered == 0 {
            if self.acc < self.best_cost {
                self.best_cost = self.acc;
                self.best = Some(self.chosen.clone());
            }
            return;
        }
        let remaining = self.max_columns - self.chosen.len();
        if remaining == 0 || self.uncovered > remaining * self.max_size {
            return;
        }
        let mut first = usize::MAX;
        let mut bound = 0;
        for (i, &c) in self.covered.iter().enumerate() {
            if c == 0 {
                first = first.min(i);
                bound = bound.max(self.min_cost[i]);
            }
        }
        if self.acc + bound >= self.best_cost {
            return;
        }

        let columns = self.columns;
        let mut explored = Vec::new();
        for p in 0..self.by_item[first].len() {
            let c = self.by_item[first][p];
            if self.acc + columns[c].cost >= self.best_cost {
                break;
            }
            if self.banned[c]
                || (self.mode == CoverMode::Partition && columns[c].items.iter().any(|&i| self.covered[i] > 0))
            {
                continue;
            }
            self.take(c);
            self.branch();
            self.give_back(c);
            if self.aborted || self.best_cost == 0 {
                break;
            }
            self.banned[c] = true;
            explored.push(c);
        }
        for c in explored {
            self.banned[c] = false;
        }
    }
}

/// Turns a cover into a packing with `bins` bins (padding with empty
/// ones). An item covered several times stays in the selected column whose
/// penalty would drop least without it and leaves the others; items are
/// processed by increasing index.
///
/// Panics if some item is uncovered or more than `bins` columns are given.
pub fn cover_to_solution<'a>(
    instance: &'a Instance,
    weights: PenaltyWeights,
    selected: &[&Column],
    bins: usize,
) -> Solution<'a> {
    assert!(selected.len() <= bins, "more columns than bins");
    let mut contents: Vec<Vec<usize>> = selected.iter().map(|c| c.items.clone()).collect();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); instance.len()];
    for (b, items) in contents.iter().enumerate() {
        for &i in items {
            holders[i].push(b);
        }
    }
    for (item, owners) in holders.iter().enumerate() {
        assert!(!owners.is_empty(), "item {item} is not covered");
        if owners.len() == 1 {
            continue;
        }
        let removal_gain = |content: &Vec<usize>| {
            let without: Vec<usize> = content.iter().copied().filter(|&x| x != item).collect();
            set_penalty(instance, weights, &without) - set_penalty(instance, weights, content)
        };
        // Largest (least negative) change on removal: keep it there.
        let keep = *owners
            .iter()
            .max_by_key(|&&b| (removal_gain(&contents[b]), core::cmp::Reverse(b)))
            .expect("non-empty");
        for &b in owners {
            if b != keep {
                contents[b].retain(|&x| x != item);
            }
        }
    }
    contents.resize(bins, Vec::new());
    Solution::from_bins(instance, weights, contents)
}
