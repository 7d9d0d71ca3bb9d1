//! Iterated local search over the number of bins.
//!
//! Starting from the first-fit packing, the search repeatedly deletes a
//! bin from the best feasible packing and tries to repair the resulting
//! penalized packing with local search, the large neighborhoods, periodic
//! set covering recombination and shaking. It stops when a repair attempt
//! runs out of shakes or the trivial lower bound is reached.

use alloc::vec::Vec;
use core::time::Duration;

use crate::clock::{Clock, Deadline};
use crate::cover::{cover_to_solution, solve_cover, Column, ColumnPool, CoverBudget, CoverMode};
use crate::local_search::LocalSearch;
use crate::neighborhoods::{assignment_step, ejection_step, grenade_step};
use crate::solution::{BinRemoval, FfdOrder, PenaltyWeights, Solution};
use crate::{rng_from_seed, Instance, Rng};

/// Which neighborhoods the inner loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Local search and shaking only.
    Simple,
    /// Local search plus the assignment, ejection chain, grenade and set
    /// covering neighborhoods.
    #[default]
    Complete,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simple => "simple",
            Mode::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchParams {
    /// Shakes without improvement before a bin count is given up.
    pub n_shak: usize,
    /// Improvement iterations between two shakes.
    pub n_ls: usize,
    /// Set covering runs when the shake counter is a positive multiple of this.
    pub n_sc: usize,
    /// Initial column pool limit.
    pub s_pool: usize,
    /// Time limit of one set covering solve.
    pub t_limit: Duration,
    /// Items relocated per shake.
    pub s_shak: usize,
    /// Penalty weights; `None` uses conflict = Q, excess = 1.
    pub weights: Option<PenaltyWeights>,
    pub mode: Mode,
    pub seed: u64,
    /// Global time budget of a run.
    pub wall_limit: Option<Duration>,
    pub ffd_order: FfdOrder,
    pub bin_removal: BinRemoval,
    /// Cap on the items of one assignment problem; `None` takes one item
    /// from every bin.
    pub assign_max_nodes: Option<usize>,
    pub cover_mode: CoverMode,
    /// Node limit of one set covering solve. Keeps runs reproducible when
    /// the time limit is not reached.
    pub sc_node_limit: Option<u64>,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            n_shak: 50,
            n_ls: 100,
            n_sc: 25,
            s_pool: 1500,
            t_limit: Duration::from_secs(20),
            s_shak: 3,
            weights: None,
            mode: Mode::Complete,
            seed: 0,
            wall_limit: None,
            ffd_order: FfdOrder::Decreasing,
            bin_removal: BinRemoval::MinLoad,
            assign_max_nodes: None,
            cover_mode: CoverMode::Covering,
            sc_node_limit: Some(2_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamsError {
    #[error("parameter {0} must be at least 1")]
    Zero(&'static str),
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        for (name, value) in [
            ("n_shak", self.n_shak),
            ("n_ls", self.n_ls),
            ("n_sc", self.n_sc),
            ("s_pool", self.s_pool),
            ("s_shak", self.s_shak),
        ] {
            if value == 0 {
                return Err(ParamsError::Zero(name));
            }
        }
        Ok(())
    }

    pub fn penalty_weights(&self, instance: &Instance) -> PenaltyWeights {
        self.weights.unwrap_or_else(|| PenaltyWeights::for_instance(instance))
    }
}

/// One attempt at packing into `bins` bins.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub bins: usize,
    pub success: bool,
    /// Shaking iterations performed.
    pub shakes: usize,
    /// Penalty right after the bin removal.
    pub initial_penalty: i64,
    /// Best penalty reached at this bin count.
    pub best_penalty: i64,
    pub cover_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    /// Bins of the reported packing.
    pub bins: usize,
    pub feasible: bool,
    pub lower_bound: usize,
    /// Bins of the initial first-fit packing.
    pub initial_bins: usize,
    pub timed_out: bool,
    pub elapsed: Duration,
    pub seed: u64,
    pub mode: Mode,
    pub trace: Vec<TraceEntry>,
    /// Item lists of the reported packing.
    pub packing: Vec<Vec<usize>>,
}

struct Run<'a, 'c> {
    instance: &'a Instance,
    params: &'a SearchParams,
    weights: PenaltyWeights,
    rng: Rng,
    local: LocalSearch,
    pool: ColumnPool,
    deadline: Deadline<'c>,
    clock: &'c dyn Clock,
    timed_out: bool,
}

impl<'a, 'c> Run<'a, 'c> {
    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && self.deadline.expired() {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Deletes a bin from `best`, first recording its bins in the pool.
    fn reduce_bins(&mut self, best: &mut Solution<'a>) {
        if self.params.mode == Mode::Complete {
            self.pool.add_solution(best);
        }
        best.remove_bin(self.params.bin_removal, &mut self.rng);
    }

    fn improve(&mut self, sol: &mut Solution<'a>) {
        for _ in 0..self.params.n_ls {
            if sol.is_feasible() || self.out_of_time() {
                return;
            }
            self.local.descend(sol, &mut self.rng);
            if self.params.mode == Mode::Complete {
                assignment_step(sol, &mut self.rng, self.params.assign_max_nodes);
                ejection_step(sol, &mut self.rng);
                grenade_step(sol, &mut self.rng);
            }
        }
    }

    /// Recombines pool columns into a packing with the same number of bins,
    /// never worse than `sol`.
    fn set_covering(&mut self, sol: &Solution<'a>) -> Solution<'a> {
        let mut columns: Vec<Column> = self.pool.columns().cloned().collect();
        let mut own = Vec::new();
        for bin in sol.bins().iter().filter(|b| !b.is_empty()) {
            let mut items = bin.items().to_vec();
            items.sort_unstable();
            let p = match self.pool.position(&items) {
                Some(p) => p,
                None => {
                    columns.push(Column::new(self.instance, self.weights, &items));
                    columns.len() - 1
                }
            };
            own.push(p);
        }
        let budget = CoverBudget { time: Some(self.params.t_limit), nodes: self.params.sc_node_limit };
        let k = sol.bin_count();
        let outcome = solve_cover(
            &columns,
            self.instance.len(),
            k,
            self.params.cover_mode,
            Some(&own),
            budget,
            self.clock,
        )
        .expect("incumbent columns form a cover");
        self.pool.adapt_limit(outcome.proven_optimal);

        let chosen: Vec<&Column> = outcome.selection.iter().map(|&c| &columns[c]).collect();
        let rebuilt = cover_to_solution(self.instance, self.weights, &chosen, k);
        assert!(
            rebuilt.total_penalty() <= sol.total_penalty(),
            "set covering worsened the incumbent"
        );
        rebuilt
    }
}

/// Runs the iterated local search. Deterministic for a fixed seed unless a
/// time limit fires.
pub fn run_ils(instance: &Instance, params: &SearchParams, clock: &dyn Clock) -> RunResult {
    let start = clock.elapsed();
    let weights = params.penalty_weights(instance);
    let mut run = Run {
        instance,
        params,
        weights,
        rng: rng_from_seed(params.seed),
        local: LocalSearch::new(),
        pool: ColumnPool::new(params.s_pool),
        deadline: Deadline::after(clock, params.wall_limit),
        clock,
        timed_out: false,
    };

    let lower_bound = instance.lower_bound();
    let mut feasible = Solution::first_fit(instance, weights, params.ffd_order);
    let initial_bins = feasible.bin_count();
    let mut trace = Vec::new();

    while feasible.used_bins() > lower_bound && !run.out_of_time() {
        let mut best = feasible.clone();
        // Empty bins go first; they cost nothing to remove.
        while best.bin_count() > best.used_bins() {
            let empty = best.lightest_bin();
            best.drop_empty_bin(empty);
        }
        run.reduce_bins(&mut best);
        let mut entry = TraceEntry {
            bins: best.bin_count(),
            success: false,
            shakes: 0,
            initial_penalty: best.total_penalty(),
            best_penalty: best.total_penalty(),
            cover_calls: 0,
        };

        let mut current = best.clone();
        let mut shakes_without_gain = 0;
        while shakes_without_gain <= params.n_shak && !best.is_feasible() && !run.out_of_time() {
            run.improve(&mut current);
            if params.mode == Mode::Complete {
                run.pool.add_solution(&current);
                if shakes_without_gain > 0 && shakes_without_gain % params.n_sc == 0 {
                    current = run.set_covering(&current);
                    entry.cover_calls += 1;
                }
            }
            if current.total_penalty() < best.total_penalty() {
                best = current.clone();
                shakes_without_gain = 0;
            } else {
                shakes_without_gain += 1;
            }
            if best.is_feasible() {
                break;
            }
            current = best.clone();
            current.shake(params.s_shak, &mut run.rng);
            entry.shakes += 1;
        }

        entry.best_penalty = best.total_penalty();
        entry.success = best.is_feasible();
        trace.push(entry);
        if !best.is_feasible() {
            break;
        }
        feasible = best;
    }

    let elapsed = clock.elapsed().saturating_sub(start);
    RunResult {
        bins: feasible.used_bins(),
        feasible: feasible.is_feasible(),
        lower_bound,
        initial_bins,
        timed_out: run.timed_out,
        elapsed,
        seed: params.seed,
        mode: params.mode,
        trace,
        packing: feasible.packing(),
    }
}
