//! Solver core for the bin packing problem with conflicts.
//!
//! Items with integer weights must be packed into the fewest bins of
//! capacity `Q` such that no two items joined by an edge of the conflict
//! graph share a bin. The solver works on complete but possibly infeasible
//! packings, penalizing conflicts and capacity excess, and repeatedly tries
//! to repair a packing with one bin fewer than the best feasible one.
//!
//! The crate is `no_std` and only needs `alloc`. Anything touching files,
//! wall clocks or threads lives in the companion `bppc` crate; time limits
//! reach the core through the [`Clock`] trait.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod clock;
pub mod cover;
pub mod instance;
pub mod local_search;
pub mod neighborhoods;
pub mod oracle;
pub mod search;
pub mod solution;

pub use clock::{Clock, FrozenClock};
pub use cover::{Column, ColumnPool, CoverBudget, CoverMode, CoverOutcome};
pub use instance::{
    ConflictGraph, GeneratorSpec, GraphKind, Instance, InstanceClass, InstanceError,
};
pub use local_search::{LocalSearch, Move, MoveDelta, MoveKind};
pub use oracle::{exact_optimum, validate_packing, FeasibilityReport, StructureError};
pub use search::{run_ils, Mode, ParamsError, RunResult, SearchParams, TraceEntry};
pub use solution::{Bin, BinRemoval, FfdOrder, PenaltyWeights, Relocation, Solution};

/// Seeded generator used by every randomized component.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the solver RNG from a numeric seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
