//! Large neighborhoods explored once per inner iteration of the search.

pub mod assignment;
pub mod ejection;
pub mod grenade;
pub mod hungarian;

pub use assignment::{assignment_step, AssignmentProblem};
pub use ejection::{ejection_step, Chain, EjectionGraph, Node};
pub use grenade::{best_insertion, grenade_step};
pub use hungarian::CostMatrix;
