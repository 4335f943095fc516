//! DFS placement, the greedy / central / random baselines and an exact
//! branch-and-bound oracle for small instances.

mod dfs;
mod exact;
mod policies;

pub use dfs::{all_placements, dfs_place, NodeOrder};
pub use exact::{exact_solve, ExactSolution, SearchBudget, SolveError};
pub use policies::{
    central_place, complete_from_anchor, degree_order, greedy_place, random_place, residual_order, PolicyKind,
};
