//! Exact rectangular linear assignment.
//!
//! Everything here works on detached numbers: the solver only ever sees the
//! numeric values of a cost matrix.

mod brute;
mod degenerate;
mod matrix;
mod pad;
mod solver;
mod text;

pub use brute::{brute_force_assignment, for_each_mapping, ENUMERATION_LIMIT};
pub use degenerate::{is_degenerate, Degeneracy, DEFAULT_DEGENERACY_TOLERANCE};
pub use matrix::{partition_slots, AssignmentIlp, AssignmentSolution, CostMatrix};
pub use pad::{pad_square, DEFAULT_PAD_EPSILON};
pub use solver::solve_rectangular;
pub use text::{format_solution, parse_cost_matrix};
