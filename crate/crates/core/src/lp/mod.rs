//! Self-contained LP/MIP core: two-phase dense primal simplex
//! with dual and unbounded-ray extraction, and best-first branch-and-bound.

mod mip;
mod program;
mod simplex;

pub use mip::{solve_mip, solve_mip_with, MipOptions, MipOutcome, MipStatus};
pub use program::{Cmp, Constraint, LinearProgram, Variable};
pub use simplex::{solve_lp, solve_lp_with, LpOutcome, LpStatus, Pricing, SimplexOptions};

/// Solver tolerances, shared by the simplex and branch-and-bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility (row and bound violation).
    pub feasibility: f64,
    /// Reduced-cost threshold for entering candidates.
    pub optimality: f64,
    /// Distance to the nearest integer accepted as integral.
    pub integrality: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-7,
            optimality: 1e-9,
            integrality: 1e-6,
            pivot: 1e-9,
        }
    }
}
