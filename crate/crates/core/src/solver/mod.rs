//! Obstacle problems as linear complementarity problems, and linear
//! parabolic equations on moving domains.

mod lcp;
mod obstacle;

pub use lcp::{complementarity_residual, solve_lcp, solve_lcp_masked, DenseMatrix, LcpOptions, LcpReport, RowOperator};
pub use obstacle::{
    solve_elliptic_obstacle, solve_linear_parabolic, solve_parabolic_obstacle, ObstacleProblem, ShiftedOperator,
    SolveReport, SolverOptions, SpaceTimeGrid,
};
