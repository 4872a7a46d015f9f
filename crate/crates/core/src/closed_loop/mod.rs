//! Closed-loop solvers for `x' = A x - rho B x`.

mod heat;
mod transport;
mod vpf;

pub use heat::{
    heat_closed_loop_solve, heat_closed_loop_solve_with, output_times, truncation_change,
};
pub use transport::{transport_closed_loop_solve, TransportOptions};
pub use vpf::{lp_norm, vpf_fixed_point_solve, VpfOptions, VpfSolution};
