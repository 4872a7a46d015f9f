//! Independent reference solvers used to cross-check the main solvers.

mod characteristics;
mod expm;

pub use characteristics::CharacteristicsOracle;
pub use expm::expm_apply;
