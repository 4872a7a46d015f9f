//! Domain types shared by every other module.

mod certificate;
mod grid;
mod heat;
pub mod io;
mod modal;
mod trajectory;
mod transport;

pub use certificate::{CertificatePath, Provenance, StabilityCertificate};
pub use grid::{grid_to_modal, GridFunction};
pub use heat::{
    contraction_condition_check, random_potential, ContractionCheck, ControlOperator,
    SpectralDiffusionModel, CONTRACTION_TOL,
};
pub use modal::{eigenfunction, eigenvalue, sqrt_eigenvalue, ModalVector};
pub use trajectory::{ModelKind, States, Trajectory};
pub use transport::TransportModel;

/// Default truncation order.
pub const DEFAULT_MODES: usize = 64;
/// Default grid size.
pub const DEFAULT_GRID: usize = 513;
