//! Admissibility and observability estimates, certificate constants, and the
//! structural checks behind them.

pub mod admissibility;
pub mod constants;
pub mod decomposition;
pub mod observability;
pub mod report;
pub mod rho_search;

pub use admissibility::{
    estimate_admissibility_m, estimate_transport_admissibility_m, AdmissibilityEstimate,
    EnsembleSpec, GridInput, HeatConvolution, InputSignal, ModalInput, Piece,
};
pub use constants::{
    compute_theorem2_certificate, compute_theorem3_certificate, lemma1_bounds, recompute,
    Lemma1Bounds,
};
pub use decomposition::{
    boundary_regularity_check, check_decomposition, DecompositionReport, RegularityReport,
};
pub use observability::{
    estimate_observability_delta, transport_observability_delta, ObservabilityEstimate,
};
pub use report::{constant_entries, ConstantEntry};
pub use rho_search::{search_rho1, Rho1Search};
