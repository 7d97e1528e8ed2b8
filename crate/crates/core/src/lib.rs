//! Floquet-Bloch band structure of the weighted Neumann Laplacian `-rho * Laplace`
//! on a strip decorated with an ε-periodic array of "room-and-passage"
//! protuberances, together with the semi-analytic limit spectrum
//! `[0, alpha] ∪ [beta, ∞)` that the bands approach as ε → 0.
//!
//! The pipeline is
//!
//! ```text
//! WaveguideParams -> CellGeometry -> PeriodCellMesh -> AssembledPair
//!     -> FiberPencil(φ) -> EigenResult -> BandStructure -> ConvergenceReport
//! ```
//!
//! with [`limitspec`] providing the ε → 0 reference values.

pub mod bands;
pub mod eig;
pub mod fem;
pub mod floquet;
pub mod geometry;
pub mod limitspec;
pub mod mesh;
pub mod sparse;

pub use bands::{
    compute_bands, convergence_study, detect_gaps, fold_validation, room_average, BandInterval,
    BandStructure, BandsError, ConvergenceEntry, ConvergenceReport, FoldReport, Gap, GapCheck,
    RoomAverage, StudyGeometry, StudyOptions, SweepSettings,
};
pub use eig::{
    dense_lowest, dense_oracle, residual_check, solve_lowest, EigError, EigenResult, SolveMethod,
};
pub use fem::{assemble, assemble_mass, assemble_stiffness, rayleigh_quotient, AssembledPair};
pub use floquet::{apply_quasiperiodic, brillouin_grid, FiberPencil, FloquetError};
pub use geometry::{
    asymptotic_preset, build_cell, validate_params, CellGeometry, GeometryError, Protuberance,
    Rect, Region, ScalingPreset, ValidatedParams, WaveguideParams,
};
pub use limitspec::{
    beta_of_mu, default_mode_range, limit_fiber_bands, limit_spectrum, solve_beta_star, BetaStar,
    FiberBands, LimitError, LimitParams, LimitSpectrum,
};
pub use mesh::{mesh_quality, refine, triangulate, MeshError, MeshQuality, PeriodCellMesh};
