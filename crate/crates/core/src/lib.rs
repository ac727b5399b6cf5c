//! Lattice laboratory for fractional (nonlocal) perimeter problems.
//!
//! The crate discretizes sets as binary phase fields on an axis-aligned
//! lattice, tabulates the singular interaction kernel |x-y|^{-n-s} over cell
//! pairs, and builds everything else on top of that shared weight table:
//! interaction energies and the localized fractional perimeter, the nonlocal
//! prescribed-curvature (Massari-type) functional with exact min-cut
//! minimization, principal-value mean curvature with Euler-Lagrange checks,
//! the Poisson-kernel extension to the upper half-space with monotonicity
//! profiles, geometric diagnostics (density, clean balls, flatness), and
//! pre-registered boundary-stickiness experiments.
//!
//! Everything is deterministic: the `parallel` feature (on by default) only
//! changes wall time, never output bits.

pub mod analysis;
pub mod calib;
pub mod certify;
pub mod curvature;
pub mod energy;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod extension;
pub mod field;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod mincut;

pub use error::{Error, Result};
pub use field::{BinaryField, FarField};
pub use grid::GridDomain;
pub use kernel::KernelTable;
