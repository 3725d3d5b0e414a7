//! Finite-thickness energies on the rescaled strip: sharp-crack evaluation,
//! recovery constructions, and phase-field minimization.

pub mod at;
pub mod grid;
pub mod sharp;

pub use at::{
    energy_at, extract_midline, minimize_at, AtOptions, AtSolve, Clamp2, Clamp2End, ExtractReport,
};
pub use grid::{
    BoundReport, DamageField, DeformationField, Full2dError, Grid2, SharpCrackSet,
};
pub use sharp::{build_recovery_sequence, energy_ih_sharp, Energy2d};
