//! Energies and solvers for thin brittle beams: a finite-thickness planar
//! Griffith model, its one-dimensional bending/fracture limit, recovery
//! constructions connecting the two, a phase-field regularization, and
//! rigidity diagnostics on rectangle covers.

pub mod full2d;
pub mod limit1d;
pub mod material;
pub mod math;
pub mod rigidity;
pub mod solver;
