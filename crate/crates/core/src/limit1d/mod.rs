//! The one-dimensional bending/fracture limit: piecewise unit-speed curves,
//! their energies and their minimization over shapes and jump topologies.

pub mod curve;
pub mod energy;
pub mod solve;

pub use curve::{ClampEnd, ClampSpec, CurveSample, Limit1dError, LoadProfile, MidlineCurve, Segment};
pub use energy::{energy_i0, energy_j0, energy_j0_bv, violated_clamps, EnergyBreakdown};
pub use solve::{
    minimize_fixed_topology, optimize_topology, FixedTopologyOptions, FixedTopologySolve,
    TopologyCandidate, TopologyResult,
};
