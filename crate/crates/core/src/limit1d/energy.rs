//! Evaluation of the limiting bending/fracture energy and its loaded and
//! clamped variants.
//!
//! The elastic part is `alpha/24 * integral of kappa^2`, discretized as the
//! sum of squared angle difference quotients; cracks are counted at interior
//! segment boundaries where position or tangent is discontinuous beyond a
//! tolerance, and each non-attained clamped end costs one crack as well.

use super::curve::{ClampEnd, ClampSpec, Limit1dError, LoadProfile, MidlineCurve};

/// Per-term energy decomposition; `total = bending + crack + boundary_penalty - load`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub bending: f64,
    pub crack_count: usize,
    pub crack: f64,
    pub load: f64,
    pub boundary_penalty: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn close(mut self) -> Self {
        self.total = self.bending + self.crack + self.boundary_penalty - self.load;
        self
    }
}

fn bending_energy(curve: &MidlineCurve, alpha: f64) -> f64 {
    let mut sum = 0.0;
    for seg in &curve.segments {
        let delta = seg.delta();
        for j in 1..seg.thetas.len() {
            let dq = (seg.thetas[j] - seg.thetas[j - 1]) / delta;
            sum += dq * dq * delta;
        }
    }
    alpha / 24.0 * sum
}

/// Number of interior breakpoints at which position or tangent jumps beyond
/// `tau`. A breakpoint where both sides match within `tau` counts zero; the
/// union of position and tangent jumps is counted once per point.
fn count_cracks(curve: &MidlineCurve, tau: f64) -> usize {
    let mut count = 0;
    for i in 1..curve.segments.len() {
        let prev = &curve.segments[i - 1];
        let next = &curve.segments[i];
        let pos_jump = (prev.end_position() - next.start).norm() > tau;
        let tan_jump = (prev.end_tangent() - next.start_tangent()).norm() > tau;
        if pos_jump || tan_jump {
            count += 1;
        }
    }
    count
}

fn load_work(curve: &MidlineCurve, load: &LoadProfile) -> f64 {
    let mut sum = 0.0;
    for seg in &curve.segments {
        let delta = seg.delta();
        let positions = seg.positions();
        let n = positions.len();
        for (j, p) in positions.iter().enumerate() {
            let t = seg.t_start + delta * j as f64;
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            sum += w * delta * p.dot(load.eval(t));
        }
    }
    sum
}

fn clamp_violations(curve: &MidlineCurve, clamp: &ClampSpec, tau: f64) -> usize {
    let mut violated = 0;
    if let ClampEnd::Clamped { pos, dir } = clamp.left {
        let first = &curve.segments[0];
        if (first.start - pos).norm() > tau || (first.start_tangent() - dir).norm() > tau {
            violated += 1;
        }
    }
    if let ClampEnd::Clamped { pos, dir } = clamp.right {
        let last = curve.segments.last().unwrap();
        if (last.end_position() - pos).norm() > tau || (last.end_tangent() - dir).norm() > tau {
            violated += 1;
        }
    }
    violated
}

/// Bending plus crack-counting energy.
pub fn energy_i0(curve: &MidlineCurve, alpha: f64, beta: f64) -> Result<EnergyBreakdown, Limit1dError> {
    curve.validate()?;
    let crack_count = count_cracks(curve, curve.tau_jump());
    Ok(EnergyBreakdown {
        bending: bending_energy(curve, alpha),
        crack_count,
        crack: beta * crack_count as f64,
        ..Default::default()
    }
    .close())
}

/// As `energy_i0` with the work of a body force subtracted.
pub fn energy_j0(
    curve: &MidlineCurve,
    alpha: f64,
    beta: f64,
    load: &LoadProfile,
) -> Result<EnergyBreakdown, Limit1dError> {
    let mut b = energy_i0(curve, alpha, beta)?;
    b.load = load_work(curve, load);
    Ok(b.close())
}

/// As `energy_j0`, charging `beta` per clamped end whose position or tangent
/// is not attained.
pub fn energy_j0_bv(
    curve: &MidlineCurve,
    alpha: f64,
    beta: f64,
    load: &LoadProfile,
    clamp: &ClampSpec,
) -> Result<EnergyBreakdown, Limit1dError> {
    clamp.validate(curve.bound_m)?;
    let mut b = energy_j0(curve, alpha, beta, load)?;
    let violated = clamp_violations(curve, clamp, curve.tau_jump());
    b.boundary_penalty = beta * violated as f64;
    Ok(b.close())
}

/// Violated-clamp count, exposed for regime classification.
pub fn violated_clamps(curve: &MidlineCurve, clamp: &ClampSpec) -> usize {
    clamp_violations(curve, clamp, curve.tau_jump())
}
