//! Sharp-crack energy evaluation and the explicit recovery construction
//! connecting midline curves to finite-thickness deformations.

use rayon::prelude::*;

use super::grid::{
    segment_meets_rect, DeformationField, Full2dError, Grid2, SharpCrackSet,
};
use crate::limit1d::MidlineCurve;
use crate::material::StoredEnergyModel;
use crate::math::{Mat2, Vec2};

/// Per-term decomposition of a finite-thickness energy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Energy2d {
    pub bulk: f64,
    pub surface: f64,
    pub load: f64,
    /// Area of elements excluded from bulk quadrature because they straddle
    /// a sharp crack.
    pub excluded_area: f64,
    pub total: f64,
}

impl Energy2d {
    pub(crate) fn close(mut self) -> Self {
        self.total = self.bulk + self.surface - self.load;
        self
    }
}

/// The rescaled energy of a deformation with an explicit crack set:
/// `1/h^2` times the stored energy over elements away from the cracks, plus
/// `beta` times the anisotropically weighted crack length.
pub fn energy_ih_sharp(
    y: &DeformationField,
    cracks: &SharpCrackSet,
    model: &StoredEnergyModel,
    beta: f64,
) -> Result<Energy2d, Full2dError> {
    let grid = y.grid;
    cracks.validate(&grid)?;
    let h = y.h;
    let edges = cracks.edges();
    let area = grid.element_area();
    let inv_h2 = 1.0 / (h * h);

    let per_row: Vec<(f64, f64)> = (0..grid.n1 - 1)
        .into_par_iter()
        .map(|e1| {
            let mut bulk = 0.0;
            let mut excluded = 0.0;
            for e2 in 0..grid.n2 - 1 {
                let (lo, hi) = grid.element_rect(e1, e2);
                let straddles = edges
                    .iter()
                    .any(|&(p, q, _, _)| segment_meets_rect(p, q, lo, hi));
                if straddles {
                    excluded += area;
                    continue;
                }
                bulk += inv_h2 * model.eval_w(y.grad_h(e1, e2)) * area;
            }
            (bulk, excluded)
        })
        .collect();
    let (bulk, excluded_area) = per_row
        .iter()
        .fold((0.0, 0.0), |(b, x), &(pb, px)| (b + pb, x + px));

    let surface = beta
        * edges
            .iter()
            .map(|&(_, _, nu, len)| Vec2::new(nu.x, nu.y / h).norm() * len)
            .sum::<f64>();

    Ok(Energy2d {
        bulk,
        surface,
        excluded_area,
        ..Default::default()
    }
    .close())
}

/// Builds the finite-thickness deformation associated with a midline curve:
/// the curve itself, a transverse rotation of the cross-section, and a
/// quadratic corrector carrying the relaxed transverse strain. Breakpoints
/// become full-height vertical cracks.
pub fn build_recovery_sequence(
    curve: &MidlineCurve,
    model: &StoredEnergyModel,
    h: f64,
    grid: Grid2,
) -> Result<(DeformationField, SharpCrackSet), Full2dError> {
    curve
        .validate()
        .map_err(|e| Full2dError::Config(e.to_string()))?;
    if (grid.length - curve.length).abs() > 1e-9 * curve.length || grid.eta != 0.0 {
        return Err(Full2dError::Mismatch(
            "grid must cover (0, L) without margin".into(),
        ));
    }
    let relaxed = model
        .relaxed_alpha()
        .map_err(|e| Full2dError::Config(e.to_string()))?;

    let mut y = Vec::with_capacity(grid.n_nodes());
    for i1 in 0..grid.n1 {
        let sample = curve.sample(grid.x1(i1));
        let tangent = Vec2::from_angle(sample.theta);
        let rot = Mat2::from_cols(tangent, tangent.perp());
        let d = rot.mul_vec(relaxed.gamma(-sample.kappa));
        for i2 in 0..grid.n2 {
            let x2 = grid.x2(i2);
            y.push(sample.pos + tangent.perp() * (h * x2) + d * (0.5 * h * h * x2 * x2));
        }
    }
    let field = DeformationField::new(grid, h, curve.bound_m, y)?;
    let report = field.check_bound();
    if report.violated {
        return Err(Full2dError::InvalidForH(format!(
            "bound {} exceeded: max |y| = {}, max |grad_h y| = {}",
            curve.bound_m, report.max_y, report.max_grad_h
        )));
    }
    let cracks = SharpCrackSet::vertical_lines(&curve.breakpoints());
    Ok((field, cracks))
}
