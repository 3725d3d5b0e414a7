//! Nodal fields on the fixed rescaled domain `(0, L) x (-1/2, 1/2)` and
//! explicit crack geometry.

use crate::math::{Mat2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Full2dError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("crack geometry error: {0}")]
    Geometry(String),
    #[error("deformation invalid for this h: {0}")]
    InvalidForH(String),
    #[error("field mismatch: {0}")]
    Mismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Uniform tensor grid on `(-eta, L+eta) x (-1/2, 1/2)`. The margin `eta` is
/// zero except for boundary-value runs, where the domain is enlarged so
/// clamped material exists outside `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub n1: usize,
    pub n2: usize,
    pub length: f64,
    pub eta: f64,
}

impl Grid2 {
    pub fn new(n1: usize, n2: usize, length: f64) -> Result<Self, Full2dError> {
        Self::with_margin(n1, n2, length, 0.0)
    }

    pub fn with_margin(n1: usize, n2: usize, length: f64, eta: f64) -> Result<Self, Full2dError> {
        if n1 < 3 || n2 < 3 {
            return Err(Full2dError::InvalidGrid("need at least 3x3 nodes".into()));
        }
        if !(length > 0.0) || eta < 0.0 {
            return Err(Full2dError::InvalidGrid("bad domain dimensions".into()));
        }
        Ok(Grid2 { n1, n2, length, eta })
    }

    pub fn delta1(&self) -> f64 {
        (self.length + 2.0 * self.eta) / (self.n1 - 1) as f64
    }

    pub fn delta2(&self) -> f64 {
        1.0 / (self.n2 - 1) as f64
    }

    pub fn x1(&self, i1: usize) -> f64 {
        -self.eta + self.delta1() * i1 as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        -0.5 + self.delta2() * i2 as f64
    }

    pub fn node(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    pub fn n_nodes(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn n_elements(&self) -> usize {
        (self.n1 - 1) * (self.n2 - 1)
    }

    /// Corner node indices (bl, br, tl, tr) of element `(e1, e2)`.
    pub fn element_nodes(&self, e1: usize, e2: usize) -> [usize; 4] {
        [
            self.node(e1, e2),
            self.node(e1 + 1, e2),
            self.node(e1, e2 + 1),
            self.node(e1 + 1, e2 + 1),
        ]
    }

    pub fn element_area(&self) -> f64 {
        self.delta1() * self.delta2()
    }

    pub fn element_rect(&self, e1: usize, e2: usize) -> (Vec2, Vec2) {
        (
            Vec2::new(self.x1(e1), self.x2(e2)),
            Vec2::new(self.x1(e1 + 1), self.x2(e2 + 1)),
        )
    }
}

/// Central-difference gradient of a nodal vector field at an element center:
/// columns are the bilinear partials, the second scaled by `1/h`.
pub fn grad_h_at(grid: &Grid2, values: &[Vec2], e1: usize, e2: usize, h: f64) -> Mat2 {
    let [bl, br, tl, tr] = grid.element_nodes(e1, e2);
    let d1 = ((values[br] + values[tr]) - (values[bl] + values[tl])) * (0.5 / grid.delta1());
    let d2 = ((values[tl] + values[tr]) - (values[bl] + values[br])) * (0.5 / (grid.delta2() * h));
    Mat2::from_cols(d1, d2)
}

/// Scalar analogue of [`grad_h_at`].
pub fn grad_h_scalar_at(grid: &Grid2, values: &[f64], e1: usize, e2: usize, h: f64) -> Vec2 {
    let [bl, br, tl, tr] = grid.element_nodes(e1, e2);
    Vec2::new(
        ((values[br] + values[tr]) - (values[bl] + values[tl])) * (0.5 / grid.delta1()),
        ((values[tl] + values[tr]) - (values[bl] + values[br])) * (0.5 / (grid.delta2() * h)),
    )
}

/// Planar deformation sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct DeformationField {
    pub grid: Grid2,
    /// Aspect ratio of the physical strip; enters through the `1/h` scaling
    /// of transverse derivatives.
    pub h: f64,
    pub bound_m: f64,
    pub y: Vec<Vec2>,
}

/// Post-hoc report of the admissibility bound `max{|y|, |grad_h y|} <= M`.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub max_y: f64,
    pub max_grad_h: f64,
    pub violated: bool,
}

impl DeformationField {
    pub fn new(grid: Grid2, h: f64, bound_m: f64, y: Vec<Vec2>) -> Result<Self, Full2dError> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Full2dError::InvalidGrid("need 0 < h <= 1".into()));
        }
        if y.len() != grid.n_nodes() {
            return Err(Full2dError::Mismatch(format!(
                "{} values for {} nodes",
                y.len(),
                grid.n_nodes()
            )));
        }
        Ok(DeformationField { grid, h, bound_m, y })
    }

    /// `y(x) = (x1, h x2)`: the flat reference state, with `grad_h y = Id`.
    pub fn scaled_identity(grid: Grid2, h: f64, bound_m: f64) -> Result<Self, Full2dError> {
        let mut y = Vec::with_capacity(grid.n_nodes());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                y.push(Vec2::new(grid.x1(i1), h * grid.x2(i2)));
            }
        }
        Self::new(grid, h, bound_m, y)
    }

    pub fn grad_h(&self, e1: usize, e2: usize) -> Mat2 {
        grad_h_at(&self.grid, &self.y, e1, e2, self.h)
    }

    /// Checks the admissibility bound without modifying the field.
    pub fn check_bound(&self) -> BoundReport {
        let max_y = self.y.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let mut max_grad = 0.0f64;
        for e1 in 0..self.grid.n1 - 1 {
            for e2 in 0..self.grid.n2 - 1 {
                max_grad = max_grad.max(self.grad_h(e1, e2).norm());
            }
        }
        BoundReport {
            max_y,
            max_grad_h: max_grad,
            violated: max_y > self.bound_m || max_grad > self.bound_m,
        }
    }
}

/// Damage (phase) field; `s = 1` is intact material, `s = 0` fully broken.
#[derive(Debug, Clone)]
pub struct DamageField {
    pub grid: Grid2,
    pub eps_at: f64,
    pub eta_res: f64,
    pub s: Vec<f64>,
}

impl DamageField {
    pub fn intact(grid: Grid2, eps_at: f64, eta_res: f64) -> Result<Self, Full2dError> {
        Self::new(grid, eps_at, eta_res, vec![1.0; grid.n_nodes()])
    }

    pub fn new(
        grid: Grid2,
        eps_at: f64,
        eta_res: f64,
        s: Vec<f64>,
    ) -> Result<Self, Full2dError> {
        if !(eps_at > 0.0) || eta_res < 0.0 {
            return Err(Full2dError::Config("need eps_at > 0 and eta_res >= 0".into()));
        }
        if s.len() != grid.n_nodes() {
            return Err(Full2dError::Mismatch(format!(
                "{} values for {} nodes",
                s.len(),
                grid.n_nodes()
            )));
        }
        if s.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Full2dError::Config("damage values must lie in [0, 1]".into()));
        }
        Ok(DamageField {
            grid,
            eps_at,
            eta_res,
            s,
        })
    }
}

/// Explicit crack geometry: open polylines inside the closed domain.
#[derive(Debug, Clone, Default)]
pub struct SharpCrackSet {
    pub polylines: Vec<Vec<Vec2>>,
}

impl SharpCrackSet {
    pub fn empty() -> Self {
        SharpCrackSet::default()
    }

    /// Full-height vertical cracks `{t} x (-1/2, 1/2)`.
    pub fn vertical_lines(ts: &[f64]) -> Self {
        SharpCrackSet {
            polylines: ts
                .iter()
                .map(|&t| vec![Vec2::new(t, -0.5), Vec2::new(t, 0.5)])
                .collect(),
        }
    }

    pub fn segment(a: Vec2, b: Vec2) -> Self {
        SharpCrackSet {
            polylines: vec![vec![a, b]],
        }
    }

    pub fn validate(&self, grid: &Grid2) -> Result<(), Full2dError> {
        let tol = 1e-9 * (1.0 + grid.length);
        for poly in &self.polylines {
            if poly.len() < 2 {
                return Err(Full2dError::Geometry("polyline needs >= 2 points".into()));
            }
            for p in poly {
                if p.x < -grid.eta - tol
                    || p.x > grid.length + grid.eta + tol
                    || p.y < -0.5 - tol
                    || p.y > 0.5 + tol
                {
                    return Err(Full2dError::Geometry(format!(
                        "crack point ({}, {}) outside the domain",
                        p.x, p.y
                    )));
                }
            }
        }
        Ok(())
    }

    /// Edges as (start, end, unit normal, length).
    pub fn edges(&self) -> Vec<(Vec2, Vec2, Vec2, f64)> {
        let mut out = Vec::new();
        for poly in &self.polylines {
            for w in poly.windows(2) {
                let d = w[1] - w[0];
                let len = d.norm();
                if len > 0.0 {
                    out.push((w[0], w[1], d.perp() * (1.0 / len), len));
                }
            }
        }
        out
    }

    pub fn total_length(&self) -> f64 {
        self.edges().iter().map(|e| e.3).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(|p| p.len() < 2)
    }
}

fn on_segment_1d(a: f64, b: f64, lo: f64, hi: f64) -> bool {
    a.min(b) <= hi && a.max(b) >= lo
}

/// Does the segment `[p, q]` intersect the closed axis-aligned rectangle?
pub fn segment_meets_rect(p: Vec2, q: Vec2, lo: Vec2, hi: Vec2) -> bool {
    // quick reject on bounding boxes
    if !on_segment_1d(p.x, q.x, lo.x, hi.x) || !on_segment_1d(p.y, q.y, lo.y, hi.y) {
        return false;
    }
    let inside = |v: Vec2| v.x >= lo.x && v.x <= hi.x && v.y >= lo.y && v.y <= hi.y;
    if inside(p) || inside(q) {
        return true;
    }
    // Liang-Barsky clipping of the parametric segment against the slabs
    let d = q - p;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (num_lo, num_hi, dir) in [
        (lo.x - p.x, hi.x - p.x, d.x),
        (lo.y - p.y, hi.y - p.y, d.y),
    ] {
        if dir.abs() < 1e-300 {
            if num_lo > 0.0 || num_hi < 0.0 {
                return false;
            }
        } else {
            let (mut ta, mut tb) = (num_lo / dir, num_hi / dir);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Length of the part of segment `[p, q]` inside the closed rectangle.
pub fn segment_length_in_rect(p: Vec2, q: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    let d = q - p;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (num_lo, num_hi, dir) in [
        (lo.x - p.x, hi.x - p.x, d.x),
        (lo.y - p.y, hi.y - p.y, d.y),
    ] {
        if dir.abs() < 1e-300 {
            if num_lo > 0.0 || num_hi < 0.0 {
                return 0.0;
            }
        } else {
            let (mut ta, mut tb) = (num_lo / dir, num_hi / dir);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return 0.0;
            }
        }
    }
    (t1 - t0) * d.norm()
}
