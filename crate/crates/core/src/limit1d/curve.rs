//! Piecewise arc-length curves given by tangent-angle samples.
//!
//! The state variable is the tangent angle, so unit speed holds by
//! construction; positions are reconstructed by trapezoidal integration of
//! `(cos theta, sin theta)` from each segment's start point. Interior
//! segment boundaries are the candidate jump points of the curve and its
//! derivative.

use crate::math::Vec2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Limit1dError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid clamp: {0}")]
    InvalidClamp(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// One smooth piece of a midline curve.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// Position of the curve at `t_start`.
    pub start: Vec2,
    /// Tangent angles at the uniform sub-grid nodes (at least two).
    pub thetas: Vec<f64>,
}

impl Segment {
    /// Sub-grid spacing.
    pub fn delta(&self) -> f64 {
        (self.t_end - self.t_start) / (self.thetas.len() - 1) as f64
    }

    /// Positions at all sub-grid nodes, by trapezoidal integration of the
    /// unit tangent.
    pub fn positions(&self) -> Vec<Vec2> {
        let delta = self.delta();
        let mut out = Vec::with_capacity(self.thetas.len());
        let mut p = self.start;
        out.push(p);
        for j in 1..self.thetas.len() {
            let u0 = Vec2::from_angle(self.thetas[j - 1]);
            let u1 = Vec2::from_angle(self.thetas[j]);
            p += (u0 + u1) * (0.5 * delta);
            out.push(p);
        }
        out
    }

    pub fn end_position(&self) -> Vec2 {
        *self.positions().last().unwrap()
    }

    pub fn start_tangent(&self) -> Vec2 {
        Vec2::from_angle(self.thetas[0])
    }

    pub fn end_tangent(&self) -> Vec2 {
        Vec2::from_angle(*self.thetas.last().unwrap())
    }
}

/// Point sample of a curve: position, tangent angle and curvature.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub pos: Vec2,
    pub theta: f64,
    pub kappa: f64,
    pub segment: usize,
}

/// A piecewise-regular unit-speed curve on `(0, L)` with a finite set of
/// interior breakpoints.
#[derive(Debug, Clone)]
pub struct MidlineCurve {
    pub length: f64,
    /// Global position bound; the curve must stay inside the box `|y| <= M`.
    pub bound_m: f64,
    pub segments: Vec<Segment>,
}

impl MidlineCurve {
    pub fn validate(&self) -> Result<(), Limit1dError> {
        if !(self.length > 0.0) {
            return Err(Limit1dError::InvalidCurve("nonpositive length".into()));
        }
        if self.segments.is_empty() {
            return Err(Limit1dError::InvalidCurve("no segments".into()));
        }
        let tol = 1e-9 * self.length;
        let mut t = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if (seg.t_start - t).abs() > tol {
                return Err(Limit1dError::InvalidCurve(format!(
                    "segment {i} starts at {} instead of {t}",
                    seg.t_start
                )));
            }
            if seg.t_end <= seg.t_start {
                return Err(Limit1dError::InvalidCurve(format!(
                    "segment {i} has nonpositive length"
                )));
            }
            if seg.thetas.len() < 2 {
                return Err(Limit1dError::InvalidCurve(format!(
                    "segment {i} needs at least two theta samples"
                )));
            }
            if !seg.start.is_finite() || seg.thetas.iter().any(|x| !x.is_finite()) {
                return Err(Limit1dError::InvalidCurve(format!(
                    "segment {i} has non-finite data"
                )));
            }
            t = seg.t_end;
        }
        if (t - self.length).abs() > tol {
            return Err(Limit1dError::InvalidCurve(format!(
                "segments end at {t}, expected {}",
                self.length
            )));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            for p in seg.positions() {
                if p.norm() > self.bound_m {
                    return Err(Limit1dError::InvalidCurve(format!(
                        "segment {i} leaves the box |y| <= {}",
                        self.bound_m
                    )));
                }
            }
        }
        Ok(())
    }

    /// Interior breakpoint locations (the candidate jump set).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .skip(1)
            .map(|s| s.t_start)
            .collect()
    }

    /// Default jump-detection tolerance.
    pub fn tau_jump(&self) -> f64 {
        1e-6 * self.length
    }

    /// Samples position, tangent angle and curvature at parameter `t`.
    /// Curvature is the one-sided difference quotient of the angle samples.
    pub fn sample(&self, t: f64) -> CurveSample {
        let t = t.clamp(0.0, self.length);
        let idx = self
            .segments
            .iter()
            .position(|s| t <= s.t_end + 1e-12 * self.length)
            .unwrap_or(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let delta = seg.delta();
        let local = ((t - seg.t_start) / delta).clamp(0.0, (seg.thetas.len() - 1) as f64);
        let j = (local.floor() as usize).min(seg.thetas.len() - 2);
        let frac = local - j as f64;
        let theta = seg.thetas[j] + frac * (seg.thetas[j + 1] - seg.thetas[j]);
        let kappa = (seg.thetas[j + 1] - seg.thetas[j]) / delta;
        // position: trapezoid to node j, then the partial increment
        let positions = seg.positions();
        let u0 = Vec2::from_angle(seg.thetas[j]);
        let u1 = Vec2::from_angle(theta);
        let pos = positions[j] + (u0 + u1) * (0.5 * frac * delta);
        CurveSample {
            pos,
            theta,
            kappa,
            segment: idx,
        }
    }

    pub fn start_position(&self) -> Vec2 {
        self.segments[0].start
    }

    pub fn end_position(&self) -> Vec2 {
        self.segments.last().unwrap().end_position()
    }

    /// Straight single-segment curve starting at `start` in direction
    /// `angle`, with `n` sub-intervals.
    pub fn straight(length: f64, bound_m: f64, start: Vec2, angle: f64, n: usize) -> Self {
        MidlineCurve {
            length,
            bound_m,
            segments: vec![Segment {
                t_start: 0.0,
                t_end: length,
                start,
                thetas: vec![angle; n + 1],
            }],
        }
    }

    /// Single-segment curve with the given tangent-angle profile.
    pub fn from_angle_fn(
        length: f64,
        bound_m: f64,
        start: Vec2,
        n: usize,
        theta: impl Fn(f64) -> f64,
    ) -> Self {
        let thetas = (0..=n)
            .map(|j| theta(length * j as f64 / n as f64))
            .collect();
        MidlineCurve {
            length,
            bound_m,
            segments: vec![Segment {
                t_start: 0.0,
                t_end: length,
                start,
                thetas,
            }],
        }
    }

    /// Circular arc of constant curvature `kappa0` starting at `start` with
    /// initial tangent angle `theta0`.
    pub fn arc(
        length: f64,
        bound_m: f64,
        start: Vec2,
        theta0: f64,
        kappa0: f64,
        n: usize,
    ) -> Self {
        Self::from_angle_fn(length, bound_m, start, n, |t| theta0 + kappa0 * t)
    }
}

/// Per-unit-length load sampled uniformly on `(0, L)`, evaluated by linear
/// interpolation.
#[derive(Debug, Clone)]
pub struct LoadProfile {
    pub length: f64,
    pub values: Vec<Vec2>,
}

impl LoadProfile {
    pub fn zero(length: f64) -> Self {
        LoadProfile {
            length,
            values: vec![Vec2::ZERO; 2],
        }
    }

    pub fn constant(length: f64, value: Vec2) -> Self {
        LoadProfile {
            length,
            values: vec![value; 2],
        }
    }

    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> Vec2) -> Self {
        LoadProfile {
            length,
            values: (0..=n).map(|j| f(length * j as f64 / n as f64)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sq() == 0.0)
    }

    pub fn eval(&self, t: f64) -> Vec2 {
        let n = self.values.len() - 1;
        let s = (t / self.length * n as f64).clamp(0.0, n as f64);
        let j = (s.floor() as usize).min(n - 1);
        let frac = s - j as f64;
        self.values[j] + (self.values[j + 1] - self.values[j]) * frac
    }
}

/// End condition of the beam.
#[derive(Debug, Clone, Copy)]
pub enum ClampEnd {
    Free,
    Clamped { pos: Vec2, dir: Vec2 },
}

/// Clamp description for both ends. Non-attainment of a clamped end is
/// penalized by one crack energy `beta`.
#[derive(Debug, Clone, Copy)]
pub struct ClampSpec {
    pub left: ClampEnd,
    pub right: ClampEnd,
}

impl ClampSpec {
    pub fn free() -> Self {
        ClampSpec {
            left: ClampEnd::Free,
            right: ClampEnd::Free,
        }
    }

    pub fn clamped(y0: Vec2, e0: Vec2, y_l: Vec2, e_l: Vec2) -> Self {
        ClampSpec {
            left: ClampEnd::Clamped { pos: y0, dir: e0 },
            right: ClampEnd::Clamped { pos: y_l, dir: e_l },
        }
    }

    pub fn validate(&self, bound_m: f64) -> Result<(), Limit1dError> {
        for (name, end) in [("left", self.left), ("right", self.right)] {
            if let ClampEnd::Clamped { pos, dir } = end {
                if (dir.norm() - 1.0).abs() > 1e-9 {
                    return Err(Limit1dError::InvalidClamp(format!(
                        "{name} clamp direction is not a unit vector"
                    )));
                }
                if pos.norm() >= bound_m {
                    return Err(Limit1dError::InvalidClamp(format!(
                        "{name} clamp position outside the box |y| < {bound_m}"
                    )));
                }
            }
        }
        Ok(())
    }
}
