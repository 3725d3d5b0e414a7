//! Rectangle-cover rigidity diagnostics on the rescaled frame: cell
//! energies, good/bad classification, per-cell rigid-motion fits, smooth
//! frame interpolation, and empirical scaling-law verification.
//!
//! The deformation is analyzed as `w(t, x2) = y(h t, x2) / h` on the
//! rescaled strip `(0, L/h) x (-1/2, 1/2)`, where `grad w` coincides with
//! `grad_h y`. Per-cell rigid motions are least-squares Procrustes fits over
//! an intact-support mask.

use crate::full2d::{DamageField, DeformationField, SharpCrackSet};
use crate::full2d::grid::{grad_h_scalar_at, segment_length_in_rect, segment_meets_rect};
use crate::material::dist_so2_sq;
use crate::math::{Mat2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RigidityError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("rigid fit failed: {0}")]
    Fit(String),
    #[error("all cells are bad; no frame to interpolate")]
    AllBad,
}

/// Overlapping cover of the rescaled strip by unit-height rectangles
/// `Q_a = (a - 1 - 1/(2n), a + 1/(2n))`, `a = 1..N`, optionally shifted by
/// `k/n`. Consecutive rectangles overlap in a strip of width `1/n`.
#[derive(Debug, Clone, Copy)]
pub struct RectangleCover {
    pub n: usize,
    pub h: f64,
    pub length: f64,
    pub shift_k: usize,
    pub count: usize,
    /// Shrink margin of the partition-of-unity ramps.
    pub margin: f64,
}

impl RectangleCover {
    pub fn new(n: usize, h: f64, length: f64, shift_k: usize) -> Result<Self, RigidityError> {
        if n < 2 {
            return Err(RigidityError::Config("overlap parameter n must be >= 2".into()));
        }
        if shift_k >= n {
            return Err(RigidityError::Config("shift index must satisfy k < n".into()));
        }
        if !(h > 0.0 && h < length) {
            return Err(RigidityError::Config("need 0 < h < L".into()));
        }
        let count = ((length - h) / h).floor() as usize;
        if count < 2 {
            return Err(RigidityError::Config(format!(
                "cover has {count} rectangles; need at least 2 (h too large)"
            )));
        }
        Ok(RectangleCover {
            n,
            h,
            length,
            shift_k,
            count,
            margin: 1.0 / (8 * n) as f64,
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift_k as f64 / self.n as f64
    }

    /// Rescaled x1-extent of `Q_a` (1-based).
    pub fn rect(&self, a: usize) -> (f64, f64) {
        let half = 1.0 / (2 * self.n) as f64;
        let s = self.shift();
        (a as f64 - 1.0 - half + s, a as f64 + half + s)
    }

    /// Rescaled x1-extent of the tripled neighborhood
    /// `Q_{a-1} u Q_a u Q_{a+1}`, clipped to existing rectangles.
    pub fn tripled(&self, a: usize) -> (f64, f64) {
        let lo = self.rect(a.saturating_sub(1).max(1)).0;
        let hi = self.rect((a + 1).min(self.count)).1;
        (lo, hi)
    }

    fn smoothstep(u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        u * u * (3.0 - 2.0 * u)
    }

    /// Ramp from 0 to 1 across the transition into cell `a` (a >= 2); the
    /// ramp spans the `Q_{a-1}/Q_a` overlap shrunk by the margin, so its
    /// slope is bounded by `2n` exactly.
    fn ramp(&self, a: usize, t: f64) -> f64 {
        if a <= 1 {
            return 1.0;
        }
        if a > self.count {
            return 0.0;
        }
        let half = 1.0 / (2 * self.n) as f64;
        let center = (a - 1) as f64 + self.shift();
        let lo = center - half + self.margin;
        let width = 2.0 * (half - self.margin);
        Self::smoothstep((t - lo) / width)
    }

    /// Partition-of-unity weight of cell `a` at rescaled coordinate `t`.
    pub fn phi(&self, a: usize, t: f64) -> f64 {
        self.ramp(a, t) - self.ramp(a + 1, t)
    }
}

/// Per-cell energy and classification record.
#[derive(Debug, Clone, Copy)]
pub struct CellStats {
    /// `eps_a`: elastic integral plus `h` times the crack measure in `Q_a`.
    pub eps_a: f64,
    pub elastic: f64,
    pub crack_in_cell: f64,
    /// Crack measure over the tripled neighborhood, used for classification.
    pub crack_tripled: f64,
    pub bad: bool,
}

/// Crack information feeding the cell energies.
pub enum CrackSource<'a> {
    None,
    Sharp(&'a SharpCrackSet),
    /// Diffuse mode: the AT surface integral restricted to the rectangle
    /// stands in for the crack measure.
    Diffuse(&'a DamageField, f64), // field, beta is not needed: unit toughness measure
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub n: usize,
    pub shift_k: usize,
    /// Crack-measure threshold, strictly between 1/2 and 1.
    pub lambda: f64,
    /// Absolute elastic threshold for the good/bad split.
    pub elastic_cell_max: f64,
}

/// Classifies the cover cells of a deformation: a cell is bad when the crack
/// measure over its tripled neighborhood reaches `lambda` or its elastic
/// content exceeds the configured cap.
pub fn cover_and_classify(
    y: &DeformationField,
    cracks: &CrackSource,
    opts: &ClassifyOptions,
) -> Result<(RectangleCover, Vec<CellStats>), RigidityError> {
    if !(opts.lambda > 0.5 && opts.lambda < 1.0) {
        return Err(RigidityError::Config(
            "lambda must lie strictly between 1/2 and 1".into(),
        ));
    }
    let cover = RectangleCover::new(opts.n, y.h, y.grid.length, opts.shift_k)?;
    let grid = y.grid;
    let h = y.h;
    let d1r = grid.delta1() / h; // rescaled element width
    let area_r = d1r * grid.delta2();

    // precompute per-element elastic density and crack content, indexed by e1
    let sharp_edges = match cracks {
        CrackSource::Sharp(set) => set.edges(),
        _ => Vec::new(),
    };
    let mut elastic_col = vec![0.0; grid.n1 - 1]; // summed over e2
    let mut diffuse_col = vec![0.0; grid.n1 - 1];
    for e1 in 0..grid.n1 - 1 {
        for e2 in 0..grid.n2 - 1 {
            let (lo, hi) = grid.element_rect(e1, e2);
            if !sharp_edges.is_empty()
                && sharp_edges
                    .iter()
                    .any(|&(p, q, _, _)| segment_meets_rect(p, q, lo, hi))
            {
                continue; // the jump set is charged to the crack term instead
            }
            elastic_col[e1] += dist_so2_sq(y.grad_h(e1, e2)) * area_r;
            if let CrackSource::Diffuse(s, _) = cracks {
                let s_e = grid
                    .element_nodes(e1, e2)
                    .iter()
                    .map(|&i| s.s[i])
                    .sum::<f64>()
                    * 0.25;
                let g = grad_h_scalar_at(&grid, &s.s, e1, e2, h);
                diffuse_col[e1] += ((1.0 - s_e) * (1.0 - s_e) / (4.0 * s.eps_at)
                    + s.eps_at * g.norm_sq())
                    * grid.element_area();
            }
        }
    }
    // rescaled x1-interval of element column e1
    let col_range = |e1: usize| -> (f64, f64) { (grid.x1(e1) / h, grid.x1(e1 + 1) / h) };
    let window = |lo: f64, hi: f64, col: &[f64]| -> f64 {
        let mut sum = 0.0;
        for (e1, v) in col.iter().enumerate() {
            let (a, b) = col_range(e1);
            let ov = (b.min(hi) - a.max(lo)).max(0.0);
            if ov > 0.0 {
                sum += v * ov / (b - a);
            }
        }
        sum
    };
    let crack_len = |lo: f64, hi: f64| -> f64 {
        match cracks {
            CrackSource::None => 0.0,
            CrackSource::Sharp(set) => set
                .edges()
                .iter()
                .map(|&(p, q, _, _)| {
                    segment_length_in_rect(
                        Vec2::new(p.x / h, p.y),
                        Vec2::new(q.x / h, q.y),
                        Vec2::new(lo, -0.5),
                        Vec2::new(hi, 0.5),
                    )
                })
                .sum(),
            CrackSource::Diffuse(..) => window(lo, hi, &diffuse_col),
        }
    };

    let mut stats = Vec::with_capacity(cover.count);
    for a in 1..=cover.count {
        let (lo, hi) = cover.rect(a);
        let elastic = window(lo, hi, &elastic_col);
        let crack_in_cell = crack_len(lo, hi);
        let (tlo, thi) = cover.tripled(a);
        let crack_tripled = crack_len(tlo, thi);
        stats.push(CellStats {
            eps_a: elastic + h * crack_in_cell,
            elastic,
            crack_in_cell,
            crack_tripled,
            bad: crack_tripled >= opts.lambda || elastic > opts.elastic_cell_max,
        });
    }
    Ok((cover, stats))
}

/// Least-squares rigid motion fitted to the rescaled deformation over one
/// cover rectangle.
#[derive(Debug, Clone, Copy)]
pub struct RigidFit {
    pub angle: f64,
    pub c: Vec2,
    /// Fraction of the rectangle's nodes used for the fit.
    pub support_frac: f64,
    /// Area-weighted squared fit residual.
    pub residual_sq: f64,
}

impl RigidFit {
    pub fn rotation(&self) -> Mat2 {
        Mat2::rotation(self.angle)
    }

    /// The rigid motion evaluated at a rescaled point.
    pub fn apply(&self, x: Vec2) -> Vec2 {
        self.rotation().mul_vec(x) + self.c
    }
}

/// Procrustes fit of `w = y/h` over the nodes of `Q_a`. `support`, if given,
/// masks out broken nodes; the remaining support must cover at least half of
/// the rectangle.
pub fn fit_rigid_motion(
    y: &DeformationField,
    cover: &RectangleCover,
    a: usize,
    support: Option<&[bool]>,
) -> Result<RigidFit, RigidityError> {
    let grid = y.grid;
    let h = y.h;
    let (lo, hi) = cover.rect(a);
    let mut pts: Vec<(Vec2, Vec2)> = Vec::new();
    let mut in_rect = 0usize;
    for i1 in 0..grid.n1 {
        let t = grid.x1(i1) / h;
        if t < lo || t > hi {
            continue;
        }
        for i2 in 0..grid.n2 {
            let idx = grid.node(i1, i2);
            in_rect += 1;
            if support.map_or(true, |m| m[idx]) {
                let x = Vec2::new(t, grid.x2(i2));
                pts.push((x, y.y[idx] * (1.0 / h)));
            }
        }
    }
    if in_rect == 0 {
        return Err(RigidityError::Fit(format!("rectangle {a} contains no nodes")));
    }
    let support_frac = pts.len() as f64 / in_rect as f64;
    if support_frac < 0.5 {
        return Err(RigidityError::Fit(format!(
            "support covers only {:.0}% of rectangle {a}",
            100.0 * support_frac
        )));
    }
    let m = pts.len() as f64;
    let x_bar = pts.iter().fold(Vec2::ZERO, |s, p| s + p.0) * (1.0 / m);
    let w_bar = pts.iter().fold(Vec2::ZERO, |s, p| s + p.1) * (1.0 / m);
    // cross-covariance H = sum (w - w_bar)(x - x_bar)^T
    let mut h11 = 0.0;
    let mut h12 = 0.0;
    let mut h21 = 0.0;
    let mut h22 = 0.0;
    for (x, w) in &pts {
        let dx = *x - x_bar;
        let dw = *w - w_bar;
        h11 += dw.x * dx.x;
        h12 += dw.x * dx.y;
        h21 += dw.y * dx.x;
        h22 += dw.y * dx.y;
    }
    let sin_num = h21 - h12;
    let cos_num = h11 + h22;
    if sin_num.abs() < 1e-300 && cos_num.abs() < 1e-300 {
        return Err(RigidityError::Fit(format!(
            "degenerate point configuration in rectangle {a}"
        )));
    }
    let angle = sin_num.atan2(cos_num);
    let rot = Mat2::rotation(angle);
    let c = w_bar - rot.mul_vec(x_bar);
    let weight = (grid.delta1() / h) * grid.delta2();
    let residual_sq = pts
        .iter()
        .map(|(x, w)| (*w - rot.mul_vec(*x) - c).norm_sq() * weight)
        .sum();
    Ok(RigidFit {
        angle,
        c,
        support_frac,
        residual_sq,
    })
}

/// Smoothly interpolated frame field on `(0, L)` (unrescaled coordinates),
/// with at most one jump per bad component.
#[derive(Debug, Clone)]
pub struct InterpolatedFrames {
    pub x1: Vec<f64>,
    pub r: Vec<Vec2>,
    pub rot: Vec<Mat2>,
    pub breakpoints: Vec<f64>,
    pub max_dist_so2: f64,
    pub h: f64,
}

struct BadRun {
    first: usize, // 1-based cell index
    last: usize,
    /// Rescaled midpoint of the component's x1 projection; switch point of
    /// the extrapolated frame.
    t_mid: f64,
    left: Option<usize>,  // good neighbor indices
    right: Option<usize>,
}

fn bad_runs(cover: &RectangleCover, stats: &[CellStats]) -> Vec<BadRun> {
    let mut runs = Vec::new();
    let mut a = 1;
    while a <= stats.len() {
        if stats[a - 1].bad {
            let first = a;
            while a <= stats.len() && stats[a - 1].bad {
                a += 1;
            }
            let last = a - 1;
            let lo = cover.rect(first).0;
            let hi = cover.rect(last).1;
            runs.push(BadRun {
                first,
                last,
                t_mid: 0.5 * (lo + hi),
                left: if first > 1 { Some(first - 1) } else { None },
                right: if last < stats.len() { Some(last + 1) } else { None },
            });
        } else {
            a += 1;
        }
    }
    runs
}

/// Blends the good-cell rigid motions with the partition of unity;
/// bad components take the left/right good neighbor's frame, switching at
/// the component midpoint (the only admissible jump points).
pub fn interpolate_frames(
    cover: &RectangleCover,
    stats: &[CellStats],
    fits: &[Option<RigidFit>],
    samples: usize,
) -> Result<InterpolatedFrames, RigidityError> {
    if stats.len() != cover.count || fits.len() != cover.count {
        return Err(RigidityError::Config("stats/fits length mismatch".into()));
    }
    if stats.iter().all(|s| s.bad) {
        return Err(RigidityError::AllBad);
    }
    for a in 1..=cover.count {
        if !stats[a - 1].bad && fits[a - 1].is_none() {
            return Err(RigidityError::Config(format!("good cell {a} has no fit")));
        }
    }
    let runs = bad_runs(cover, stats);
    // effective frame of cell a at rescaled position t
    let eff = |a: usize, t: f64| -> &RigidFit {
        if !stats[a - 1].bad {
            return fits[a - 1].as_ref().unwrap();
        }
        let run = runs
            .iter()
            .find(|r| r.first <= a && a <= r.last)
            .expect("bad cell belongs to a run");
        let pick = match (run.left, run.right) {
            (Some(l), Some(r)) => {
                if t < run.t_mid {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("not all cells are bad"),
        };
        fits[pick - 1].as_ref().unwrap()
    };

    let h = cover.h;
    let mut x1 = Vec::with_capacity(samples);
    let mut r = Vec::with_capacity(samples);
    let mut rot = Vec::with_capacity(samples);
    let mut max_dist = 0.0f64;
    for j in 0..samples {
        let x = (j as f64 + 0.5) * cover.length / samples as f64;
        let t = x / h;
        let mut rv = Vec2::ZERO;
        let mut rm = Mat2::ZERO;
        let mut wsum = 0.0;
        for a in 1..=cover.count {
            let w = cover.phi(a, t);
            if w == 0.0 {
                continue;
            }
            let fit = eff(a, t);
            rv += fit.apply(Vec2::new(t, 0.0)) * (w * h);
            rm = rm + fit.rotation() * w;
            wsum += w;
        }
        // off the covered range (near the strip ends) extend the nearest cell
        if wsum < 1e-12 {
            let a = if t < cover.rect(1).0 { 1 } else { cover.count };
            let fit = eff(a, t);
            rv = fit.apply(Vec2::new(t, 0.0)) * h;
            rm = fit.rotation();
            wsum = 1.0;
        }
        rv = rv * (1.0 / wsum);
        rm = rm * (1.0 / wsum);
        max_dist = max_dist.max(crate::material::dist_so2(rm));
        x1.push(x);
        r.push(rv);
        rot.push(rm);
    }
    let breakpoints = runs
        .iter()
        .filter(|r| r.left.is_some() && r.right.is_some())
        .map(|r| r.t_mid * h)
        .collect();
    Ok(InterpolatedFrames {
        x1,
        r,
        rot,
        breakpoints,
        max_dist_so2: max_dist,
        h,
    })
}

impl InterpolatedFrames {
    fn straddles_break(&self, a: f64, b: f64) -> bool {
        self.breakpoints.iter().any(|&t| a < t && t < b)
    }

    /// `L2(0,L)` norm of the derivative of the rotation field, skipping
    /// sample pairs that straddle a jump.
    pub fn rot_deriv_l2(&self) -> f64 {
        let mut sum = 0.0;
        for j in 1..self.x1.len() {
            if self.straddles_break(self.x1[j - 1], self.x1[j]) {
                continue;
            }
            let dx = self.x1[j] - self.x1[j - 1];
            sum += (self.rot[j] - self.rot[j - 1]).norm_sq() / dx;
        }
        sum.sqrt()
    }

    /// Squared `L2(0,L)` norm of `r' - R e1`, skipping jump-straddling pairs.
    pub fn r_deriv_mismatch_l2_sq(&self) -> f64 {
        let mut sum = 0.0;
        for j in 1..self.x1.len() {
            if self.straddles_break(self.x1[j - 1], self.x1[j]) {
                continue;
            }
            let dx = self.x1[j] - self.x1[j - 1];
            let dr = (self.r[j] - self.r[j - 1]) * (1.0 / dx);
            let rmid = (self.rot[j] + self.rot[j - 1]) * 0.5;
            sum += (dr - rmid.col(0)).norm_sq() * dx;
        }
        sum
    }
}

/// One h of a rigidity sweep, as consumed by [`verify_scalings`].
pub struct SweepEntry {
    pub h: f64,
    pub cover: RectangleCover,
    pub stats: Vec<CellStats>,
    pub fits: Vec<Option<RigidFit>>,
    pub frames: InterpolatedFrames,
}

#[derive(Debug, Clone)]
pub struct LawReport {
    pub law: &'static str,
    /// (h, measured value) pairs in sweep order.
    pub per_h: Vec<(f64, f64)>,
    /// Largest ratio between consecutive sweep values (>= 1).
    pub drift: f64,
    pub pass: bool,
    /// Log-log slope of value versus h, when meaningful.
    pub fitted_order: Option<f64>,
}

const EPS_FLOOR: f64 = 1e-30;

fn drift_of(values: &[f64]) -> f64 {
    let mut worst = 1.0f64;
    for w in values.windows(2) {
        let (a, b) = (w[0].max(EPS_FLOOR), w[1].max(EPS_FLOOR));
        worst = worst.max((a / b).max(b / a));
    }
    worst
}

fn loglog_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(_, v)| *v > EPS_FLOOR)
        .map(|&(h, v)| (h.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Empirical constant of the adjacent-cell rigidity law: the worst ratio of
/// frame difference to cell energies over adjacent good pairs.
fn adjacent_ratio_constant(entry: &SweepEntry) -> f64 {
    let mut worst = 0.0f64;
    for a in 1..entry.stats.len() {
        let (sa, sb) = (&entry.stats[a - 1], &entry.stats[a]);
        if sa.bad || sb.bad {
            continue;
        }
        let (fa, fb) = match (&entry.fits[a - 1], &entry.fits[a]) {
            (Some(fa), Some(fb)) => (fa, fb),
            _ => continue,
        };
        let rot_diff = (fa.rotation() - fb.rotation()).norm_sq();
        // sup over the union rectangle of the affine difference: attained at
        // a corner
        let (lo, _) = entry.cover.rect(a);
        let (_, hi) = entry.cover.rect(a + 1);
        let mut sup_sq = 0.0f64;
        for &t in &[lo, hi] {
            for &x2 in &[-0.5, 0.5] {
                let p = Vec2::new(t, x2);
                sup_sq = sup_sq.max((fa.apply(p) - fb.apply(p)).norm_sq());
            }
        }
        let num = rot_diff + sup_sq;
        let den = sa.eps_a + sb.eps_a;
        if num < 1e-24 && den < 1e-24 {
            continue; // exactly rigid pair: nothing to measure
        }
        worst = worst.max(num / den.max(EPS_FLOOR));
    }
    worst
}

/// Measures the sweep's empirical scaling constants and their drift across
/// h-halvings: the adjacent-cell law, the boundedness of the rotation
/// derivative, the squared mismatch `|r' - R e1|` (expected to scale like
/// h^2), and the total-cell-energy bound `sum eps_a <= C h`.
pub fn verify_scalings(
    entries: &[SweepEntry],
    drift_factor: f64,
) -> Result<Vec<LawReport>, RigidityError> {
    if entries.len() < 3 {
        return Err(RigidityError::Config("need at least 3 h values".into()));
    }
    let mut reports = Vec::new();

    let c42: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (e.h, adjacent_ratio_constant(e)))
        .collect();
    let vals: Vec<f64> = c42.iter().map(|p| p.1).collect();
    let drift = drift_of(&vals);
    reports.push(LawReport {
        law: "adjacent_cell_ratio",
        per_h: c42,
        drift,
        pass: drift <= drift_factor,
        fitted_order: None,
    });

    let rderiv: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (e.h, e.frames.rot_deriv_l2()))
        .collect();
    let vals: Vec<f64> = rderiv.iter().map(|p| p.1).collect();
    let drift = drift_of(&vals);
    reports.push(LawReport {
        law: "rot_deriv_l2",
        per_h: rderiv,
        drift,
        pass: drift <= drift_factor,
        fitted_order: None,
    });

    let mismatch: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (e.h, e.frames.r_deriv_mismatch_l2_sq()))
        .collect();
    // the constant is value / h^2; its drift is what must stay bounded
    let consts: Vec<f64> = mismatch.iter().map(|&(h, v)| v / (h * h)).collect();
    let drift = drift_of(&consts);
    let order = loglog_slope(&mismatch);
    reports.push(LawReport {
        law: "r_deriv_mismatch_sq",
        per_h: mismatch,
        drift,
        pass: drift <= drift_factor,
        fitted_order: order,
    });

    let eps_sum: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (e.h, e.stats.iter().map(|s| s.eps_a).sum::<f64>()))
        .collect();
    let consts: Vec<f64> = eps_sum.iter().map(|&(h, v)| v / h).collect();
    let drift = drift_of(&consts);
    let order = loglog_slope(&eps_sum);
    reports.push(LawReport {
        law: "sum_eps_over_h",
        per_h: eps_sum,
        drift,
        pass: drift <= drift_factor,
        fitted_order: order,
    });

    Ok(reports)
}

/// Node mask flagging points farther than `pad` from every crack edge.
pub fn intact_mask_sharp(
    y: &DeformationField,
    cracks: &SharpCrackSet,
    pad: f64,
) -> Vec<bool> {
    let grid = y.grid;
    let edges = cracks.edges();
    let dist_to_seg = |p: Vec2, a: Vec2, b: Vec2| -> f64 {
        let ab = b - a;
        let t = ((p - a).dot(ab) / ab.norm_sq().max(1e-300)).clamp(0.0, 1.0);
        (p - (a + ab * t)).norm()
    };
    let mut mask = vec![true; grid.n_nodes()];
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            let p = Vec2::new(grid.x1(i1), grid.x2(i2));
            if edges
                .iter()
                .any(|&(a, b, _, _)| dist_to_seg(p, a, b) < pad)
            {
                mask[grid.node(i1, i2)] = false;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full2d::{build_recovery_sequence, Grid2};
    use crate::limit1d::MidlineCurve;
    use crate::material::StoredEnergyModel;

    const M: f64 = 1e4;

    #[test]
    fn cover_geometry() {
        let c = RectangleCover::new(4, 0.125, 1.0, 0).unwrap();
        assert_eq!(c.count, 7);
        let (lo1, hi1) = c.rect(1);
        let (lo2, _) = c.rect(2);
        assert!((hi1 - lo2 - 0.25).abs() < 1e-12); // overlap width 1/n
        assert!((hi1 - lo1 - 1.25).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_sums_to_one_with_bounded_slope() {
        let c = RectangleCover::new(3, 0.1, 1.0, 1).unwrap();
        let (t0, _) = c.rect(1);
        let (_, t1) = c.rect(c.count);
        let steps = 20000;
        let dt = (t1 - t0) / steps as f64;
        let total = |t: f64| -> f64 { (1..=c.count).map(|a| c.phi(a, t)).sum() };
        let mut max_slope = 0.0f64;
        for j in 0..=steps {
            let t = t0 + dt * j as f64;
            assert!((total(t) - 1.0).abs() < 1e-12, "t = {t}");
            for a in 1..=c.count {
                // support containment: zero outside the shrunken rectangle
                let (lo, hi) = c.rect(a);
                if t < lo + c.margin || t > hi - c.margin {
                    assert!(c.phi(a, t).abs() < 1e-12 || (t >= lo && t <= hi));
                }
                if j > 0 {
                    let slope = (c.phi(a, t) - c.phi(a, t - dt)).abs() / dt;
                    max_slope = max_slope.max(slope);
                }
            }
        }
        assert!(max_slope <= 2.0 * c.n as f64 + 1e-6, "slope {max_slope}");
    }

    fn rigid_field(grid: Grid2, h: f64, angle: f64, c: Vec2) -> DeformationField {
        // y such that w = y/h is exactly R x + c in rescaled coordinates
        let rot = Mat2::rotation(angle);
        let mut y = Vec::with_capacity(grid.n_nodes());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                let x = Vec2::new(grid.x1(i1) / h, grid.x2(i2));
                y.push((rot.mul_vec(x) + c) * h);
            }
        }
        DeformationField::new(grid, h, M, y).unwrap()
    }

    #[test]
    fn fit_recovers_exact_rigid_motion() {
        let grid = Grid2::new(129, 9, 1.0).unwrap();
        let h = 0.125;
        let y = rigid_field(grid, h, 0.3, Vec2::new(0.5, -0.2));
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        for a in 1..=cover.count {
            let fit = fit_rigid_motion(&y, &cover, a, None).unwrap();
            assert!((fit.angle - 0.3).abs() < 1e-12);
            assert!((fit.c - Vec2::new(0.5, -0.2)).norm() < 1e-12);
            assert!(fit.residual_sq < 1e-24);
        }
    }

    #[test]
    fn fit_is_rotation_equivariant() {
        let grid = Grid2::new(129, 9, 1.0).unwrap();
        let h = 0.125;
        let curve = MidlineCurve::arc(1.0, M, Vec2::ZERO, 0.0, 0.5, 256);
        let model = StoredEnergyModel::quadratic_distance(1.0).unwrap();
        let (y, _) = build_recovery_sequence(&curve, &model, h, grid).unwrap();
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        let fit0 = fit_rigid_motion(&y, &cover, 3, None).unwrap();
        let pre = 0.7;
        let rot = Mat2::rotation(pre);
        let mut y2 = y.clone();
        for v in &mut y2.y {
            *v = rot.mul_vec(*v);
        }
        let fit1 = fit_rigid_motion(&y2, &cover, 3, None).unwrap();
        assert!((fit1.angle - fit0.angle - pre).abs() < 1e-12);
    }

    #[test]
    fn fit_with_orthogonal_perturbation() {
        // adding a field orthogonal to the rigid modes leaves the fit
        // unchanged and shows up fully in the residual
        let grid = Grid2::new(129, 9, 1.0).unwrap();
        let h = 0.125;
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        let y0 = rigid_field(grid, h, 0.2, Vec2::new(0.1, 0.0));
        let fit0 = fit_rigid_motion(&y0, &cover, 2, None).unwrap();
        // perturbation proportional to (x1 - mean, .) with zero mean and zero
        // moment against the infinitesimal rotation is not exactly available;
        // instead verify the residual picks up a small generic perturbation
        // while the fit moves only at that order
        let delta = 1e-6;
        let mut y1 = y0.clone();
        for (k, v) in y1.y.iter_mut().enumerate() {
            v.x += delta * h * ((k % 17) as f64 / 17.0 - 0.47).sin();
        }
        let fit1 = fit_rigid_motion(&y1, &cover, 2, None).unwrap();
        assert!((fit1.angle - fit0.angle).abs() < 10.0 * delta / h);
        assert!(fit1.residual_sq > 0.0 && fit1.residual_sq < (delta / h) * (delta / h));
    }

    fn classify_opts(n: usize, lambda: f64) -> ClassifyOptions {
        ClassifyOptions {
            n,
            shift_k: 0,
            lambda,
            elastic_cell_max: 1.0,
        }
    }

    #[test]
    fn lambda_outside_range_is_rejected() {
        let grid = Grid2::new(65, 9, 1.0).unwrap();
        let y = DeformationField::scaled_identity(grid, 0.125, M).unwrap();
        for lambda in [0.5, 1.0, 0.2] {
            assert!(cover_and_classify(
                &y,
                &CrackSource::None,
                &classify_opts(4, lambda)
            )
            .is_err());
        }
    }

    #[test]
    fn smooth_recovery_has_no_bad_cells() {
        let grid = Grid2::new(257, 9, 1.0).unwrap();
        let model = StoredEnergyModel::quadratic_distance(1.0).unwrap();
        let curve = MidlineCurve::arc(1.0, M, Vec2::ZERO, 0.0, 0.5, 256);
        for h in [0.125, 0.0625] {
            let (y, _) = build_recovery_sequence(&curve, &model, h, grid).unwrap();
            let (_, stats) =
                cover_and_classify(&y, &CrackSource::None, &classify_opts(4, 0.9)).unwrap();
            assert!(stats.iter().all(|s| !s.bad));
            // per-cell elastic content is O(h^2)
            assert!(stats.iter().all(|s| s.elastic < h * h));
        }
    }

    #[test]
    fn single_crack_gives_bounded_bad_count_across_h() {
        let grid = Grid2::new(257, 9, 1.0).unwrap();
        let y_cracks = SharpCrackSet::vertical_lines(&[0.53]);
        let mut counts = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let y = DeformationField::scaled_identity(grid, h, M).unwrap();
            let (_, stats) = cover_and_classify(
                &y,
                &CrackSource::Sharp(&y_cracks),
                &classify_opts(4, 0.9),
            )
            .unwrap();
            counts.push(stats.iter().filter(|s| s.bad).count());
        }
        assert!(counts.iter().all(|&c| (1..=5).contains(&c)), "{counts:?}");
    }

    #[test]
    fn split_half_cracks_heal() {
        let grid = Grid2::new(257, 9, 1.0).unwrap();
        let h = 1.0 / 32.0;
        // two half-height cracks 4h apart, generically placed
        let t0 = 0.5 - 2.0 * h + 0.3 * h;
        let t1 = t0 + 4.0 * h;
        let cracks = SharpCrackSet {
            polylines: vec![
                vec![Vec2::new(t0, -0.5), Vec2::new(t0, 0.0)],
                vec![Vec2::new(t1, 0.0), Vec2::new(t1, 0.5)],
            ],
        };
        let y = DeformationField::scaled_identity(grid, h, M).unwrap();
        let (_, stats) =
            cover_and_classify(&y, &CrackSource::Sharp(&cracks), &classify_opts(4, 0.9))
                .unwrap();
        assert!(stats.iter().all(|s| !s.bad));
    }

    #[test]
    fn classification_is_monotone_in_lambda() {
        let grid = Grid2::new(257, 9, 1.0).unwrap();
        let h = 1.0 / 32.0;
        let cracks = SharpCrackSet {
            polylines: vec![vec![Vec2::new(0.4, -0.5), Vec2::new(0.4, 0.35)]],
        };
        let y = DeformationField::scaled_identity(grid, h, M).unwrap();
        let (_, loose) =
            cover_and_classify(&y, &CrackSource::Sharp(&cracks), &classify_opts(4, 0.95))
                .unwrap();
        let (_, tight) =
            cover_and_classify(&y, &CrackSource::Sharp(&cracks), &classify_opts(4, 0.6))
                .unwrap();
        for (l, t) in loose.iter().zip(&tight) {
            if l.bad {
                assert!(t.bad); // larger lambda can only shrink the bad set
            }
        }
        assert!(tight.iter().filter(|s| s.bad).count()
            >= loose.iter().filter(|s| s.bad).count());
    }

    #[test]
    fn shift_covariance() {
        // classifying a shifted crack with shift 0 matches classifying the
        // original crack with shift k
        let grid = Grid2::new(257, 9, 1.0).unwrap();
        let h = 1.0 / 16.0;
        let n = 4;
        let k = 1;
        let tau = 0.5;
        let y = DeformationField::scaled_identity(grid, h, M).unwrap();
        let shifted_crack = SharpCrackSet::vertical_lines(&[tau + k as f64 / n as f64 * h]);
        let base_crack = SharpCrackSet::vertical_lines(&[tau]);
        let (_, a) = cover_and_classify(
            &y,
            &CrackSource::Sharp(&shifted_crack),
            &ClassifyOptions {
                n,
                shift_k: k,
                lambda: 0.9,
                elastic_cell_max: 1.0,
            },
        )
        .unwrap();
        let (_, b) = cover_and_classify(
            &y,
            &CrackSource::Sharp(&base_crack),
            &classify_opts(n, 0.9),
        )
        .unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert!((sa.crack_in_cell - sb.crack_in_cell).abs() < 1e-10);
            assert!((sa.crack_tripled - sb.crack_tripled).abs() < 1e-10);
            assert_eq!(sa.bad, sb.bad);
        }
    }

    #[test]
    fn uniform_fits_interpolate_to_constant_frame() {
        let h = 0.125;
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        let fit = RigidFit {
            angle: 0.4,
            c: Vec2::new(0.2, -0.1),
            support_frac: 1.0,
            residual_sq: 0.0,
        };
        let stats = vec![
            CellStats {
                eps_a: 0.0,
                elastic: 0.0,
                crack_in_cell: 0.0,
                crack_tripled: 0.0,
                bad: false
            };
            cover.count
        ];
        let fits = vec![Some(fit); cover.count];
        let frames = interpolate_frames(&cover, &stats, &fits, 500).unwrap();
        assert!(frames.breakpoints.is_empty());
        assert!(frames.max_dist_so2 < 1e-12);
        for (j, rm) in frames.rot.iter().enumerate() {
            assert!((*rm - Mat2::rotation(0.4)).norm() < 1e-12);
            let expect = (Mat2::rotation(0.4)
                .mul_vec(Vec2::new(frames.x1[j] / h, 0.0))
                + fit.c)
                * h;
            assert!((frames.r[j] - expect).norm() < 1e-12);
        }
        // r is affine: second differences vanish
        assert!(frames.rot_deriv_l2() < 1e-10);
        assert!(frames.r_deriv_mismatch_l2_sq() < 1e-20);
    }

    #[test]
    fn interior_bad_run_creates_one_midpoint_breakpoint() {
        let h = 0.125;
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        let good = CellStats {
            eps_a: 0.0,
            elastic: 0.0,
            crack_in_cell: 0.0,
            crack_tripled: 0.0,
            bad: false,
        };
        let mut stats = vec![good; cover.count];
        stats[3].bad = true; // cell a = 4
        let fit_l = RigidFit {
            angle: 0.0,
            c: Vec2::ZERO,
            support_frac: 1.0,
            residual_sq: 0.0,
        };
        let fit_r = RigidFit {
            angle: 1.0,
            c: Vec2::new(1.0, 0.0),
            support_frac: 1.0,
            residual_sq: 0.0,
        };
        let fits: Vec<Option<RigidFit>> = (0..cover.count)
            .map(|i| Some(if i < 3 { fit_l } else { fit_r }))
            .collect();
        let frames = interpolate_frames(&cover, &stats, &fits, 2000).unwrap();
        assert_eq!(frames.breakpoints.len(), 1);
        let (lo, _) = cover.rect(4);
        let (_, hi) = cover.rect(4);
        assert!((frames.breakpoints[0] - 0.5 * (lo + hi) * h).abs() < 1e-12);
    }

    #[test]
    fn all_bad_is_an_error() {
        let h = 0.125;
        let cover = RectangleCover::new(4, h, 1.0, 0).unwrap();
        let bad = CellStats {
            eps_a: 1.0,
            elastic: 1.0,
            crack_in_cell: 0.0,
            crack_tripled: 0.0,
            bad: true,
        };
        let stats = vec![bad; cover.count];
        let fits: Vec<Option<RigidFit>> = vec![None; cover.count];
        assert!(matches!(
            interpolate_frames(&cover, &stats, &fits, 100),
            Err(RigidityError::AllBad)
        ));
    }

    fn arc_sweep_entry(h: f64, n1: usize) -> SweepEntry {
        let grid = Grid2::new(n1, 9, 1.0).unwrap();
        let model = StoredEnergyModel::quadratic_distance(1.0).unwrap();
        let curve = MidlineCurve::arc(1.0, M, Vec2::ZERO, 0.0, 0.5, 1024);
        let (y, _) = build_recovery_sequence(&curve, &model, h, grid).unwrap();
        let (cover, stats) =
            cover_and_classify(&y, &CrackSource::None, &classify_opts(4, 0.9)).unwrap();
        let fits: Vec<Option<RigidFit>> = (1..=cover.count)
            .map(|a| Some(fit_rigid_motion(&y, &cover, a, None).unwrap()))
            .collect();
        let frames = interpolate_frames(&cover, &stats, &fits, 4000).unwrap();
        SweepEntry {
            h,
            cover,
            stats,
            fits,
            frames,
        }
    }

    #[test]
    fn arc_frames_track_curve_rotation() {
        let h = 1.0 / 32.0;
        let entry = arc_sweep_entry(h, 257);
        let mut worst = 0.0f64;
        for (j, rm) in entry.frames.rot.iter().enumerate() {
            let theta = 0.5 * entry.frames.x1[j];
            worst = worst.max((*rm - Mat2::rotation(theta)).norm());
        }
        assert!(worst < 10.0 * h, "max frame error {worst}");
    }

    #[test]
    fn arc_scaling_laws_hold() {
        let entries: Vec<SweepEntry> = [(1.0 / 16.0, 129), (1.0 / 32.0, 257), (1.0 / 64.0, 513)]
            .iter()
            .map(|&(h, n1)| arc_sweep_entry(h, n1))
            .collect();
        let reports = verify_scalings(&entries, 10.0).unwrap();
        for r in &reports {
            assert!(r.pass, "law {} drifted: {:?}", r.law, r.per_h);
        }
        let mismatch = reports
            .iter()
            .find(|r| r.law == "r_deriv_mismatch_sq")
            .unwrap();
        let order = mismatch.fitted_order.unwrap();
        assert!(
            (order - 2.0).abs() <= 0.5,
            "squared-mismatch order {order}: {:?}",
            mismatch.per_h
        );
    }
}
