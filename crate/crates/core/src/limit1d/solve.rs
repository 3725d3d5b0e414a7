//! Numerical minimization of the clamped, loaded bending energy at a fixed
//! jump set, and the outer exhaustive search over candidate jump sets.
//!
//! Decision variables are the tangent-angle samples plus one start position
//! per segment, so every segment carries independent rigid freedom. Clamped
//! ends are handled by enumerating attained/broken states: attained tangents
//! are eliminated, the attained right-end position is enforced by an
//! augmented Lagrangian, and broken ends are left free and charged one crack
//! energy by the evaluator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::curve::{ClampEnd, ClampSpec, Limit1dError, LoadProfile, MidlineCurve, Segment};
use super::energy::{energy_j0_bv, EnergyBreakdown};
use crate::math::Vec2;
use crate::solver::{lbfgs, LbfgsOptions};

#[derive(Debug, Clone)]
pub struct FixedTopologyOptions {
    /// Target number of theta sub-intervals per unit curve length.
    pub samples_per_unit: usize,
    pub tol_grad: f64,
    pub max_iters: usize,
    /// Additional randomly perturbed starts per attainment state.
    pub restarts: usize,
    pub seed: u64,
    pub length: f64,
    pub bound_m: f64,
}

impl Default for FixedTopologyOptions {
    fn default() -> Self {
        FixedTopologyOptions {
            samples_per_unit: 64,
            tol_grad: 1e-8,
            max_iters: 4000,
            restarts: 2,
            seed: 0,
            length: 1.0,
            bound_m: 1e4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedTopologySolve {
    pub curve: MidlineCurve,
    pub breakdown: EnergyBreakdown,
    pub converged: bool,
    pub grad_inf: f64,
    pub iters: usize,
}

/// Which constraints are active at an end during a single inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
enum EndState {
    Free,
    Attained,
    Broken,
}

struct Layout {
    /// (t_start, t_end, n_intervals) per segment.
    segments: Vec<(f64, f64, usize)>,
    /// Index of the first entry of each segment block in the full state.
    offsets: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(length: f64, breakpoints: &[f64], samples_per_unit: usize) -> Self {
        let mut knots = vec![0.0];
        knots.extend_from_slice(breakpoints);
        knots.push(length);
        let mut segments = Vec::new();
        let mut offsets = Vec::new();
        let mut len = 0;
        for w in knots.windows(2) {
            let seg_len = w[1] - w[0];
            let n = ((seg_len * samples_per_unit as f64).round() as usize).max(2);
            offsets.push(len);
            len += 2 + n + 1; // p.x, p.y, thetas
            segments.push((w[0], w[1], n));
        }
        Layout {
            segments,
            offsets,
            len,
        }
    }

    fn curve(&self, state: &[f64], length: f64, bound_m: f64) -> MidlineCurve {
        let segments = self
            .segments
            .iter()
            .zip(&self.offsets)
            .map(|(&(t0, t1, n), &off)| Segment {
                t_start: t0,
                t_end: t1,
                start: Vec2::new(state[off], state[off + 1]),
                thetas: state[off + 2..off + 2 + n + 1].to_vec(),
            })
            .collect();
        MidlineCurve {
            length,
            bound_m,
            segments,
        }
    }
}

struct Objective<'a> {
    layout: &'a Layout,
    alpha: f64,
    load: &'a LoadProfile,
    bound_m: f64,
    barrier_weight: f64,
    left: EndState,
    right: EndState,
    left_clamp: Option<(Vec2, f64)>,  // position, angle
    right_clamp: Option<(Vec2, f64)>, // position, angle
    /// Augmented-Lagrangian state for the attained right-end position.
    multiplier: Vec2,
    penalty_weight: f64,
}

impl Objective<'_> {
    /// Energy and gradient with respect to the full state vector. Fixed
    /// entries keep their gradient; the caller zeroes them afterwards.
    fn eval(&self, state: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut energy = 0.0;
        let n_seg = self.layout.segments.len();
        for (si, (&(t0, t1, n), &off)) in self
            .layout
            .segments
            .iter()
            .zip(&self.layout.offsets)
            .enumerate()
        {
            let delta = (t1 - t0) / n as f64;
            let thetas = &state[off + 2..off + 2 + n + 1];
            // bending
            let c = self.alpha / 24.0;
            for j in 1..=n {
                let dq = (thetas[j] - thetas[j - 1]) / delta;
                energy += c * dq * dq * delta;
                let g = 2.0 * c * dq;
                grad[off + 2 + j] += g;
                grad[off + 2 + j - 1] -= g;
            }
            // forward reconstruction of node positions
            let p = Vec2::new(state[off], state[off + 1]);
            let units: Vec<Vec2> = thetas.iter().map(|&t| Vec2::from_angle(t)).collect();
            let mut positions = Vec::with_capacity(n + 1);
            positions.push(p);
            for j in 1..=n {
                let prev = positions[j - 1];
                positions.push(prev + (units[j - 1] + units[j]) * (0.5 * delta));
            }
            // adjoint accumulation: lambda_k = dE/dy_k
            let mut lambdas = vec![Vec2::ZERO; n + 1];
            for (j, &y) in positions.iter().enumerate() {
                let t = t0 + delta * j as f64;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                let f = self.load.eval(t);
                energy -= w * delta * y.dot(f);
                lambdas[j] += f * (-w * delta);
                // smooth box barrier, active only outside |y| <= M
                let excess = y.norm_sq() - self.bound_m * self.bound_m;
                if excess > 0.0 {
                    energy += self.barrier_weight * excess * excess;
                    lambdas[j] += y * (4.0 * self.barrier_weight * excess);
                }
            }
            if si == n_seg - 1 && self.right == EndState::Attained {
                let (target, _) = self.right_clamp.unwrap();
                let c = positions[n] - target;
                energy += self.multiplier.dot(c) + self.penalty_weight * c.norm_sq();
                lambdas[n] += self.multiplier + c * (2.0 * self.penalty_weight);
            }
            // chain rule through the trapezoid prefix sums
            let mut suffix = Vec2::ZERO; // sum of lambdas[k] for k > j
            let mut p_grad = Vec2::ZERO;
            for l in &lambdas {
                p_grad += *l;
            }
            grad[off] += p_grad.x;
            grad[off + 1] += p_grad.y;
            for j in (0..=n).rev() {
                let coeff = if j == 0 {
                    suffix * 0.5
                } else {
                    lambdas[j] * 0.5 + suffix
                };
                let gperp = units[j].perp();
                grad[off + 2 + j] += delta * gperp.dot(coeff);
                suffix += lambdas[j];
            }
        }
        energy
    }

    fn fixed_indices(&self) -> Vec<usize> {
        let mut fixed = Vec::new();
        if self.left == EndState::Attained {
            let off = self.layout.offsets[0];
            fixed.push(off);
            fixed.push(off + 1);
            fixed.push(off + 2);
        }
        if self.right == EndState::Attained {
            let last = self.layout.segments.len() - 1;
            let off = self.layout.offsets[last];
            let n = self.layout.segments[last].2;
            fixed.push(off + 2 + n);
        }
        fixed
    }

    fn apply_fixed(&self, state: &mut [f64]) {
        if self.left == EndState::Attained {
            let (pos, angle) = self.left_clamp.unwrap();
            let off = self.layout.offsets[0];
            state[off] = pos.x;
            state[off + 1] = pos.y;
            state[off + 2] = angle;
        }
        if self.right == EndState::Attained {
            let (_, angle) = self.right_clamp.unwrap();
            let last = self.layout.segments.len() - 1;
            let off = self.layout.offsets[last];
            let n = self.layout.segments[last].2;
            state[off + 2 + n] = angle;
        }
    }

    fn right_constraint(&self, state: &[f64]) -> Vec2 {
        let last = self.layout.segments.len() - 1;
        let curve = self.layout.curve(state, 1.0, f64::INFINITY);
        let _ = last;
        let (target, _) = self.right_clamp.unwrap();
        curve.segments.last().unwrap().end_position() - target
    }
}

fn clamp_data(end: &ClampEnd) -> Option<(Vec2, f64)> {
    match end {
        ClampEnd::Free => None,
        ClampEnd::Clamped { pos, dir } => Some((*pos, dir.angle())),
    }
}

/// Initial state: segments laid out along the chord between the clamp
/// positions (or along the available clamp direction).
fn initial_state(
    layout: &Layout,
    left: Option<(Vec2, f64)>,
    right: Option<(Vec2, f64)>,
    length: f64,
) -> Vec<f64> {
    let (origin, angle) = match (left, right) {
        (Some((p0, _)), Some((p1, _))) => {
            let chord = p1 - p0;
            let a = if chord.norm() > 1e-12 { chord.angle() } else { 0.0 };
            (p0, a)
        }
        (Some((p0, a)), None) => (p0, a),
        (None, Some((p1, a))) => (p1 - Vec2::from_angle(a) * length, a),
        (None, None) => (Vec2::ZERO, 0.0),
    };
    let u = Vec2::from_angle(angle);
    let mut state = vec![0.0; layout.len];
    for (&(t0, _, n), &off) in layout.segments.iter().zip(&layout.offsets) {
        let p = origin + u * t0;
        state[off] = p.x;
        state[off + 1] = p.y;
        for j in 0..=n {
            state[off + 2 + j] = angle;
        }
    }
    state
}

/// Minimizes the clamped, loaded bending energy over curves with exactly the
/// given interior breakpoints. Returns the best local minimum over the
/// enumerated clamp attainment states and randomized restarts.
pub fn minimize_fixed_topology(
    breakpoints: &[f64],
    alpha: f64,
    beta: f64,
    load: &LoadProfile,
    clamp: &ClampSpec,
    opts: &FixedTopologyOptions,
) -> Result<FixedTopologySolve, Limit1dError> {
    let length = opts.length;
    clamp.validate(opts.bound_m)?;
    let mut sorted = breakpoints.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        if w[1] - w[0] < 1e-12 * length {
            return Err(Limit1dError::Config("duplicate breakpoints".into()));
        }
    }
    if sorted.iter().any(|&t| t <= 0.0 || t >= length) {
        return Err(Limit1dError::Config(
            "breakpoints must lie strictly inside (0, L)".into(),
        ));
    }

    let layout = Layout::new(length, &sorted, opts.samples_per_unit);
    let left_clamp = clamp_data(&clamp.left);
    let right_clamp = clamp_data(&clamp.right);
    let left_states: &[EndState] = if left_clamp.is_some() {
        &[EndState::Attained, EndState::Broken]
    } else {
        &[EndState::Free]
    };
    let right_states: &[EndState] = if right_clamp.is_some() {
        &[EndState::Attained, EndState::Broken]
    } else {
        &[EndState::Free]
    };

    let mut best: Option<FixedTopologySolve> = None;
    for &ls in left_states {
        for &rs in right_states {
            for restart in 0..=opts.restarts {
                let mut obj = Objective {
                    layout: &layout,
                    alpha,
                    load,
                    bound_m: opts.bound_m,
                    barrier_weight: 1e3,
                    left: ls,
                    right: rs,
                    left_clamp,
                    right_clamp,
                    multiplier: Vec2::ZERO,
                    penalty_weight: 1e4,
                };
                let mut state = initial_state(&layout, left_clamp, right_clamp, length);
                if restart > 0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        opts.seed
                            .wrapping_add(restart as u64)
                            .wrapping_mul(0x9e3779b97f4a7c15),
                    );
                    for (&(_, _, n), &off) in layout.segments.iter().zip(&layout.offsets) {
                        for j in 0..=n {
                            state[off + 2 + j] += rng.gen_range(-0.8..0.8);
                        }
                    }
                }
                obj.apply_fixed(&mut state);
                let fixed = obj.fixed_indices();
                let lb_opts = LbfgsOptions {
                    tol_grad: opts.tol_grad,
                    max_iters: opts.max_iters,
                    memory: 12,
                };

                let mut result = None;
                let outer = if rs == EndState::Attained { 12 } else { 1 };
                let mut total_iters = 0;
                for _ in 0..outer {
                    let res = lbfgs(
                        |x, g| {
                            let v = obj.eval(x, g);
                            for &i in &fixed {
                                g[i] = 0.0;
                            }
                            v
                        },
                        state.clone(),
                        &lb_opts,
                    );
                    state = res.x.clone();
                    total_iters += res.iters;
                    if rs == EndState::Attained {
                        let c = obj.right_constraint(&state);
                        if c.norm() <= 1e-10 {
                            result = Some(res);
                            break;
                        }
                        obj.multiplier += c * (2.0 * obj.penalty_weight);
                        obj.penalty_weight = (obj.penalty_weight * 4.0).min(1e8);
                        result = Some(res);
                    } else {
                        result = Some(res);
                        break;
                    }
                }
                let res = result.unwrap();
                let mut curve = layout.curve(&state, length, opts.bound_m);
                if rs == EndState::Attained {
                    // snap a converged end onto the clamp so the evaluator
                    // does not charge the residual constraint error
                    let c = obj.right_constraint(&state);
                    if c.norm() <= curve.tau_jump() {
                        let last = curve.segments.last_mut().unwrap();
                        last.start = last.start - c;
                    }
                }
                let breakdown = energy_j0_bv(&curve, alpha, beta, load, clamp)?;
                let candidate = FixedTopologySolve {
                    curve,
                    breakdown,
                    converged: res.converged,
                    grad_inf: res.grad_inf,
                    iters: total_iters,
                };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (candidate.converged && !b.converged)
                            || (candidate.converged == b.converged
                                && candidate.breakdown.total < b.breakdown.total)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
    }
    Ok(best.unwrap())
}

/// Per-subset record of the topology search.
#[derive(Debug, Clone)]
pub struct TopologyCandidate {
    pub breakpoints: Vec<f64>,
    pub total: f64,
    pub crack_count: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct TopologyResult {
    pub curve: MidlineCurve,
    pub breakdown: EnergyBreakdown,
    /// Breakpoints of the winning subset.
    pub breakpoints: Vec<f64>,
    pub candidates: Vec<TopologyCandidate>,
}

fn subsets_up_to(grid: &[f64], k_max: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    let mut current: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..k_max {
        let mut next = Vec::new();
        for s in &current {
            let start = s
                .last()
                .map(|&v| grid.iter().position(|&g| g == v).unwrap() + 1)
                .unwrap_or(0);
            for &g in &grid[start..] {
                let mut t = s.clone();
                t.push(g);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        current = next;
    }
    out
}

/// Exhaustive search over breakpoint subsets of `candidate_grid` of size at
/// most `k_max`; ties are broken toward fewer breakpoints, then toward the
/// lexicographically smaller breakpoint vector.
pub fn optimize_topology(
    alpha: f64,
    beta: f64,
    load: &LoadProfile,
    clamp: &ClampSpec,
    k_max: usize,
    candidate_grid: &[f64],
    opts: &FixedTopologyOptions,
) -> Result<TopologyResult, Limit1dError> {
    if k_max > 4 {
        return Err(Limit1dError::Config("k_max must be at most 4".into()));
    }
    let mut grid = candidate_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if grid.iter().any(|&t| t <= 0.0 || t >= opts.length) {
        return Err(Limit1dError::Config(
            "candidate grid must lie strictly inside (0, L)".into(),
        ));
    }
    let subsets = subsets_up_to(&grid, k_max);
    let solves: Vec<(Vec<f64>, Result<FixedTopologySolve, Limit1dError>)> = subsets
        .par_iter()
        .map(|s| {
            (
                s.clone(),
                minimize_fixed_topology(s, alpha, beta, load, clamp, opts),
            )
        })
        .collect();

    let mut candidates = Vec::new();
    let mut best: Option<(Vec<f64>, FixedTopologySolve)> = None;
    for (s, solve) in solves {
        match solve {
            Err(_) => candidates.push(TopologyCandidate {
                breakpoints: s,
                total: f64::INFINITY,
                crack_count: 0,
                converged: false,
            }),
            Ok(solve) => {
                candidates.push(TopologyCandidate {
                    breakpoints: s.clone(),
                    total: solve.breakdown.total,
                    crack_count: solve.breakdown.crack_count,
                    converged: solve.converged,
                });
                if !solve.converged {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((bs, b)) => {
                        let tol = 1e-9 * (1.0 + b.breakdown.total.abs());
                        let diff = solve.breakdown.total - b.breakdown.total;
                        if diff < -tol {
                            true
                        } else if diff > tol {
                            false
                        } else if s.len() != bs.len() {
                            s.len() < bs.len()
                        } else {
                            s < *bs
                        }
                    }
                };
                if better {
                    best = Some((s, solve));
                }
            }
        }
    }
    let (breakpoints, solve) = best.ok_or_else(|| {
        Limit1dError::Config("no breakpoint subset converged".into())
    })?;
    Ok(TopologyResult {
        curve: solve.curve,
        breakdown: solve.breakdown,
        breakpoints,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit1d::energy::energy_i0;

    fn straight_clamp(length: f64) -> ClampSpec {
        ClampSpec::clamped(
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(length, 0.0),
            Vec2::new(1.0, 0.0),
        )
    }

    #[test]
    fn objective_gradient_matches_fd() {
        let layout = Layout::new(1.0, &[0.4], 8);
        let load = LoadProfile::from_fn(1.0, 16, |t| Vec2::new(t.sin(), 0.3));
        let obj = Objective {
            layout: &layout,
            alpha: 2.0,
            load: &load,
            bound_m: 1e4,
            barrier_weight: 1e3,
            left: EndState::Free,
            right: EndState::Attained,
            left_clamp: None,
            right_clamp: Some((Vec2::new(0.9, 0.1), 0.3)),
            multiplier: Vec2::new(0.2, -0.4),
            penalty_weight: 10.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let state: Vec<f64> = (0..layout.len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut grad = vec![0.0; layout.len];
        obj.eval(&state, &mut grad);
        let step = 1e-6;
        for i in 0..layout.len {
            let mut sp = state.clone();
            let mut sm = state.clone();
            sp[i] += step;
            sm[i] -= step;
            let mut tmp = vec![0.0; layout.len];
            let fp = obj.eval(&sp, &mut tmp);
            let fm = obj.eval(&sm, &mut tmp);
            let fd = (fp - fm) / (2.0 * step);
            assert!(
                (fd - grad[i]).abs() < 1e-5 * (1.0 + fd.abs()),
                "index {i}: fd {fd} vs analytic {}",
                grad[i]
            );
        }
    }

    #[test]
    fn compatible_clamps_give_straight_line() {
        let opts = FixedTopologyOptions {
            samples_per_unit: 32,
            ..Default::default()
        };
        let solve = minimize_fixed_topology(
            &[],
            2.0,
            1.0,
            &LoadProfile::zero(1.0),
            &straight_clamp(1.0),
            &opts,
        )
        .unwrap();
        assert!(solve.converged);
        assert!(solve.breakdown.total.abs() < 1e-8, "{:?}", solve.breakdown);
    }

    #[test]
    fn rotated_clamp_elastica_matches_fine_grid() {
        // end rotated by phi; reference from a 4x finer run
        let phi = 0.8f64;
        let clamp = ClampSpec::clamped(
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(phi.sin() / phi, (1.0 - phi.cos()) / phi),
            Vec2::from_angle(phi),
        );
        let coarse = FixedTopologyOptions {
            samples_per_unit: 24,
            restarts: 0,
            ..Default::default()
        };
        let fine = FixedTopologyOptions {
            samples_per_unit: 96,
            restarts: 0,
            ..Default::default()
        };
        let load = LoadProfile::zero(1.0);
        let a = minimize_fixed_topology(&[], 2.0, 10.0, &load, &clamp, &coarse).unwrap();
        let b = minimize_fixed_topology(&[], 2.0, 10.0, &load, &clamp, &fine).unwrap();
        assert!(a.converged && b.converged);
        // compatible circular-arc clamp: the minimizer is the arc itself
        let arc = 2.0 / 24.0 * phi * phi;
        assert!((b.breakdown.total - arc).abs() < 1e-4, "{}", b.breakdown.total);
        assert!(
            (a.breakdown.total - b.breakdown.total).abs() < 1e-3,
            "coarse {} fine {}",
            a.breakdown.total,
            b.breakdown.total
        );
    }

    #[test]
    fn one_breakpoint_free_end_relaxes_straight() {
        let clamp = ClampSpec {
            left: ClampEnd::Clamped {
                pos: Vec2::ZERO,
                dir: Vec2::new(1.0, 0.0),
            },
            right: ClampEnd::Free,
        };
        let opts = FixedTopologyOptions {
            samples_per_unit: 16,
            restarts: 0,
            ..Default::default()
        };
        let solve =
            minimize_fixed_topology(&[0.5], 2.0, 1.0, &LoadProfile::zero(1.0), &clamp, &opts)
                .unwrap();
        assert!(solve.breakdown.bending.abs() < 1e-10);
    }

    #[test]
    fn huge_beta_picks_no_breakpoints() {
        let opts = FixedTopologyOptions {
            samples_per_unit: 16,
            restarts: 0,
            ..Default::default()
        };
        let r = optimize_topology(
            2.0,
            1e6,
            &LoadProfile::zero(1.0),
            &straight_clamp(1.0),
            2,
            &[0.3, 0.6],
            &opts,
        )
        .unwrap();
        assert!(r.breakpoints.is_empty());
    }

    #[test]
    fn tiny_beta_with_rotation_breaks() {
        let clamp = ClampSpec::clamped(
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0 / std::f64::consts::PI, 2.0 / std::f64::consts::PI),
            Vec2::new(0.0, 1.0),
        );
        let opts = FixedTopologyOptions {
            samples_per_unit: 24,
            restarts: 1,
            ..Default::default()
        };
        let r = optimize_topology(
            2.0,
            1e-6,
            &LoadProfile::zero(1.0),
            &clamp,
            2,
            &[0.25, 0.5, 0.75],
            &opts,
        )
        .unwrap();
        let failures = r.breakdown.crack_count
            + super::super::energy::violated_clamps(&r.curve, &clamp);
        assert!(failures >= 1);
        assert!(r.breakdown.bending < 1e-6, "{}", r.breakdown.bending);
    }

    #[test]
    fn euclidean_invariance_of_breakdown() {
        use crate::math::Mat2;
        let c = MidlineCurve::arc(1.0, 1e4, Vec2::new(0.2, -0.1), 0.3, 0.7, 48);
        let b0 = energy_i0(&c, 2.0, 1.0).unwrap();
        let rot = Mat2::rotation(1.1);
        let shift = Vec2::new(3.0, -2.0);
        let mut moved = c.clone();
        for seg in &mut moved.segments {
            seg.start = rot.mul_vec(seg.start) + shift;
            for t in &mut seg.thetas {
                *t += 1.1;
            }
        }
        let b1 = energy_i0(&moved, 2.0, 1.0).unwrap();
        assert!((b0.total - b1.total).abs() < 1e-10);
        assert!((b0.bending - b1.bending).abs() < 1e-10);
    }
}
