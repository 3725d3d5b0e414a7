//! Property tests for the one-dimensional limit model: discretization order
//! of the bending energy, monotonicity of the optimal crack count in the
//! toughness, and agreement of the topology search with brute force.

use griffith_beam_core::limit1d::{
    energy_i0, optimize_topology, violated_clamps, ClampSpec, FixedTopologyOptions, LoadProfile,
    MidlineCurve,
};
use griffith_beam_core::math::Vec2;

const M: f64 = 1e4;

#[test]
fn bending_energy_discretization_is_second_order() {
    // non-linear tangent profile, so the difference-quotient rule is not
    // exact and the refinement order is visible
    let theta = |t: f64| 0.3 * (2.0 * std::f64::consts::PI * t).sin();
    let exact = {
        // alpha/24 * int (theta')^2 with theta' = 0.6 pi cos(2 pi t)
        let a = 0.6 * std::f64::consts::PI;
        2.0 / 24.0 * a * a / 2.0
    };
    let energy_at = |n: usize| {
        let c = MidlineCurve::from_angle_fn(1.0, M, Vec2::ZERO, n, theta);
        energy_i0(&c, 2.0, 1.0).unwrap().bending
    };
    let e1 = (energy_at(64) - exact).abs();
    let e2 = (energy_at(128) - exact).abs();
    let e3 = (energy_at(256) - exact).abs();
    let order12 = (e1 / e2).log2();
    let order23 = (e2 / e3).log2();
    assert!(order12 >= 1.9 && order23 >= 1.9, "{order12} {order23}");
}

#[test]
fn arc_bending_energy_is_exact() {
    // linear tangent profiles are integrated exactly by the difference
    // quotient rule, independent of resolution
    for n in [8, 64] {
        let c = MidlineCurve::arc(1.0, M, Vec2::ZERO, 0.1, 0.5, n);
        let e = energy_i0(&c, 2.0, 1.0).unwrap().bending;
        assert!((e - 2.0 / 24.0 * 0.25).abs() < 1e-12, "n = {n}: {e}");
    }
}

fn quarter_turn_clamp() -> ClampSpec {
    let r = 2.0 / std::f64::consts::PI;
    ClampSpec::clamped(
        Vec2::ZERO,
        Vec2::new(1.0, 0.0),
        Vec2::new(r, r),
        Vec2::new(0.0, 1.0),
    )
}

#[test]
fn optimal_crack_count_is_monotone_in_beta() {
    let clamp = quarter_turn_clamp();
    let load = LoadProfile::zero(1.0);
    let opts = FixedTopologyOptions {
        samples_per_unit: 32,
        max_iters: 1500,
        restarts: 1,
        ..Default::default()
    };
    let grid = [0.25, 0.5, 0.75];
    let elastica = 2.0 / 24.0 * (std::f64::consts::PI / 2.0).powi(2);
    let mut counts = Vec::new();
    for beta in [0.02 * elastica, 0.5 * elastica, 2.0 * elastica, 20.0 * elastica] {
        let r = optimize_topology(2.0, beta, &load, &clamp, 2, &grid, &opts).unwrap();
        // interior jumps and non-attained clamps are both charged beta
        let effective = r.breakdown.crack_count + violated_clamps(&r.curve, &clamp);
        counts.push(effective);
    }
    for w in counts.windows(2) {
        assert!(w[1] <= w[0], "crack counts not monotone: {counts:?}");
    }
    // the regime endpoints are as expected
    assert!(counts[0] >= 1, "{counts:?}");
    assert_eq!(*counts.last().unwrap(), 0, "{counts:?}");
}

#[test]
fn cheap_fracture_beats_bending() {
    // with beta far below the elastica energy the solver prefers breaking
    let clamp = quarter_turn_clamp();
    let load = LoadProfile::zero(1.0);
    let opts = FixedTopologyOptions {
        samples_per_unit: 32,
        max_iters: 1500,
        restarts: 1,
        ..Default::default()
    };
    let elastica = 2.0 / 24.0 * (std::f64::consts::PI / 2.0).powi(2);
    let beta = 0.05 * elastica;
    let r = optimize_topology(2.0, beta, &load, &clamp, 2, &[0.5], &opts).unwrap();
    assert!(r.breakdown.total < elastica);
    assert!(r.breakdown.bending < 0.5 * elastica);
}
