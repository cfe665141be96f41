mod common;

use std::f64::consts::FRAC_2_PI;

use proptest::prelude::*;

use tipcurve::bifurcation::{
    classify, collision_diagnostics, find_tipping_points, lambda_star, lambda_star_curve, lambda_star_of_c, Case,
    ClassifierParams, Direction, Probe,
};
use tipcurve::forcing::Forcing;
use tipcurve::riccati::TransitionModel;

use common::{fast_params, two_tone};

/// Rates where the slow periodic forcing tips, located independently with a
/// DOP853 reference solver.
const SLOW_A_TO_C: f64 = 0.0921337;
const SLOW_C_TO_A: f64 = 0.2260933;

#[test]
fn slow_forcing_tipping_points() {
    let pts = find_tipping_points(
        &Forcing::slow_periodic_example(),
        (0.0, 1.0),
        11,
        1e-6,
        &ClassifierParams::default(),
    )
    .unwrap();
    assert_eq!(pts.len(), 2, "{pts:?}");
    assert_eq!(pts[0].direction, Direction::AToC);
    assert_eq!(pts[1].direction, Direction::CToA);
    assert!((pts[0].c - SLOW_A_TO_C).abs() < 1e-5, "{pts:?}");
    assert!((pts[1].c - SLOW_C_TO_A).abs() < 1e-5, "{pts:?}");
    for p in &pts {
        assert!(p.bracket.1 - p.bracket.0 <= 1e-6);
    }
}

#[test]
fn slow_forcing_verdicts() {
    let params = ClassifierParams::default();
    let p = Forcing::slow_periodic_example();
    for (c, want) in [(0.05, Case::A), (0.15, Case::C), (0.5, Case::A)] {
        let v = classify(&TransitionModel::new(p.clone(), c, 0.0).unwrap(), &params).unwrap();
        assert_eq!(v.case, want, "c = {c}: {v:?}");
    }
}

#[test]
fn collision_near_the_recovery_rate() {
    let params = ClassifierParams::default();
    let rows = collision_diagnostics(
        &Forcing::slow_periodic_example(),
        SLOW_C_TO_A,
        &[1e-2, 1e-3, 1e-4],
        &params,
    )
    .unwrap();
    assert_eq!(rows.len(), 6);
    // Above the tipping rate: Case A with the gap closing as δ shrinks.
    let a_side: Vec<f64> = rows.iter().filter(|r| r.delta > 0.0).map(|r| r.gap_min.unwrap()).collect();
    assert!(rows.iter().filter(|r| r.delta > 0.0).all(|r| r.verdict.case == Case::A));
    assert!(a_side.windows(2).all(|w| w[0] < w[1]), "{a_side:?}");
    // Below: Case C with the a-probe escaping later as δ shrinks.
    let c_side: Vec<f64> = rows.iter().filter(|r| r.delta < 0.0).map(|r| r.a_escape.unwrap()).collect();
    assert!(rows.iter().filter(|r| r.delta < 0.0).all(|r| r.verdict.case == Case::C));
    assert!(c_side.windows(2).all(|w| w[0] < w[1]), "{c_side:?}");
}

#[test]
fn collision_at_zero_offset_is_one_row() {
    let rows = collision_diagnostics(&Forcing::constant(1.0), 0.5, &[0.0], &ClassifierParams::default()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].c, 0.5);
}

#[test]
fn robust_forcing_never_tips() {
    let p = Forcing::quasi_periodic_example().shifted(1.0);
    let pts = find_tipping_points(&p, (0.0, 3.5), 8, 1e-4, &ClassifierParams::default()).unwrap();
    assert!(pts.is_empty(), "{pts:?}");
}

#[test]
fn quasi_periodic_lambda_star_at_zero_rate() {
    let r = lambda_star_of_c(&Forcing::quasi_periodic_example(), 0.0, 1e-5, &ClassifierParams::default()).unwrap();
    assert!(r.value < -0.03, "{r:?}");
}

#[test]
fn constant_lambda_star_examples() {
    let params = ClassifierParams::default();
    let zero = Forcing::constant(0.0);
    for (p0, want) in [(std::f64::consts::PI, -std::f64::consts::PI), (-4.0, 4.0)] {
        let r = lambda_star(&zero, &Forcing::constant(p0), 1e-7, &params).unwrap();
        assert!((r.value - want).abs() <= 1e-7, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_identity(f in two_tone(0.2..1.5), c in 0.05..3.0f64, delta in -1.0..1.0f64) {
        let tol = 1e-5;
        let params = fast_params();
        let base = lambda_star_of_c(&f.forcing(), c, tol, &params).unwrap();
        let moved = lambda_star_of_c(&f.forcing().shifted(delta), c, tol, &params).unwrap();
        prop_assert!((moved.value - (base.value - delta)).abs() <= 2.0 * tol);
    }

    #[test]
    fn bracket_ends_carry_opposite_verdicts(f in two_tone(0.2..1.5), c in 0.05..3.0f64) {
        let params = fast_params();
        let p = f.forcing();
        let r = lambda_star_of_c(&p, c, 1e-4, &params).unwrap();
        let (lo, hi) = r.bracket;
        prop_assert!(hi - lo <= 1e-4);
        let at = |l| classify(&TransitionModel::new(p.clone(), c, l).unwrap(), &params).unwrap().case;
        prop_assert_eq!(at(lo), Case::C);
        prop_assert!(at(hi).has_bounded_solutions());
    }

    #[test]
    fn below_the_forcing_everything_escapes(f in two_tone(-1.0..1.0), c in 0.0..3.0f64, gap in 0.01..1.0f64) {
        let p = f.forcing();
        let lambda = -p.sup_bound() - gap;
        let v = classify(&TransitionModel::new(p, c, lambda).unwrap(), &ClassifierParams::default()).unwrap();
        prop_assert_eq!(v.case, Case::C);
        prop_assert_eq!(v.escaped_probe, Some(Probe::A));
        prop_assert!(v.escape_time.unwrap().is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sampled_curves_are_lipschitz_and_consistent(f in two_tone(0.2..1.2)) {
        let tol = 1e-5;
        let params = fast_params();
        let p = f.forcing();
        let grid: Vec<f64> = (0..6).map(|i| 0.1 + 0.4 * i as f64).collect();
        let curve = lambda_star_curve(&p, &grid, tol, &params).unwrap();
        let values: Vec<f64> = curve.iter().map(|pt| pt.value().unwrap()).collect();
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                let bound = FRAC_2_PI * (grid[j] - grid[i]) + 2.0 * tol;
                prop_assert!((values[j] - values[i]).abs() <= bound);
            }
            // Verdict at λ = 0 agrees with the sign of λ*(c) outside the band.
            let case = classify(&TransitionModel::new(p.clone(), grid[i], 0.0).unwrap(), &params).unwrap().case;
            if values[i] < -2.0 * tol {
                prop_assert_eq!(case, Case::A);
            } else if values[i] > 2.0 * tol {
                prop_assert_eq!(case, Case::C);
            }
        }
    }
}
