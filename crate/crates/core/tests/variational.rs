use std::f64::consts::PI;

use machian_core::acceptance::gradient_check;
use machian_core::ansatz::{evaluate, expanded_evaluate, scale_defect};
use machian_core::potential::{quantum_potential_frak, MassParams};
use machian_core::variational::{el_residual_rho, hj_residual, solve_exponent_r, HjPotential};
use machian_core::{make_field, Boundary, Error, ExponentFamily, FieldKind, GridSpec, ScalarField, StencilOrder, Variable};
use proptest::prelude::*;

fn periodic(n: usize) -> GridSpec {
    GridSpec::line(n, 0.0, 2.0 * PI / n as f64, Boundary::Periodic, StencilOrder::Fourth).unwrap()
}

type GridFor = fn(usize) -> GridSpec;

fn clamped(n: usize, lo: f64, hi: f64) -> GridSpec {
    GridSpec::line(n, lo, (hi - lo) / (n - 1) as f64, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap()
}

#[test]
fn evaluate_examples() {
    let k = 0.3;
    let spec = clamped(201, -1.0, 1.0);
    let rho = make_field(&spec, &FieldKind::exponential(2.0 * k)).unwrap();
    let q = evaluate(&ExponentFamily::simplest(1.0, 0.5).unwrap(), &rho).unwrap();
    assert!(q.values().iter().all(|v| (v + k * k).abs() < 1e-7));
    let r = make_field(&spec, &FieldKind::exponential(k)).unwrap();
    let q = evaluate(&ExponentFamily::second_order_r(1.0), &r).unwrap();
    assert!(q.values().iter().all(|v| (v - k.powi(4)).abs() < 1e-7));
}

/// `evaluate` differences `ρ^r`, the expanded form differences `ρ`; the two
/// agree to stencil order.
#[test]
fn evaluate_matches_expanded_form_on_catalog() {
    let fam = ExponentFamily::simplest(1.3, 0.7).unwrap();
    let cases: [(GridFor, FieldKind); 4] = [
        (periodic, FieldKind::random(1)),
        (periodic, FieldKind::Constant { c: 3.0 }),
        (|n| clamped(n + 1, -4.0, 4.0), FieldKind::gaussian(1.0)),
        (|n| clamped(n + 1, -2.0, 2.0), FieldKind::exponential(0.6)),
    ];
    for (grid, kind) in cases {
        let dev = |n: usize| {
            let rho = make_field(&grid(n), &kind).unwrap();
            let a = evaluate(&fam, &rho).unwrap();
            a.sub(&expanded_evaluate(&fam, &rho).unwrap()).unwrap().linf_norm()
        };
        let (coarse, fine) = (dev(128), dev(256));
        if coarse < 1e-12 {
            assert!(fine < 1e-12, "{kind:?}");
        } else {
            assert!((coarse / fine).log2() > 3.5, "{kind:?}: {coarse:e} → {fine:e}");
        }
    }
}

#[test]
fn single_exponential_field_gives_same_root() {
    let rho = make_field(&clamped(129, -1.0, 1.0), &FieldKind::exponential(2.0)).unwrap();
    let rep = solve_exponent_r(&ExponentFamily::simplest(1.0, 1.0).unwrap(), &[rho], 0.1, 2.0).unwrap();
    assert!((rep.r - 0.5).abs() < 5e-4, "{}", rep.r);
}

#[test]
fn excluded_root_reports_boundary() {
    let rho = make_field(&periodic(128), &FieldKind::random(2)).unwrap();
    let err = solve_exponent_r(&ExponentFamily::simplest(1.0, 1.0).unwrap(), &[rho], 0.9, 1.1).unwrap_err();
    assert!(matches!(err, Error::BoundaryMinimum { .. }));
}

#[test]
fn half_residual_vanishes_under_refinement() {
    let fam = ExponentFamily::simplest(1.0, 0.5).unwrap();
    let l2: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| el_residual_rho(&fam, &make_field(&periodic(n), &FieldKind::random(42)).unwrap()).unwrap().l2)
        .collect();
    assert!(l2[0] > l2[1] && l2[1] > l2[2]);
    assert!(l2[1] / l2[2] > 10.0);
}

#[test]
fn hj_examples() {
    let spec = GridSpec::new(
        vec![17, 65],
        vec![0.0, -4.0],
        vec![0.05, 8.0 / 64.0],
        true,
        Boundary::ClampedGhost,
        StencilOrder::Fourth,
    )
    .unwrap();
    let m0 = 1.0;
    let s = ScalarField::from_fn(&spec, |x| m0 * x[0]).unwrap();
    let flat = ScalarField::constant(&spec, 1.0).unwrap();
    let fam = ExponentFamily::simplest(1.0, 0.5).unwrap();
    assert!(hj_residual(&s, &flat, HjPotential::Family(&fam), m0, 0.0).unwrap().linf_norm() < 1e-12);

    // With a gaussian density the bracket is −𝔔.
    let rho = ScalarField::from_fn(&spec, |x| (-x[1] * x[1] / 2.0).exp()).unwrap();
    let res = hj_residual(&s, &rho, HjPotential::Family(&fam), m0, 0.0).unwrap();
    let frak = quantum_potential_frak(&rho, &MassParams::natural()).unwrap().field;
    assert!(res.add(&frak).unwrap().linf_norm() < 1e-10);
}

#[test]
fn scale_defect_only_for_nonzero_degree() {
    let rho = make_field(&periodic(64), &FieldKind::random(5)).unwrap();
    for (m, n, p) in [(-1, 0, 1), (-2, 0, 2), (-3, 2, 1), (0, 0, 0), (-1, 0, 2), (-2, 0, 1), (1, 0, 1), (-1, 2, 1)] {
        let fam = ExponentFamily::new(1.0, 0.5, m, n, p, Variable::Rho).unwrap();
        for gamma in [1e-3, 7.3, 1e3] {
            let d = scale_defect(&fam, &rho, gamma).unwrap().defect;
            if m as i64 + n + p as i64 == 0 {
                assert!(d < 1e-12, "({m},{n},{p}) γ={gamma}: {d}");
            } else {
                assert!(d > 1e-6, "({m},{n},{p}) γ={gamma}: {d}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partials_match_finite_differences(r in 0.1f64..3.0, c in -2.0f64..2.0, seed in any::<u64>()) {
        prop_assume!(c.abs() > 1e-3);
        let fam = ExponentFamily::simplest(c, r).unwrap();
        prop_assert!(gradient_check(&fam, 10, seed).unwrap() < 1e-6);
    }

    #[test]
    fn higher_gradient_families_pass_gradient_check(m in -4i32..0, r in 0.2f64..2.0, seed in any::<u64>()) {
        // n = 2 keeps m + n + p = 0 with p = −m − 2
        let fam = ExponentFamily::new(1.0, r, m, 2, -m - 2, Variable::Rho).unwrap();
        prop_assume!(fam.p() >= 0);
        prop_assert!(gradient_check(&fam, 10, seed).unwrap() < 1e-6);
    }

    #[test]
    fn residual_is_scale_invariant(seed in 0u64..1000, r in 0.2f64..2.5, log_gamma in -6.0f64..6.0) {
        let rho = make_field(&periodic(64), &FieldKind::random(seed)).unwrap();
        let fam = ExponentFamily::simplest(1.0, r).unwrap();
        let a = el_residual_rho(&fam, &rho).unwrap().residual;
        let b = el_residual_rho(&fam, &rho.scale(log_gamma.exp()).unwrap()).unwrap().residual;
        prop_assert!(b.sub(&a).unwrap().linf_norm() <= 1e-12 * a.linf_norm().max(1.0));
    }
}
