//! Property and oracle tests for the convex core.
//!
//! The oracles here are deliberately independent of the library paths they
//! check: a dense-grid + golden-section minimizer for the prox, and a
//! dense-grid + golden-section Legendre transform for the conjugate.

use proptest::prelude::*;
use spde_core::convex::{ConvexIntegrand, CustomIntegrand, GraphPoint, RadialProfile};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Dense 1D minimizer of f over [a, b]: grid scan plus golden-section
/// refinement around the best cell.
fn dense_argmin(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 4000;
    let step = (b - a) / n as f64;
    let mut best_x = a;
    let mut best = f(a);
    for i in 1..=n {
        let x = a + step * i as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..90 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Oracle prox for a 1D integrand: argmin k(y) + (y−x)²/(2λ).
fn oracle_prox_1d(k: &dyn Fn(f64) -> f64, lambda: f64, x: f64) -> f64 {
    let lo = x.min(0.0) - 1.0;
    let hi = x.max(0.0) + 1.0;
    dense_argmin(&|y| k(y) + (y - x) * (y - x) / (2.0 * lambda), lo, hi)
}

/// Oracle Legendre transform for a 1D integrand: sup (xr − k(x)) over a
/// fixed large box.
fn oracle_conjugate_1d(k: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    let radius = 50.0 + 10.0 * r.abs();
    let x = dense_argmin(&|y| k(y) - y * r, -radius, radius);
    x * r - k(x)
}

fn builtins_1d() -> Vec<ConvexIntegrand> {
    vec![
        ConvexIntegrand::quadratic(1),
        ConvexIntegrand::power_growth(1, 1.5).unwrap(),
        ConvexIntegrand::power_growth(1, 3.0).unwrap(),
        ConvexIntegrand::abs_quadratic(1),
        ConvexIntegrand::aniso_quadratic(1),
    ]
}

fn builtins_2d() -> Vec<ConvexIntegrand> {
    vec![
        ConvexIntegrand::quadratic(2),
        ConvexIntegrand::power_growth(2, 1.5).unwrap(),
        ConvexIntegrand::abs_quadratic(2),
        ConvexIntegrand::aniso_quadratic(2),
    ]
}

fn scalar_k(k: &ConvexIntegrand) -> impl Fn(f64) -> f64 + '_ {
    move |x| k.eval(&[x])
}

#[test]
fn spec_example_prox_values_match_oracle() {
    // k = x²/2, λ = 1, x = 2 → 1.
    let quad = ConvexIntegrand::quadratic(1);
    let oracle = oracle_prox_1d(&scalar_k(&quad), 1.0, 2.0);
    assert!((oracle - 1.0).abs() < 1e-7, "oracle {oracle}");
    assert!((quad.prox(1.0, &[2.0]).unwrap()[0] - oracle).abs() < 1e-7);

    // k = |x| + x²/2, λ = 0.5, x = 0.25 → 0 (corner of the graph).
    let absq = ConvexIntegrand::abs_quadratic(1);
    let oracle = oracle_prox_1d(&scalar_k(&absq), 0.5, 0.25);
    assert!(oracle.abs() < 1e-7, "oracle {oracle}");
    assert_eq!(absq.prox(0.5, &[0.25]).unwrap()[0], 0.0);
}

#[test]
fn spec_example_conjugate_values_match_oracle() {
    let quad = ConvexIntegrand::quadratic(1);
    let o = oracle_conjugate_1d(&scalar_k(&quad), 2.0);
    assert!((o - 2.0).abs() < 1e-8, "oracle {o}");
    let absq = ConvexIntegrand::abs_quadratic(1);
    let o2 = oracle_conjugate_1d(&scalar_k(&absq), 0.5);
    assert!(o2.abs() < 1e-8, "oracle {o2}");
    // k*(0) = −inf k = 0 for every built-in.
    for k in builtins_1d() {
        assert!(k.conjugate(&[0.0]).unwrap().abs() < 1e-12, "{}", k.name());
    }
}

#[test]
fn closed_conjugates_match_dense_oracle_on_a_grid() {
    for k in builtins_1d() {
        for i in -6..=6 {
            let r = 0.55 * i as f64;
            let closed = k.conjugate(&[r]).unwrap();
            let oracle = oracle_conjugate_1d(&scalar_k(&k), r);
            assert!(
                (closed - oracle).abs() < 1e-6 * (1.0 + oracle.abs()),
                "{} at r={r}: closed {closed} vs oracle {oracle}",
                k.name()
            );
        }
    }
}

#[test]
fn adaptive_legendre_oracle_matches_closed_forms() {
    // The library's own adaptive-box search, cross-checked against the
    // closed forms it is meant to stand in for.
    for k in builtins_1d() {
        for &r in &[-2.5, -1.0, -0.3, 0.0, 0.7, 1.9] {
            let closed = k.conjugate(&[r]).unwrap();
            let oracle = k.legendre_oracle(&[r]).unwrap();
            assert!(
                (closed - oracle).abs() < 1e-6 * (1.0 + closed.abs()),
                "{} at r={r}: {closed} vs {oracle}",
                k.name()
            );
        }
    }
    for k in builtins_2d() {
        for &r in &[[0.4, -1.2], [1.5, 0.9], [0.0, 0.0], [-2.0, 0.3]] {
            let closed = k.conjugate(&r).unwrap();
            let oracle = k.legendre_oracle(&r).unwrap();
            assert!(
                (closed - oracle).abs() < 1e-5 * (1.0 + closed.abs()),
                "{} at {r:?}: {closed} vs {oracle}",
                k.name()
            );
        }
    }
}

#[test]
fn custom_integrand_without_closed_forms_uses_generic_paths() {
    // Quartic k = x⁴/4: prox must fall back to the radial root-find and the
    // conjugate to the adaptive Legendre search.
    let quartic = ConvexIntegrand::custom(
        "quartic",
        1,
        CustomIntegrand {
            eval: Box::new(|x: &[f64]| 0.25 * x[0].powi(4)),
            gradient: None,
            prox: None,
            conjugate: None,
            radial: Some(RadialProfile {
                value: Box::new(|r| 0.25 * r.powi(4)),
                slope: Box::new(|r| r.powi(3)),
                curvature: Some(Box::new(|r| 3.0 * r * r)),
            }),
        },
    );
    for &x in &[0.4, 1.7, 9.0] {
        let p = quartic.prox(0.3, &[x]).unwrap()[0];
        let oracle = oracle_prox_1d(&|y| 0.25 * y.powi(4), 0.3, x);
        assert!((p - oracle).abs() < 1e-6 * x.max(1.0), "x={x}: {p} vs {oracle}");
    }
    for &r in &[0.5, 2.0] {
        let got = quartic.conjugate(&[r]).unwrap();
        let oracle = oracle_conjugate_1d(&|y| 0.25 * y.powi(4), r);
        assert!((got - oracle).abs() < 1e-6 * (1.0 + oracle), "r={r}");
    }
    // Descent path: same integrand presented without radial structure but
    // with an analytic gradient.
    let plain = ConvexIntegrand::custom(
        "quartic_plain",
        1,
        CustomIntegrand {
            eval: Box::new(|x: &[f64]| 0.25 * x[0].powi(4)),
            gradient: Some(Box::new(|x: &[f64], g: &mut [f64]| g[0] = x[0].powi(3))),
            prox: None,
            conjugate: None,
            radial: None,
        },
    );
    let p = plain.prox(0.3, &[1.7]).unwrap()[0];
    let oracle = oracle_prox_1d(&|y| 0.25 * y.powi(4), 0.3, 1.7);
    assert!((p - oracle).abs() < 1e-6, "{p} vs {oracle}");
}

#[test]
fn membership_examples_from_the_graph() {
    let absq = ConvexIntegrand::abs_quadratic(1);
    // γ(y) = sign(y)(1+|y|) off the origin; check r = γ(y).
    let gp = GraphPoint::new(vec![2.0], vec![3.0]);
    assert!(gp.membership_gap(&absq).unwrap().abs() < 1e-12);
    let bad = GraphPoint::new(vec![2.0], vec![2.0]);
    assert!(bad.membership_gap(&absq).unwrap() > 1e-3);
}

#[test]
fn positivity_and_zero_at_origin() {
    for k in builtins_1d().iter().chain(builtins_2d().iter()) {
        let zero = vec![0.0; k.dim()];
        assert_eq!(k.eval(&zero), 0.0, "{}", k.name());
    }
}

fn point_1d() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => -10.0..10.0f64,
        1 => -0.05..0.05f64,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 120,
        failure_persistence: None,
        .. ProptestConfig::default()
    })]

    #[test]
    fn convexity_along_segments(a in point_1d(), b in point_1d(), t in 0.0..1.0f64) {
        for k in builtins_1d() {
            let mid = t * a + (1.0 - t) * b;
            let lhs = k.eval(&[mid]);
            let rhs = t * k.eval(&[a]) + (1.0 - t) * k.eval(&[b]);
            prop_assert!(lhs <= rhs + 1e-10, "{} at a={a} b={b} t={t}", k.name());
        }
    }

    #[test]
    fn superlinearity_proxy_grows(x in 0.3..3.0f64, sign in proptest::bool::ANY) {
        // k(Rx)/(R|x|) is nondecreasing in R.
        let x = if sign { x } else { -x };
        for k in builtins_1d() {
            let mut prev = f64::NEG_INFINITY;
            for &scale in &[1.0, 4.0, 16.0, 64.0, 256.0, 1024.0] {
                let v = k.eval(&[scale * x]) / (scale * x.abs());
                prop_assert!(v >= prev - 1e-10, "{} at x={x} R={scale}", k.name());
                prev = v;
            }
            // … and exceeds any fixed slope eventually.
            prop_assert!(prev > 3.0, "{} stayed sublinear at x={x}", k.name());
        }
    }

    #[test]
    fn yosida_monotone_lipschitz_nonexpansive(x in point_1d(), y in point_1d()) {
        for lambda in [1.0, 0.1, 0.01] {
            for k in builtins_1d() {
                let gx = k.yosida(lambda, &[x]).unwrap()[0];
                let gy = k.yosida(lambda, &[y]).unwrap()[0];
                prop_assert!((gx - gy) * (x - y) >= -1e-10, "{} monotone", k.name());
                prop_assert!(
                    (gx - gy).abs() <= (x - y).abs() / lambda * (1.0 + 1e-10) + 1e-12,
                    "{} lipschitz at λ={lambda}", k.name()
                );
                let px = k.prox(lambda, &[x]).unwrap()[0];
                let py = k.prox(lambda, &[y]).unwrap()[0];
                prop_assert!(
                    (px - py).abs() <= (x - y).abs() * (1.0 + 1e-12) + 1e-14,
                    "{} resolvent contraction", k.name()
                );
            }
        }
    }

    #[test]
    fn reconstruction_identity(x in point_1d()) {
        for lambda in [1.0, 0.1, 0.01] {
            for k in builtins_1d() {
                let p = k.prox(lambda, &[x]).unwrap()[0];
                let g = k.yosida(lambda, &[x]).unwrap()[0];
                prop_assert!(
                    (x - (p + lambda * g)).abs() <= 1e-12 * x.abs().max(1.0),
                    "{} at x={x} λ={lambda}", k.name()
                );
            }
        }
    }

    #[test]
    fn fenchel_young_and_duality(x in point_1d(), r in point_1d()) {
        for k in builtins_1d() {
            let gap = k.fenchel_gap(&[x], &[r]).unwrap();
            prop_assert!(gap >= -1e-8, "{} gap {gap}", k.name());
            for lambda in [1.0, 0.1, 0.01] {
                let res = k.yosida_duality_residual(lambda, &[x]).unwrap();
                prop_assert!(res.abs() <= 1e-8, "{} residual {res} at λ={lambda}", k.name());
            }
        }
    }

    #[test]
    fn two_dimensional_identities(
        x0 in -6.0..6.0f64, x1 in -6.0..6.0f64,
        r0 in -4.0..4.0f64, r1 in -4.0..4.0f64,
    ) {
        for k in builtins_2d() {
            let gap = k.fenchel_gap(&[x0, x1], &[r0, r1]).unwrap();
            prop_assert!(gap >= -1e-8, "{} gap {gap}", k.name());
            for lambda in [1.0, 0.1] {
                let res = k.yosida_duality_residual(lambda, &[x0, x1]).unwrap();
                prop_assert!(res.abs() <= 1e-8, "{} res {res}", k.name());
                let p = k.prox(lambda, &[x0, x1]).unwrap();
                let g = k.yosida(lambda, &[x0, x1]).unwrap();
                prop_assert!((x0 - (p[0] + lambda * g[0])).abs() <= 1e-12 * x0.abs().max(1.0));
                prop_assert!((x1 - (p[1] + lambda * g[1])).abs() <= 1e-12 * x1.abs().max(1.0));
            }
        }
    }

    #[test]
    fn asymmetry_bound_holds_on_samples(x in point_1d()) {
        for k in builtins_1d() {
            let c = k.asymmetry_bound();
            prop_assert!(k.eval(&[-x]) <= c * (1.0 + k.eval(&[x])) + 1e-12, "{}", k.name());
        }
    }
}
