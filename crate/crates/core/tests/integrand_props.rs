use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use wulff::{DerivativeMode, Direction, Integrand};

const CASES: u32 = 1024;

fn builtins() -> Vec<Integrand> {
    vec![
        Integrand::isotropic(1),
        Integrand::isotropic(2),
        Integrand::hexic2d(),
        Integrand::hexic2d_rotated(),
        Integrand::hexic3d(),
        Integrand::hexic3d_rotated(),
    ]
}

/// A direction for `g` from two uniform parameters.
fn direction(g: &Integrand, u: f64, v: f64) -> Direction {
    match g.dim() {
        1 => Direction::from_angle(TAU * u),
        // Uniform on the sphere: latitude from arcsin of a uniform height.
        _ => Direction::from_spherical((2.0 * v - 1.0).asin(), TAU * u),
    }
}

/// The hexic profile's `A` in closed form, as the negated tangent speed factor.
fn hexic_a(theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    -5.0 * (9.0 * c2 * c2 - 9.0 * c2 + 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn euler_relation(u in 0.0..1.0f64, v in 0.0..1.0f64) {
        for g in builtins() {
            let nu = direction(&g, u, v);
            let grad = g.extension_gradient(&nu).unwrap();
            let lhs = grad.dot(&nu.vector());
            let rhs = g.evaluate(&nu).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8, "{}: {lhs} vs {rhs}", g.kind());
        }
    }

    #[test]
    fn homogeneity(u in 0.0..1.0f64, v in 0.0..1.0f64, r in 0.0..10.0f64, len in 0.1..5.0f64) {
        for g in builtins() {
            let x: Vec<f64> = direction(&g, u, v).components().iter().map(|c| c * len).collect();
            let rx: Vec<f64> = x.iter().map(|c| c * r).collect();
            let a = g.homogeneous_extension(&rx).unwrap();
            let b = r * g.homogeneous_extension(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "{}: {a} vs {b}", g.kind());
        }
    }

    #[test]
    fn scaling_equivariance(u in 0.0..1.0f64, v in 0.0..1.0f64, c in 0.1..10.0f64) {
        for g in builtins() {
            let nu = direction(&g, u, v);
            let scaled = g.scaled(c).unwrap().extension_gradient(&nu).unwrap();
            let base = g.extension_gradient(&nu).unwrap();
            prop_assert!((scaled - c * base).norm() <= 1e-10, "{}", g.kind());
        }
    }

    #[test]
    fn translation_covariance(u in 0.0..1.0f64, v in 0.0..1.0f64, a in prop::array::uniform3(-0.05..0.05f64)) {
        for g in builtins() {
            let a = &a[..g.dim() + 1];
            let nu = direction(&g, u, v);
            let shifted = g.with_linear_term(a).unwrap().extension_gradient(&nu).unwrap();
            let base = g.extension_gradient(&nu).unwrap();
            for i in 0..a.len() {
                prop_assert!((shifted[i] - base[i] - a[i]).abs() <= 1e-10, "{}", g.kind());
            }
        }
    }

    #[test]
    fn analytic_matches_numeric(u in 0.0..1.0f64, v in 0.0..1.0f64) {
        for g in builtins() {
            let numeric = g.clone().with_mode(DerivativeMode::numeric());
            let nu = direction(&g, u, v);
            let ga = g.extension_gradient(&nu).unwrap();
            let gn = numeric.extension_gradient(&nu).unwrap();
            prop_assert!((ga - gn).norm() <= 1e-6, "{} gradient: {ga} vs {gn}", g.kind());
            let aa = g.operator_a(&nu).unwrap().value();
            let an = numeric.operator_a(&nu).unwrap().value();
            prop_assert!((aa - an).abs().max() <= 1e-4, "{} A: {aa} vs {an}", g.kind());
        }
    }

    #[test]
    fn hexic_operator_closed_form(theta in 0.0..TAU) {
        let g = Integrand::hexic2d();
        prop_assert!((g.a_at_angle(theta) - hexic_a(theta)).abs() <= 1e-10);
    }

    #[test]
    fn rotated_profile_is_a_rotation(theta in 0.0..TAU) {
        // gamma'(nu) = gamma(R^-1 nu) with R the rotation by pi/4.
        let (g, h) = (Integrand::hexic2d(), Integrand::hexic2d_rotated());
        let a = h.gamma(&Direction::from_angle(theta).vector());
        let b = g.gamma(&Direction::from_angle(theta - PI / 4.0).vector());
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn lift_restricts_to_profile(theta in -FRAC_PI_2..FRAC_PI_2, rho in 0.0..TAU) {
        // Along every meridian plane the lift equals the profile evaluated at
        // (cos theta, sin theta).
        for (g3, g1) in [(Integrand::hexic3d(), Integrand::hexic2d()), (Integrand::hexic3d_rotated(), Integrand::hexic2d_rotated())] {
            let a = g3.gamma(&Direction::from_spherical(theta, rho).vector());
            let b = g1.gamma(&Direction::from_angle(theta).vector());
            prop_assert!((a - b).abs() <= 1e-12, "{}", g3.kind());
        }
    }
}

#[test]
fn landmark_values_of_a() {
    let g = Integrand::hexic2d();
    assert!((g.a_at_angle(0.0) + 5.0).abs() <= 1e-12);
    assert!((g.a_at_angle(PI / 4.0) - 25.0 / 4.0).abs() <= 1e-12);
}
