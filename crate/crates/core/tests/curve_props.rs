use std::f64::consts::{FRAC_PI_4, TAU};

use nalgebra::{Matrix2, Rotation2};
use proptest::prelude::*;
use wulff::curves::{
    anisotropic_curvature_along, builtin_catalogue, classify, congruent, dihedral_group, enumerate_closed_camc,
    stitch, stitch_oriented, symmetry_group, ArcSpec, ClosedCurve, CATALOGUE_NAMES, CONGRUENCE_TOL, TOL_CAMC,
};
use wulff::frontier::Interval;
use wulff::Integrand;

fn catalogue(g: &Integrand, name: &str) -> ArcSpec {
    builtin_catalogue(g).unwrap().into_iter().find(|(n, _)| n == name).unwrap().1
}

/// Greedy congruence classes of `curves`.
fn class_count(g: &Integrand, curves: &[ClosedCurve], group: &[Matrix2<f64>]) -> usize {
    let mut reps: Vec<&ClosedCurve> = Vec::new();
    for c in curves {
        if !reps.iter().any(|r| congruent(g, r, c, group, CONGRUENCE_TOL)) {
            reps.push(c);
        }
    }
    reps.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orientation_invariance(k in 0..CATALOGUE_NAMES.len(), res in 128usize..400) {
        let g = Integrand::hexic2d();
        let arcs = catalogue(&g, CATALOGUE_NAMES[k]);
        let fwd = classify(&stitch_oriented(&g, &arcs, res).unwrap(), TOL_CAMC).unwrap();
        let rev = classify(&stitch_oriented(&g, &arcs.reversed(), res).unwrap(), TOL_CAMC).unwrap();
        prop_assert_eq!(fwd.is_camc(), rev.is_camc());
        let mut a: Vec<f64> = fwd.profile.iter().map(|p| p.mean.abs()).collect();
        let mut b: Vec<f64> = rev.profile.iter().map(|p| p.mean.abs()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
        // The normalised stitch does not depend on the input orientation.
        let n1 = classify(&stitch(&g, &arcs, res).unwrap(), TOL_CAMC).unwrap();
        let n2 = classify(&stitch(&g, &arcs.reversed(), res).unwrap(), TOL_CAMC).unwrap();
        prop_assert!((n1.mean_lambda - n2.mean_lambda).abs() <= 1e-9);
    }

    #[test]
    fn frontier_sign_law(offset in 0.0..TAU, res in 512usize..2048) {
        // The whole frontier as one arc, normal compatible with increasing theta.
        let g = Integrand::hexic2d();
        let arcs = ArcSpec::new(vec![Interval::new(offset, offset + TAU)]);
        let curve = stitch_oriented(&g, &arcs, res).unwrap();
        let k = anisotropic_curvature_along(&curve).unwrap();
        let t = curve.parameters.as_ref().unwrap();
        for i in 0..curve.len() {
            if k.excluded[i] {
                continue;
            }
            let a = g.a_at_angle(t[i]);
            prop_assume!(a.abs() > 1e-6);
            let want = if a > 0.0 { -1.0 } else { 1.0 };
            prop_assert!((k.lambda[i] - want).abs() <= 5e-3, "theta {}: {} vs {}", t[i], k.lambda[i], want);
        }
    }
}

#[test]
fn junction_continuity() {
    for g in [Integrand::hexic2d(), Integrand::hexic2d_rotated()] {
        for (name, arcs) in builtin_catalogue(&g).unwrap() {
            let c = stitch(&g, &arcs, 256).unwrap();
            for j in &c.junctions {
                assert!(j.gap() <= 1e-9, "{} {name}: junction {} gap {}", g.kind(), j.index, j.gap());
            }
        }
    }
}

#[test]
fn wulff_curve_is_convex() {
    let g = Integrand::hexic2d();
    let c = stitch(&g, &catalogue(&g, "wulff"), 1024).unwrap();
    let n = c.len();
    let turns: Vec<f64> = (0..n)
        .map(|k| {
            let (p, q, r) = (c.points[k], c.points[(k + 1) % n], c.points[(k + 2) % n]);
            let (u, v) = (q - p, r - q);
            u.x * v.y - u.y * v.x
        })
        .collect();
    assert!(turns.iter().all(|&t| t > 0.0), "min turn {}", turns.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn dedup_is_idempotent_under_symmetries() {
    let g = Integrand::hexic2d();
    let e = enumerate_closed_camc(&g, 256).unwrap();
    let group = symmetry_group(&g);
    let reps: Vec<ClosedCurve> = e.classes.iter().map(|c| e.curves[c.representative].curve.clone()).collect();
    assert_eq!(class_count(&g, &reps, &group), reps.len());
    for s in dihedral_group() {
        let mut all = reps.clone();
        all.extend(reps.iter().map(|c| {
            let mut m = c.map_points(|p| s * p);
            m.parameters = None;
            m
        }));
        assert_eq!(class_count(&g, &all, &group), reps.len(), "symmetry {s}");
    }
}

/// A hexic2d curve carried to the rotated density: points turn by pi/4 and
/// parameters shift by pi/4.
fn rotate_curve(c: &ClosedCurve) -> ClosedCurve {
    let r = Rotation2::new(FRAC_PI_4);
    let mut out = c.map_points(|p| r * p);
    for v in out.normals.iter_mut().chain(out.xi_tilde.iter_mut()) {
        *v = r * *v;
    }
    if let Some(t) = out.parameters.as_mut() {
        for s in t.iter_mut() {
            *s += FRAC_PI_4;
        }
    }
    out
}

#[test]
fn rotated_density_has_rotated_classes() {
    let (g, h) = (Integrand::hexic2d(), Integrand::hexic2d_rotated());
    let a = enumerate_closed_camc(&g, 256).unwrap();
    let b = enumerate_closed_camc(&h, 256).unwrap();
    assert_eq!(a.classes.len(), b.classes.len());
    let group = symmetry_group(&h);
    for c in &a.classes {
        let rotated = rotate_curve(&a.curves[c.representative].curve);
        let matches = b
            .classes
            .iter()
            .filter(|d| congruent(&h, &b.curves[d.representative].curve, &rotated, &group, CONGRUENCE_TOL))
            .count();
        assert_eq!(matches, 1, "class {} matched {matches} rotated classes", c.id);
    }
}
