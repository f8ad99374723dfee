//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Runs without the libtest harness so the lines are always shown. Criteria
//! listed in `KNOWN_UNATTAINED` are evaluated at full strength and print
//! FAIL; they do not fail the test run.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::time::{Duration, Instant};

use nalgebra::{Rotation2, Vector2};
use wulff::curves::{
    anisotropic_curvature_along, catalogue_curve, classify, enumerate_closed_camc, stitch, HexicLandmarks, TOL_CAMC,
};
use wulff::flow::{dissipation_check, family_at, flow_residual, FlowBase, FlowFamily};
use wulff::frontier::{
    hausdorff_distance, sample_frontier, self_intersections, singular_set, wulff_arcs, wulff_halfspace, TOL_SING,
};
use wulff::surfaces::{anisotropic_shape_operator, classify_surface_with, mesh_frontier_surface, TOL_CAMC_SURFACE};
use wulff::{DerivativeMode, Direction, Integrand};

const THETA1_OVER_PI: f64 = 0.1161397636;
const RHO1_OVER_PI: f64 = 0.2374632441;
const RHO2_OVER_PI: f64 = 0.2625367559;
const ALPHA: f64 = 0.3467370642;

/// Criteria evaluated and reported but allowed to fail; see the ledger.
const KNOWN_UNATTAINED: [u32; 1] = [6];

type Outcome = Result<String, String>;

struct Line {
    id: u32,
    passed: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail = format!("{detail}; over budget {:.0} s", b.as_secs_f64());
        }
    }
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name}: {detail} [{:.2} s]", elapsed.as_secs_f64());
    Line { id, passed, detail }
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Outcome {
    let err = (got - want).abs();
    if err <= tol {
        Ok(format!("{label} = {got:.12} (err {err:.1e} <= {tol:.0e})"))
    } else {
        Err(format!("{label} = {got:.12}, want {want} within {tol:.0e} (err {err:.1e})"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: wulff::Error) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let s = singular_set(&Integrand::hexic2d(), TOL_SING).map_err(err)?;
    let theta1 = s.roots.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    within("theta1/pi", theta1 / PI, THETA1_OVER_PI, 1e-9)
}

fn criterion_2() -> Outcome {
    let g = Integrand::hexic2d();
    let samples = sample_frontier(&g, 8192).map_err(err)?;
    let crossings = self_intersections(&g, &samples).map_err(err)?;
    let params = crossings.crossing_parameters();
    let first = |lo: f64, hi: f64| params.iter().copied().filter(|&r| r > lo && r < hi).fold(f64::INFINITY, f64::min);
    let theta1 = THETA1_OVER_PI * PI;
    let rho1 = first(theta1, FRAC_PI_4);
    let rho2 = first(FRAC_PI_4, FRAC_PI_2 - theta1);
    let alpha = crossings.crossings.iter().map(|c| c.point[0].hypot(c.point[1])).fold(f64::INFINITY, f64::min);
    let a = within("rho1/pi", rho1 / PI, RHO1_OVER_PI, 1e-8)?;
    let b = within("rho2/pi", rho2 / PI, RHO2_OVER_PI, 1e-8)?;
    let c = within("alpha", alpha, ALPHA, 1e-8)?;
    let closed = ((1.0 + 5f64.sqrt()) / 6.0).sqrt().acos();
    let d = within("rho1 - closed form", rho1 - closed, 0.0, 1e-8)?;
    Ok(format!("{a}; {b}; {c}; {d}"))
}

fn criterion_3() -> Outcome {
    let g = Integrand::hexic2d();
    let l = HexicLandmarks::locate(&g).map_err(err)?;
    let want = Vector2::new(1.0, 1.0) * (2.0 / 3f64.sqrt());
    let a = g.xi_at_angle(l.theta(8));
    let b = g.xi_at_angle(l.theta(3));
    let worst = (a - want).norm().max((b - want).norm());
    let corners = singular_set(&g, TOL_SING).map_err(err)?.corner_points();
    let listed = corners.iter().any(|p| (Vector2::new(p[0], p[1]) - want).norm() <= 1e-9);
    ensure(worst <= 1e-9 && listed, || format!("corner error {worst:.1e}, listed {listed}"))?;
    Ok(format!("xi(theta8) = xi(theta3) = (2/sqrt3)(1,1), error {worst:.1e} <= 1e-9"))
}

fn criterion_4() -> Outcome {
    let g = Integrand::hexic2d();
    let arcs = catalogue_curve(&g, "wulff").map_err(err)?;
    let mut parts = Vec::new();
    for (res, tol) in [(1024, 5e-3), (2048, 1.3e-3)] {
        let curve = stitch(&g, &arcs, res).map_err(err)?;
        let k = anisotropic_curvature_along(&curve).map_err(err)?;
        let dev = (0..curve.len()).filter(|&i| !k.excluded[i]).map(|i| (k.lambda[i] + 1.0).abs()).fold(0.0, f64::max);
        ensure(dev <= tol, || format!("res {res}: deviation {dev:.2e} > {tol:.1e}"))?;
        parts.push(format!("res {res}: max |Lambda + 1| = {dev:.2e} <= {tol:.1e}"));
    }
    Ok(parts.join("; "))
}

fn criterion_5() -> Outcome {
    let g = Integrand::hexic2d();
    for name in ["Cgamma1", "Cgamma2", "Cgamma3", "Cgamma4"] {
        let curve = stitch(&g, &catalogue_curve(&g, name).map_err(err)?, 1024).map_err(err)?;
        let v = classify(&curve, TOL_CAMC).map_err(err)?;
        ensure(v.is_camc() && (v.mean_lambda + 1.0).abs() <= TOL_CAMC, || {
            format!("{name}: camc {} mean {}", v.is_camc(), v.mean_lambda)
        })?;
    }
    let l = HexicLandmarks::locate(&g).map_err(err)?;
    let curve = stitch(&g, &catalogue_curve(&g, "Cgamma5").map_err(err)?, 1024).map_err(err)?;
    let v = classify(&curve, TOL_CAMC).map_err(err)?;
    ensure(!v.is_camc(), || "Cgamma5 classified CAMC".into())?;
    let k = anisotropic_curvature_along(&curve).map_err(err)?;
    let params = curve.parameters.as_ref().ok_or("Cgamma5 lost its parameters")?;
    let mut worst: f64 = 0.0;
    for i in (0..curve.len()).filter(|&i| !k.excluded[i]) {
        let t = (params[i] + PI).rem_euclid(TAU) - PI;
        let want = if t > l.theta(8) && t < l.theta(1) { -1.0 } else { 1.0 };
        worst = worst.max((k.lambda[i] - want).abs());
    }
    ensure(worst <= TOL_CAMC, || format!("Cgamma5 split deviation {worst:.2e}"))?;
    Ok(format!("C1..C4 CAMC with Lambda = -1; C5 split -1/+1 within {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let e = enumerate_closed_camc(&Integrand::hexic2d(), 1024).map_err(err)?;
    let mut matched: Vec<&str> = e.classes.iter().filter_map(|c| c.catalogue_name.as_deref()).collect();
    matched.sort_unstable();
    let all_named = ["Cgamma1", "Cgamma2", "Cgamma3", "Cgamma4", "wulff"].iter().all(|n| matched.contains(n));
    let detail = format!("{} classes (want exactly 13), catalogue matches {:?}", e.classes.len(), matched);
    if e.classes.len() == 13 && all_named {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let cases = [
        (Integrand::hexic2d(), false),
        (Integrand::hexic3d(), false),
        (Integrand::hexic3d_rotated(), false),
        (Integrand::isotropic(1), true),
        (Integrand::isotropic(2), true),
    ];
    let mut parts = Vec::new();
    for (g, want) in cases {
        let r = g.convexity_report(720).map_err(err)?;
        ensure(r.is_convex == want, || format!("{}: convex = {}", g.kind(), r.is_convex))?;
        parts.push(format!("{} {}", g.kind(), if want { "convex" } else { "not convex" }));
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Outcome {
    let g = Integrand::hexic2d();
    let shape = wulff_halfspace(&g, 4096).map_err(err)?;
    let singular = singular_set(&g, TOL_SING).map_err(err)?;
    let samples = sample_frontier(&g, 4096).map_err(err)?;
    let crossings = self_intersections(&g, &samples).map_err(err)?;
    let arcs = wulff_arcs(&g, &singular, &crossings).map_err(err)?;
    let polyline = arcs.polyline(&g, 4096 / arcs.arcs.len().max(1));
    let d = hausdorff_distance(&shape.points(), &polyline);
    ensure(d <= 1e-6, || format!("hausdorff {d:.2e} > 1e-6"))?;
    Ok(format!("hausdorff {d:.2e} <= 1e-6"))
}

fn criterion_9() -> Outcome {
    let g3 = Integrand::hexic3d();
    let g = Integrand::hexic2d();
    let mut parts = Vec::new();
    for name in ["wulff", "Cgamma1", "Cgamma4"] {
        let mesh = mesh_frontier_surface(&g3, &catalogue_curve(&g, name).map_err(err)?, (256, 256)).map_err(err)?;
        let f = anisotropic_shape_operator(&mesh).map_err(err)?;
        let v = classify_surface_with(&mesh, &f, TOL_CAMC_SURFACE).map_err(err)?;
        let dev = (0..f.lambda.len()).filter(|&k| !f.excluded[k]).map(|k| (f.lambda[k] + 1.0).abs()).fold(0.0, f64::max);
        ensure(v.is_camc() && dev <= 1e-2, || format!("{name}: camc {} deviation {dev:.2e}", v.is_camc()))?;
        parts.push(format!("{name} CAMC dev {dev:.1e}"));
    }
    let l = HexicLandmarks::locate(&g).map_err(err)?;
    let mesh = mesh_frontier_surface(&g3, &catalogue_curve(&g, "Cgamma5").map_err(err)?, (256, 256)).map_err(err)?;
    let f = anisotropic_shape_operator(&mesh).map_err(err)?;
    let v = classify_surface_with(&mesh, &f, TOL_CAMC_SURFACE).map_err(err)?;
    ensure(!v.is_camc(), || "Cgamma5 surface classified CAMC".into())?;
    let mut worst: f64 = 0.0;
    for r in 0..mesh.rows() {
        let t = (mesh.thetas[r] + PI).rem_euclid(TAU) - PI;
        let want = if t > l.theta(8) && t < l.theta(1) { -1.0 } else { 1.0 };
        for c in 0..mesh.cols() {
            let k = mesh.index(r, c);
            if !f.excluded[k] {
                worst = worst.max((f.lambda[k] - want).abs());
            }
        }
    }
    ensure(worst <= 1e-2, || format!("Cgamma5 outer/inner split deviation {worst:.2e}"))?;
    parts.push(format!("Cgamma5 not CAMC, outer -1 / inner +1 within {worst:.1e}"));
    Ok(parts.join("; "))
}

fn criterion_10() -> Outcome {
    let g = Integrand::hexic2d();
    let curve = stitch(&g, &catalogue_curve(&g, "wulff").map_err(err)?, 1024).map_err(err)?;
    let family = FlowFamily::new(g.clone(), 1.0, FlowBase::Curve(curve)).map_err(err)?;
    let mut dt = 6.4e-3;
    let mut prev = flow_residual(&family, 0.0, dt).map_err(err)?;
    let mut min_ratio = f64::INFINITY;
    while dt > 1.5e-4 {
        dt *= 0.5;
        let r = flow_residual(&family, 0.0, dt).map_err(err)?;
        min_ratio = min_ratio.min(prev / r);
        prev = r;
    }
    ensure(min_ratio >= 3.3, || format!("residual ratio {min_ratio:.3} < 3.3"))?;
    let d = dissipation_check(&family, 0.0, 1e-3).map_err(err)?;
    let gap = d.relative_gap();
    ensure(gap <= 1e-4, || format!("dissipation gap {gap:.2e} > 1e-4"))?;
    let base = family.base().energy(&g);
    let mut law: f64 = 0.0;
    for t in [0.0, 0.1, 0.25, 0.5, 0.9] {
        let e = family_at(&family, t).map_err(err)?.shape.energy(&g);
        law = law.max((e - family.scale(t).map_err(err)? * base).abs());
    }
    ensure(law <= 1e-9, || format!("scale law error {law:.2e} > 1e-9"))?;
    Ok(format!(
        "min residual ratio {min_ratio:.2} >= 3.3 down to dt {dt:.2e}; dissipation gap {gap:.1e}; scale law {law:.1e}"
    ))
}

/// `n` directions on a regular grid for `g`.
fn grid_directions(g: &Integrand, n: usize) -> Vec<Direction> {
    if g.dim() == 1 {
        return (0..n).map(|k| Direction::from_angle(TAU * k as f64 / n as f64)).collect();
    }
    let (rows, cols) = (32, n.div_ceil(32));
    (0..rows)
        .flat_map(|i| {
            let lat = (2.0 * (i as f64 + 0.5) / rows as f64 - 1.0).asin();
            (0..cols).map(move |j| Direction::from_spherical(lat, TAU * j as f64 / cols as f64))
        })
        .collect()
}

fn criterion_11() -> Outcome {
    const N: usize = 1024;
    let builtins = [
        Integrand::isotropic(1),
        Integrand::isotropic(2),
        Integrand::hexic2d(),
        Integrand::hexic2d_rotated(),
        Integrand::hexic3d(),
        Integrand::hexic3d_rotated(),
    ];
    let (mut euler, mut homog, mut trans, mut grad, mut op): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for g in &builtins {
        let numeric = g.clone().with_mode(DerivativeMode::numeric());
        let a = [0.03, -0.02, 0.01];
        let shifted = g.with_linear_term(&a[..g.dim() + 1]).map_err(err)?;
        for nu in grid_directions(g, N) {
            let gr = g.extension_gradient(&nu).map_err(err)?;
            euler = euler.max((gr.dot(&nu.vector()) - g.evaluate(&nu).map_err(err)?).abs());
            let x: Vec<f64> = nu.components().iter().map(|c| 2.5 * c).collect();
            let rx: Vec<f64> = x.iter().map(|c| 3.7 * c).collect();
            let h = g.homogeneous_extension(&rx).map_err(err)? - 3.7 * g.homogeneous_extension(&x).map_err(err)?;
            homog = homog.max(h.abs());
            let gs = shifted.extension_gradient(&nu).map_err(err)?;
            for i in 0..=g.dim() {
                trans = trans.max((gs[i] - gr[i] - a[i]).abs());
            }
            grad = grad.max((gr - numeric.extension_gradient(&nu).map_err(err)?).norm());
            let diff = g.operator_a(&nu).map_err(err)?.value() - numeric.operator_a(&nu).map_err(err)?.value();
            op = op.max(diff.abs().max());
        }
    }
    let (g, h) = (Integrand::hexic2d(), Integrand::hexic2d_rotated());
    let r = Rotation2::new(FRAC_PI_4);
    let (mut rot, mut dihedral): (f64, f64) = (0.0, 0.0);
    for k in 0..N {
        let t = TAU * k as f64 / N as f64;
        rot = rot.max((h.xi_at_angle(t) - r * g.xi_at_angle(t - FRAC_PI_4)).norm());
        let p = g.xi_at_angle(t);
        dihedral = dihedral
            .max((g.xi_at_angle(-t) - Vector2::new(p.x, -p.y)).norm())
            .max((g.xi_at_angle(FRAC_PI_2 - t) - Vector2::new(p.y, p.x)).norm());
    }
    let checks = [
        ("euler", euler, 1e-8),
        ("homogeneity", homog, 1e-10),
        ("rotation", rot, 1e-10),
        ("translation", trans, 1e-10),
        ("gradient", grad, 1e-6),
        ("operator", op, 1e-4),
        ("dihedral", dihedral, 1e-10),
    ];
    for (name, v, tol) in checks {
        ensure(v <= tol, || format!("{name} error {v:.2e} > {tol:.0e}"))?;
    }
    Ok(format!(
        "{N} grid directions per density: {}; randomized suites in integrand_props and frontier_props",
        checks.iter().map(|(n, v, _)| format!("{n} {v:.0e}")).collect::<Vec<_>>().join(", ")
    ))
}

fn main() {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let lines = [
        run(1, "singular landmark", secs(1), criterion_1),
        run(2, "crossing landmarks", secs(5), criterion_2),
        run(3, "corner images", None, criterion_3),
        run(4, "Wulff curvature", None, criterion_4),
        run(5, "catalogue classification", secs(10), criterion_5),
        run(6, "enumeration count", secs(60), criterion_6),
        run(7, "convexity verdicts", None, criterion_7),
        run(8, "Wulff dual construction", None, criterion_8),
        run(9, "surfaces of revolution", secs(120), criterion_9),
        run(10, "self-similar flow", None, criterion_10),
        run(11, "property suites", None, criterion_11),
    ];
    let passed = lines.iter().filter(|l| l.passed).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    let unexpected: Vec<String> = lines
        .iter()
        .filter(|l| !l.passed && !KNOWN_UNATTAINED.contains(&l.id))
        .map(|l| format!("{}: {}", l.id, l.detail))
        .collect();
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
