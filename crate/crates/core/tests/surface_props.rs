use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use wulff::curves::catalogue_curve;
use wulff::frontier::Interval;
use wulff::surfaces::{
    anisotropic_shape_operator, mesh_frontier_patch, mesh_frontier_surface, NormalMode, SurfaceMesh,
};
use wulff::{Direction, Integrand};

fn hexic_mesh(name: &str, grid: (usize, usize)) -> SurfaceMesh {
    let arcs = catalogue_curve(&Integrand::hexic2d(), name).unwrap();
    mesh_frontier_surface(&Integrand::hexic3d(), &arcs, grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalues_real_and_h_relation(k in 0usize..5, nt in 64usize..160, nr in 128usize..192) {
        let mesh = match k {
            4 => SurfaceMesh::unit_sphere(&Integrand::hexic3d(), (nt, nr)).unwrap(),
            _ => hexic_mesh(["wulff", "Cgamma1", "Cgamma4", "Cgamma5"][k], (nt, nr)),
        };
        let f = anisotropic_shape_operator(&mesh).unwrap();
        for i in 0..f.lambda.len() {
            if f.excluded[i] || !f.lambda[i].is_finite() {
                continue;
            }
            prop_assert!(f.discriminant[i] >= -1e-12, "vertex {}: discriminant {}", i, f.discriminant[i]);
            prop_assert!(f.lambda[i].powi(2) >= f.h2[i] - 1e-10);
        }
    }

    #[test]
    fn axisymmetry(k in 0usize..4, nt in 64usize..128) {
        let mesh = hexic_mesh(["wulff", "Cgamma1", "Cgamma4", "Cgamma5"][k], (nt, 128));
        let f = anisotropic_shape_operator(&mesh).unwrap();
        for r in 0..mesh.rows() {
            let vals: Vec<f64> = (0..mesh.cols()).map(|c| mesh.index(r, c)).filter(|&k| !f.excluded[k]).map(|k| f.lambda[k]).collect();
            if let (Some(lo), Some(hi)) = (vals.iter().copied().reduce(f64::min), vals.iter().copied().reduce(f64::max)) {
                prop_assert!(hi - lo <= 1e-8 * hi.abs().max(1.0), "row {}: {}..{}", r, lo, hi);
            }
        }
    }
}

#[test]
fn frontier_sign_law_on_the_sphere_frontier() {
    // The whole meridian of the frontier, pole to pole, normal sign(det A) nu.
    let g = Integrand::hexic3d();
    let meridian = Interval::new(-FRAC_PI_2, FRAC_PI_2);
    let mesh = mesh_frontier_patch(&g, meridian, (512, 128), NormalMode::OrientationCompatible).unwrap();
    let f = anisotropic_shape_operator(&mesh).unwrap();
    let (mut positive, mut negative) = (0, 0);
    for r in 0..mesh.rows() {
        for c in 0..mesh.cols() {
            let k = mesh.index(r, c);
            if f.excluded[k] {
                continue;
            }
            let det = g.operator_a(&Direction::from_spherical(mesh.thetas[r], mesh.rhos[c])).unwrap().determinant();
            if det.abs() < 1e-2 {
                continue;
            }
            let want = if det > 0.0 { -1.0 } else { 1.0 };
            assert!((f.lambda[k] - want).abs() <= 1e-2, "theta {}: {} vs {want}", mesh.thetas[r], f.lambda[k]);
            if det > 0.0 { positive += 1 } else { negative += 1 }
        }
    }
    assert!(positive > 0 && negative > 0, "{positive} / {negative}");
}

#[test]
fn meridian_curvature_matches_profile_curvature() {
    // With the outward normal, the meridian eigenvalue equals the profile
    // curve's Lambda, which is -1 on every frontier arc of a CAMC curve.
    for name in ["wulff", "Cgamma1", "Cgamma4"] {
        let mesh = hexic_mesh(name, (256, 128));
        let f = anisotropic_shape_operator(&mesh).unwrap();
        for r in 0..mesh.rows() {
            let k = mesh.index(r, 5);
            if !f.excluded[k] {
                assert!((f.operator[k][(0, 0)] + 1.0).abs() <= 1e-3, "{name} row {r}: {}", f.operator[k][(0, 0)]);
            }
        }
    }
}
