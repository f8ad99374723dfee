//! Browser bindings: each call returns a JSON string with an `svg` field
//! and a few numbers for the page to show.

use std::f64::consts::PI;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;
use wulff::curves::{anisotropic_curvature_along, catalogue_curve, classify_converged, stitch, CamcStatus, TOL_CAMC};
use wulff::export::{curve_svg, frontier_svg, polygon_svg};
use wulff::frontier::{
    hausdorff_distance, sample_frontier, self_intersections, singular_set, wulff_arcs, wulff_halfspace, V2, TOL_SING,
};
use wulff::{Integrand, Kind};

fn planar(kind: &str) -> Result<Integrand, String> {
    let kind: Kind = kind.parse().map_err(|e: wulff::Error| e.to_string())?;
    match kind {
        Kind::Isotropic => Ok(Integrand::isotropic(1)),
        Kind::Hexic2d | Kind::Hexic2dRotated => Integrand::builtin(kind, 1).map_err(|e| e.to_string()),
        other => Err(format!("'{other}' is not a planar builtin")),
    }
}

/// Frontier of a planar builtin plus the linear term `<a, x>`, which only
/// translates the picture.
pub fn frontier_report(kind: &str, res: usize, ax: f64, ay: f64) -> Result<Value, String> {
    let mut g = planar(kind)?;
    if ax != 0.0 || ay != 0.0 {
        g = g.with_linear_term(&[ax, ay]).map_err(|e| e.to_string())?;
    }
    let samples = sample_frontier(&g, res).map_err(|e| e.to_string())?;
    let singular = singular_set(&g, TOL_SING).map_err(|e| e.to_string())?;
    let crossings = self_intersections(&g, &samples).map_err(|e| e.to_string())?;
    let theta1 = singular.roots.iter().copied().filter(|&r| r > 0.0).fold(f64::NAN, f64::min);
    Ok(json!({
        "svg": frontier_svg(&samples, &singular, &crossings),
        "singular_count": singular.len(),
        "theta1_over_pi": (!theta1.is_nan()).then(|| theta1 / PI),
        "crossing_count": crossings.crossings.len(),
    }))
}

/// Wulff shape by half-planes, compared with the frontier-arc construction.
pub fn wulff_report(kind: &str, res: usize) -> Result<Value, String> {
    let g = planar(kind)?;
    let shape = wulff_halfspace(&g, res).map_err(|e| e.to_string())?;
    let singular = singular_set(&g, TOL_SING).map_err(|e| e.to_string())?;
    let samples = sample_frontier(&g, res).map_err(|e| e.to_string())?;
    let crossings = self_intersections(&g, &samples).map_err(|e| e.to_string())?;
    let arcs = wulff_arcs(&g, &singular, &crossings).map_err(|e| e.to_string())?;
    let hausdorff = hausdorff_distance(&shape.points(), &arcs.polyline(&g, 1024));
    let corners: Vec<V2> = shape.corner_points().iter().map(|p| V2::new(p[0], p[1])).collect();
    Ok(json!({
        "svg": polygon_svg(&shape.points(), "Wulff shape", &corners),
        "vertices": shape.vertices.len(),
        "corners": shape.corners.len(),
        "hausdorff": hausdorff,
    }))
}

/// Classifies a catalogue curve of the hexic density.
pub fn classify_report(name: &str, res: usize) -> Result<Value, String> {
    let g = Integrand::hexic2d();
    let arcs = catalogue_curve(&g, name).map_err(|e| e.to_string())?;
    let curve = stitch(&g, &arcs, res).map_err(|e| e.to_string())?;
    let verdict = classify_converged(&g, &arcs, res, TOL_CAMC).map_err(|e| e.to_string())?;
    let lambda = anisotropic_curvature_along(&curve).map_err(|e| e.to_string())?;
    let (lo, hi) = lambda
        .lambda
        .iter()
        .zip(&lambda.excluded)
        .filter(|(_, e)| !**e)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, _)| (lo.min(*l), hi.max(*l)));
    Ok(json!({
        "svg": curve_svg(&curve, name),
        "camc": matches!(verdict.status, CamcStatus::Camc { .. }),
        "piece_means": verdict.profile.iter().map(|p| p.mean).collect::<Vec<_>>(),
        "lambda_range": [lo, hi],
        "embedded": curve.embedded,
    }))
}

fn respond(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn frontier(kind: &str, res: usize, ax: f64, ay: f64) -> Result<String, JsError> {
    respond(frontier_report(kind, res, ax, ay))
}

#[wasm_bindgen]
pub fn wulff(kind: &str, res: usize) -> Result<String, JsError> {
    respond(wulff_report(kind, res))
}

#[wasm_bindgen]
pub fn classify(name: &str, res: usize) -> Result<String, JsError> {
    respond(classify_report(name, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports() {
        let f = frontier_report("hexic2d", 1024, 0.0, 0.0).unwrap();
        assert_eq!(f["singular_count"], 8);
        assert!(f["svg"].as_str().unwrap().starts_with("<?xml"));
        let shifted = frontier_report("hexic2d", 1024, 0.1, 0.0).unwrap();
        assert_eq!(shifted["crossing_count"], f["crossing_count"]);

        let w = wulff_report("hexic2d", 1024).unwrap();
        assert_eq!(w["corners"], 4);

        let c = classify_report("Cgamma5", 256).unwrap();
        assert_eq!(c["camc"], false);
        assert!(planar("hexic3d").is_err());
    }
}
