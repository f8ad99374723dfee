use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;
use wulff::curves::{
    anisotropic_curvature_along, classify_converged, energy_of_curve, enumerate_closed_camc_with, stitch, ClosedCurve,
    EnumerationOptions, HexicLandmarks, DEFAULT_PATH_CAP, TOL_CAMC,
};
use wulff::export::{
    contact_sheet, curve_csv, curve_svg, frontier_csv, frontier_svg, polygon_svg, surface_csv, surface_obj, to_json,
};
use wulff::flow::{dissipation_check, flow_report, FlowBase, FlowFamily, DEFAULT_DT};
use wulff::frontier::{
    hausdorff_distance, sample_frontier, self_intersections, singular_set, wulff_arcs, wulff_halfspace, V2, TOL_SING,
};
use wulff::surfaces::{
    anisotropic_shape_operator, classify_surface_with, energy_of_surface, mesh_frontier_surface, SurfaceMesh,
    TOL_CAMC_SURFACE,
};
use wulff::Integrand;

use crate::config::{load_arcs, load_integrand, Invalid, ToleranceFailure};
use crate::Run;

const HAUSDORFF_TOL: f64 = 1e-6;
const DISSIPATION_TOL: f64 = 1e-4;

fn integrand(run: &Run, default: &str) -> Result<Integrand> {
    load_integrand(run.integrand.as_deref().unwrap_or(default))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Writes `report` as `<name>.json` and echoes it when `--report` is set.
fn finish<T: Serialize>(run: &Run, name: &str, report: &T) -> Result<()> {
    let text = to_json(report)?;
    write(&run.out, &format!("{name}.json"), &text)?;
    if run.report {
        print!("{text}");
    }
    Ok(())
}

fn over_pi(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x / PI).collect()
}

pub fn frontier(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic2d")?;
    if g.dim() == 2 {
        let res = run.res.unwrap_or(128);
        let samples = sample_frontier(&g, res)?;
        write(&run.out, "frontier.csv", &frontier_csv(&samples))?;
        let negative = samples.iter().filter(|s| s.det_sign < 0).count();
        let report = json!({
            "kind": g.kind().name(),
            "n": 2,
            "resolution": res,
            "samples": samples.len(),
            "negative_det_fraction": negative as f64 / samples.len() as f64,
        });
        println!("frontier: {} samples on S^2, det A < 0 on {negative}", samples.len());
        return finish(run, "report", &report);
    }

    let res = run.res.unwrap_or(4096);
    let samples = sample_frontier(&g, res)?;
    let singular = singular_set(&g, run.tol.unwrap_or(TOL_SING))?;
    let crossings = self_intersections(&g, &samples)?;
    write(&run.out, "frontier.csv", &frontier_csv(&samples))?;
    write(&run.out, "singular.json", &to_json(&singular)?)?;
    write(&run.out, "intersections.json", &to_json(&crossings)?)?;
    if run.svg {
        write(&run.out, "frontier.svg", &frontier_svg(&samples, &singular, &crossings))?;
    }

    let theta1 = singular.roots.iter().copied().filter(|&r| r > 0.0).fold(f64::NAN, f64::min);
    let landmarks = HexicLandmarks::locate(&g).ok();
    let alpha = crossings
        .crossings
        .iter()
        .map(|c| c.point[0].hypot(c.point[1]))
        .fold(f64::NAN, f64::min);
    let report = json!({
        "kind": g.kind().name(),
        "n": 1,
        "resolution": res,
        "singular_count": singular.len(),
        "roots_over_pi": over_pi(&singular.roots),
        "theta1_over_pi": landmarks.map(|l| l.theta1 / PI).or((!theta1.is_nan()).then(|| theta1 / PI)),
        "rho1_over_pi": landmarks.map(|l| l.rho1 / PI),
        "crossing_count": crossings.crossings.len(),
        "crossing_parameters_over_pi": over_pi(&crossings.crossing_parameters()),
        "corner_points": singular.corner_points(),
        "alpha": (!alpha.is_nan()).then_some(alpha),
    });
    println!(
        "frontier: {} samples, {} singular parameters, {} crossings",
        samples.len(),
        singular.len(),
        crossings.crossings.len()
    );
    finish(run, "report", &report)
}

pub fn wulff(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic2d")?;
    let res = run.res.unwrap_or(4096);
    let tol = run.tol.unwrap_or(HAUSDORFF_TOL);
    let shape = wulff_halfspace(&g, res)?;
    let profile = if g.dim() == 2 { g.profile().cloned().expect("rotational shape has a profile") } else { g.clone() };

    let singular = singular_set(&profile, TOL_SING)?;
    let samples = sample_frontier(&profile, res)?;
    let crossings = self_intersections(&profile, &samples)?;
    let arcs = wulff_arcs(&profile, &singular, &crossings)?;
    let polyline = arcs.polyline(&profile, 4096 / arcs.arcs.len().max(1));
    let hausdorff = hausdorff_distance(&shape.points(), &polyline);

    if run.svg {
        let corners: Vec<V2> = shape.corner_points().iter().map(|p| V2::new(p[0], p[1])).collect();
        write(&run.out, "wulff.svg", &polygon_svg(&shape.points(), "Wulff shape", &corners))?;
    }
    let report = json!({
        "kind": g.kind().name(),
        "n": g.dim(),
        "resolution": res,
        "rotational": shape.rotational,
        "vertex_count": shape.vertices.len(),
        "corner_points": shape.corner_points(),
        "arcs": arcs.arcs,
        "hausdorff": hausdorff,
        "tolerance": tol,
    });
    write(&run.out, "wulff_polygon.json", &to_json(&shape)?)?;
    finish(run, "report", &report)?;
    println!(
        "wulff: {} vertices, {} corners, {} arcs, hausdorff {hausdorff:.3e}",
        shape.vertices.len(),
        shape.corners.len(),
        arcs.arcs.len()
    );
    if !(hausdorff <= tol) {
        bail!(ToleranceFailure(format!("hausdorff distance {hausdorff:e} exceeds {tol:e}")));
    }
    Ok(())
}

pub fn classify(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic2d")?;
    if g.dim() != 1 {
        bail!(Invalid("classify works on planar integrands; use `surface` for n = 2".into()));
    }
    let res = run.res.unwrap_or(1024);
    let tol = run.tol.unwrap_or(TOL_CAMC);
    let (name, arcs) = load_arcs(&g, run.curve.as_deref().unwrap_or("wulff"), res)?;
    let curve = stitch(&g, &arcs, res)?;
    let verdict = classify_converged(&g, &arcs, res, tol)?;
    let curvature = anisotropic_curvature_along(&curve)?;
    write(&run.out, &format!("{name}.csv"), &curve_csv(&curve, &curvature))?;
    if run.svg {
        write(&run.out, &format!("{name}.svg"), &curve_svg(&curve, &name))?;
    }
    let report = json!({
        "curve": name,
        "arcs": arcs.to_file(),
        "resolution_per_arc": res,
        "verdict": verdict,
        "embedded": curve.embedded,
        "signed_area": curve.signed_area,
        "length": curve.length(),
        "energy": energy_of_curve(&curve, &g),
    });
    match verdict.status {
        wulff::curves::CamcStatus::Camc { lambda } => println!("{name}: CAMC, Lambda = {lambda:.6}"),
        wulff::curves::CamcStatus::NotCamc => {
            let means: Vec<String> = verdict.profile.iter().map(|p| format!("{:.4}", p.mean)).collect();
            println!("{name}: not CAMC, piece means [{}]", means.join(", "));
        }
    }
    finish(run, "classify", &report)
}

pub fn enumerate(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic2d")?;
    let opts = EnumerationOptions {
        resolution: run.res.unwrap_or(1024),
        tol_camc: run.tol.unwrap_or(TOL_CAMC),
        path_cap: run.cap.unwrap_or(DEFAULT_PATH_CAP),
        ..EnumerationOptions::default()
    };
    let e = enumerate_closed_camc_with(&g, opts)?;
    let classes: Vec<_> = e
        .classes
        .iter()
        .map(|c| {
            let rep = &e.curves[c.representative];
            json!({
                "class": c,
                "arcs": rep.arcs.to_file(),
                "signed_area": rep.curve.signed_area,
                "length": rep.curve.length(),
                "energy": energy_of_curve(&rep.curve, &g),
                "max_deviation": rep.verdict.max_deviation,
            })
        })
        .collect();
    if run.svg {
        let mut sheet: Vec<(String, &ClosedCurve)> = Vec::new();
        for c in &e.classes {
            let label = match &c.catalogue_name {
                Some(n) => format!("class {:02} ({n})", c.id),
                None => format!("class {:02}", c.id),
            };
            let curve = &e.curves[c.representative].curve;
            write(&run.out, &format!("class_{:02}.svg", c.id), &curve_svg(curve, &label))?;
            sheet.push((label, curve));
        }
        write(&run.out, "contact_sheet.svg", &contact_sheet(&sheet, 4))?;
    }
    let report = json!({
        "kind": g.kind().name(),
        "resolution_per_arc": opts.resolution,
        "tolerance": opts.tol_camc,
        "nodes": e.nodes,
        "edges": e.edges,
        "cycles_examined": e.cycles_examined,
        "camc_curves": e.curves.len(),
        "class_count": e.classes.len(),
        "classes": classes,
    });
    println!(
        "enumerate: {} cycles, {} CAMC curves, {} congruence classes",
        e.cycles_examined,
        e.curves.len(),
        e.classes.len()
    );
    finish(run, "enumeration", &report)
}

pub fn surface(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic3d")?;
    if g.dim() != 2 {
        bail!(Invalid("surface needs an integrand on S^2".into()));
    }
    let n = run.res.unwrap_or(256);
    let tol = run.tol.unwrap_or(TOL_CAMC_SURFACE);
    let (name, mesh) = build_mesh(&g, run.curve.as_deref(), n)?;
    let field = anisotropic_shape_operator(&mesh)?;
    let verdict = classify_surface_with(&mesh, &field, tol)?;
    write(&run.out, &format!("{name}.csv"), &surface_csv(&mesh, &field))?;
    if run.obj {
        let comment = format!("rotational frontier surface '{name}' of {}, grid {n}x{n}", g.kind());
        write(&run.out, &format!("{name}.obj"), &surface_obj(&mesh, &comment))?;
    }
    let usable = |v: &[f64]| {
        let it = v.iter().zip(&field.excluded).filter(|(x, e)| !**e && x.is_finite()).map(|(x, _)| *x);
        it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let report = json!({
        "surface": name,
        "kind": g.kind().name(),
        "grid": [n, n],
        "watertight": mesh.is_watertight(),
        "periodic": mesh.periodic,
        "verdict": verdict,
        "lambda_minmax": usable(&field.lambda),
        "h2_minmax": usable(&field.h2),
        "energy": energy_of_surface(&mesh, &g),
    });
    match verdict.status {
        wulff::curves::CamcStatus::Camc { lambda } => println!("{name}: CAMC surface, Lambda = {lambda:.6}"),
        wulff::curves::CamcStatus::NotCamc => {
            let means: Vec<String> = verdict.profile.iter().map(|p| format!("{:.4}", p.mean)).collect();
            println!("{name}: not CAMC, band means [{}]", means.join(", "));
        }
    }
    finish(run, "surface", &report)
}

fn build_mesh(g: &Integrand, curve: Option<&str>, n: usize) -> Result<(String, SurfaceMesh)> {
    match (g.profile(), curve) {
        (None, None) | (_, Some("sphere")) => Ok(("sphere".into(), SurfaceMesh::unit_sphere(g, (n, n))?)),
        (None, Some(c)) => bail!(Invalid(format!("'{c}' needs a rotational integrand with a planar profile"))),
        (Some(p), c) => {
            let (name, arcs) = load_arcs(p, c.unwrap_or("wulff"), 4096)?;
            Ok((name, mesh_frontier_surface(g, &arcs, (n, n))?))
        }
    }
}

fn unit_circle(g: &Integrand, res: usize) -> Result<ClosedCurve> {
    let pts: Vec<V2> = (0..res).map(|k| TAU * k as f64 / res as f64).map(|t| V2::new(t.cos(), t.sin())).collect();
    Ok(ClosedCurve::from_polyline(g, &pts)?)
}

pub fn flow(run: &Run) -> Result<()> {
    let base_name = run.base.clone().unwrap_or_else(|| "wulff".into());
    let c = run.c.unwrap_or(1.0);
    let t = run.t.unwrap_or(0.0);
    let dt = run.dt.unwrap_or(DEFAULT_DT);
    let tol = run.tol.unwrap_or(DISSIPATION_TOL);
    let (g, base) = match base_name.as_str() {
        "circle-isotropic" => {
            let g = Integrand::isotropic(1);
            let curve = unit_circle(&g, run.res.unwrap_or(4096))?;
            (g, FlowBase::Curve(curve))
        }
        "sphere" => {
            let g = match &run.integrand {
                Some(s) => load_integrand(s)?,
                None => Integrand::isotropic(2),
            };
            let n = run.res.unwrap_or(128);
            let mesh = SurfaceMesh::unit_sphere(&g, (n, n))?;
            (g, FlowBase::Surface(mesh))
        }
        name => {
            let g = integrand(run, "hexic2d")?;
            if g.dim() == 1 {
                let res = run.res.unwrap_or(1024);
                let (_, arcs) = load_arcs(&g, name, 4096)?;
                let curve = stitch(&g, &arcs, res)?;
                (g, FlowBase::Curve(curve))
            } else {
                let (_, mesh) = build_mesh(&g, Some(name), run.res.unwrap_or(128))?;
                (g, FlowBase::Surface(mesh))
            }
        }
    };
    let family = FlowFamily::new(g.clone(), c, base)?;
    let report = flow_report(&family, t, dt)?;
    let gap = dissipation_check(&family, t, dt)?.relative_gap();
    let scale_law = report.energy - report.scale.powi(family.dim() as i32) * report.base_energy;
    let out = json!({
        "base": base_name,
        "kind": g.kind().name(),
        "report": report,
        "dissipation_relative_gap": gap,
        "energy_scale_law_error": scale_law,
    });
    println!(
        "flow: residual {:.3e} (dt), {:.3e} (dt/2), ratio {:.2}; dissipation gap {gap:.2e}",
        report.residual, report.residual_half, report.residual_ratio
    );
    finish(run, "flow", &out)?;
    if run.dissipation && !(gap <= tol) {
        bail!(ToleranceFailure(format!("dissipation relative gap {gap:e} exceeds {tol:e}")));
    }
    Ok(())
}

pub fn convexity(run: &Run) -> Result<()> {
    let g = integrand(run, "hexic2d")?;
    let grid = run.res.unwrap_or(720);
    let report = g.convexity_report(grid)?;
    println!(
        "{}: {} (min eigenvalue of A {:.6})",
        g.kind(),
        if report.is_convex { "convex" } else { "not convex" },
        report.min_eigenvalue
    );
    finish(run, "convexity", &json!({ "kind": g.kind().name(), "n": g.dim(), "grid": grid, "report": report }))
}
