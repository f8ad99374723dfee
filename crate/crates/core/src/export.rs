//! Deterministic writers: JSON with sorted keys and fixed float format,
//! CSV tables, SVG figures and Wavefront OBJ meshes.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::curves::{ClosedCurve, Curvature};
use crate::error::{Error, Result};
use crate::frontier::{FrontierSample, Intersections, SingularSet, V2};
use crate::surfaces::{ShapeOperatorField, SurfaceMesh};

/// Half-width of the square SVG view box.
pub const SVG_EXTENT: f64 = 1.3;
const SVG_PIXELS: f64 = 520.0;

/// 17 significant digits; round-trips every finite double.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|i| !matches!(i, Value::Array(_) | Value::Object(_)));
            if flat {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, item, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and floats in `{:.16e}` form. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Internal(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// A CSV table with a header row.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns `s, x, y, nu_x, nu_y, Lambda, excluded`.
pub fn curve_csv(curve: &ClosedCurve, curvature: &Curvature) -> String {
    let s = curve.arclength();
    csv(
        &["s", "x", "y", "nu_x", "nu_y", "Lambda", "excluded"],
        (0..curve.len()).map(|k| {
            vec![
                fmt_f64(s[k]),
                fmt_f64(curve.points[k].x),
                fmt_f64(curve.points[k].y),
                fmt_f64(curve.normals[k].x),
                fmt_f64(curve.normals[k].y),
                fmt_f64(curvature.lambda[k]),
                u8::from(curvature.excluded[k]).to_string(),
            ]
        }),
    )
}

/// Frontier samples; planar samples give `theta, x, y, A, det_sign`,
/// spherical ones `theta, rho, x, y, z, det_A, det_sign`.
pub fn frontier_csv(samples: &[FrontierSample]) -> String {
    let planar = samples.first().is_none_or(|s| s.direction.dim() == 1);
    if planar {
        csv(
            &["theta", "x", "y", "A", "det_sign"],
            samples.iter().map(|s| {
                vec![fmt_f64(s.theta()), fmt_f64(s.xi[0]), fmt_f64(s.xi[1]), fmt_f64(s.a.scalar()), s.det_sign.to_string()]
            }),
        )
    } else {
        csv(
            &["theta", "rho", "x", "y", "z", "det_A", "det_sign"],
            samples.iter().map(|s| {
                let (theta, rho) = s.direction.spherical();
                vec![
                    fmt_f64(theta),
                    fmt_f64(rho),
                    fmt_f64(s.xi[0]),
                    fmt_f64(s.xi[1]),
                    fmt_f64(s.xi[2]),
                    fmt_f64(s.a.determinant()),
                    s.det_sign.to_string(),
                ]
            }),
        )
    }
}

/// Columns `i, j, theta, rho, Lambda, k1, k2, H2, excluded`.
pub fn surface_csv(mesh: &SurfaceMesh, field: &ShapeOperatorField) -> String {
    let cols = mesh.cols();
    csv(
        &["i", "j", "theta", "rho", "Lambda", "k1", "k2", "H2", "excluded"],
        (0..mesh.rows()).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| {
            let k = i * cols + j;
            vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(mesh.thetas[i]),
                fmt_f64(mesh.rhos[j]),
                fmt_f64(field.lambda[k]),
                fmt_f64(field.k1[k]),
                fmt_f64(field.k2[k]),
                fmt_f64(field.h2[k]),
                u8::from(field.excluded[k]).to_string(),
            ]
        }),
    )
}

/// ASCII OBJ: vertices, then quads and pole-fan triangles (1-based).
pub fn surface_obj(mesh: &SurfaceMesh, comment: &str) -> String {
    let (verts, faces) = mesh.topology();
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for v in &verts {
        let _ = writeln!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z));
    }
    for f in &faces {
        out.push('f');
        for &i in f {
            let _ = write!(out, " {}", i + 1);
        }
        out.push('\n');
    }
    out
}

/// Stroke style of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
}

/// A fixed-viewport SVG 1.1 document with `y` pointing up.
#[derive(Debug, Clone)]
pub struct Svg {
    title: String,
    body: String,
}

impl Svg {
    pub fn new(title: &str) -> Self {
        Self { title: title.to_string(), body: String::new() }
    }

    fn coords(p: V2) -> String {
        format!("{:.6},{:.6}", p.x, -p.y)
    }

    /// Polyline split into runs of equal style.
    pub fn styled_path(&mut self, points: &[V2], styles: &[Stroke], closed: bool, color: &str) {
        let n = points.len();
        if n < 2 {
            return;
        }
        let segments = if closed { n } else { n - 1 };
        let mut k = 0;
        while k < segments {
            let style = styles[k];
            let mut d = format!("M {}", Self::coords(points[k]));
            while k < segments && styles[k] == style {
                d.push_str(&format!(" L {}", Self::coords(points[(k + 1) % n])));
                k += 1;
            }
            let dash = match style {
                Stroke::Solid => "",
                Stroke::Dashed => " stroke-dasharray=\"0.03,0.02\"",
            };
            let _ = writeln!(
                self.body,
                "  <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.008\"{dash}/>"
            );
        }
    }

    pub fn marker(&mut self, p: V2, radius: f64, color: &str) {
        let _ = writeln!(
            self.body,
            "  <circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{radius}\" fill=\"{color}\"/>",
            p.x, -p.y
        );
    }

    pub fn finish(&self) -> String {
        let e = SVG_EXTENT;
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{px}\" height=\"{px}\" \
             viewBox=\"{x0} {x0} {w} {w}\">\n  <title>{title}</title>\n\
             <rect x=\"{x0}\" y=\"{x0}\" width=\"{w}\" height=\"{w}\" fill=\"white\"/>\n\
             <line x1=\"{x0}\" y1=\"0\" x2=\"{e}\" y2=\"0\" stroke=\"#ccc\" stroke-width=\"0.003\"/>\n\
             <line x1=\"0\" y1=\"{x0}\" x2=\"0\" y2=\"{e}\" stroke=\"#ccc\" stroke-width=\"0.003\"/>\n{body}</svg>\n",
            px = SVG_PIXELS,
            x0 = -e,
            w = 2.0 * e,
            title = self.title,
            body = self.body
        )
    }
}

/// The planar frontier, solid where `A > 0` and dashed where `A < 0`, with
/// singular images and crossings marked.
pub fn frontier_svg(samples: &[FrontierSample], singular: &SingularSet, crossings: &Intersections) -> String {
    let mut svg = Svg::new("Cahn-Hoffman frontier");
    let points: Vec<V2> = samples.iter().map(FrontierSample::xi2).collect();
    let styles: Vec<Stroke> = samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let next = &samples[(k + 1) % samples.len()];
            if s.det_sign + next.det_sign >= 0 {
                Stroke::Solid
            } else {
                Stroke::Dashed
            }
        })
        .collect();
    svg.styled_path(&points, &styles, true, "black");
    for p in &singular.images {
        svg.marker(V2::new(p[0], p[1]), 0.02, "crimson");
    }
    for c in &crossings.crossings {
        svg.marker(V2::new(c.point[0], c.point[1]), 0.015, if c.inner { "royalblue" } else { "seagreen" });
    }
    svg.finish()
}

/// A closed curve, solid where `Lambda` is negative for the outward normal
/// (the normal is `+nu`) and dashed where it is `-nu`.
pub fn curve_svg(curve: &ClosedCurve, title: &str) -> String {
    let mut svg = Svg::new(title);
    svg_add_curve(&mut svg, curve, "black");
    svg.finish()
}

pub fn svg_add_curve(svg: &mut Svg, curve: &ClosedCurve, color: &str) {
    let styles: Vec<Stroke> =
        curve.sigma.iter().map(|&s| if s >= 0 { Stroke::Solid } else { Stroke::Dashed }).collect();
    svg.styled_path(&curve.points, &styles, true, color);
    for j in &curve.junctions {
        svg.marker(curve.points[j.index], 0.012, "crimson");
    }
}

/// A closed polygon drawn solid.
pub fn polygon_svg(points: &[V2], title: &str, corners: &[V2]) -> String {
    let mut svg = Svg::new(title);
    svg.styled_path(points, &vec![Stroke::Solid; points.len()], true, "black");
    for &c in corners {
        svg.marker(c, 0.02, "crimson");
    }
    svg.finish()
}

/// Curves laid out on a grid, each scaled into its own cell.
pub fn contact_sheet(curves: &[(String, &ClosedCurve)], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = curves.len().div_ceil(columns).max(1);
    let cell = 2.0 * SVG_EXTENT;
    let (w, h) = (cell * columns as f64, cell * rows as f64);
    let mut body = String::new();
    for (k, (name, curve)) in curves.iter().enumerate() {
        let (cx, cy) = ((k % columns) as f64 * cell + SVG_EXTENT, (k / columns) as f64 * cell + SVG_EXTENT);
        let mut svg = Svg::new(name);
        svg_add_curve(&mut svg, curve, "black");
        let _ = writeln!(body, "  <g transform=\"translate({cx:.4},{cy:.4})\">");
        let _ = writeln!(
            body,
            "  <text x=\"{:.3}\" y=\"{:.3}\" font-size=\"0.14\" font-family=\"sans-serif\">{name}</text>",
            -SVG_EXTENT + 0.05,
            -SVG_EXTENT + 0.18
        );
        body.push_str(&svg.body);
        body.push_str("  </g>\n");
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{pw}\" height=\"{ph}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
        pw = 200.0 * columns as f64,
        ph = 200.0 * rows as f64,
    )
}
