//! The Cahn-Hoffman image of the sphere: sampling, singular set,
//! self-crossings (n = 1) and the Wulff shape.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrand::{Direction, Integrand, SphereOperatorA, Vec3};
use crate::par_map;

pub type V2 = Vector2<f64>;

/// `|det A|` below this counts as singular.
pub const TOL_SING: f64 = 1e-10;
/// Default grid for bracketing singular parameters.
pub const SINGULAR_GRID: usize = 4096;
/// Bisection stops once the bracket is shorter than this.
pub const ROOT_TOL: f64 = 1e-13;
/// Two frontier images closer than this are identified.
pub const IMAGE_TOL: f64 = 1e-9;
/// Distance tolerance for segment side tests.
pub const SEGMENT_TOL: f64 = 1e-12;
/// Minimum polyline size accepted by [`self_intersections`].
pub const MIN_CROSSING_SAMPLES: usize = 256;
/// Angular tolerance for merging collinear Wulff edges.
pub const COLLINEAR_TOL: f64 = 1e-8;
/// Segments whose parameters lie within this span (radians) are never tested
/// for crossing: near a cusp their chords meet without a crossing.
pub const CUSP_FOLD_SPAN: f64 = 1e-2;

/// Sampling parameter: an angle on S^1 or (latitude, rotation) on S^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Parameter {
    Angle(f64),
    Spherical { theta: f64, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierSample {
    pub parameter: Parameter,
    pub direction: Direction,
    pub xi: Vec3,
    pub a: SphereOperatorA,
    /// Sign of `det A`, zero when `|det A| <= TOL_SING`.
    pub det_sign: i8,
}

impl FrontierSample {
    pub fn at(integrand: &Integrand, direction: Direction, parameter: Parameter) -> Self {
        let a = integrand.operator_a(&direction).expect("direction built for this integrand");
        let det = a.determinant();
        Self {
            parameter,
            direction,
            xi: integrand.xi(&direction.vector()),
            a,
            det_sign: sign_with_tol(det, TOL_SING),
        }
    }

    pub fn theta(&self) -> f64 {
        match self.parameter {
            Parameter::Angle(t) => t,
            Parameter::Spherical { theta, .. } => theta,
        }
    }

    pub fn xi2(&self) -> V2 {
        V2::new(self.xi[0], self.xi[1])
    }
}

pub(crate) fn sign_with_tol(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Uniform parameter samples of the Cahn-Hoffman map.
///
/// For n = 1 the angles are `2 pi k / resolution`; for n = 2 the grid has
/// `resolution` latitude rows (cell centres) and `2 * resolution` rotation
/// columns.
pub fn sample_frontier(integrand: &Integrand, resolution: usize) -> Result<Vec<FrontierSample>> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!("resolution must be >= 16, got {resolution}")));
    }
    Ok(match integrand.dim() {
        1 => par_map(resolution, |k| {
            let t = TAU * k as f64 / resolution as f64;
            FrontierSample::at(integrand, Direction::from_angle(t), Parameter::Angle(t))
        }),
        _ => {
            let cols = 2 * resolution;
            par_map(resolution * cols, |idx| {
                let (i, j) = (idx / cols, idx % cols);
                let theta = -PI / 2.0 + PI * (i as f64 + 0.5) / resolution as f64;
                let rho = TAU * j as f64 / cols as f64;
                FrontierSample::at(integrand, Direction::from_spherical(theta, rho), Parameter::Spherical { theta, rho })
            })
        }
    })
}

/// Closed polyline `xi(2 pi k / resolution)` for n = 1.
pub fn frontier_polyline(integrand: &Integrand, resolution: usize) -> Vec<V2> {
    (0..resolution).map(|k| integrand.xi_at_angle(TAU * k as f64 / resolution as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSet {
    /// Sorted parameters in `[0, 2 pi)` where `det A` vanishes.
    pub roots: Vec<f64>,
    pub images: Vec<[f64; 2]>,
    /// `true` for zeros without a sign change.
    pub degenerate: Vec<bool>,
    /// Index pairs `(i, j)`, `i < j`, of roots with coincident images.
    pub identifications: Vec<(usize, usize)>,
}

impl SingularSet {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    /// Points where two singular images coincide.
    pub fn corner_points(&self) -> Vec<[f64; 2]> {
        self.identifications.iter().map(|&(i, _)| self.images[i]).collect()
    }
}

/// Singular parameters of the planar Cahn-Hoffman map on the default grid.
pub fn singular_set(integrand: &Integrand, tol_sing: f64) -> Result<SingularSet> {
    singular_set_with_grid(integrand, tol_sing, SINGULAR_GRID)
}

pub fn singular_set_with_grid(integrand: &Integrand, tol_sing: f64, grid: usize) -> Result<SingularSet> {
    if integrand.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
    }
    if grid < 16 {
        return Err(Error::InvalidArgument(format!("singular grid must be >= 16, got {grid}")));
    }
    let step = TAU / grid as f64;
    let a: Vec<f64> = par_map(grid, |k| integrand.a_at_angle(step * k as f64));
    let sign = |k: usize| sign_with_tol(a[k % grid], tol_sing);
    let Some(start) = (0..grid).find(|&k| sign(k) != 0) else {
        return Err(Error::Unsupported("det A vanishes on the whole sampling grid".into()));
    };

    let bisect = |mut lo: f64, mut hi: f64| {
        let s_lo = integrand.a_at_angle(lo).signum();
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            let v = integrand.a_at_angle(mid);
            if v == 0.0 {
                return mid;
            }
            if v.signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut found: Vec<(f64, bool)> = Vec::new();
    let mut k = start;
    let end = start + grid;
    while k < end {
        let s0 = sign(k);
        let mut next = k + 1;
        while next < end + 1 && sign(next) == 0 {
            next += 1;
        }
        let s1 = sign(next);
        if next > k + 1 {
            // A run of near-zero samples between k and next.
            if s0 != s1 {
                found.push((bisect(step * k as f64, step * next as f64), false));
            } else {
                let best = (k + 1..next)
                    .min_by(|&x, &y| a[x % grid].abs().total_cmp(&a[y % grid].abs()))
                    .expect("nonempty run");
                found.push((step * best as f64, true));
            }
        } else if s0 != s1 {
            found.push((bisect(step * k as f64, step * next as f64), false));
        }
        k = next;
    }

    let mut roots: Vec<(f64, bool)> = found.into_iter().map(|(t, d)| (t.rem_euclid(TAU), d)).collect();
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    let images: Vec<[f64; 2]> = roots
        .iter()
        .map(|&(t, _)| {
            let p = integrand.xi_at_angle(t);
            [p[0], p[1]]
        })
        .collect();
    let mut identifications = Vec::new();
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            if dist(images[i], images[j]) <= IMAGE_TOL {
                identifications.push((i, j));
            }
        }
    }
    Ok(SingularSet {
        roots: roots.iter().map(|r| r.0).collect(),
        degenerate: roots.iter().map(|r| r.1).collect(),
        images,
        identifications,
    })
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: [f64; 2],
    /// The two frontier parameters, ascending, in `[0, 2 pi)`.
    pub parameters: (f64, f64),
    /// One of the four crossings nearest the origin.
    pub inner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersections {
    pub crossings: Vec<Crossing>,
    /// Coincident images of two singular parameters.
    pub corners: Vec<Crossing>,
}

impl Intersections {
    pub fn inner(&self) -> impl Iterator<Item = &Crossing> {
        self.crossings.iter().filter(|c| c.inner)
    }

    /// All crossing parameters, sorted.
    pub fn crossing_parameters(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.crossings.iter().flat_map(|c| [c.parameters.0, c.parameters.1]).collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

#[inline]
fn cross(a: V2, b: V2) -> f64 {
    a.x * b.y - a.y * b.x
}

enum SegHit {
    Miss,
    At(f64, f64),
    Overlap,
}

fn segment_hit(p0: V2, p1: V2, q0: V2, q1: V2, tol: f64) -> SegHit {
    let r = p1 - p0;
    let s = q1 - q0;
    let (rn, sn) = (r.norm(), s.norm());
    if rn == 0.0 || sn == 0.0 {
        return SegHit::Miss;
    }
    // Signed distances to the other segment's line, so `tol` is a length.
    let d1 = cross(r, q0 - p0) / rn;
    let d2 = cross(r, q1 - p0) / rn;
    if d1.abs() <= tol && d2.abs() <= tol {
        let rr = rn * rn;
        let u0 = (q0 - p0).dot(&r) / rr;
        let u1 = (q1 - p0).dot(&r) / rr;
        let (lo, hi) = (u0.min(u1), u0.max(u1));
        // Overlaps shorter than the image tolerance are touching points.
        return if (hi.min(1.0) - lo.max(0.0)) * rr.sqrt() > IMAGE_TOL { SegHit::Overlap } else { SegHit::Miss };
    }
    if (d1 > tol && d2 > tol) || (d1 < -tol && d2 < -tol) {
        return SegHit::Miss;
    }
    let d3 = cross(s, p0 - q0) / sn;
    let d4 = cross(s, p1 - q0) / sn;
    if (d3 > tol && d4 > tol) || (d3 < -tol && d4 < -tol) {
        return SegHit::Miss;
    }
    let u = if d3 == d4 { 0.5 } else { (d3 / (d3 - d4)).clamp(0.0, 1.0) };
    let v = if d1 == d2 { 0.5 } else { (d1 / (d1 - d2)).clamp(0.0, 1.0) };
    SegHit::At(u, v)
}

fn segment_distance(p0: V2, p1: V2, q0: V2, q1: V2) -> f64 {
    if let SegHit::At(..) = segment_hit(p0, p1, q0, q1, 0.0) {
        return 0.0;
    }
    point_segment_distance(p0, q0, q1)
        .min(point_segment_distance(p1, q0, q1))
        .min(point_segment_distance(q0, p0, p1))
        .min(point_segment_distance(q1, p0, p1))
}

pub(crate) fn point_segment_distance(p: V2, a: V2, b: V2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) };
    (a + ab * t - p).norm()
}

/// Candidate segment pairs `(i, j)` of a closed polyline whose chords meet,
/// found by a sweep over x. Segments fewer than `window` indices apart are
/// skipped (at least the adjacent ones).
fn crossing_candidates(points: &[V2], window: usize) -> Result<Vec<(usize, usize, f64, f64)>> {
    let n = points.len();
    let seg = |i: usize| (points[i], points[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let xmin = |i: usize| {
        let (a, b) = seg(i);
        a.x.min(b.x)
    };
    let xmax = |i: usize| {
        let (a, b) = seg(i);
        a.x.max(b.x)
    };
    order.sort_by(|&a, &b| xmin(a).total_cmp(&xmin(b)).then(a.cmp(&b)));
    let mut hits = Vec::new();
    for (oi, &i) in order.iter().enumerate() {
        let (p0, p1) = seg(i);
        let (ylo, yhi) = (p0.y.min(p1.y), p0.y.max(p1.y));
        let right = xmax(i);
        for &j in &order[oi + 1..] {
            if xmin(j) > right + SEGMENT_TOL {
                break;
            }
            let gap = i.abs_diff(j);
            if gap.min(n - gap) <= window.max(1) {
                continue;
            }
            let (q0, q1) = seg(j);
            if q0.y.max(q1.y) < ylo - SEGMENT_TOL || q0.y.min(q1.y) > yhi + SEGMENT_TOL {
                continue;
            }
            match segment_hit(p0, p1, q0, q1, SEGMENT_TOL) {
                SegHit::Miss => {}
                SegHit::At(u, v) => hits.push((i.min(j), i.max(j), if i < j { u } else { v }, if i < j { v } else { u })),
                SegHit::Overlap => return Err(Error::OverlappingSegments { first: i.min(j), second: i.max(j) }),
            }
        }
    }
    hits.sort_by_key(|h| (h.0, h.1));
    Ok(hits)
}

/// Shrinks two parameter intervals whose frontier chords meet until both
/// are shorter than `tol`, returning the chord intersection, the
/// interpolated parameters and the final chord distance.
fn refine_crossing(integrand: &Integrand, mut a: (f64, f64), mut b: (f64, f64), tol: f64) -> (V2, f64, f64, f64) {
    let xi = |t: f64| integrand.xi_at_angle(t);
    for _ in 0..200 {
        if (a.1 - a.0).abs() <= tol && (b.1 - b.0).abs() <= tol {
            break;
        }
        let am = 0.5 * (a.0 + a.1);
        let bm = 0.5 * (b.0 + b.1);
        let sa = [(a.0, am), (am, a.1)];
        let sb = [(b.0, bm), (bm, b.1)];
        let mut best = (f64::INFINITY, a, b);
        for &x in &sa {
            for &y in &sb {
                let d = segment_distance(xi(x.0), xi(x.1), xi(y.0), xi(y.1));
                if d < best.0 {
                    best = (d, x, y);
                }
            }
        }
        a = best.1;
        b = best.2;
    }
    let (p0, p1, q0, q1) = (xi(a.0), xi(a.1), xi(b.0), xi(b.1));
    let (u, v) = match segment_hit(p0, p1, q0, q1, 0.0) {
        SegHit::At(u, v) => (u, v),
        _ => (0.5, 0.5),
    };
    let point = (p0 + (p1 - p0) * u + q0 + (q1 - q0) * v) * 0.5;
    (point, a.0 + (a.1 - a.0) * u, b.0 + (b.1 - b.0) * v, segment_distance(p0, p1, q0, q1))
}

fn circular_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}

/// All transverse self-crossings of the closed frontier polyline.
///
/// Chord crossings found by a sweep are refined on the two arcs by nested
/// subdivision. Crossings that coincide with identified singular images are
/// reported separately as corners.
pub fn self_intersections(integrand: &Integrand, samples: &[FrontierSample]) -> Result<Intersections> {
    if integrand.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
    }
    if samples.len() < MIN_CROSSING_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_CROSSING_SAMPLES} frontier samples, got {}",
            samples.len()
        )));
    }
    let points: Vec<V2> = samples.iter().map(|s| s.xi2()).collect();
    let params: Vec<f64> = samples.iter().map(|s| s.theta()).collect();
    let n = points.len();
    let span = |i: usize| {
        let a = params[i];
        let mut b = params[(i + 1) % n];
        while b <= a {
            b += TAU;
        }
        (a, b)
    };
    let window = (CUSP_FOLD_SPAN * n as f64 / TAU).ceil() as usize;
    let candidates = crossing_candidates(&points, window)?;
    let refined: Vec<(V2, f64, f64, f64)> = par_map(candidates.len(), |k| {
        let (i, j, _, _) = candidates[k];
        let (p, s, t, d) = refine_crossing(integrand, span(i), span(j), 1e-12);
        let (s, t) = (s.rem_euclid(TAU), t.rem_euclid(TAU));
        (p, s.min(t), s.max(t), d)
    });

    let singular = singular_set(integrand, TOL_SING)?;
    let near_root = |t: f64| singular.roots.iter().any(|&r| circular_gap(r, t) < 1e-6);
    let corner_points = singular.corner_points();

    let mut crossings: Vec<Crossing> = Vec::new();
    for (p, s, t, d) in refined {
        // Chords that met only at sampling scale do not survive refinement.
        if d > IMAGE_TOL {
            continue;
        }
        let at_corner = corner_points.iter().any(|c| dist(*c, [p.x, p.y]) <= IMAGE_TOL)
            || (near_root(s) && near_root(t));
        if at_corner {
            continue;
        }
        let dup = crossings
            .iter()
            .any(|c| circular_gap(c.parameters.0, s) < 1e-7 && circular_gap(c.parameters.1, t) < 1e-7);
        if !dup {
            crossings.push(Crossing { point: [p.x, p.y], parameters: (s, t), inner: false });
        }
    }
    crossings.sort_by(|a, b| a.parameters.0.total_cmp(&b.parameters.0));
    let mut by_radius: Vec<usize> = (0..crossings.len()).collect();
    by_radius.sort_by(|&a, &b| {
        let ra = crossings[a].point[0].hypot(crossings[a].point[1]);
        let rb = crossings[b].point[0].hypot(crossings[b].point[1]);
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    for &k in by_radius.iter().take(4) {
        crossings[k].inner = true;
    }

    let corners = singular
        .identifications
        .iter()
        .map(|&(i, j)| Crossing { point: singular.images[i], parameters: (singular.roots[i], singular.roots[j]), inner: false })
        .collect();
    Ok(Intersections { crossings, corners })
}

/// A parameter interval traversed from `from` to `to` (either direction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub from: f64,
    pub to: f64,
}

impl Interval {
    pub fn new(from: f64, to: f64) -> Self {
        Self { from, to }
    }

    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }

    pub fn reversed(&self) -> Self {
        Self { from: self.to, to: self.from }
    }

    pub fn direction(&self) -> f64 {
        if self.to >= self.from {
            1.0
        } else {
            -1.0
        }
    }

    pub fn at(&self, s: f64) -> f64 {
        self.from + (self.to - self.from) * s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WulffShape {
    /// Sphere dimension of the integrand.
    pub n: usize,
    /// Boundary polygon, counterclockwise (for n = 2: the meridian profile
    /// polygon in the (horizontal, vertical) plane).
    pub vertices: Vec<[f64; 2]>,
    /// Indices of sharp vertices.
    pub corners: Vec<usize>,
    /// For each corner, the normal angles of its two adjacent edges.
    pub corner_parameters: Vec<(f64, f64)>,
    /// Whether the shape is the rotation of `vertices` about the vertical axis.
    pub rotational: bool,
    /// Normal angles of the supporting half-planes, ascending.
    pub normal_angles: Vec<f64>,
}

impl WulffShape {
    pub fn points(&self) -> Vec<V2> {
        self.vertices.iter().map(|v| V2::new(v[0], v[1])).collect()
    }

    pub fn corner_points(&self) -> Vec<[f64; 2]> {
        self.corners.iter().map(|&i| self.vertices[i]).collect()
    }

    /// Largest `<x, nu> - gamma(nu)` over the construction normals, for
    /// each vertex `x`.
    pub fn support_excess(&self, integrand: &Integrand) -> Vec<f64> {
        let profile = if self.rotational { integrand.profile().unwrap_or(integrand) } else { integrand };
        let normals: Vec<(V2, f64)> = self
            .normal_angles
            .iter()
            .map(|&t| (V2::new(t.cos(), t.sin()), profile.gamma(&Direction::from_angle(t).vector())))
            .collect();
        par_map(self.vertices.len(), |k| {
            let x = V2::new(self.vertices[k][0], self.vertices[k][1]);
            normals.iter().map(|(nu, h)| nu.dot(&x) - h).fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

fn clip(poly: &[V2], nu: V2, h: f64) -> Vec<V2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for k in 0..m {
        let p = poly[k];
        let q = poly[(k + 1) % m];
        let fp = nu.dot(&p) - h;
        let fq = nu.dot(&q) - h;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            out.push(p + (q - p) * (fp / (fp - fq)));
        }
    }
    out
}

/// Intersects the half-planes `<x, nu(phi)> <= gamma(phi)` for the given
/// sorted angles, returning the polygon and, per vertex, the angle of the
/// constraint owning its outgoing edge.
fn intersect_half_planes(integrand: &Integrand, angles: &[f64]) -> Result<(Vec<V2>, Vec<f64>)> {
    let bound = angles
        .iter()
        .map(|&t| integrand.gamma(&Direction::from_angle(t).vector()))
        .fold(0.0, f64::max)
        * 2.0
        + 1.0;
    let mut poly = vec![V2::new(-bound, -bound), V2::new(bound, -bound), V2::new(bound, bound), V2::new(-bound, bound)];
    for &t in angles {
        let nu = V2::new(t.cos(), t.sin());
        poly = clip(&poly, nu, integrand.gamma(&Direction::from_angle(t).vector()));
        if poly.len() < 3 {
            return Err(Error::Internal("half-plane intersection has empty interior".into()));
        }
    }
    // Deduplicate coincident vertices.
    let mut pts: Vec<V2> = Vec::with_capacity(poly.len());
    for p in poly {
        if pts.last().is_none_or(|q: &V2| (p - q).norm() > 1e-14) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= 1e-14 {
        pts.pop();
    }
    let owners = (0..pts.len())
        .map(|k| {
            let e = pts[(k + 1) % pts.len()] - pts[k];
            (-e.x).atan2(e.y).rem_euclid(TAU)
        })
        .collect();
    Ok((pts, owners))
}

fn turning(prev: V2, cur: V2, next: V2) -> f64 {
    let a = cur - prev;
    let b = next - cur;
    cross(a, b).atan2(a.dot(&b))
}

/// Wulff shape as an intersection of `resolution` supporting half-planes.
///
/// A coarse uniform set of normals locates the directions that actually
/// support the shape; the rest of the budget is spent densely around those
/// directions, so smooth boundary pieces are resolved far better than with
/// uniform spacing at the same constraint count.
pub fn wulff_halfspace(integrand: &Integrand, resolution: usize) -> Result<WulffShape> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!("resolution must be >= 64, got {resolution}")));
    }
    if integrand.dim() == 2 {
        let profile = integrand
            .profile()
            .ok_or_else(|| Error::Unsupported("Wulff shape for n = 2 needs a rotational integrand".into()))?;
        let mut shape = wulff_halfspace(profile, resolution)?;
        shape.n = 2;
        shape.rotational = true;
        return Ok(shape);
    }
    let probe_count = (resolution / 8).max(64).min(resolution);
    let probe: Vec<f64> = (0..probe_count).map(|k| TAU * k as f64 / probe_count as f64).collect();
    let (_, owners) = intersect_half_planes(integrand, &probe)?;

    let spacing = TAU / probe_count as f64;
    let mut windows: Vec<(f64, f64)> = owners.iter().map(|&t| (t - 1.5 * spacing, t + 1.5 * spacing)).collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }
    let total: f64 = merged.iter().map(|w| w.1 - w.0).sum();
    let dense_count = resolution - probe_count;
    let mut angles = probe;
    if dense_count > 0 {
        let total = total.min(TAU);
        let step = total / dense_count as f64;
        let mut k = 0;
        let mut offset = 0.0;
        for w in &merged {
            let len = w.1 - w.0;
            while k < dense_count && (k as f64 + 0.5) * step < offset + len {
                angles.push((w.0 + (k as f64 + 0.5) * step - offset).rem_euclid(TAU));
                k += 1;
            }
            offset += len;
        }
        while k < dense_count {
            angles.push((merged[0].0 + (k as f64 + 0.5) * step).rem_euclid(TAU));
            k += 1;
        }
    }
    angles.sort_by(f64::total_cmp);
    let (pts, owners) = intersect_half_planes(integrand, &angles)?;

    // Merge collinear runs.
    let m = pts.len();
    let keep: Vec<usize> = (0..m)
        .filter(|&k| turning(pts[(k + m - 1) % m], pts[k], pts[(k + 1) % m]).abs() > COLLINEAR_TOL)
        .collect();
    let vertices: Vec<V2> = keep.iter().map(|&k| pts[k]).collect();
    let edge_owner: Vec<f64> = keep.iter().map(|&k| owners[k]).collect();
    let corner_threshold = (2.0 * spacing).max(0.05);
    let mv = vertices.len();
    let mut corners = Vec::new();
    let mut corner_parameters = Vec::new();
    for k in 0..mv {
        let turn = turning(vertices[(k + mv - 1) % mv], vertices[k], vertices[(k + 1) % mv]);
        if turn > corner_threshold {
            corners.push(k);
            corner_parameters.push((edge_owner[(k + mv - 1) % mv], edge_owner[k]));
        }
    }
    Ok(WulffShape {
        n: 1,
        vertices: vertices.iter().map(|p| [p.x, p.y]).collect(),
        corners,
        corner_parameters,
        rotational: false,
        normal_angles: angles,
    })
}

/// Wulff boundary as a union of frontier arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WulffArcs {
    /// Arcs in increasing parameter order, each with `from < to`.
    pub arcs: Vec<Interval>,
}

impl WulffArcs {
    /// Closed polyline through the arcs, `samples_per_arc` points each.
    pub fn polyline(&self, integrand: &Integrand, samples_per_arc: usize) -> Vec<V2> {
        let mut out = Vec::with_capacity(self.arcs.len() * samples_per_arc);
        for arc in &self.arcs {
            for k in 0..samples_per_arc {
                out.push(integrand.xi_at_angle(arc.at(k as f64 / samples_per_arc as f64)));
            }
        }
        out
    }
}

/// Maximum of `<x, nu> - gamma(nu)` over `grid` uniform directions.
pub fn support_excess(integrand: &Integrand, x: V2, grid: usize) -> f64 {
    (0..grid)
        .map(|k| {
            let t = TAU * k as f64 / grid as f64;
            x.x * t.cos() + x.y * t.sin() - integrand.gamma(&Direction::from_angle(t).vector())
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Picks the frontier pieces (between consecutive singular and crossing
/// parameters) that lie on the Wulff boundary and merges them into arcs.
pub fn wulff_arcs(integrand: &Integrand, singular: &SingularSet, crossings: &Intersections) -> Result<WulffArcs> {
    if integrand.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
    }
    let crossing_params = crossings.crossing_parameters();
    if singular.is_empty() && crossing_params.is_empty() {
        return Ok(WulffArcs { arcs: vec![Interval::new(0.0, TAU)] });
    }
    let mut cuts: Vec<f64> = singular.roots.iter().copied().chain(crossing_params.iter().copied()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let m = cuts.len();
    let pieces: Vec<Interval> = (0..m)
        .map(|k| {
            let a = cuts[k];
            let b = if k + 1 < m { cuts[k + 1] } else { cuts[0] + TAU };
            Interval::new(a, b)
        })
        .collect();
    let on_boundary: Vec<bool> = par_map(pieces.len(), |k| {
        let mid = pieces[k].at(0.5);
        support_excess(integrand, integrand.xi_at_angle(mid), 4096) <= 1e-7
    });
    // Rotate so that the first kept piece starts a run.
    let Some(first) = (0..m).find(|&k| on_boundary[k] && !on_boundary[(k + m - 1) % m]) else {
        return Err(Error::ArcEndpointMismatch("no frontier piece lies on the Wulff boundary".into()));
    };
    let mut arcs: Vec<Interval> = Vec::new();
    for off in 0..m {
        let k = (first + off) % m;
        if !on_boundary[k] {
            continue;
        }
        let prev_kept = off > 0 && on_boundary[(k + m - 1) % m];
        let mut piece = pieces[k];
        if let Some(last) = arcs.last_mut().filter(|_| prev_kept) {
            while piece.from < last.to - 1e-9 {
                piece = Interval::new(piece.from + TAU, piece.to + TAU);
            }
            last.to = piece.to;
        } else {
            arcs.push(piece);
        }
    }
    let is_crossing = |t: f64| crossing_params.iter().any(|&c| circular_gap(c, t) <= 1e-9);
    for arc in &arcs {
        if !is_crossing(arc.from) || !is_crossing(arc.to) {
            return Err(Error::ArcEndpointMismatch(format!(
                "arc [{}, {}] does not end at self-crossings",
                arc.from, arc.to
            )));
        }
    }
    let mut arcs: Vec<Interval> = arcs
        .into_iter()
        .map(|a| {
            let shift = a.from.rem_euclid(TAU) - a.from;
            Interval::new(a.from + shift, a.to + shift)
        })
        .collect();
    arcs.sort_by(|a, b| a.from.total_cmp(&b.from));
    Ok(WulffArcs { arcs })
}

/// Symmetric Hausdorff distance between two closed polylines, measured from
/// vertices and edge midpoints of each to the other polyline.
pub fn hausdorff_distance(a: &[V2], b: &[V2]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(from: &[V2], to: &[V2]) -> f64 {
    let n = from.len();
    let probes: Vec<V2> = (0..n).flat_map(|k| [from[k], (from[k] + from[(k + 1) % n]) * 0.5]).collect();
    par_map(probes.len(), |k| polyline_distance(probes[k], to)).into_iter().fold(0.0, f64::max)
}

pub(crate) fn polyline_distance(p: V2, poly: &[V2]) -> f64 {
    let m = poly.len();
    (0..m).map(|k| point_segment_distance(p, poly[k], poly[(k + 1) % m])).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn theta1() -> f64 {
        ((3.0 + 5f64.sqrt()) / 6.0).sqrt().acos()
    }

    fn rho1() -> f64 {
        ((1.0 + 5f64.sqrt()) / 6.0).sqrt().acos()
    }

    fn alpha() -> f64 {
        ((2.0 + 2.0 * 5f64.sqrt()) / 3.0).sqrt() * (5f64.sqrt() - 2.0)
    }

    #[test]
    fn samples_match_closed_form() {
        let g = Integrand::hexic2d();
        for s in sample_frontier(&g, 512).unwrap() {
            let t = s.theta();
            let (c, si) = (t.cos(), t.sin());
            let x = c * (c.powi(6) + 6.0 * c.powi(4) * si * si - 5.0 * si.powi(6));
            let y = si * (-5.0 * c.powi(6) + 6.0 * c * c * si.powi(4) + si.powi(6));
            assert!((s.xi[0] - x).abs() < 1e-12 && (s.xi[1] - y).abs() < 1e-12);
            assert!((s.xi.dot(&s.direction.vector()) - g.gamma(&s.direction.vector())).abs() < 1e-8);
        }
        assert!(sample_frontier(&g, 8).is_err());
    }

    #[test]
    fn hexic_singular_set() {
        let s = singular_set(&Integrand::hexic2d(), TOL_SING).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.degenerate.iter().all(|d| !d));
        let t1 = theta1();
        let expect = [
            t1,
            PI / 2.0 - t1,
            PI / 2.0 + t1,
            PI - t1,
            PI + t1,
            1.5 * PI - t1,
            1.5 * PI + t1,
            TAU - t1,
        ];
        for (r, e) in s.roots.iter().zip(expect) {
            assert_abs_diff_eq!(*r, e, epsilon = 1e-12);
        }
        assert_eq!(s.identifications.len(), 4);
        let c = 2.0 / 3f64.sqrt();
        let corner = s.identifications.iter().find(|&&(i, j)| i == 2 && j == 7).expect("theta3 ~ theta8");
        assert!(dist(s.images[corner.0], [c, c]) < 1e-9);
    }

    #[test]
    fn tangential_zero_is_reported_as_degenerate() {
        use crate::poly::{Monomial, Polynomial};
        // gamma = 1 + cos(2 theta) / 3, so A = 1 - cos(2 theta) touches zero at 0 and pi.
        let p = Polynomial::new([Monomial::new(4.0 / 3.0, [2, 0, 0]), Monomial::new(2.0 / 3.0, [0, 2, 0])]);
        let s = singular_set(&Integrand::custom(1, p).unwrap(), TOL_SING).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.degenerate.iter().all(|&d| d));
        assert_abs_diff_eq!(s.roots[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.roots[1], PI, epsilon = 1e-12);
        assert!(singular_set(&Integrand::isotropic(1), TOL_SING).unwrap().is_empty());
    }

    #[test]
    fn hexic_crossings() {
        let g = Integrand::hexic2d();
        // Fine grids put nearly collinear chords on both sides of each cusp.
        for res in [4096, 6000, 8192, 16384, 65536] {
            let samples = sample_frontier(&g, res).unwrap();
            let x = self_intersections(&g, &samples).unwrap();
            assert_eq!(x.crossings.len(), 4, "res {res}");
            assert_eq!(x.inner().count(), 4);
            assert_eq!(x.corners.len(), 4);
            let a = alpha();
            for c in &x.crossings {
                let r = c.point[0].hypot(c.point[1]);
                assert_abs_diff_eq!(r, a, epsilon = 1e-10);
            }
            let first = x.crossings[0];
            assert_abs_diff_eq!(first.parameters.0, rho1(), epsilon = 1e-10);
            assert_abs_diff_eq!(first.parameters.1, 1.5 * PI + PI / 2.0 - rho1(), epsilon = 1e-10);
        }
    }

    #[test]
    fn circle_has_no_crossings() {
        let g = Integrand::isotropic(1);
        let x = self_intersections(&g, &sample_frontier(&g, 512).unwrap()).unwrap();
        assert!(x.crossings.is_empty() && x.corners.is_empty());
    }

    #[test]
    fn overlapping_polyline_is_rejected() {
        let pts = vec![V2::new(0.0, 0.0), V2::new(1.0, 0.0), V2::new(2.0, 0.0), V2::new(0.5, 0.0), V2::new(1.5, 0.0)];
        assert!(matches!(crossing_candidates(&pts, 1), Err(Error::OverlappingSegments { .. })));
    }

    #[test]
    fn hexic_wulff_shape() {
        let g = Integrand::hexic2d();
        let w = wulff_halfspace(&g, 4096).unwrap();
        let corners = w.corner_points();
        assert_eq!(corners.len(), 4);
        let a = alpha();
        for (c, e) in corners.iter().zip([[a, 0.0], [0.0, a], [-a, 0.0], [0.0, -a]]) {
            assert!(dist(*c, e) < 1e-6, "corner {c:?}");
        }
        for excess in w.support_excess(&g) {
            assert!((-1e-6..=1e-9).contains(&excess), "excess {excess}");
        }
        let singular = singular_set(&g, TOL_SING).unwrap();
        let x = self_intersections(&g, &sample_frontier(&g, 4096).unwrap()).unwrap();
        let arcs = wulff_arcs(&g, &singular, &x).unwrap();
        assert_eq!(arcs.arcs.len(), 4);
        let r1 = rho1();
        for (k, arc) in arcs.arcs.iter().enumerate() {
            let off = k as f64 * PI / 2.0;
            assert_abs_diff_eq!(arc.from, r1 + off, epsilon = 1e-9);
            assert_abs_diff_eq!(arc.to, PI / 2.0 - r1 + off, epsilon = 1e-9);
        }
        let d = hausdorff_distance(&w.points(), &arcs.polyline(&g, 4096));
        assert!(d <= 1e-6, "hausdorff {d}");
    }

    #[test]
    fn isotropic_wulff_is_circle() {
        let g = Integrand::isotropic(1);
        let w = wulff_halfspace(&g, 256).unwrap();
        assert!(w.corners.is_empty());
        let max_r = w.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
        let h = TAU / 256.0;
        assert!(max_r - 1.0 < h * h, "{max_r}");
        let arcs = wulff_arcs(&g, &singular_set(&g, TOL_SING).unwrap(), &Intersections { crossings: vec![], corners: vec![] })
            .unwrap();
        assert_eq!(arcs.arcs, vec![Interval::new(0.0, TAU)]);
    }

    #[test]
    fn three_dimensional_wulff_uses_profile() {
        let w = wulff_halfspace(&Integrand::hexic3d(), 512).unwrap();
        assert!(w.rotational);
        assert_eq!(w.corners.len(), 4);
    }
}
