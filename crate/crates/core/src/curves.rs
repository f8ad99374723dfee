//! Closed piecewise-smooth plane curves assembled from frontier arcs.
//!
//! A curve is sampled arc by arc, normalised to counterclockwise order and
//! given the outward normal. On a frontier arc traversed in direction `d`
//! the outward normal is `sign(A) * d * nu`, and the Cahn-Hoffman field is
//! `xi(sign(A) * d * nu)`. Anisotropic curvature is then the discrete
//! `-<d xi~ / ds, t>`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{
    point_segment_distance, sample_frontier, self_intersections, sign_with_tol, singular_set, Interval, SingularSet,
    TOL_SING, V2,
};
use crate::integrand::{Direction, Integrand, Kind, Vec3};
use crate::par_map;

/// Default CAMC tolerance on curves.
pub const TOL_CAMC: f64 = 5e-3;
/// Samples excluded on each side of junctions and singular parameters.
pub const EXCLUSION_WINDOW: usize = 3;
/// Minimum usable samples per piece for a verdict.
pub const MIN_PIECE_SAMPLES: usize = 16;
/// Minimum samples per arc when stitching.
pub const MIN_ARC_SAMPLES: usize = 64;
/// Allowed gap between consecutive arc endpoint images.
pub const CLOSURE_TOL: f64 = 1e-9;
/// Allowed jump of the Cahn-Hoffman field across a junction.
pub const JUNCTION_TOL: f64 = 1e-9;
/// Point-set tolerance for congruence matching.
pub const CONGRUENCE_TOL: f64 = 1e-6;
/// Default cap on partial paths during cycle enumeration.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;
/// Resolution used to locate frontier landmarks.
const LANDMARK_RESOLUTION: usize = 4096;
/// Deviations at or below this count as exact.
const ROUNDING_FLOOR: f64 = 1e-10;

/// Ordered frontier intervals forming a closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub intervals: Vec<Interval>,
}

/// On-disk arc specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpecFile {
    pub arcs: Vec<Interval>,
    #[serde(default = "radians")]
    pub units: String,
}

fn radians() -> String {
    "radians".into()
}

impl ArcSpec {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    pub fn from_file(file: &ArcSpecFile) -> Result<Self> {
        let scale = match file.units.as_str() {
            "radians" => 1.0,
            "pi" => PI,
            other => return Err(Error::InvalidArgument(format!("unknown units '{other}'"))),
        };
        if file.arcs.is_empty() {
            return Err(Error::InvalidArgument("arc list is empty".into()));
        }
        Ok(Self::new(file.arcs.iter().map(|a| Interval::new(a.from * scale, a.to * scale)).collect()))
    }

    pub fn to_file(&self) -> ArcSpecFile {
        ArcSpecFile { arcs: self.intervals.clone(), units: radians() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ArcSpecFile = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.intervals.iter().rev().map(Interval::reversed).collect())
    }

    /// Orders and orients an unordered set of intervals `[a, b]` so that
    /// consecutive endpoint images coincide.
    pub fn chain(integrand: &Integrand, intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("no intervals to chain".into()));
        }
        let image = |t: f64| integrand.xi_at_angle(t);
        let tol = 1e-7;
        let mut used = vec![false; intervals.len()];
        let mut out = vec![Interval::new(intervals[0].0, intervals[0].1)];
        used[0] = true;
        for _ in 1..intervals.len() {
            let end = image(out.last().expect("nonempty").to);
            let next = (0..intervals.len()).filter(|&k| !used[k]).find_map(|k| {
                let (a, b) = intervals[k];
                if (image(a) - end).norm() <= tol {
                    Some((k, Interval::new(a, b)))
                } else if (image(b) - end).norm() <= tol {
                    Some((k, Interval::new(b, a)))
                } else {
                    None
                }
            });
            let Some((k, iv)) = next else {
                let last = out.len() - 1;
                return Err(Error::ArcsNotClosed { arc: last, gap: [f64::NAN, f64::NAN] });
            };
            used[k] = true;
            out.push(iv);
        }
        Ok(Self::new(out))
    }

    /// Largest gap between consecutive endpoint images (cyclic), with the
    /// index of the arc after which it occurs.
    pub fn closure_gap(&self, integrand: &Integrand) -> (usize, V2) {
        let m = self.intervals.len();
        (0..m)
            .map(|i| {
                let gap = integrand.xi_at_angle(self.intervals[(i + 1) % m].from)
                    - integrand.xi_at_angle(self.intervals[i].to);
                (i, gap)
            })
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("nonempty")
    }
}

/// Where two arcs meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Junction {
    /// Sample index of the first point of the outgoing arc.
    pub index: usize,
    pub parameter_in: f64,
    pub parameter_out: f64,
    /// Outward normal at the end of the incoming arc.
    pub normal_in: V2,
    pub xi_in: V2,
    pub xi_out: V2,
}

impl Junction {
    pub fn gap(&self) -> f64 {
        (self.xi_in - self.xi_out).norm()
    }
}

/// A sampled closed plane curve with outward normals and Cahn-Hoffman field.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    pub points: Vec<V2>,
    /// Outward unit normal per point.
    pub normals: Vec<V2>,
    /// `xi_gamma(normal)` per point.
    pub xi_tilde: Vec<V2>,
    /// Frontier parameter per point, when built from arcs.
    pub parameters: Option<Vec<f64>>,
    /// `+1` where the outward normal is `+nu`, `-1` where it is `-nu`.
    pub sigma: Vec<i8>,
    /// Arc index per point.
    pub arc: Vec<usize>,
    pub junctions: Vec<Junction>,
    /// Sample indices at singular parameters inside arcs.
    pub singular: Vec<usize>,
    pub signed_area: f64,
    pub embedded: bool,
    /// The arcs as sampled (after orientation normalisation).
    pub arcs: Option<ArcSpec>,
}

pub(crate) fn shoelace(points: &[V2]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|k| cross(points[k], points[(k + 1) % n])).sum::<f64>()
}

#[inline]
fn cross(a: V2, b: V2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn xi2(integrand: &Integrand, nu: V2) -> V2 {
    let x = integrand.xi(&Vec3::new(nu.x, nu.y, 0.0));
    V2::new(x[0], x[1])
}

fn unit(t: f64) -> V2 {
    V2::new(t.cos(), t.sin())
}

/// Whether a closed polyline has no transverse self-crossings.
pub fn is_embedded(points: &[V2]) -> bool {
    let n = points.len();
    if n < 4 {
        return true;
    }
    let cell = {
        let total: f64 = (0..n).map(|k| (points[(k + 1) % n] - points[k]).norm()).sum();
        (total / n as f64 * 4.0).max(1e-12)
    };
    let index = SegmentIndex::new(points, cell);
    for i in 0..n {
        let (p0, p1) = (points[i], points[(i + 1) % n]);
        for j in index.candidates_for_segment(p0, p1) {
            if j <= i {
                continue;
            }
            let gap = j - i;
            if gap <= 1 || gap == n - 1 {
                continue;
            }
            let (q0, q1) = (points[j], points[(j + 1) % n]);
            let d1 = cross(p1 - p0, q0 - p0);
            let d2 = cross(p1 - p0, q1 - p0);
            let d3 = cross(q1 - q0, p0 - q0);
            let d4 = cross(q1 - q0, p1 - q0);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return false;
            }
        }
    }
    true
}

/// Samples a closed curve from frontier arcs, normalised counterclockwise.
pub fn stitch(integrand: &Integrand, arcs: &ArcSpec, resolution: usize) -> Result<ClosedCurve> {
    let singular = singular_set(integrand, TOL_SING)?;
    stitch_with(integrand, arcs, resolution, &singular.roots, true)
}

/// As [`stitch`], but keeps the given traversal order; the normal is then
/// the one making (normal, tangent) positively oriented.
pub fn stitch_oriented(integrand: &Integrand, arcs: &ArcSpec, resolution: usize) -> Result<ClosedCurve> {
    let singular = singular_set(integrand, TOL_SING)?;
    stitch_with(integrand, arcs, resolution, &singular.roots, false)
}

pub(crate) fn stitch_with(
    integrand: &Integrand,
    arcs: &ArcSpec,
    resolution: usize,
    roots: &[f64],
    normalize: bool,
) -> Result<ClosedCurve> {
    if integrand.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
    }
    if resolution < MIN_ARC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "resolution per arc must be >= {MIN_ARC_SAMPLES}, got {resolution}"
        )));
    }
    if arcs.intervals.is_empty() {
        return Err(Error::InvalidArgument("arc list is empty".into()));
    }
    if let Some(k) = arcs.intervals.iter().position(|iv| !(iv.length() > 0.0) || !iv.length().is_finite()) {
        return Err(Error::InvalidArgument(format!("arc {k} has zero or non-finite length")));
    }
    let (arc, gap) = arcs.closure_gap(integrand);
    if gap.norm() > CLOSURE_TOL {
        return Err(Error::ArcsNotClosed { arc, gap: [gap.x, gap.y] });
    }

    let m = arcs.intervals.len();
    let total = m * resolution;
    let mut params = Vec::with_capacity(total);
    let mut arc_of = Vec::with_capacity(total);
    for (i, iv) in arcs.intervals.iter().enumerate() {
        for k in 0..resolution {
            params.push(iv.at(k as f64 / resolution as f64));
            arc_of.push(i);
        }
    }
    let points: Vec<V2> = params.iter().map(|&t| integrand.xi_at_angle(t)).collect();
    let area = shoelace(&points);
    if normalize && area < 0.0 {
        return stitch_with(integrand, &arcs.reversed(), resolution, roots, false);
    }

    let a: Vec<f64> = params.iter().map(|&t| integrand.a_at_angle(t)).collect();
    let mut sigma = vec![0i8; total];
    for i in 0..m {
        let d = arcs.intervals[i].direction();
        let range = i * resolution..(i + 1) * resolution;
        for k in range.clone() {
            sigma[k] = sign_with_tol(a[k] * d, 1e-8);
        }
        // Samples sitting on a cusp take the sign of their neighbour in the arc.
        for k in range.clone() {
            if sigma[k] == 0 {
                let next = if k + 1 < range.end { k + 1 } else { k - 1 };
                sigma[k] = sign_with_tol(a[next] * d, 0.0);
            }
        }
    }
    let normals: Vec<V2> = (0..total).map(|k| unit(params[k]) * sigma[k] as f64).collect();
    let xi_tilde: Vec<V2> = normals.iter().map(|&n| xi2(integrand, n)).collect();

    let mut junctions = Vec::with_capacity(m);
    for i in 0..m {
        let prev = (i + m - 1) % m;
        let index = i * resolution;
        let t_in = arcs.intervals[prev].to;
        let last = index.checked_sub(1).unwrap_or(total - 1);
        let normal_in = unit(t_in) * sigma[last] as f64;
        junctions.push(Junction {
            index,
            parameter_in: t_in,
            parameter_out: arcs.intervals[i].from,
            normal_in,
            xi_in: xi2(integrand, normal_in),
            xi_out: xi_tilde[index],
        });
    }
    // A junction between two pieces of one arc continuing smoothly is not a junction.
    junctions.retain(|j| {
        let prev = (arc_of[j.index] + m - 1) % m;
        let smooth = (j.parameter_in - j.parameter_out).rem_euclid(TAU).min((j.parameter_out - j.parameter_in).rem_euclid(TAU))
            < 1e-12
            && arcs.intervals[prev].direction() == arcs.intervals[arc_of[j.index]].direction()
            && m > 1;
        !smooth || m == 1
    });
    if m == 1 {
        // A single closed arc has a junction only if its ends meet at an angle.
        let j = junctions[0];
        let wraps = (arcs.intervals[0].length() - TAU).abs() < 1e-12;
        if wraps && j.gap() <= JUNCTION_TOL && (j.normal_in - normals[0]).norm() < 1e-9 {
            junctions.clear();
        }
    }

    let mut singular = Vec::new();
    for (i, iv) in arcs.intervals.iter().enumerate() {
        let (lo, hi) = (iv.from.min(iv.to), iv.from.max(iv.to));
        for &r in roots {
            for shift in [-TAU, 0.0, TAU] {
                let t = r + shift;
                if t > lo + 1e-9 && t < hi - 1e-9 {
                    let s = (t - iv.from) / (iv.to - iv.from);
                    let k = ((s * resolution as f64).round() as usize).min(resolution - 1);
                    singular.push(i * resolution + k);
                }
            }
        }
    }
    singular.sort_unstable();
    singular.dedup();

    Ok(ClosedCurve {
        embedded: is_embedded(&points),
        signed_area: area,
        points,
        normals,
        xi_tilde,
        parameters: Some(params),
        sigma,
        arc: arc_of,
        junctions,
        singular,
        arcs: Some(arcs.clone()),
    })
}

impl ClosedCurve {
    /// A curve from an arbitrary closed polyline. Normals are perpendicular
    /// to central-difference tangents; the polyline is made counterclockwise.
    pub fn from_polyline(integrand: &Integrand, points: &[V2]) -> Result<Self> {
        if integrand.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
        }
        let n = points.len();
        if n < 8 {
            return Err(Error::InvalidArgument(format!("polyline needs at least 8 points, got {n}")));
        }
        let mut pts = points.to_vec();
        let mut area = shoelace(&pts);
        if area < 0.0 {
            pts.reverse();
            area = -area;
        }
        let mut normals = Vec::with_capacity(n);
        for k in 0..n {
            let t = pts[(k + 1) % n] - pts[(k + n - 1) % n];
            let len = t.norm();
            if len == 0.0 {
                return Err(Error::ZeroLengthSegment { index: k });
            }
            normals.push(V2::new(t.y, -t.x) / len);
        }
        let xi_tilde = normals.iter().map(|&nu| xi2(integrand, nu)).collect();
        Ok(Self {
            embedded: is_embedded(&pts),
            signed_area: area,
            points: pts,
            normals,
            xi_tilde,
            parameters: None,
            sigma: vec![1; n],
            arc: vec![0; n],
            junctions: Vec::new(),
            singular: Vec::new(),
            arcs: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Homothetic copy `r X`; normals and the Cahn-Hoffman field are unchanged.
    pub fn scaled(&self, r: f64) -> Self {
        let mut c = self.clone();
        for p in &mut c.points {
            *p *= r;
        }
        c.signed_area *= r * r;
        c
    }

    /// Copy with every point moved by `f`.
    pub fn map_points(&self, f: impl Fn(V2) -> V2) -> Self {
        let mut c = self.clone();
        for p in &mut c.points {
            *p = f(*p);
        }
        c.signed_area = shoelace(&c.points);
        c
    }

    pub fn length(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|k| (self.points[(k + 1) % n] - self.points[k]).norm()).sum()
    }

    /// Cumulative arclength at each point.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        for k in 0..self.points.len() {
            s.push(acc);
            acc += (self.points[(k + 1) % self.points.len()] - self.points[k]).norm();
        }
        s
    }

    /// Arclength-weighted centroid of the polyline.
    pub fn centroid(&self) -> V2 {
        let n = self.points.len();
        let mut c = V2::zeros();
        let mut total = 0.0;
        for k in 0..n {
            let (a, b) = (self.points[k], self.points[(k + 1) % n]);
            let len = (b - a).norm();
            c += (a + b) * (0.5 * len);
            total += len;
        }
        c / total
    }

    fn excluded_mask(&self, window: usize) -> Vec<bool> {
        let n = self.points.len();
        let mut mask = vec![false; n];
        let centres = self.junctions.iter().map(|j| (j.index, true)).chain(self.singular.iter().map(|&k| (k, false)));
        for (c, is_junction) in centres {
            // A junction sits between samples c - 1 and c.
            let lo = c as isize - window as isize;
            let hi = if is_junction { c as isize + window as isize - 1 } else { c as isize + window as isize };
            for k in lo..=hi {
                mask[k.rem_euclid(n as isize) as usize] = true;
            }
        }
        mask
    }

    /// Boundaries between smooth pieces: junction and singular indices.
    fn piece_starts(&self) -> Vec<usize> {
        let mut starts: Vec<usize> = self.junctions.iter().map(|j| j.index).chain(self.singular.iter().copied()).collect();
        starts.sort_unstable();
        starts.dedup();
        starts
    }
}

/// Per-point anisotropic curvature with exclusion flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curvature {
    pub lambda: Vec<f64>,
    pub excluded: Vec<bool>,
}

/// `Lambda = -<d xi~ / ds, t>` by central differences along the polyline.
pub fn anisotropic_curvature_along(curve: &ClosedCurve) -> Result<Curvature> {
    anisotropic_curvature_with_window(curve, EXCLUSION_WINDOW)
}

pub fn anisotropic_curvature_with_window(curve: &ClosedCurve, window: usize) -> Result<Curvature> {
    let n = curve.points.len();
    if n < 3 {
        return Err(Error::InvalidArgument("curve needs at least 3 points".into()));
    }
    for k in 0..n {
        if (curve.points[(k + 1) % n] - curve.points[k]).norm() == 0.0 {
            return Err(Error::ZeroLengthSegment { index: k });
        }
    }
    let lambda = (0..n)
        .map(|k| {
            let dx = curve.points[(k + 1) % n] - curve.points[(k + n - 1) % n];
            let dxi = curve.xi_tilde[(k + 1) % n] - curve.xi_tilde[(k + n - 1) % n];
            -dxi.dot(&dx) / dx.norm_squared()
        })
        .collect();
    Ok(Curvature { lambda, excluded: curve.excluded_mask(window) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CamcStatus {
    Camc { lambda: f64 },
    NotCamc,
}

/// Curvature statistics over one smooth piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PieceProfile {
    pub piece: usize,
    /// First and last sample index (inclusive).
    pub samples: (usize, usize),
    /// Frontier parameters at the piece ends, when known.
    pub parameters: Option<(f64, f64)>,
    pub usable: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub coarse_deviation: f64,
    pub fine_deviation: f64,
    pub ratio: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CamcVerdict {
    pub status: CamcStatus,
    pub profile: Vec<PieceProfile>,
    pub tolerance: f64,
    /// Largest `|Lambda - mean|` over usable samples.
    pub max_deviation: f64,
    pub mean_lambda: f64,
    /// Largest Cahn-Hoffman jump across a junction.
    pub junction_gap: f64,
    pub junction_ok: bool,
    pub convergence: Option<ConvergenceCheck>,
}

impl CamcVerdict {
    pub fn is_camc(&self) -> bool {
        matches!(self.status, CamcStatus::Camc { .. })
    }
}

/// CAMC verdict for a stitched curve.
pub fn classify(curve: &ClosedCurve, tol_camc: f64) -> Result<CamcVerdict> {
    let curvature = anisotropic_curvature_along(curve)?;
    classify_with(curve, &curvature, tol_camc)
}

pub fn classify_with(curve: &ClosedCurve, curvature: &Curvature, tol_camc: f64) -> Result<CamcVerdict> {
    let n = curve.points.len();
    let starts = curve.piece_starts();
    let ranges: Vec<(usize, usize)> = if starts.is_empty() {
        vec![(0, n)]
    } else {
        (0..starts.len())
            .map(|i| {
                let s = starts[i];
                let e = if i + 1 < starts.len() { starts[i + 1] } else { starts[0] + n };
                (s, e)
            })
            .collect()
    };
    let mut profile = Vec::with_capacity(ranges.len());
    let mut all = Vec::new();
    for (piece, &(s, e)) in ranges.iter().enumerate() {
        let vals: Vec<f64> =
            (s..e).map(|k| k % n).filter(|&k| !curvature.excluded[k]).map(|k| curvature.lambda[k]).collect();
        if vals.len() < MIN_PIECE_SAMPLES {
            return Err(Error::TooFewSamples { piece, count: vals.len(), required: MIN_PIECE_SAMPLES });
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        profile.push(PieceProfile {
            piece,
            samples: (s % n, (e - 1) % n),
            parameters: curve.parameters.as_ref().map(|p| (p[s % n], p[(e - 1) % n])),
            usable: vals.len(),
            mean,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        all.extend(vals);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let max_deviation = all.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let junction_gap = curve.junctions.iter().map(Junction::gap).fold(0.0, f64::max);
    let junction_ok = junction_gap <= JUNCTION_TOL;
    let status = if max_deviation <= tol_camc && junction_ok { CamcStatus::Camc { lambda: mean } } else { CamcStatus::NotCamc };
    Ok(CamcVerdict {
        status,
        profile,
        tolerance: tol_camc,
        max_deviation,
        mean_lambda: mean,
        junction_gap,
        junction_ok,
        convergence: None,
    })
}

/// Classification with the refinement check: the curve is re-stitched at
/// twice the resolution and the deviation must shrink at least threefold
/// (or already sit at rounding level).
pub fn classify_converged(integrand: &Integrand, arcs: &ArcSpec, resolution: usize, tol_camc: f64) -> Result<CamcVerdict> {
    let roots = singular_set(integrand, TOL_SING)?.roots;
    let coarse = classify(&stitch_with(integrand, arcs, resolution, &roots, true)?, tol_camc)?;
    let mut fine = classify(&stitch_with(integrand, arcs, 2 * resolution, &roots, true)?, tol_camc)?;
    let ratio = coarse.max_deviation / fine.max_deviation.max(f64::MIN_POSITIVE);
    let converged = coarse.max_deviation <= ROUNDING_FLOOR || ratio >= 3.0;
    fine.convergence = Some(ConvergenceCheck {
        coarse_deviation: coarse.max_deviation,
        fine_deviation: fine.max_deviation,
        ratio,
        converged,
    });
    if !converged {
        fine.status = CamcStatus::NotCamc;
    }
    Ok(fine)
}

/// Frontier landmarks of the hexic density (or its rotation): the first
/// singular parameter and the first crossing parameter after `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HexicLandmarks {
    pub offset: f64,
    pub theta1: f64,
    pub rho1: f64,
}

impl HexicLandmarks {
    pub fn locate(integrand: &Integrand) -> Result<Self> {
        let offset = match integrand.kind() {
            Kind::Hexic2d => 0.0,
            Kind::Hexic2dRotated => FRAC_PI_4,
            other => return Err(Error::Unsupported(format!("no builtin catalogue for kind '{other}'"))),
        };
        let singular = singular_set(integrand, TOL_SING)?;
        let theta1 = singular
            .roots
            .iter()
            .map(|&r| (r - offset).rem_euclid(TAU))
            .filter(|&r| r < FRAC_PI_4)
            .fold(f64::NAN, f64::min);
        let samples = sample_frontier(integrand, LANDMARK_RESOLUTION)?;
        let crossings = self_intersections(integrand, &samples)?;
        let rho1 = crossings
            .crossing_parameters()
            .iter()
            .map(|&r| (r - offset).rem_euclid(TAU))
            .filter(|&r| r > theta1 && r < FRAC_PI_4)
            .fold(f64::NAN, f64::min);
        if !theta1.is_finite() || !rho1.is_finite() {
            return Err(Error::Internal("hexic landmarks not found".into()));
        }
        Ok(Self { offset, theta1, rho1 })
    }

    /// `theta_j`, `j = 1..=8`, with `theta_8 = -theta_1`.
    pub fn theta(&self, j: usize) -> f64 {
        let t1 = self.theta1;
        self.offset
            + match j {
                1 => t1,
                2 => FRAC_PI_2 - t1,
                3 => FRAC_PI_2 + t1,
                4 => PI - t1,
                5 => PI + t1,
                6 => 1.5 * PI - t1,
                7 => 1.5 * PI + t1,
                8 => -t1,
                _ => panic!("theta index out of range: {j}"),
            }
    }

    pub fn rho(&self, j: usize) -> f64 {
        self.offset
            + match j {
                1 => self.rho1,
                2 => FRAC_PI_2 - self.rho1,
                _ => panic!("rho index out of range: {j}"),
            }
    }
}

/// Names of the builtin catalogue curves, in order.
pub const CATALOGUE_NAMES: [&str; 6] = ["wulff", "Cgamma1", "Cgamma2", "Cgamma3", "Cgamma4", "Cgamma5"];

/// The Wulff curve and the five named closed frontier curves of the hexic
/// density, with endpoints from the computed landmarks.
pub fn builtin_catalogue(integrand: &Integrand) -> Result<Vec<(String, ArcSpec)>> {
    let l = HexicLandmarks::locate(integrand)?;
    catalogue_from_landmarks(integrand, &l)
}

pub(crate) fn catalogue_from_landmarks(integrand: &Integrand, l: &HexicLandmarks) -> Result<Vec<(String, ArcSpec)>> {
    let t = |j| l.theta(j);
    let r = |j| l.rho(j);
    let h = FRAC_PI_2;
    let sets: [Vec<(f64, f64)>; 6] = [
        (0..4).map(|k| (r(1) + k as f64 * h, r(2) + k as f64 * h)).collect(),
        vec![(t(2), t(3)), (t(4), t(5)), (t(6), t(7)), (t(8), t(1))],
        vec![(t(1), t(2)), (t(5), t(6))],
        vec![(t(8), t(1)), (t(3), r(2) + h), (r(1) + PI, t(6))],
        vec![
            (t(1), r(1)),
            (r(2), t(2)),
            (t(3), r(1) + h),
            (r(2) + h, t(4)),
            (t(5), r(1) + PI),
            (r(2) + PI, t(6)),
            (t(7), r(1) + 3.0 * h),
            (r(2) + 3.0 * h, t(8) + TAU),
        ],
        vec![(-l.rho1 + l.offset, r(1))],
    ];
    CATALOGUE_NAMES
        .iter()
        .zip(sets.iter())
        .map(|(name, set)| Ok((name.to_string(), ArcSpec::chain(integrand, set)?)))
        .collect()
}

/// Looks up a catalogue curve by name (case-insensitive).
pub fn catalogue_curve(integrand: &Integrand, name: &str) -> Result<ArcSpec> {
    builtin_catalogue(integrand)?
        .into_iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, a)| a)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown catalogue curve '{name}'")))
}

/// Anisotropic length by the trapezoid rule over segments.
pub fn energy_of_curve(curve: &ClosedCurve, integrand: &Integrand) -> f64 {
    let n = curve.points.len();
    let gamma = |nu: V2| integrand.gamma(&Vec3::new(nu.x, nu.y, 0.0));
    let incoming: HashMap<usize, V2> = curve.junctions.iter().map(|j| (j.index, j.normal_in)).collect();
    (0..n)
        .map(|k| {
            let next = (k + 1) % n;
            let len = (curve.points[next] - curve.points[k]).norm();
            let right = incoming.get(&next).copied().unwrap_or(curve.normals[next]);
            0.5 * (gamma(curve.normals[k]) + gamma(right)) * len
        })
        .sum()
}

/// Symmetries of the density among the order-8 dihedral group.
pub fn symmetry_group(integrand: &Integrand) -> Vec<Matrix2<f64>> {
    dihedral_group()
        .into_iter()
        .filter(|g| {
            (0..64).all(|k| {
                let nu = unit(TAU * (k as f64 + 0.37) / 64.0);
                let gn = g * nu;
                (integrand.gamma(&Vec3::new(gn.x, gn.y, 0.0)) - integrand.gamma(&Vec3::new(nu.x, nu.y, 0.0))).abs()
                    <= 1e-12
            })
        })
        .collect()
}

/// Rotations by multiples of pi/2 and reflections across lines at
/// multiples of pi/4.
pub fn dihedral_group() -> Vec<Matrix2<f64>> {
    let mut out = Vec::with_capacity(8);
    for k in 0..4 {
        let (s, c) = (k as f64 * FRAC_PI_2).sin_cos();
        out.push(Matrix2::new(c.round(), -s.round(), s.round(), c.round()));
    }
    for k in 0..4 {
        let (s, c) = (k as f64 * FRAC_PI_2).sin_cos();
        out.push(Matrix2::new(c.round(), s.round(), s.round(), -c.round()));
    }
    out
}

/// Uniform grid of segment indices for nearest-segment queries.
pub(crate) struct SegmentIndex<'a> {
    points: &'a [V2],
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> SegmentIndex<'a> {
    pub fn new(points: &'a [V2], cell: f64) -> Self {
        let n = points.len();
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |x: f64| (x / cell).floor() as i64;
        for k in 0..n {
            let (a, b) = (points[k], points[(k + 1) % n]);
            for i in key(a.x.min(b.x))..=key(a.x.max(b.x)) {
                for j in key(a.y.min(b.y))..=key(a.y.max(b.y)) {
                    cells.entry((i, j)).or_default().push(k);
                }
            }
        }
        Self { points, cell, cells }
    }

    fn candidates_for_segment(&self, a: V2, b: V2) -> Vec<usize> {
        let key = |x: f64| (x / self.cell).floor() as i64;
        let mut out = Vec::new();
        for i in key(a.x.min(b.x))..=key(a.x.max(b.x)) {
            for j in key(a.y.min(b.y))..=key(a.y.max(b.y)) {
                if let Some(v) = self.cells.get(&(i, j)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Segments within one cell of `p`, nearest first (at most three).
    pub fn near_segments(&self, p: V2) -> Vec<usize> {
        let n = self.points.len();
        let (ci, cj) = ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64);
        let mut found: Vec<(f64, usize)> = Vec::new();
        for i in ci - 1..=ci + 1 {
            for j in cj - 1..=cj + 1 {
                if let Some(v) = self.cells.get(&(i, j)) {
                    for &k in v {
                        found.push((point_segment_distance(p, self.points[k], self.points[(k + 1) % n]), k));
                    }
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.dedup_by_key(|x| x.1);
        found.into_iter().take(3).map(|x| x.1).collect()
    }
}

/// Nearest-point queries against a curve. Curves sampled from frontier
/// arcs are projected onto the arcs themselves, not their chords.
pub(crate) struct CurveProjector<'a> {
    curve: &'a ClosedCurve,
    integrand: &'a Integrand,
    index: SegmentIndex<'a>,
}

impl<'a> CurveProjector<'a> {
    pub fn new(curve: &'a ClosedCurve, integrand: &'a Integrand, reach: f64) -> Self {
        let n = curve.points.len();
        let longest = (0..n).map(|k| (curve.points[(k + 1) % n] - curve.points[k]).norm()).fold(0.0, f64::max);
        Self { curve, integrand, index: SegmentIndex::new(&curve.points, longest.max(reach) * 2.0) }
    }

    /// Nearest point on the curve to `p`, or `None` if none lies within reach.
    pub fn project(&self, p: V2) -> Option<V2> {
        let pts = &self.curve.points;
        let n = pts.len();
        let mut best: Option<(f64, V2)> = None;
        for k in self.index.near_segments(p) {
            let next = (k + 1) % n;
            let same_arc = self.curve.arc[k] == self.curve.arc[next] || self.curve.junctions.is_empty();
            let q = match &self.curve.parameters {
                Some(t) if same_arc => {
                    let (mut lo, mut hi) = (t[k], if next == 0 && self.curve.junctions.is_empty() { t[0] + TAU } else { t[next] });
                    let f = |s: f64| (self.integrand.xi_at_angle(s) - p).norm_squared();
                    let r = 0.5 * (3.0 - 5f64.sqrt());
                    let (mut a, mut b) = (lo + r * (hi - lo), hi - r * (hi - lo));
                    let (mut fa, mut fb) = (f(a), f(b));
                    for _ in 0..60 {
                        if fa < fb {
                            hi = b;
                            b = a;
                            fb = fa;
                            a = lo + r * (hi - lo);
                            fa = f(a);
                        } else {
                            lo = a;
                            a = b;
                            fa = fb;
                            b = hi - r * (hi - lo);
                            fb = f(b);
                        }
                    }
                    let ends = [t[k], lo, hi];
                    let s = ends.into_iter().min_by(|x, y| f(*x).total_cmp(&f(*y))).expect("nonempty");
                    self.integrand.xi_at_angle(s)
                }
                _ => nearest_on_segment(p, pts[k], pts[next]),
            };
            let d = (q - p).norm();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, q));
            }
        }
        best.map(|(_, q)| q)
    }
}

fn nearest_on_segment(p: V2, a: V2, b: V2) -> V2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    a + ab * ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

/// Whether `b` is congruent to `a` by an element of `group` followed by a
/// translation, within `tol` in both directions.
pub fn congruent(integrand: &Integrand, a: &ClosedCurve, b: &ClosedCurve, group: &[Matrix2<f64>], tol: f64) -> bool {
    if (a.length() - b.length()).abs() > 1e-3 * a.length() || (a.signed_area.abs() - b.signed_area.abs()).abs() > 1e-3 * a.signed_area.abs().max(1e-12) {
        return false;
    }
    // Coarse gate: 1e-3 of the curve size, well above discretisation error.
    let reach = 1e-3 * a.length();
    let pa = CurveProjector::new(a, integrand, reach);
    let pb = CurveProjector::new(b, integrand, reach);
    let (ca, cb) = (a.centroid(), b.centroid());
    group.iter().any(|g| {
        let ginv = g.transpose();
        // b is carried onto a by x -> g x + shift.
        let mut shift = ca - g * cb;
        let stride = (b.len() / 256).max(1);
        for _ in 0..4 {
            let mut acc = V2::zeros();
            let mut count = 0.0;
            for p in b.points.iter().step_by(stride) {
                let q = g * p + shift;
                let Some(r) = pa.project(q) else { return false };
                if (r - q).norm() > reach {
                    return false;
                }
                acc += r - q;
                count += 1.0;
            }
            shift += acc / count;
        }
        let forward = b.points.iter().all(|p| {
            let q = g * p + shift;
            pa.project(q).is_some_and(|r| (r - q).norm() <= tol)
        });
        forward
            && a.points.iter().all(|p| {
                let q = ginv * (p - shift);
                pb.project(q).is_some_and(|r| (r - q).norm() <= tol)
            })
    })
}

/// One closed CAMC curve found by [`enumerate_closed_camc`].
#[derive(Debug, Clone)]
pub struct EnumeratedCurve {
    pub arcs: ArcSpec,
    pub curve: ClosedCurve,
    pub verdict: CamcVerdict,
    pub class_id: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CamcClass {
    pub id: usize,
    /// Index into [`Enumeration::curves`] of the representative.
    pub representative: usize,
    pub members: usize,
    pub lambda: f64,
    pub embedded: bool,
    pub arc_count: usize,
    /// Catalogue curve congruent to this class, if any.
    pub catalogue_name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub nodes: usize,
    pub edges: usize,
    pub cycles_examined: usize,
    pub curves: Vec<EnumeratedCurve>,
    pub classes: Vec<CamcClass>,
}

/// Options for [`enumerate_closed_camc_with`].
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub resolution: usize,
    pub tol_camc: f64,
    pub path_cap: usize,
    pub congruence_tol: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { resolution: 1024, tol_camc: TOL_CAMC, path_cap: DEFAULT_PATH_CAP, congruence_tol: CONGRUENCE_TOL }
    }
}

/// Frontier graph: nodes are crossings and corner coincidences, edges the
/// frontier pieces between consecutive node parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierGraph {
    /// Node parameters, ascending; several parameters share a node.
    pub cuts: Vec<f64>,
    pub node_of_cut: Vec<usize>,
    pub nodes: usize,
    /// Edge `k` runs from `cuts[k]` to `cuts[k + 1]` (cyclically).
    pub edges: Vec<(usize, usize)>,
}

impl FrontierGraph {
    pub fn build(integrand: &Integrand, singular: &SingularSet, crossing_params: &[f64]) -> Self {
        let mut cuts: Vec<f64> = singular.roots.iter().copied().chain(crossing_params.iter().copied()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let images: Vec<V2> = cuts.iter().map(|&t| integrand.xi_at_angle(t)).collect();
        let mut node_of_cut = vec![usize::MAX; cuts.len()];
        let mut nodes = 0;
        for i in 0..cuts.len() {
            if node_of_cut[i] != usize::MAX {
                continue;
            }
            node_of_cut[i] = nodes;
            for j in i + 1..cuts.len() {
                if (images[i] - images[j]).norm() <= 1e-7 {
                    node_of_cut[j] = nodes;
                }
            }
            nodes += 1;
        }
        let m = cuts.len();
        let edges = (0..m).map(|k| (node_of_cut[k], node_of_cut[(k + 1) % m])).collect();
        Self { cuts, node_of_cut, nodes, edges }
    }

    pub fn edge_interval(&self, k: usize, forward: bool) -> Interval {
        let m = self.cuts.len();
        let a = self.cuts[k];
        let b = if k + 1 < m { self.cuts[k + 1] } else { self.cuts[0] + TAU };
        if forward {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    }

    /// All simple cycles as directed edge sequences in canonical form.
    pub fn simple_cycles(&self, cap: usize) -> Result<Vec<Vec<(usize, bool)>>> {
        let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); self.nodes];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((k, v, true));
            if u != v {
                adj[v].push((k, u, false));
            }
        }
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut cycles = Vec::new();
        let mut partial = 0usize;
        for s in 0..self.nodes {
            let mut path: Vec<(usize, bool)> = Vec::new();
            let mut on_path = vec![false; self.nodes];
            on_path[s] = true;
            // Iterative DFS over (node, next adjacency index).
            let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
            while let Some(&mut (u, ref mut idx)) = stack.last_mut() {
                if *idx >= adj[u].len() {
                    stack.pop();
                    if let Some((_, _)) = path.pop() {
                        on_path[u] = false;
                    }
                    continue;
                }
                let (edge, v, fwd) = adj[u][*idx];
                *idx += 1;
                if path.last().is_some_and(|&(e, _)| e == edge) {
                    continue;
                }
                if v == s {
                    let mut cycle = path.clone();
                    cycle.push((edge, fwd));
                    let canon = canonical_cycle(&cycle);
                    let key: Vec<usize> = canon.iter().map(|c| c.0).collect();
                    if seen.insert(key) {
                        cycles.push(canon);
                    }
                    continue;
                }
                if v < s || on_path[v] {
                    continue;
                }
                partial += 1;
                if partial > cap {
                    return Err(Error::EnumerationCap { cap });
                }
                on_path[v] = true;
                path.push((edge, fwd));
                stack.push((v, 0));
            }
        }
        cycles.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(cycles)
    }

    /// Arc specification for a cycle, merging consecutive edges that
    /// continue the same frontier arc.
    pub fn cycle_arcs(&self, cycle: &[(usize, bool)]) -> ArcSpec {
        let mut out: Vec<Interval> = Vec::new();
        for &(k, fwd) in cycle {
            let iv = self.edge_interval(k, fwd);
            if let Some(last) = out.last_mut() {
                let gap = (iv.from - last.to).rem_euclid(TAU);
                if (gap < 1e-12 || TAU - gap < 1e-12) && iv.direction() == last.direction() {
                    last.to += iv.to - iv.from;
                    continue;
                }
            }
            out.push(iv);
        }
        if out.len() > 1 {
            let (first, last) = (out[0], out[out.len() - 1]);
            let gap = (first.from - last.to).rem_euclid(TAU);
            if (gap < 1e-12 || TAU - gap < 1e-12) && first.direction() == last.direction() {
                out.pop();
                out[0].from = first.from - (last.to - last.from);
            }
        }
        ArcSpec::new(out)
    }
}

/// Minimal rotation/reversal of a directed edge cycle by edge ids.
fn canonical_cycle(cycle: &[(usize, bool)]) -> Vec<(usize, bool)> {
    let n = cycle.len();
    let reversed: Vec<(usize, bool)> = cycle.iter().rev().map(|&(e, f)| (e, !f)).collect();
    let mut best: Option<Vec<(usize, bool)>> = None;
    for seq in [cycle.to_vec(), reversed] {
        for r in 0..n {
            let rot: Vec<(usize, bool)> = (0..n).map(|i| seq[(i + r) % n]).collect();
            let better = match &best {
                None => true,
                Some(b) => rot.iter().map(|x| x.0).lt(b.iter().map(|x| x.0)),
            };
            if better {
                best = Some(rot);
            }
        }
    }
    best.expect("nonempty cycle")
}

/// Every closed CAMC curve contained in the frontier, grouped into
/// congruence classes.
pub fn enumerate_closed_camc(integrand: &Integrand, resolution: usize) -> Result<Enumeration> {
    enumerate_closed_camc_with(integrand, EnumerationOptions { resolution, ..Default::default() })
}

pub fn enumerate_closed_camc_with(integrand: &Integrand, opts: EnumerationOptions) -> Result<Enumeration> {
    if integrand.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: integrand.dim() });
    }
    let singular = singular_set(integrand, TOL_SING)?;
    let samples = sample_frontier(integrand, LANDMARK_RESOLUTION)?;
    let crossings = self_intersections(integrand, &samples)?;
    let graph = FrontierGraph::build(integrand, &singular, &crossings.crossing_parameters());

    let cycle_arcs: Vec<ArcSpec> = if graph.cuts.is_empty() {
        vec![ArcSpec::new(vec![Interval::new(0.0, TAU)])]
    } else {
        graph.simple_cycles(opts.path_cap)?.iter().map(|c| graph.cycle_arcs(c)).collect()
    };
    let examined = cycle_arcs.len();

    let results: Vec<Option<(ArcSpec, ClosedCurve, CamcVerdict)>> = par_map(cycle_arcs.len(), |k| {
        let arcs = &cycle_arcs[k];
        let curve = stitch_with(integrand, arcs, opts.resolution, &singular.roots, true).ok()?;
        let verdict = classify(&curve, opts.tol_camc).ok()?;
        verdict.is_camc().then(|| (curve.arcs.clone().unwrap_or_else(|| arcs.clone()), curve, verdict))
    });

    let group = symmetry_group(integrand);
    let mut curves: Vec<EnumeratedCurve> = Vec::new();
    let mut classes: Vec<CamcClass> = Vec::new();
    for (arcs, curve, verdict) in results.into_iter().flatten() {
        let class = classes
            .iter()
            .position(|c| congruent(integrand, &curves[c.representative].curve, &curve, &group, opts.congruence_tol));
        let class_id = match class {
            Some(id) => {
                classes[id].members += 1;
                id
            }
            None => {
                let id = classes.len();
                classes.push(CamcClass {
                    id,
                    representative: curves.len(),
                    members: 1,
                    lambda: verdict.mean_lambda,
                    embedded: curve.embedded,
                    arc_count: arcs.intervals.len(),
                    catalogue_name: None,
                });
                id
            }
        };
        curves.push(EnumeratedCurve { arcs, curve, verdict, class_id });
    }

    if matches!(integrand.kind(), Kind::Hexic2d | Kind::Hexic2dRotated) {
        let catalogue = builtin_catalogue(integrand)?;
        for (name, arcs) in catalogue {
            let reference = stitch_with(integrand, &arcs, opts.resolution, &singular.roots, true)?;
            if let Some(class) =
                classes.iter_mut().find(|c| congruent(integrand, &curves[c.representative].curve, &reference, &group, opts.congruence_tol))
            {
                class.catalogue_name.get_or_insert(name);
            }
        }
    }

    Ok(Enumeration { nodes: graph.nodes, edges: graph.edges.len(), cycles_examined: examined, curves, classes })
}

/// Parameter of the point nearest to `p` on the frontier, by dense search
/// and golden-section refinement (n = 1).
pub fn nearest_frontier_parameter(integrand: &Integrand, p: V2) -> f64 {
    let grid = 4096;
    let best = (0..grid)
        .map(|k| TAU * k as f64 / grid as f64)
        .min_by(|&a, &b| (integrand.xi_at_angle(a) - p).norm().total_cmp(&(integrand.xi_at_angle(b) - p).norm()))
        .expect("grid nonempty");
    let (mut lo, mut hi) = (best - TAU / grid as f64, best + TAU / grid as f64);
    let f = |t: f64| (integrand.xi_at_angle(t) - p).norm_squared();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (0.5 * (lo + hi)).rem_euclid(TAU)
}

/// Direction helper for n = 1 callers.
pub fn direction_at(theta: f64) -> Direction {
    Direction::from_angle(theta)
}
