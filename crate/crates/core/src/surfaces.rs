//! Surfaces of revolution built from planar frontier curves.
//!
//! A profile curve in the `(u, w)` half-plane (`u` horizontal, `w` along the
//! rotation axis) is rotated about the vertical axis. Rows of the mesh are
//! samples along the meridian, columns are rotation angles. Curvatures come
//! from the parametric shape operator `S = -(d xi~)(dX)^-1`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{Matrix2, Matrix3x2};
use serde::Serialize;

use crate::curves::{shoelace, CamcStatus, PieceProfile, EXCLUSION_WINDOW, MIN_PIECE_SAMPLES};
use crate::error::{Error, Result};
use crate::frontier::{sign_with_tol, singular_set, Interval, TOL_SING, V2};
use crate::integrand::{Direction, Integrand, Kind, Vec3};
use crate::curves::ArcSpec;
use crate::par_map;

/// Default CAMC tolerance on surfaces.
pub const TOL_CAMC_SURFACE: f64 = 1e-2;
/// Rows this close (in grid steps) to a pole are excluded.
pub const POLE_WINDOW: usize = 2;
/// Minimum meridian samples per arc.
pub const MIN_MERIDIAN_SAMPLES: usize = 64;
/// Minimum samples around the axis.
pub const MIN_ROTATION_SAMPLES: usize = 128;
/// Junction condition tolerance along junction circles.
pub const SURFACE_JUNCTION_TOL: f64 = 1e-6;
/// `|u|` below this counts as on the axis.
const AXIS_TOL: f64 = 1e-9;

/// How the normal at each vertex is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalMode {
    /// Outward normal of the closed surface.
    Outward,
    /// `sign(det A) nu`, the normal compatible with the frontier's own
    /// orientation.
    OrientationCompatible,
}

#[derive(Debug, Clone)]
enum Meridian {
    /// Points are profile frontier points `xi(theta)`.
    Frontier(Integrand),
    /// Points are `(cos theta, sin theta)`.
    Sphere,
}

impl Meridian {
    fn point(&self, theta: f64) -> V2 {
        match self {
            Self::Frontier(p) => p.xi_at_angle(theta),
            Self::Sphere => V2::new(theta.cos(), theta.sin()),
        }
    }

    /// `|dP / d theta|`.
    fn speed(&self, theta: f64) -> f64 {
        match self {
            Self::Frontier(p) => p.a_at_angle(theta).abs(),
            Self::Sphere => 1.0,
        }
    }
}

/// A meridian interval between consecutive band rows, used for quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub theta_mid: f64,
    pub dtheta: f64,
    pub sigma: i8,
}

/// Where two meridian arcs meet: a circle on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionRow {
    pub row: usize,
    pub theta_in: f64,
    pub sigma_in: i8,
}

/// Rotational surface mesh with per-vertex normal and Cahn-Hoffman data.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    /// Meridian parameter per row.
    pub thetas: Vec<f64>,
    /// Rotation angle per column.
    pub rhos: Vec<f64>,
    /// Profile point `(u, w)` per row (unscaled).
    pub profile: Vec<V2>,
    pub sigma: Vec<i8>,
    /// Meridian piece per row.
    pub piece: Vec<usize>,
    pub pole_rows: Vec<bool>,
    pub junction_rows: Vec<JunctionRow>,
    pub singular_rows: Vec<usize>,
    /// The meridian closes on itself (torus-like surface).
    pub periodic: bool,
    /// Row-major `rows x cols` vertex positions.
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub xi_tilde: Vec<Vec3>,
    pub bands: Vec<Band>,
    pub scale: f64,
    pub normal_mode: NormalMode,
    integrand: Integrand,
    meridian: Meridian,
}

fn spherical(theta: f64, rho: f64) -> Vec3 {
    Direction::from_spherical(theta, rho).vector()
}

fn rotate(p: V2, rho: f64) -> Vec3 {
    Vec3::new(p.x * rho.cos(), p.x * rho.sin(), p.y)
}

fn profile_of(integrand: &Integrand) -> Result<Integrand> {
    if integrand.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: integrand.dim() });
    }
    match (integrand.profile(), integrand.kind()) {
        (Some(p), _) => Ok(p.clone()),
        (None, Kind::Isotropic) => Ok(Integrand::isotropic(1)),
        _ => Err(Error::Unsupported("surface meshes need a rotationally symmetric density".into())),
    }
}

/// One piece of the meridian with the arc it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    interval: Interval,
    arc: usize,
}

/// Splits oriented arcs where the profile meets the axis and keeps the part
/// with `u > 0`. Returns the pieces and whether they close up.
fn meridian_pieces(profile: &Integrand, arcs: &ArcSpec) -> Result<(Vec<Piece>, bool)> {
    let u = |t: f64| profile.xi_at_angle(t).x;
    let closed = arcs.closure_gap(profile).1.norm() <= crate::curves::CLOSURE_TOL;
    let mut oriented = arcs.clone();
    if closed {
        let pts: Vec<V2> = oriented
            .intervals
            .iter()
            .flat_map(|iv| (0..256).map(move |k| iv.at(k as f64 / 256.0)))
            .map(|t| profile.xi_at_angle(t))
            .collect();
        if shoelace(&pts) < 0.0 {
            oriented = oriented.reversed();
        }
    }

    let mut split: Vec<(Piece, f64)> = Vec::new();
    for (arc, iv) in oriented.intervals.iter().enumerate() {
        let grid = 2048;
        let mut cuts = vec![0.0];
        // Consecutive samples clear of the axis with opposite signs bracket
        // a crossing; samples on the axis in between are skipped.
        let mut last: Option<(f64, f64)> = None;
        for k in 0..=grid {
            let s = k as f64 / grid as f64;
            let f = u(iv.at(s));
            if f.abs() <= AXIS_TOL {
                continue;
            }
            if let Some((s0, f0)) = last {
                if f0.signum() != f.signum() {
                    let (mut lo, mut hi) = (s0, s);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if u(iv.at(mid)).signum() == f0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    cuts.push(0.5 * (lo + hi));
                }
            }
            last = Some((s, f));
        }
        cuts.retain(|&c| c == 0.0 || (c > 1e-12 && c < 1.0 - 1e-12));
        cuts.push(1.0);
        for w in cuts.windows(2) {
            let piece = Interval::new(iv.at(w[0]), iv.at(w[1]));
            split.push((Piece { interval: piece, arc }, u(piece.at(0.5))));
        }
    }

    let positive: Vec<bool> = split.iter().map(|(_, m)| *m > 0.0).collect();
    if positive.iter().all(|&p| p) {
        if !closed {
            let (a, b) = (split[0].0.interval.from, split[split.len() - 1].0.interval.to);
            return check_open(profile, split.into_iter().map(|(p, _)| p).collect(), a, b);
        }
        return Ok((split.into_iter().map(|(p, _)| p).collect(), true));
    }
    if !closed {
        return Err(Error::NonClosingSurface("open meridian leaves the half-plane u >= 0".into()));
    }
    // Rotate so the list starts at a non-positive piece, then collect runs.
    let m = split.len();
    let start = positive.iter().position(|&p| !p).expect("some piece is non-positive");
    let mut runs: Vec<Vec<Piece>> = Vec::new();
    let mut current: Vec<Piece> = Vec::new();
    for k in 1..=m {
        let idx = (start + k) % m;
        if positive[idx] {
            current.push(split[idx].0);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    if runs.len() != 1 {
        return Err(Error::NonClosingSurface(format!(
            "profile meets the axis in {} separate runs; rotation is not a closed surface",
            runs.len()
        )));
    }
    let run = runs.pop().expect("one run");
    let (a, b) = (run[0].interval.from, run[run.len() - 1].interval.to);
    check_open(profile, run, a, b)
}

fn check_open(profile: &Integrand, mut run: Vec<Piece>, a: f64, b: f64) -> Result<(Vec<Piece>, bool)> {
    let (pa, pb) = (profile.xi_at_angle(a), profile.xi_at_angle(b));
    if pa.x.abs() > AXIS_TOL || pb.x.abs() > AXIS_TOL {
        return Err(Error::NonClosingSurface(format!(
            "meridian ends off the axis at ({:.3e}, {:.3e}) and ({:.3e}, {:.3e})",
            pa.x, pa.y, pb.x, pb.y
        )));
    }
    if pa.y > pb.y {
        run = run.iter().rev().map(|p| Piece { interval: p.interval.reversed(), arc: p.arc }).collect();
    }
    Ok((run, false))
}

/// Meshes the surface swept by rotating profile frontier arcs about the
/// vertical axis, with the outward normal.
pub fn mesh_frontier_surface(integrand3d: &Integrand, arcs: &ArcSpec, grid: (usize, usize)) -> Result<SurfaceMesh> {
    mesh_frontier_surface_with(integrand3d, arcs, grid, NormalMode::Outward)
}

pub fn mesh_frontier_surface_with(
    integrand3d: &Integrand,
    arcs: &ArcSpec,
    grid: (usize, usize),
    mode: NormalMode,
) -> Result<SurfaceMesh> {
    let profile = profile_of(integrand3d)?;
    let (n_theta, n_rho) = grid;
    check_grid(n_theta, n_rho)?;
    if arcs.intervals.is_empty() {
        return Err(Error::InvalidArgument("arc list is empty".into()));
    }
    let (pieces, periodic) = meridian_pieces(&profile, arcs)?;
    let roots = singular_set(&profile, TOL_SING)?.roots;

    let mut thetas = Vec::new();
    let mut piece_of = Vec::new();
    for (p, piece) in pieces.iter().enumerate() {
        let last = !periodic && p + 1 == pieces.len();
        let count = if last { n_theta + 1 } else { n_theta };
        for k in 0..count {
            thetas.push(piece.interval.at(k as f64 / n_theta as f64));
            piece_of.push(p);
        }
    }
    let rows = thetas.len();

    let a: Vec<f64> = thetas.iter().map(|&t| profile.a_at_angle(t)).collect();
    let mut sigma = vec![0i8; rows];
    for r in 0..rows {
        let d = pieces[piece_of[r]].interval.direction();
        sigma[r] = match mode {
            NormalMode::Outward => sign_with_tol(a[r] * d, 1e-8),
            NormalMode::OrientationCompatible => {
                let det = integrand3d.a_at(&Direction::from_spherical(thetas[r], 0.0)).determinant();
                sign_with_tol(det, 1e-10)
            }
        };
    }
    for r in 0..rows {
        if sigma[r] == 0 {
            let same = |k: usize| piece_of.get(k) == Some(&piece_of[r]) && sigma[k] != 0;
            sigma[r] = if r + 1 < rows && same(r + 1) {
                sigma[r + 1]
            } else if r > 0 && same(r - 1) {
                sigma[r - 1]
            } else {
                1
            };
        }
    }

    let mut junction_rows = Vec::new();
    let mut singular_rows = Vec::new();
    let first_row = |p: usize| piece_of.iter().position(|&q| q == p).expect("piece has rows");
    for p in 0..pieces.len() {
        let prev = if p == 0 {
            if !periodic {
                continue;
            }
            pieces.len() - 1
        } else {
            p - 1
        };
        if pieces.len() == 1 {
            let iv = pieces[0].interval;
            let smooth = (iv.length() - TAU).abs() < 1e-12;
            if smooth {
                continue;
            }
        }
        let row = first_row(p);
        let same_arc = pieces[prev].arc == pieces[p].arc && pieces.len() > 1;
        if same_arc {
            continue;
        }
        let last_prev = if row == 0 { rows - 1 } else { row - 1 };
        junction_rows.push(JunctionRow { row, theta_in: pieces[prev].interval.to, sigma_in: sigma[last_prev] });
    }
    for (p, piece) in pieces.iter().enumerate() {
        let iv = piece.interval;
        let (lo, hi) = (iv.from.min(iv.to), iv.from.max(iv.to));
        for &root in &roots {
            for shift in [-TAU, 0.0, TAU] {
                let t = root + shift;
                if t > lo + 1e-9 && t < hi - 1e-9 {
                    let s = (t - iv.from) / (iv.to - iv.from);
                    let k = ((s * n_theta as f64).round() as usize).min(n_theta - 1);
                    singular_rows.push(first_row(p) + k);
                }
            }
        }
    }
    singular_rows.sort_unstable();
    singular_rows.dedup();

    let mut bands = Vec::with_capacity(rows);
    let band_count = if periodic { rows } else { rows - 1 };
    for r in 0..band_count {
        let next = (r + 1) % rows;
        let t0 = thetas[r];
        let t1 = if piece_of[next] == piece_of[r] && next != 0 { thetas[next] } else { pieces[piece_of[r]].interval.to };
        bands.push(Band { theta_mid: 0.5 * (t0 + t1), dtheta: t1 - t0, sigma: sigma[r] });
    }

    let meridian = Meridian::Frontier(profile);
    Ok(assemble(integrand3d.clone(), meridian, thetas, piece_of, sigma, junction_rows, singular_rows, bands, periodic, n_rho, mode))
}

/// An open patch of the rotational frontier swept by one meridian interval,
/// with no closure requirement. The meridian may cross the axis; rows next
/// to a crossing are treated like poles.
pub fn mesh_frontier_patch(
    integrand3d: &Integrand,
    interval: Interval,
    grid: (usize, usize),
    mode: NormalMode,
) -> Result<SurfaceMesh> {
    let profile = profile_of(integrand3d)?;
    let (n_theta, n_rho) = grid;
    check_grid(n_theta, n_rho)?;
    if !(interval.length() > 0.0) {
        return Err(Error::InvalidArgument("meridian interval has zero length".into()));
    }
    let thetas: Vec<f64> = (0..=n_theta).map(|k| interval.at(k as f64 / n_theta as f64)).collect();
    let rows = thetas.len();
    let d = interval.direction();
    let mut sigma: Vec<i8> = thetas
        .iter()
        .map(|&t| match mode {
            NormalMode::Outward => sign_with_tol(profile.a_at_angle(t) * d, 1e-8),
            NormalMode::OrientationCompatible => {
                sign_with_tol(integrand3d.a_at(&Direction::from_spherical(t, 0.0)).determinant(), 1e-10)
            }
        })
        .collect();
    // Samples on a singular circle take the sign of the nearest signed row.
    for r in 0..rows {
        if sigma[r] == 0 {
            sigma[r] = (1..rows)
                .flat_map(|k| [r.checked_sub(k), Some(r + k)])
                .flatten()
                .find_map(|i| sigma.get(i).copied().filter(|&v| v != 0))
                .unwrap_or(1);
        }
    }
    let roots = singular_set(&profile, TOL_SING)?.roots;
    let (lo, hi) = (interval.from.min(interval.to), interval.from.max(interval.to));
    let mut singular_rows: Vec<usize> = roots
        .iter()
        .flat_map(|&root| [root - TAU, root, root + TAU])
        .filter(|&t| t > lo + 1e-9 && t < hi - 1e-9)
        .map(|t| (((t - interval.from) / (interval.to - interval.from) * n_theta as f64).round() as usize).min(n_theta))
        .collect();
    singular_rows.sort_unstable();
    singular_rows.dedup();
    let bands = (0..rows - 1)
        .map(|r| Band { theta_mid: 0.5 * (thetas[r] + thetas[r + 1]), dtheta: thetas[r + 1] - thetas[r], sigma: sigma[r] })
        .collect();
    let meridian = Meridian::Frontier(profile);
    let mut mesh = assemble(integrand3d.clone(), meridian, thetas, vec![0; rows], sigma, Vec::new(), singular_rows, bands, false, n_rho, mode);
    for r in 0..rows - 1 {
        let (u0, u1) = (mesh.profile[r].x, mesh.profile[r + 1].x);
        if u0 * u1 <= 0.0 {
            mesh.pole_rows[r] = true;
            mesh.pole_rows[r + 1] = true;
        }
    }
    Ok(mesh)
}

fn check_grid(n_theta: usize, n_rho: usize) -> Result<()> {
    if n_theta < MIN_MERIDIAN_SAMPLES {
        return Err(Error::InvalidArgument(format!("meridian samples per arc must be >= {MIN_MERIDIAN_SAMPLES}, got {n_theta}")));
    }
    if n_rho < MIN_ROTATION_SAMPLES {
        return Err(Error::InvalidArgument(format!("rotation samples must be >= {MIN_ROTATION_SAMPLES}, got {n_rho}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    integrand: Integrand,
    meridian: Meridian,
    thetas: Vec<f64>,
    piece: Vec<usize>,
    sigma: Vec<i8>,
    junction_rows: Vec<JunctionRow>,
    singular_rows: Vec<usize>,
    bands: Vec<Band>,
    periodic: bool,
    n_rho: usize,
    normal_mode: NormalMode,
) -> SurfaceMesh {
    let rhos: Vec<f64> = (0..n_rho).map(|j| TAU * j as f64 / n_rho as f64).collect();
    let profile: Vec<V2> = thetas.iter().map(|&t| meridian.point(t)).collect();
    let pole_rows: Vec<bool> = profile.iter().map(|p| p.x.abs() <= AXIS_TOL).collect();
    let rows = thetas.len();
    let per_row: Vec<(Vec<Vec3>, Vec<Vec3>, Vec<Vec3>)> = par_map(rows, |r| {
        let mut v = Vec::with_capacity(n_rho);
        let mut nu = Vec::with_capacity(n_rho);
        let mut xi = Vec::with_capacity(n_rho);
        for &rho in &rhos {
            let p = if pole_rows[r] { V2::new(0.0, profile[r].y) } else { profile[r] };
            v.push(rotate(p, rho));
            let n = spherical(thetas[r], rho) * sigma[r] as f64;
            xi.push(integrand.xi(&n));
            nu.push(n);
        }
        (v, nu, xi)
    });
    let mut vertices = Vec::with_capacity(rows * n_rho);
    let mut normals = Vec::with_capacity(rows * n_rho);
    let mut xi_tilde = Vec::with_capacity(rows * n_rho);
    for (v, n, x) in per_row {
        vertices.extend(v);
        normals.extend(n);
        xi_tilde.extend(x);
    }
    SurfaceMesh {
        thetas,
        rhos,
        profile,
        sigma,
        piece,
        pole_rows,
        junction_rows,
        singular_rows,
        periodic,
        vertices,
        normals,
        xi_tilde,
        bands,
        scale: 1.0,
        normal_mode,
        integrand,
        meridian,
    }
}

impl SurfaceMesh {
    /// The unit sphere with outward normal, carrying the Cahn-Hoffman field
    /// of `integrand3d` (which need not be rotational).
    pub fn unit_sphere(integrand3d: &Integrand, grid: (usize, usize)) -> Result<Self> {
        if integrand3d.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, actual: integrand3d.dim() });
        }
        let (n_theta, n_rho) = grid;
        check_grid(n_theta, n_rho)?;
        let thetas: Vec<f64> = (0..=n_theta).map(|k| -FRAC_PI_2 + std::f64::consts::PI * k as f64 / n_theta as f64).collect();
        let rows = thetas.len();
        let bands = (0..rows - 1)
            .map(|r| Band { theta_mid: 0.5 * (thetas[r] + thetas[r + 1]), dtheta: thetas[r + 1] - thetas[r], sigma: 1 })
            .collect();
        let mut mesh = assemble(
            integrand3d.clone(),
            Meridian::Sphere,
            thetas,
            vec![0; rows],
            vec![1; rows],
            Vec::new(),
            Vec::new(),
            bands,
            false,
            n_rho,
            NormalMode::Outward,
        );
        // Pole rows are exact: cos(+-pi/2) is not exactly zero in floating point.
        let last = rows - 1;
        mesh.pole_rows[0] = true;
        mesh.pole_rows[last] = true;
        for r in [0, last] {
            for j in 0..n_rho {
                mesh.vertices[r * n_rho + j] = Vec3::new(0.0, 0.0, mesh.profile[r].y);
            }
        }
        Ok(mesh)
    }

    pub fn rows(&self) -> usize {
        self.thetas.len()
    }

    pub fn cols(&self) -> usize {
        self.rhos.len()
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.rhos.len() + col
    }

    /// Homothetic copy `r X`; normals and the Cahn-Hoffman field are unchanged.
    pub fn scaled(&self, r: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.vertices {
            *v *= r;
        }
        m.scale *= r;
        m
    }

    /// Rows excluded from curvature statistics: poles, junction circles and
    /// singular circles with their windows, and open meridian ends.
    pub fn excluded_rows(&self) -> Vec<bool> {
        let rows = self.rows();
        let mut out = vec![false; rows];
        let mut mark = |c: isize, lo: isize, hi: isize| {
            for k in c + lo..=c + hi {
                if self.periodic {
                    out[k.rem_euclid(rows as isize) as usize] = true;
                } else if k >= 0 && (k as usize) < rows {
                    out[k as usize] = true;
                }
            }
        };
        let w = EXCLUSION_WINDOW as isize;
        for j in &self.junction_rows {
            mark(j.row as isize, -w, w - 1);
        }
        for &s in &self.singular_rows {
            mark(s as isize, -w, w);
        }
        let p = POLE_WINDOW as isize;
        for (r, &pole) in self.pole_rows.iter().enumerate() {
            if pole {
                mark(r as isize, -p, p);
            }
        }
        if !self.periodic {
            mark(0, 0, p);
            mark(rows as isize - 1, -p, 0);
        }
        // Rows whose normal is within two grid steps of vertical.
        let step = self.bands.iter().map(|b| b.dtheta.abs()).fold(0.0, f64::max);
        for (r, &t) in self.thetas.iter().enumerate() {
            let lat = (t + FRAC_PI_2).rem_euclid(std::f64::consts::PI) - FRAC_PI_2;
            if (lat.abs() - FRAC_PI_2).abs() < 2.0 * step {
                out[r] = true;
            }
        }
        out
    }

    /// Vertices and faces with pole rows collapsed to single points. Quads
    /// between ordinary rows, triangle fans at poles.
    pub fn topology(&self) -> (Vec<Vec3>, Vec<Vec<usize>>) {
        let (rows, cols) = (self.rows(), self.cols());
        let mut verts = Vec::new();
        let mut ids: Vec<Vec<usize>> = Vec::with_capacity(rows);
        for r in 0..rows {
            if self.pole_rows[r] {
                let id = verts.len();
                verts.push(self.vertices[self.index(r, 0)]);
                ids.push(vec![id; cols]);
            } else {
                let base = verts.len();
                verts.extend((0..cols).map(|c| self.vertices[self.index(r, c)]));
                ids.push((base..base + cols).collect());
            }
        }
        let band_rows = if self.periodic { rows } else { rows - 1 };
        let mut faces = Vec::new();
        for r in 0..band_rows {
            let s = (r + 1) % rows;
            for c in 0..cols {
                let d = (c + 1) % cols;
                let quad = [ids[r][c], ids[r][d], ids[s][d], ids[s][c]];
                let mut face: Vec<usize> = Vec::with_capacity(4);
                for v in quad {
                    if face.last() != Some(&v) && face.first() != Some(&v) || face.is_empty() {
                        face.push(v);
                    }
                }
                if face.len() >= 3 {
                    faces.push(face);
                }
            }
        }
        (verts, faces)
    }

    /// Every edge borders exactly two faces.
    pub fn is_watertight(&self) -> bool {
        let (_, faces) = self.topology();
        let mut count: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
        for f in &faces {
            for k in 0..f.len() {
                let (a, b) = (f[k], f[(k + 1) % f.len()]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }
}

/// Per-vertex anisotropic curvature data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeOperatorField {
    pub rows: usize,
    pub cols: usize,
    /// `S` in the parametric basis (theta, rho); NaN at excluded pole vertices.
    pub operator: Vec<Matrix2<f64>>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub h2: Vec<f64>,
    /// `tr(S)^2 / 4 - det S`; nonnegative means real eigenvalues.
    pub discriminant: Vec<f64>,
    pub excluded: Vec<bool>,
}

/// `S = -(d xi~)(dX)^-1` by central differences in (row, column).
pub fn anisotropic_shape_operator(mesh: &SurfaceMesh) -> Result<ShapeOperatorField> {
    let (rows, cols) = (mesh.rows(), mesh.cols());
    let excluded_rows = mesh.excluded_rows();
    let diff = |f: &[Vec3], r: usize, c: usize| -> (Vec3, Vec3) {
        let at = |rr: usize, cc: usize| f[rr * cols + cc];
        let d_theta = if mesh.periodic {
            (at((r + 1) % rows, c) - at((r + rows - 1) % rows, c)) * 0.5
        } else if r == 0 {
            (at(1, c) * 4.0 - at(0, c) * 3.0 - at(2, c)) * 0.5
        } else if r + 1 == rows {
            (at(r, c) * 3.0 - at(r - 1, c) * 4.0 + at(r - 2, c)) * 0.5
        } else {
            (at(r + 1, c) - at(r - 1, c)) * 0.5
        };
        let d_rho = (at(r, (c + 1) % cols) - at(r, (c + cols - 1) % cols)) * 0.5;
        (d_theta, d_rho)
    };
    type RowOut = Vec<(Matrix2<f64>, bool, Option<usize>)>;
    let per_row: Vec<RowOut> = par_map(rows, |r| {
        (0..cols)
            .map(|c| {
                if mesh.pole_rows[r] {
                    return (Matrix2::from_element(f64::NAN), true, None);
                }
                let (xt, xr) = diff(&mesh.vertices, r, c);
                let (et, er) = diff(&mesh.xi_tilde, r, c);
                let j = Matrix3x2::from_columns(&[xt, xr]);
                let d = Matrix3x2::from_columns(&[et, er]);
                let g = j.transpose() * j;
                let det = g.determinant();
                if !(det > 1e-14 * xt.norm_squared() * xr.norm_squared()) || xt.norm() == 0.0 || xr.norm() == 0.0 {
                    let bad = if excluded_rows[r] { None } else { Some(c) };
                    return (Matrix2::from_element(f64::NAN), true, bad);
                }
                let m = g.try_inverse().expect("nonsingular metric") * j.transpose() * d;
                (-m, excluded_rows[r], None)
            })
            .collect()
    });
    let n = rows * cols;
    let mut out = ShapeOperatorField {
        rows,
        cols,
        operator: Vec::with_capacity(n),
        k1: Vec::with_capacity(n),
        k2: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        h2: Vec::with_capacity(n),
        discriminant: Vec::with_capacity(n),
        excluded: Vec::with_capacity(n),
    };
    for (r, row) in per_row.into_iter().enumerate() {
        for (s, excluded, bad) in row {
            if let Some(col) = bad {
                return Err(Error::DegenerateTangent { row: r, col });
            }
            let half_trace = 0.5 * s.trace();
            let det = s.determinant();
            // Same as tr^2/4 - det, without cancellation near double eigenvalues.
            let half_gap = 0.5 * (s[(0, 0)] - s[(1, 1)]);
            let disc = half_gap * half_gap + s[(0, 1)] * s[(1, 0)];
            let root = disc.max(0.0).sqrt();
            out.operator.push(s);
            out.k1.push(half_trace - root);
            out.k2.push(half_trace + root);
            out.lambda.push(half_trace);
            out.h2.push(det);
            out.discriminant.push(disc);
            out.excluded.push(excluded);
        }
    }
    Ok(out)
}

/// CAMC verdict for a surface: constant `Lambda` on non-excluded vertices
/// and the junction condition along junction circles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceVerdict {
    pub status: CamcStatus,
    /// Statistics per meridian piece (rows between junction/singular circles).
    pub profile: Vec<PieceProfile>,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub mean_lambda: f64,
    /// Largest component of a one-sided `xi~` jump normal to its junction circle.
    pub junction_gap: f64,
    pub junction_ok: bool,
}

impl SurfaceVerdict {
    pub fn is_camc(&self) -> bool {
        matches!(self.status, CamcStatus::Camc { .. })
    }
}

pub fn classify_surface(mesh: &SurfaceMesh, tol_camc: f64) -> Result<SurfaceVerdict> {
    let field = anisotropic_shape_operator(mesh)?;
    classify_surface_with(mesh, &field, tol_camc)
}

pub fn classify_surface_with(mesh: &SurfaceMesh, field: &ShapeOperatorField, tol_camc: f64) -> Result<SurfaceVerdict> {
    let (rows, cols) = (mesh.rows(), mesh.cols());
    let mut starts: Vec<usize> = mesh.junction_rows.iter().map(|j| j.row).chain(mesh.singular_rows.iter().copied()).collect();
    starts.sort_unstable();
    starts.dedup();
    let ranges: Vec<(usize, usize)> = if starts.is_empty() {
        vec![(0, rows)]
    } else if mesh.periodic {
        (0..starts.len()).map(|i| (starts[i], if i + 1 < starts.len() { starts[i + 1] } else { starts[0] + rows })).collect()
    } else {
        let mut bounds = vec![0];
        bounds.extend(starts.iter().copied().filter(|&s| s > 0));
        bounds.push(rows);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let mut profile = Vec::new();
    let mut all = Vec::new();
    for (piece, &(s, e)) in ranges.iter().enumerate() {
        let mut vals = Vec::new();
        for r in (s..e).map(|r| r % rows) {
            for c in 0..cols {
                let k = r * cols + c;
                if !field.excluded[k] {
                    vals.push(field.lambda[k]);
                }
            }
        }
        if vals.len() < MIN_PIECE_SAMPLES {
            return Err(Error::TooFewSamples { piece, count: vals.len(), required: MIN_PIECE_SAMPLES });
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        profile.push(PieceProfile {
            piece,
            samples: (s % rows, (e - 1) % rows),
            parameters: Some((mesh.thetas[s % rows], mesh.thetas[(e - 1) % rows])),
            usable: vals.len(),
            mean,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        all.extend(vals);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let max_deviation = all.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);

    let g = mesh.integrand();
    let mut junction_gap: f64 = 0.0;
    for j in &mesh.junction_rows {
        for (c, &rho) in mesh.rhos.iter().enumerate() {
            let xi_in = g.xi(&(spherical(j.theta_in, rho) * j.sigma_in as f64));
            let jump = xi_in - mesh.xi_tilde[mesh.index(j.row, c)];
            let tangent = Vec3::new(-rho.sin(), rho.cos(), 0.0);
            junction_gap = junction_gap.max((jump - tangent * jump.dot(&tangent)).norm());
        }
    }
    let junction_ok = junction_gap <= SURFACE_JUNCTION_TOL;
    let status = if max_deviation <= tol_camc && junction_ok { CamcStatus::Camc { lambda: mean } } else { CamcStatus::NotCamc };
    Ok(SurfaceVerdict { status, profile, tolerance: tol_camc, max_deviation, mean_lambda: mean, junction_gap, junction_ok })
}

/// `sum gamma(nu) dA` by the midpoint rule on each parametric cell.
pub fn energy_of_surface(mesh: &SurfaceMesh, integrand3d: &Integrand) -> f64 {
    energy_per_band(mesh, integrand3d).iter().sum()
}

/// Energy of each band of cells between consecutive meridian rows.
pub fn energy_per_band(mesh: &SurfaceMesh, integrand3d: &Integrand) -> Vec<f64> {
    let d_rho = TAU / mesh.cols() as f64;
    let s2 = mesh.scale * mesh.scale;
    mesh.bands
        .iter()
        .map(|b| {
            let u = mesh.meridian.point(b.theta_mid).x.abs();
            let area = u * mesh.meridian.speed(b.theta_mid) * b.dtheta.abs() * d_rho;
            let density: f64 = mesh
                .rhos
                .iter()
                .map(|&rho| integrand3d.gamma(&(spherical(b.theta_mid, rho + 0.5 * d_rho) * b.sigma as f64)))
                .sum();
            density * area * s2
        })
        .collect()
}
