//! Self-similar shrinking families under anisotropic mean curvature flow.
//!
//! A base shape sampled from the frontier is shrunk homothetically by
//! `scale(t) = sqrt(2 (c - t))`. The checks recompute curvature on each
//! scaled shape instead of assuming the rescaling law.

use serde::Serialize;

use crate::curves::{anisotropic_curvature_along, energy_of_curve, ClosedCurve};
use crate::error::{Error, Result};
use crate::integrand::{Integrand, Vec3};
use crate::surfaces::{anisotropic_shape_operator, energy_of_surface, energy_per_band, SurfaceMesh};

/// Default time step for residual and dissipation checks.
pub const DEFAULT_DT: f64 = 1e-3;

/// The shape being shrunk.
#[derive(Debug, Clone)]
pub enum FlowBase {
    Curve(ClosedCurve),
    Surface(SurfaceMesh),
}

impl FlowBase {
    /// Dimension `n` of the hypersurface.
    pub fn dim(&self) -> usize {
        match self {
            Self::Curve(_) => 1,
            Self::Surface(_) => 2,
        }
    }

    fn scaled(&self, r: f64) -> Self {
        match self {
            Self::Curve(c) => Self::Curve(c.scaled(r)),
            Self::Surface(m) => Self::Surface(m.scaled(r)),
        }
    }

    fn positions(&self) -> Vec<Vec3> {
        match self {
            Self::Curve(c) => c.points.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect(),
            Self::Surface(m) => m.vertices.clone(),
        }
    }

    fn xi_tilde(&self) -> Vec<Vec3> {
        match self {
            Self::Curve(c) => c.xi_tilde.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect(),
            Self::Surface(m) => m.xi_tilde.clone(),
        }
    }

    /// Per-point anisotropic mean curvature and exclusion flags.
    pub fn curvature(&self) -> Result<(Vec<f64>, Vec<bool>)> {
        match self {
            Self::Curve(c) => {
                let k = anisotropic_curvature_along(c)?;
                Ok((k.lambda, k.excluded))
            }
            Self::Surface(m) => {
                let f = anisotropic_shape_operator(m)?;
                Ok((f.lambda, f.excluded))
            }
        }
    }

    pub fn energy(&self, integrand: &Integrand) -> f64 {
        match self {
            Self::Curve(c) => energy_of_curve(c, integrand),
            Self::Surface(m) => energy_of_surface(m, integrand),
        }
    }
}

/// `X_t = sqrt(2 (c - t)) X_base` for `t < c`.
#[derive(Debug, Clone)]
pub struct FlowFamily {
    integrand: Integrand,
    c: f64,
    base: FlowBase,
}

impl FlowFamily {
    pub fn new(integrand: Integrand, c: f64, base: FlowBase) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("extinction time must be positive, got {c}")));
        }
        if integrand.dim() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), actual: integrand.dim() });
        }
        Ok(Self { integrand, c, base })
    }

    pub fn extinction_time(&self) -> f64 {
        self.c
    }

    pub fn base(&self) -> &FlowBase {
        &self.base
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `sqrt(2 (c - t))`, or an extinction error for `t >= c`.
    pub fn scale(&self, t: f64) -> Result<f64> {
        if !(t < self.c) {
            return Err(Error::Extinction { t, c: self.c });
        }
        Ok((2.0 * (self.c - t)).sqrt())
    }

    fn shape_at(&self, t: f64) -> Result<FlowBase> {
        Ok(self.base.scaled(self.scale(t)?))
    }
}

/// The shape at time `t` with its curvature computed two ways.
#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub t: f64,
    pub scale: f64,
    pub shape: FlowBase,
    /// Curvature recomputed on the scaled shape.
    pub lambda: Vec<f64>,
    pub excluded: Vec<bool>,
    /// Mean base curvature divided by the scale.
    pub lambda_expected: f64,
    /// Min and max recomputed curvature over non-excluded points.
    pub lambda_measured: (f64, f64),
}

fn mean_usable(values: &[f64], excluded: &[bool]) -> f64 {
    let (sum, count) = values
        .iter()
        .zip(excluded)
        .filter(|(v, &e)| !e && v.is_finite())
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    sum / count.max(1) as f64
}

pub fn family_at(family: &FlowFamily, t: f64) -> Result<FlowSnapshot> {
    let scale = family.scale(t)?;
    let shape = family.shape_at(t)?;
    let (lambda, excluded) = shape.curvature()?;
    let (base_lambda, base_excluded) = family.base.curvature()?;
    let measured = lambda
        .iter()
        .zip(&excluded)
        .filter(|(v, &e)| !e && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
    Ok(FlowSnapshot {
        t,
        scale,
        shape,
        lambda,
        excluded,
        lambda_expected: mean_usable(&base_lambda, &base_excluded) / scale,
        lambda_measured: measured,
    })
}

/// Largest `|(X(t+dt) - X(t-dt)) / (2 dt) - Lambda_t xi~_t|` over
/// non-excluded points, with `Lambda_t` recomputed on `X_t`.
pub fn flow_residual(family: &FlowFamily, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let ahead = family.shape_at(t + dt)?.positions();
    let behind = family.shape_at(t - dt)?.positions();
    let snap = family_at(family, t)?;
    let xi = snap.shape.xi_tilde();
    let mut worst: f64 = 0.0;
    for k in 0..ahead.len() {
        if snap.excluded[k] || !snap.lambda[k].is_finite() {
            continue;
        }
        let velocity = (ahead[k] - behind[k]) / (2.0 * dt);
        worst = worst.max((velocity - xi[k] * snap.lambda[k]).norm());
    }
    Ok(worst)
}

/// Both sides of the energy dissipation identity at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissipation {
    /// Central difference of the energy.
    pub lhs: f64,
    /// `-n * integral of Lambda_t^2 gamma(nu_t)`.
    pub rhs: f64,
    /// `d/dt [scale^n] * F(base)`, exact for the self-similar family.
    pub analytic_lhs: f64,
}

impl Dissipation {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Fills excluded or non-finite entries with the nearest usable value
/// (cyclically for curves, along rows for surfaces).
fn fill_excluded(values: &[f64], excluded: &[bool]) -> Vec<f64> {
    let n = values.len();
    let usable: Vec<usize> = (0..n).filter(|&k| !excluded[k] && values[k].is_finite()).collect();
    if usable.is_empty() {
        return values.to_vec();
    }
    let mut out = values.to_vec();
    for k in 0..n {
        if usable.binary_search(&k).is_ok() {
            continue;
        }
        let pos = usable.partition_point(|&u| u < k);
        let dist = |u: usize| (u as isize - k as isize).unsigned_abs().min(n - (u as isize - k as isize).unsigned_abs());
        let cands = [usable[pos % usable.len()], usable[(pos + usable.len() - 1) % usable.len()]];
        let best = if dist(cands[0]) <= dist(cands[1]) { cands[0] } else { cands[1] };
        out[k] = values[best];
    }
    out
}

fn curvature_energy(shape: &FlowBase, integrand: &Integrand, lambda: &[f64], excluded: &[bool]) -> f64 {
    match shape {
        FlowBase::Curve(c) => {
            let lam = fill_excluded(lambda, excluded);
            let n = c.points.len();
            let gamma = |k: usize| integrand.gamma(&Vec3::new(c.normals[k].x, c.normals[k].y, 0.0));
            (0..n)
                .map(|k| {
                    let next = (k + 1) % n;
                    let len = (c.points[next] - c.points[k]).norm();
                    0.5 * (lam[k] * lam[k] * gamma(k) + lam[next] * lam[next] * gamma(next)) * len
                })
                .sum()
        }
        FlowBase::Surface(m) => {
            let cols = m.cols();
            let rows = m.rows();
            // Lambda is constant along rows of a rotational mesh; use the row mean.
            let row_lambda: Vec<f64> = (0..rows)
                .map(|r| {
                    let slice = &lambda[r * cols..(r + 1) * cols];
                    let ex = &excluded[r * cols..(r + 1) * cols];
                    mean_usable(slice, ex)
                })
                .collect();
            let row_excluded: Vec<bool> = (0..rows).map(|r| excluded[r * cols..(r + 1) * cols].iter().all(|&e| e)).collect();
            let lam = fill_excluded(&row_lambda, &row_excluded);
            energy_per_band(m, integrand)
                .iter()
                .enumerate()
                .map(|(b, e)| {
                    let next = (b + 1) % rows;
                    0.5 * (lam[b] * lam[b] + lam[next] * lam[next]) * e
                })
                .sum()
        }
    }
}

pub fn dissipation_check(family: &FlowFamily, t: f64, dt: f64) -> Result<Dissipation> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let g = &family.integrand;
    let n = family.dim() as f64;
    let ahead = family.shape_at(t + dt)?.energy(g);
    let behind = family.shape_at(t - dt)?.energy(g);
    let lhs = (ahead - behind) / (2.0 * dt);
    let snap = family_at(family, t)?;
    let rhs = -n * curvature_energy(&snap.shape, g, &snap.lambda, &snap.excluded);
    // d/dt (2(c - t))^(n/2) = -n (2(c - t))^(n/2 - 1)
    let s = snap.scale;
    let analytic_lhs = -n * s.powf(n - 2.0) * family.base.energy(g);
    Ok(Dissipation { lhs, rhs, analytic_lhs })
}

/// Summary of the checks at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub t: f64,
    pub dt: f64,
    pub c: f64,
    pub scale: f64,
    pub residual: f64,
    /// Residual at `dt / 2`, for the convergence ratio.
    pub residual_half: f64,
    pub residual_ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub analytic_lhs: f64,
    pub energy: f64,
    pub base_energy: f64,
    pub lambda_expected: f64,
    pub lambda_measured_minmax: (f64, f64),
}

pub fn flow_report(family: &FlowFamily, t: f64, dt: f64) -> Result<FlowReport> {
    let snap = family_at(family, t)?;
    let residual = flow_residual(family, t, dt)?;
    let residual_half = flow_residual(family, t, 0.5 * dt)?;
    let d = dissipation_check(family, t, dt)?;
    Ok(FlowReport {
        t,
        dt,
        c: family.c,
        scale: snap.scale,
        residual,
        residual_half,
        residual_ratio: residual / residual_half.max(f64::MIN_POSITIVE),
        lhs: d.lhs,
        rhs: d.rhs,
        analytic_lhs: d.analytic_lhs,
        energy: snap.shape.energy(&family.integrand),
        base_energy: family.base.energy(&family.integrand),
        lambda_expected: snap.lambda_expected,
        lambda_measured_minmax: snap.lambda_measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{catalogue_curve, stitch, ArcSpec};
    use crate::frontier::{Interval, V2};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn wulff_family(c: f64) -> FlowFamily {
        let g = Integrand::hexic2d();
        let curve = stitch(&g, &catalogue_curve(&g, "wulff").unwrap(), 1024).unwrap();
        FlowFamily::new(g, c, FlowBase::Curve(curve)).unwrap()
    }

    #[test]
    fn scale_and_extinction() {
        let f = wulff_family(1.0);
        assert_abs_diff_eq!(f.scale(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(f.scale(1.0), Err(Error::Extinction { .. })));
        assert!(matches!(family_at(&f, 1.5), Err(Error::Extinction { .. })));
        assert!(f.scale(0.999_999).unwrap() < 1e-2);
    }

    #[test]
    fn wulff_snapshots() {
        let f = wulff_family(0.5);
        let s = family_at(&f, 0.0).unwrap();
        assert_abs_diff_eq!(s.lambda_measured.0, -1.0, epsilon = 1e-9);
        let f = wulff_family(1.0);
        let s = family_at(&f, 0.875).unwrap();
        assert_abs_diff_eq!(s.scale, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.lambda_measured.0, -2.0, epsilon = 2e-2);
        assert_abs_diff_eq!(s.lambda_measured.1, -2.0, epsilon = 2e-2);
    }

    #[test]
    fn residual_is_second_order() {
        let f = wulff_family(1.0);
        let r1 = flow_residual(&f, 0.0, 1e-2).unwrap();
        let r2 = flow_residual(&f, 0.0, 1e-3).unwrap();
        assert!(r1 / r2 > 80.0, "{r1} / {r2}");
    }

    #[test]
    fn ellipse_is_not_a_shrinker() {
        let g = Integrand::isotropic(1);
        let pts: Vec<V2> = (0..2048).map(|k| TAU * k as f64 / 2048.0).map(|t| V2::new(2.0 * t.cos(), t.sin())).collect();
        let f = FlowFamily::new(g.clone(), 1.0, FlowBase::Curve(ClosedCurve::from_polyline(&g, &pts).unwrap())).unwrap();
        let a = flow_residual(&f, 0.0, 1e-3).unwrap();
        let b = flow_residual(&f, 0.0, 1e-4).unwrap();
        assert!(a > 0.1 && b > 0.1 && (a - b).abs() < 1e-3 * a);
    }

    #[test]
    fn circle_dissipation() {
        let g = Integrand::isotropic(1);
        let curve = stitch(&g, &ArcSpec::new(vec![Interval::new(0.0, TAU)]), 4096).unwrap();
        let f = FlowFamily::new(g, 0.5, FlowBase::Curve(curve)).unwrap();
        let d = dissipation_check(&f, 0.0, 1e-3).unwrap();
        assert_abs_diff_eq!(d.lhs, -TAU, epsilon = 1e-4);
        assert_abs_diff_eq!(d.rhs, -TAU, epsilon = 1e-4);
    }

    #[test]
    fn sphere_is_an_exact_shrinker() {
        let g = Integrand::isotropic(2);
        let mesh = SurfaceMesh::unit_sphere(&g, (128, 128)).unwrap();
        let f = FlowFamily::new(g, 1.0, FlowBase::Surface(mesh)).unwrap();
        assert!(flow_residual(&f, 0.0, 1e-4).unwrap() <= 1e-8);
        let d = dissipation_check(&f, 0.0, 1e-3).unwrap();
        assert!(d.relative_gap() < 1e-4, "{d:?}");
        assert_abs_diff_eq!(d.analytic_lhs, -2.0 * 4.0 * PI, epsilon = 1e-2);
    }

    #[test]
    fn energy_scale_law_and_monotonicity() {
        let f = wulff_family(1.0);
        let base = f.base().energy(f.integrand());
        let mut last = f64::INFINITY;
        for t in [0.1, 0.3, 0.6, 0.9] {
            let e = family_at(&f, t).unwrap().shape.energy(f.integrand());
            assert!((e - f.scale(t).unwrap() * base).abs() <= 1e-9);
            assert!(e < last);
            last = e;
        }
    }
}
