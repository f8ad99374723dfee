//! Anisotropic energy densities on the unit circle (n = 1) and sphere (n = 2).
//!
//! Every density is stored through its degree-one homogeneous extension
//!
//! ```text
//! gamma_bar(x) = s * P(x) / |x|^(d-1) + <a, x>
//! ```
//!
//! where `P` is a homogeneous polynomial of even degree `d`, `s > 0` a scale
//! and `a` an optional linear term. The builtin densities are all of this
//! form, which keeps analytic first and second derivatives exact.
//!
//! The Cahn-Hoffman map is the ambient gradient of `gamma_bar` at a unit
//! vector, and the operator `A = D^2 gamma + gamma * 1` is the ambient
//! Hessian of `gamma_bar` restricted to the tangent plane.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};

pub type Vec3 = Vector3<f64>;

/// Tolerance on the minimum eigenvalue of `A` for the convexity verdict.
pub const TOL_CONVEX: f64 = 1e-9;
/// Default central-difference step for numeric gradients.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-6;
/// Geodesic step for numeric second derivatives.
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;
/// Positivity grid for n = 1.
pub const POSITIVITY_GRID_1D: usize = 1024;
/// Positivity grid for n = 2 (latitudes x longitudes).
pub const POSITIVITY_GRID_2D: (usize, usize) = (64, 128);
/// Number of random pairs in the midpoint-convexity cross-check.
pub const MIDPOINT_PAIRS: usize = 10_000;

/// A unit vector in R^(n+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    n: usize,
    v: Vec3,
}

/// Serialized as its component list.
impl Serialize for Direction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.components().serialize(s)
    }
}

impl Direction {
    /// `(cos theta, sin theta)` on the unit circle.
    pub fn from_angle(theta: f64) -> Self {
        Self { n: 1, v: Vec3::new(theta.cos(), theta.sin(), 0.0) }
    }

    /// `(cos theta cos rho, cos theta sin rho, sin theta)` on the unit sphere;
    /// `theta` is the latitude and `rho` the rotation angle about the vertical axis.
    pub fn from_spherical(theta: f64, rho: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sr, cr) = rho.sin_cos();
        Self { n: 2, v: Vec3::new(ct * cr, ct * sr, st) }
    }

    /// Normalizes `components` (length 2 or 3).
    pub fn new(components: &[f64]) -> Result<Self> {
        let n = match components.len() {
            2 => 1,
            3 => 2,
            len => return Err(Error::InvalidArgument(format!("direction needs 2 or 3 components, got {len}"))),
        };
        let mut v = Vec3::zeros();
        v.as_mut_slice()[..components.len()].copy_from_slice(components);
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
        }
        Ok(Self { n, v: v / norm })
    }

    /// Sphere dimension n (the ambient space is R^(n+1)).
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self) -> Vec3 {
        self.v
    }

    pub fn components(&self) -> &[f64] {
        &self.v.as_slice()[..self.n + 1]
    }

    /// Angle in `[0, 2 pi)` (n = 1).
    pub fn angle(&self) -> f64 {
        self.v[1].atan2(self.v[0]).rem_euclid(2.0 * PI)
    }

    /// `(theta, rho)` with `theta` in `[-pi/2, pi/2]` and `rho` in `[0, 2 pi)` (n = 2).
    pub fn spherical(&self) -> (f64, f64) {
        let theta = self.v[2].clamp(-1.0, 1.0).asin();
        let rho = self.v[1].atan2(self.v[0]).rem_euclid(2.0 * PI);
        (theta, rho)
    }

    pub fn negated(&self) -> Self {
        Self { n: self.n, v: -self.v }
    }

    /// Orthonormal tangent frame at the direction. For n = 1 only the first
    /// vector is meaningful; it is `d nu / d theta`.
    pub fn tangent_frame(&self) -> [Vec3; 2] {
        match self.n {
            1 => [Vec3::new(-self.v[1], self.v[0], 0.0), Vec3::zeros()],
            _ => {
                let (theta, rho) = self.spherical();
                let (st, ct) = theta.sin_cos();
                let (sr, cr) = rho.sin_cos();
                [Vec3::new(-st * cr, -st * sr, ct), Vec3::new(-sr, cr, 0.0)]
            }
        }
    }
}

/// `A = D^2 gamma + gamma * 1` at a direction, in the tangent frame of
/// [`Direction::tangent_frame`]. For n = 1 only the (0, 0) entry is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOperatorA {
    n: usize,
    m: Matrix2<f64>,
}

impl SphereOperatorA {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> Matrix2<f64> {
        self.m
    }

    pub fn scalar(&self) -> f64 {
        self.m[(0, 0)]
    }

    pub fn determinant(&self) -> f64 {
        match self.n {
            1 => self.m[(0, 0)],
            _ => self.m.determinant(),
        }
    }

    /// Eigenvalues (ascending) of the symmetric part.
    pub fn eigenvalues(&self) -> (f64, f64) {
        if self.n == 1 {
            return (self.m[(0, 0)], self.m[(0, 0)]);
        }
        let a = self.m[(0, 0)];
        let d = self.m[(1, 1)];
        let b = 0.5 * (self.m[(0, 1)] + self.m[(1, 0)]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn asymmetry(&self) -> f64 {
        (self.m[(0, 1)] - self.m[(1, 0)]).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Isotropic,
    /// `cos^6 theta + sin^6 theta` on S^1.
    Hexic2d,
    /// [`Kind::Hexic2d`] rotated by pi/4.
    Hexic2dRotated,
    /// `(nu1^2 + nu2^2)^3 + nu3^6` on S^2.
    Hexic3d,
    /// Rotational lift of [`Kind::Hexic2dRotated`].
    Hexic3dRotated,
    CustomPolynomial,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Isotropic,
        Kind::Hexic2d,
        Kind::Hexic2dRotated,
        Kind::Hexic3d,
        Kind::Hexic3dRotated,
        Kind::CustomPolynomial,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Isotropic => "isotropic",
            Kind::Hexic2d => "hexic2d",
            Kind::Hexic2dRotated => "hexic2d-rotated",
            Kind::Hexic3d => "hexic3d",
            Kind::Hexic3dRotated => "hexic3d-rotated",
            Kind::CustomPolynomial => "custom-polynomial",
        }
    }

    /// Whether the density is one of the pi/2-symmetric hexic profiles
    /// (possibly rotated) in the plane.
    pub fn is_planar_hexic(&self) -> bool {
        matches!(self, Kind::Hexic2d | Kind::Hexic2dRotated)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidIntegrand(format!("unknown kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Central differences; `h` is the gradient step (scaled by `max(1, |x|)`),
    /// `h2` the geodesic step for second derivatives.
    Numeric { h: f64, h2: f64 },
}

impl DerivativeMode {
    pub fn numeric() -> Self {
        DerivativeMode::Numeric { h: DEFAULT_GRADIENT_STEP, h2: DEFAULT_HESSIAN_STEP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Analytic,
    Numeric,
}

/// One polynomial term in an integrand file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// On-disk integrand description.
///
/// ```json
/// {"n": 1, "kind": "hexic2d", "derivative_mode": "analytic"}
/// {"n": 1, "kind": "custom-polynomial",
///  "coefficients": [{"coef": 1, "powers": [4, 0]}, {"coef": 1, "powers": [0, 4]}],
///  "derivative_mode": "numeric", "h": 1e-6}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrandSpec {
    pub n: usize,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<TermSpec>,
    #[serde(default)]
    pub derivative_mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

/// An anisotropic energy density `gamma: S^n -> R_{>0}`, n in {1, 2}.
#[derive(Debug, Clone)]
pub struct Integrand {
    n: usize,
    kind: Kind,
    numerator: Polynomial,
    degree: u32,
    scale: f64,
    linear: Vec3,
    mode: DerivativeMode,
    profile: Option<Box<Integrand>>,
}

fn hexic_profile() -> Polynomial {
    Polynomial::new([Monomial::new(1.0, [6, 0, 0]), Monomial::new(1.0, [0, 6, 0])])
}

fn hexic_profile_rotated() -> Polynomial {
    Polynomial::new([
        Monomial::new(0.25, [6, 0, 0]),
        Monomial::new(3.75, [4, 2, 0]),
        Monomial::new(3.75, [2, 4, 0]),
        Monomial::new(0.25, [0, 6, 0]),
    ])
}

fn sum_of_squares(n: usize) -> Polynomial {
    Polynomial::new((0..=n).map(|i| {
        let mut p = [0; 3];
        p[i] = 2;
        Monomial::new(1.0, p)
    }))
}

impl Integrand {
    pub fn isotropic(n: usize) -> Self {
        assert!(n == 1 || n == 2, "isotropic integrand needs n in {{1, 2}}");
        Self::from_parts(n, Kind::Isotropic, sum_of_squares(n), None)
    }

    /// `cos^6 theta + sin^6 theta`.
    pub fn hexic2d() -> Self {
        Self::from_parts(1, Kind::Hexic2d, hexic_profile(), None)
    }

    /// [`Integrand::hexic2d`] rotated by pi/4.
    pub fn hexic2d_rotated() -> Self {
        Self::from_parts(1, Kind::Hexic2dRotated, hexic_profile_rotated(), None)
    }

    pub fn hexic3d() -> Self {
        rotational_lift(&Self::hexic2d()).expect("hexic2d is axially symmetric")
    }

    pub fn hexic3d_rotated() -> Self {
        rotational_lift(&Self::hexic2d_rotated()).expect("rotated hexic2d is axially symmetric")
    }

    fn from_parts(n: usize, kind: Kind, numerator: Polynomial, profile: Option<Box<Integrand>>) -> Self {
        let degree = numerator.homogeneous_degree().unwrap_or(0);
        Self {
            n,
            kind,
            numerator,
            degree,
            scale: 1.0,
            linear: Vec3::zeros(),
            mode: DerivativeMode::Analytic,
            profile,
        }
    }

    pub fn builtin(kind: Kind, n: usize) -> Result<Self> {
        let expect_n = |want: usize| {
            if n == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: want, actual: n })
            }
        };
        match kind {
            Kind::Isotropic => {
                if n != 1 && n != 2 {
                    return Err(Error::InvalidIntegrand(format!("n must be 1 or 2, got {n}")));
                }
                Ok(Self::isotropic(n))
            }
            Kind::Hexic2d => expect_n(1).map(|_| Self::hexic2d()),
            Kind::Hexic2dRotated => expect_n(1).map(|_| Self::hexic2d_rotated()),
            Kind::Hexic3d => expect_n(2).map(|_| Self::hexic3d()),
            Kind::Hexic3dRotated => expect_n(2).map(|_| Self::hexic3d_rotated()),
            Kind::CustomPolynomial => {
                Err(Error::InvalidIntegrand("custom-polynomial needs coefficients".into()))
            }
        }
    }

    /// Custom density `P(x) / |x|^(d-1)` for a homogeneous polynomial `P` of
    /// even degree `d`, checked for positivity on the default grid.
    pub fn custom(n: usize, numerator: Polynomial) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidIntegrand(format!("n must be 1 or 2, got {n}")));
        }
        if numerator.is_zero() {
            return Err(Error::InvalidIntegrand("polynomial is zero".into()));
        }
        if numerator.variables_used() > n + 1 {
            return Err(Error::InvalidIntegrand(format!(
                "polynomial uses {} variables but n = {n}",
                numerator.variables_used()
            )));
        }
        let d = numerator
            .homogeneous_degree()
            .ok_or_else(|| Error::InvalidIntegrand("polynomial is not homogeneous".into()))?;
        if d == 0 || d % 2 != 0 {
            return Err(Error::InvalidIntegrand(format!("polynomial degree must be even and positive, got {d}")));
        }
        let g = Self::from_parts(n, Kind::CustomPolynomial, numerator, None);
        g.validate_positive()?;
        Ok(g)
    }

    pub fn from_spec(spec: &IntegrandSpec) -> Result<Self> {
        let mut g = if spec.kind == Kind::CustomPolynomial {
            let arity = spec.n + 1;
            let mut terms = Vec::with_capacity(spec.coefficients.len());
            for t in &spec.coefficients {
                if t.powers.len() != arity {
                    return Err(Error::InvalidIntegrand(format!(
                        "term has {} powers, expected {arity}",
                        t.powers.len()
                    )));
                }
                let mut p = [0; 3];
                p[..arity].copy_from_slice(&t.powers);
                terms.push(Monomial::new(t.coef, p));
            }
            Self::custom(spec.n, Polynomial::new(terms))?
        } else {
            if !spec.coefficients.is_empty() {
                return Err(Error::InvalidIntegrand(format!("kind '{}' takes no coefficients", spec.kind)));
            }
            Self::builtin(spec.kind, spec.n)?
        };
        g.mode = match spec.derivative_mode {
            ModeName::Analytic => DerivativeMode::Analytic,
            ModeName::Numeric => {
                let h = spec.h.unwrap_or(DEFAULT_GRADIENT_STEP);
                if !(h > 0.0 && h < 0.1) {
                    return Err(Error::InvalidIntegrand(format!("numeric step h = {h} out of range")));
                }
                DerivativeMode::Numeric { h, h2: DEFAULT_HESSIAN_STEP }
            }
        };
        if let Some(p) = g.profile.as_mut() {
            p.mode = g.mode;
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: IntegrandSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidIntegrand(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> IntegrandSpec {
        let coefficients = if self.kind == Kind::CustomPolynomial {
            self.numerator
                .terms()
                .iter()
                .map(|t| TermSpec { coef: t.coef, powers: t.powers[..self.n + 1].to_vec() })
                .collect()
        } else {
            Vec::new()
        };
        let (derivative_mode, h) = match self.mode {
            DerivativeMode::Analytic => (ModeName::Analytic, None),
            DerivativeMode::Numeric { h, .. } => (ModeName::Numeric, Some(h)),
        };
        IntegrandSpec { n: self.n, kind: self.kind, coefficients, derivative_mode, h }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        if let Some(p) = self.profile.as_mut() {
            p.mode = mode;
        }
        self
    }

    /// `c * gamma` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
        }
        let mut g = self.clone();
        g.scale *= c;
        g.linear *= c;
        g.kind = if g.kind == Kind::Isotropic { Kind::CustomPolynomial } else { g.kind };
        g.profile = g.profile.map(|p| p.scaled(c)).transpose()?.map(Box::new);
        Ok(g)
    }

    /// `gamma + <a, nu>`, rechecked for positivity.
    pub fn with_linear_term(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.n + 1 {
            return Err(Error::DimensionMismatch { expected: self.n, actual: a.len().saturating_sub(1) });
        }
        let mut g = self.clone();
        for (i, ai) in a.iter().enumerate() {
            g.linear[i] += ai;
        }
        g.kind = Kind::CustomPolynomial;
        g.profile = None;
        g.validate_positive()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    /// The planar profile of a rotationally symmetric density (n = 2).
    pub fn profile(&self) -> Option<&Integrand> {
        self.profile.as_deref()
    }

    pub fn linear_term(&self) -> Vec3 {
        self.linear
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, actual: n })
        }
    }

    /// Positivity check over the default direction grid.
    pub fn validate_positive(&self) -> Result<()> {
        self.validate_positive_on(POSITIVITY_GRID_1D, POSITIVITY_GRID_2D)
    }

    pub fn validate_positive_on(&self, grid_1d: usize, grid_2d: (usize, usize)) -> Result<()> {
        let check = |nu: Direction| {
            let v = self.gamma(&nu.vector());
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonPositive { direction: nu.components().to_vec(), value: v })
            }
        };
        if self.n == 1 {
            (0..grid_1d).try_for_each(|k| check(Direction::from_angle(2.0 * PI * k as f64 / grid_1d as f64)))
        } else {
            let (nt, nr) = grid_2d;
            for i in 0..nt {
                let theta = -PI / 2.0 + PI * (i as f64 + 0.5) / nt as f64;
                for j in 0..nr {
                    check(Direction::from_spherical(theta, 2.0 * PI * j as f64 / nr as f64))?;
                }
            }
            check(Direction::from_spherical(PI / 2.0, 0.0))?;
            check(Direction::from_spherical(-PI / 2.0, 0.0))
        }
    }

    /// `gamma(nu)`.
    pub fn evaluate(&self, nu: &Direction) -> Result<f64> {
        self.check_dim(nu.dim())?;
        Ok(self.gamma(&nu.vector()))
    }

    /// `gamma` at a unit vector, without dimension checks.
    #[inline]
    pub fn gamma(&self, v: &Vec3) -> f64 {
        self.extension(v)
    }

    /// The degree-one homogeneous extension `gamma_bar(x) = |x| gamma(x / |x|)`.
    pub fn homogeneous_extension(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n + 1 {
            return Err(Error::DimensionMismatch { expected: self.n, actual: x.len().saturating_sub(1) });
        }
        let mut v = Vec3::zeros();
        v.as_mut_slice()[..x.len()].copy_from_slice(x);
        Ok(self.extension(&v))
    }

    #[inline]
    pub fn extension(&self, x: &Vec3) -> f64 {
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            return 0.0;
        }
        let r = r2.sqrt();
        self.scale * self.numerator.eval(x) / r.powi(self.degree as i32 - 1) + self.linear.dot(x)
    }

    fn analytic_gradient(&self, x: &Vec3) -> Vec3 {
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            return self.linear;
        }
        let r = r2.sqrt();
        let d = self.degree as i32;
        let p = self.numerator.eval(x);
        let gp = self.numerator.gradient(x);
        let q = r.powi(-(d - 1));
        let gq = x * (-(d - 1) as f64 * r.powi(-(d + 1)));
        (gp * q + gq * p) * self.scale + self.linear
    }

    fn analytic_hessian(&self, x: &Vec3) -> Matrix3<f64> {
        let r = x.norm();
        let d = self.degree as i32;
        let df = d as f64;
        let p = self.numerator.eval(x);
        let gp = self.numerator.gradient(x);
        let hp = self.numerator.hessian(x);
        let q = r.powi(-(d - 1));
        let gq = x * (-(df - 1.0) * r.powi(-(d + 1)));
        let hq = (Matrix3::identity() * r.powi(-(d + 1)) - x * x.transpose() * ((df + 1.0) * r.powi(-(d + 3))))
            * (-(df - 1.0));
        (hp * q + gp * gq.transpose() + gq * gp.transpose() + hq * p) * self.scale
    }

    fn numeric_gradient(&self, x: &Vec3, h: f64) -> Vec3 {
        let step = h * x.norm().max(1.0);
        let mut g = Vec3::zeros();
        for i in 0..=self.n {
            let mut e = Vec3::zeros();
            e[i] = step;
            g[i] = (self.extension(&(x + e)) - self.extension(&(x - e))) / (2.0 * step);
        }
        g
    }

    /// Ambient gradient of the homogeneous extension at a unit vector: the
    /// Cahn-Hoffman map `xi_gamma(nu) = D gamma + gamma(nu) nu`.
    #[inline]
    pub fn xi(&self, v: &Vec3) -> Vec3 {
        match self.mode {
            DerivativeMode::Analytic => self.analytic_gradient(v),
            DerivativeMode::Numeric { h, .. } => self.numeric_gradient(v, h),
        }
    }

    pub fn extension_gradient(&self, nu: &Direction) -> Result<Vec3> {
        self.check_dim(nu.dim())?;
        Ok(self.xi(&nu.vector()))
    }

    /// `A = D^2 gamma + gamma * 1` at `nu`.
    pub fn operator_a(&self, nu: &Direction) -> Result<SphereOperatorA> {
        self.check_dim(nu.dim())?;
        Ok(self.a_at(nu))
    }

    pub(crate) fn a_at(&self, nu: &Direction) -> SphereOperatorA {
        let frame = nu.tangent_frame();
        let mut m = Matrix2::zeros();
        match self.mode {
            DerivativeMode::Analytic => {
                let hess = self.analytic_hessian(&nu.vector());
                for i in 0..self.n {
                    for j in 0..self.n {
                        m[(i, j)] = frame[i].dot(&(hess * frame[j]));
                    }
                }
            }
            DerivativeMode::Numeric { h2, .. } => {
                let v = nu.vector();
                let along = |s: Vec3| {
                    let len = s.norm();
                    if len == 0.0 {
                        return self.gamma(&v);
                    }
                    self.gamma(&(v * len.cos() + s * (len.sin() / len)))
                };
                let f0 = along(Vec3::zeros());
                for i in 0..self.n {
                    let ei = frame[i] * h2;
                    m[(i, i)] = (along(ei) - 2.0 * f0 + along(-ei)) / (h2 * h2) + f0;
                    for j in (i + 1)..self.n {
                        let ej = frame[j] * h2;
                        let mixed =
                            (along(ei + ej) - along(ei - ej) - along(ej - ei) + along(-ei - ej)) / (4.0 * h2 * h2);
                        m[(i, j)] = mixed;
                        m[(j, i)] = mixed;
                    }
                }
            }
        }
        SphereOperatorA { n: self.n, m }
    }

    /// Planar Cahn-Hoffman point at angle `theta` (n = 1).
    #[inline]
    pub fn xi_at_angle(&self, theta: f64) -> Vector2<f64> {
        let x = self.xi(&Vec3::new(theta.cos(), theta.sin(), 0.0));
        Vector2::new(x[0], x[1])
    }

    /// Scalar `A(theta) = gamma'' + gamma` (n = 1).
    #[inline]
    pub fn a_at_angle(&self, theta: f64) -> f64 {
        self.a_at(&Direction::from_angle(theta)).scalar()
    }

    /// Samples the minimum eigenvalue of `A` on a direction grid and
    /// cross-checks the verdict against midpoint convexity of the
    /// homogeneous extension on random pairs.
    pub fn convexity_report(&self, grid: usize) -> Result<ConvexityReport> {
        if grid < 64 {
            return Err(Error::InvalidArgument(format!("grid resolution must be >= 64, got {grid}")));
        }
        let directions: Vec<Direction> = if self.n == 1 {
            (0..grid).map(|k| Direction::from_angle(2.0 * PI * k as f64 / grid as f64)).collect()
        } else {
            let mut dirs = Vec::with_capacity(grid * 2 * grid + 2);
            for i in 0..grid {
                let theta = -PI / 2.0 + PI * (i as f64 + 0.5) / grid as f64;
                for j in 0..2 * grid {
                    dirs.push(Direction::from_spherical(theta, PI * j as f64 / grid as f64));
                }
            }
            dirs.push(Direction::from_spherical(PI / 2.0, 0.0));
            dirs.push(Direction::from_spherical(-PI / 2.0, 0.0));
            dirs
        };
        let (min_eigenvalue, witness) = directions
            .iter()
            .map(|nu| (self.a_at(nu).min_eigenvalue(), *nu))
            .fold((f64::INFINITY, directions[0]), |acc, x| if x.0 < acc.0 { x } else { acc });
        let eigen_convex = min_eigenvalue >= -TOL_CONVEX;
        let midpoint = self.midpoint_test(MIDPOINT_PAIRS, 0x5eed_c0de);
        reconcile_convexity(eigen_convex, min_eigenvalue, witness, midpoint)
    }

    fn midpoint_test(&self, pairs: usize, seed: u64) -> MidpointOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violations = 0;
        let mut worst: Option<(f64, Vec3, Vec3)> = None;
        for _ in 0..pairs {
            let nu = if self.n == 1 {
                Direction::from_angle(rng.gen_range(0.0..2.0 * PI))
            } else {
                let z: f64 = rng.gen_range(-1.0..=1.0);
                let phi = rng.gen_range(0.0..2.0 * PI);
                Direction::from_spherical(z.asin(), phi)
            };
            let frame = nu.tangent_frame();
            let t = if self.n == 1 {
                frame[0]
            } else {
                let psi = rng.gen_range(0.0..2.0 * PI);
                frame[0] * psi.cos() + frame[1] * psi.sin()
            };
            let len = 10f64.powf(rng.gen_range(-3.0..0.0));
            let x = nu.vector() + t * len;
            let y = nu.vector() - t * len;
            let gx = self.extension(&x);
            let gy = self.extension(&y);
            let excess = 2.0 * self.extension(&nu.vector()) - gx - gy;
            if excess > 1e-12 * (gx + gy) {
                violations += 1;
                if worst.as_ref().is_none_or(|w| excess > w.0) {
                    worst = Some((excess, x, y));
                }
            }
        }
        MidpointOutcome {
            pairs,
            violations,
            witness: worst.map(|(_, x, y)| {
                (x.as_slice()[..self.n + 1].to_vec(), y.as_slice()[..self.n + 1].to_vec())
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MidpointOutcome {
    pub pairs: usize,
    pub violations: usize,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

pub(crate) fn reconcile_convexity(
    eigen_convex: bool,
    min_eigenvalue: f64,
    witness: Direction,
    midpoint: MidpointOutcome,
) -> Result<ConvexityReport> {
    let midpoint_convex = midpoint.violations == 0;
    if eigen_convex != midpoint_convex {
        return Err(Error::ConvexityDisagreement {
            eigen_convex,
            min_eigenvalue,
            eigen_witness: witness.components().to_vec(),
            midpoint_convex,
            midpoint_witness: midpoint.witness,
        });
    }
    Ok(ConvexityReport {
        is_convex: eigen_convex,
        min_eigenvalue,
        witness,
        pairs_tested: midpoint.pairs,
        midpoint_violations: midpoint.violations,
        midpoint_witness: midpoint.witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub is_convex: bool,
    pub min_eigenvalue: f64,
    /// Direction minimizing the smallest eigenvalue of `A`.
    pub witness: Direction,
    pub pairs_tested: usize,
    pub midpoint_violations: usize,
    pub midpoint_witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Lifts a planar profile density to a rotationally symmetric density on
/// S^2 by substituting `nu1^2 -> nu1^2 + nu2^2` (the profile's second
/// variable becomes the vertical axis).
///
/// The profile must be even in its horizontal variable.
pub fn rotational_lift(profile: &Integrand) -> Result<Integrand> {
    if profile.n != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: profile.n });
    }
    if profile.linear[0] != 0.0 {
        return Err(Error::InvalidIntegrand("profile is not symmetric about the rotation axis".into()));
    }
    let numerator = profile
        .numerator
        .rotational_lift()
        .ok_or_else(|| Error::InvalidIntegrand("profile is not symmetric about the rotation axis".into()))?;
    let kind = match profile.kind {
        Kind::Isotropic => Kind::Isotropic,
        Kind::Hexic2d => Kind::Hexic3d,
        Kind::Hexic2dRotated => Kind::Hexic3dRotated,
        _ => Kind::CustomPolynomial,
    };
    let mut lifted = Integrand::from_parts(2, kind, numerator, Some(Box::new(profile.clone())));
    lifted.scale = profile.scale;
    lifted.linear = Vec3::new(0.0, 0.0, profile.linear[1]);
    lifted.mode = profile.mode;
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hexic_values() {
        let g = Integrand::hexic2d();
        assert_abs_diff_eq!(g.evaluate(&Direction::from_angle(0.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.evaluate(&Direction::from_angle(PI / 4.0)).unwrap(), 0.25, epsilon = 1e-15);
        let iso = Integrand::isotropic(1);
        assert_abs_diff_eq!(iso.evaluate(&Direction::from_angle(1.234)).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let g = Integrand::hexic2d();
        let err = g.evaluate(&Direction::from_spherical(0.1, 0.2)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, actual: 2 });
    }

    #[test]
    fn homogeneous_extension_examples() {
        let g = Integrand::hexic2d();
        assert_abs_diff_eq!(g.homogeneous_extension(&[2.0, 0.0]).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.homogeneous_extension(&[1.0, 1.0]).unwrap(), 2f64.sqrt() / 4.0, epsilon = 1e-14);
        assert_eq!(g.homogeneous_extension(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(g.homogeneous_extension(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = Integrand::hexic2d();
        let e1 = g.extension_gradient(&Direction::from_angle(0.0)).unwrap();
        assert_abs_diff_eq!(e1[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e1[1], 0.0, epsilon = 1e-14);
        let e2 = g.extension_gradient(&Direction::from_angle(PI / 2.0)).unwrap();
        assert_abs_diff_eq!(e2[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e2[1], 1.0, epsilon = 1e-14);
        let iso = Integrand::isotropic(2);
        let nu = Direction::from_spherical(0.3, 1.1);
        assert!((iso.extension_gradient(&nu).unwrap() - nu.vector()).norm() < 1e-14);
    }

    #[test]
    fn operator_a_examples() {
        let g = Integrand::hexic2d();
        assert_abs_diff_eq!(g.operator_a(&Direction::from_angle(0.0)).unwrap().scalar(), -5.0, epsilon = 1e-12);
        // -5 (9/4 - 9/2 + 1) = 25/4
        assert_abs_diff_eq!(g.operator_a(&Direction::from_angle(PI / 4.0)).unwrap().scalar(), 6.25, epsilon = 1e-12);
        let iso = Integrand::isotropic(2);
        let a = iso.operator_a(&Direction::from_spherical(0.4, 2.0)).unwrap().value();
        assert!((a - Matrix2::identity()).norm() < 1e-12);
    }

    #[test]
    fn operator_a_matches_closed_form() {
        let g = Integrand::hexic2d();
        for k in 0..1000 {
            let theta = 2.0 * PI * k as f64 / 1000.0;
            let c2 = theta.cos().powi(2);
            let closed = -5.0 * (9.0 * c2 * c2 - 9.0 * c2 + 1.0);
            assert!((g.a_at_angle(theta) - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn custom_rejects_bad_polynomials() {
        let odd = Polynomial::new([Monomial::new(1.0, [3, 0, 0])]);
        assert!(matches!(Integrand::custom(1, odd), Err(Error::InvalidIntegrand(_))));
        let mixed = Polynomial::new([Monomial::new(1.0, [2, 0, 0]), Monomial::new(1.0, [0, 4, 0])]);
        assert!(matches!(Integrand::custom(1, mixed), Err(Error::InvalidIntegrand(_))));
        let negative = Polynomial::new([Monomial::new(1.0, [2, 0, 0]), Monomial::new(-1.0, [0, 2, 0])]);
        assert!(matches!(Integrand::custom(1, negative), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn spec_json_round_trip_and_strictness() {
        let g = Integrand::from_json(r#"{"n": 1, "kind": "hexic2d", "derivative_mode": "numeric", "h": 1e-6}"#)
            .unwrap();
        assert_eq!(g.kind(), Kind::Hexic2d);
        assert!(matches!(g.mode(), DerivativeMode::Numeric { .. }));
        let back = Integrand::from_spec(&g.to_spec()).unwrap();
        assert_eq!(back.to_spec(), g.to_spec());
        assert!(Integrand::from_json(r#"{"n": 1, "kind": "hexic2d", "bogus": 1}"#).is_err());
        assert!(Integrand::from_json(r#"{"n": 2, "kind": "hexic2d"}"#).is_err());
        let custom = Integrand::from_json(
            r#"{"n": 1, "kind": "custom-polynomial",
                "coefficients": [{"coef": 1, "powers": [6, 0]}, {"coef": 1, "powers": [0, 6]}]}"#,
        )
        .unwrap();
        let nu = Direction::from_angle(0.7);
        assert_abs_diff_eq!(
            custom.evaluate(&nu).unwrap(),
            Integrand::hexic2d().evaluate(&nu).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn convexity_examples() {
        let iso = Integrand::isotropic(1).convexity_report(256).unwrap();
        assert!(iso.is_convex);
        let hex = Integrand::hexic2d().convexity_report(1024).unwrap();
        assert!(!hex.is_convex);
        assert_abs_diff_eq!(hex.min_eigenvalue, -5.0, epsilon = 1e-10);
        let theta = hex.witness.angle();
        let to_axis = (0..4).map(|k| (theta - k as f64 * PI / 2.0).abs()).fold(f64::INFINITY, f64::min);
        assert!(to_axis < 1e-12, "witness at {theta}");
        assert!(!Integrand::hexic3d().convexity_report(64).unwrap().is_convex);
        assert!(Integrand::hexic2d().convexity_report(32).is_err());
    }

    #[test]
    fn disagreeing_verdicts_are_reported() {
        let witness = Direction::from_angle(0.0);
        let outcome = MidpointOutcome { pairs: 10, violations: 1, witness: Some((vec![1.0, 0.1], vec![1.0, -0.1])) };
        let err = reconcile_convexity(true, 0.5, witness, outcome).unwrap_err();
        assert!(matches!(err, Error::ConvexityDisagreement { eigen_convex: true, midpoint_convex: false, .. }));
    }

    #[test]
    fn lift_matches_paper_forms() {
        let g1 = Integrand::hexic3d();
        let g2 = Integrand::hexic3d_rotated();
        for &(t, r) in &[(0.1, 0.2), (-0.9, 2.0), (1.2, 4.0)] {
            let nu = Direction::from_spherical(t, r);
            let v = nu.vector();
            let s = v[0] * v[0] + v[1] * v[1];
            let z = v[2];
            assert_abs_diff_eq!(g1.gamma(&v), s.powi(3) + z.powi(6), epsilon = 1e-14);
            let expect = (s.powi(3) + 15.0 * s * s * z * z + 15.0 * s * z.powi(4) + z.powi(6)) / 4.0;
            assert_abs_diff_eq!(g2.gamma(&v), expect, epsilon = 1e-14);
        }
        assert_eq!(rotational_lift(&Integrand::isotropic(1)).unwrap().kind(), Kind::Isotropic);
        let skew = Integrand::custom(
            1,
            Polynomial::new([
                Monomial::new(1.0, [2, 0, 0]),
                Monomial::new(0.5, [1, 1, 0]),
                Monomial::new(1.0, [0, 2, 0]),
            ]),
        )
        .unwrap();
        assert!(rotational_lift(&skew).is_err());
    }

    #[test]
    fn numeric_mode_tracks_analytic() {
        for g in [Integrand::hexic2d(), Integrand::hexic3d_rotated()] {
            let num = g.clone().with_mode(DerivativeMode::numeric());
            for k in 0..64 {
                let nu = if g.dim() == 1 {
                    Direction::from_angle(0.1 * k as f64)
                } else {
                    Direction::from_spherical(-1.4 + 0.045 * k as f64, 0.37 * k as f64)
                };
                assert!((g.xi(&nu.vector()) - num.xi(&nu.vector())).norm() < 1e-6);
                assert!((g.a_at(&nu).value() - num.a_at(&nu).value()).norm() < 1e-4);
            }
        }
    }
}
