use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wulff::curves::{catalogue_curve, ArcSpec};
use wulff::frontier::{sample_frontier, self_intersections, singular_set, wulff_arcs, TOL_SING};
use wulff::{Integrand, Kind};

/// Optional JSON run file; every field can also be given as a flag, and
/// flags win.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub integrand: Option<String>,
    pub res: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub report: Option<bool>,
    pub svg: Option<bool>,
    pub obj: Option<bool>,
    pub curve: Option<String>,
    pub cap: Option<usize>,
    pub c: Option<f64>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub base: Option<String>,
    pub dissipation: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
    }
}

/// A bad input that is not a core library error; exits with code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// A computed quantity outside its tolerance; exits with code 3.
#[derive(Debug)]
pub struct ToleranceFailure(pub String);

impl std::fmt::Display for ToleranceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tolerance check failed: {}", self.0)
    }
}

impl std::error::Error for ToleranceFailure {}

/// Loads an integrand from a spec file. When no such file exists and the
/// file stem names a builtin kind (`hexic2d.json`, `isotropic3d`), the
/// builtin is used.
pub fn load_integrand(spec: &str) -> Result<Integrand> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Integrand::from_json(&text).with_context(|| format!("integrand file {}", path.display()));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    let builtin = match stem {
        "isotropic" | "isotropic2d" => Some(Integrand::isotropic(1)),
        "isotropic3d" => Some(Integrand::isotropic(2)),
        other => other.parse::<Kind>().ok().and_then(|k| match k {
            Kind::CustomPolynomial => None,
            Kind::Isotropic => Some(Integrand::isotropic(1)),
            Kind::Hexic2d | Kind::Hexic2dRotated => Integrand::builtin(k, 1).ok(),
            Kind::Hexic3d | Kind::Hexic3dRotated => Integrand::builtin(k, 2).ok(),
        }),
    };
    match builtin {
        Some(g) => Ok(g),
        None => bail!(Invalid(format!("'{spec}' is neither an integrand file nor a builtin kind"))),
    }
}

/// Arcs of the Wulff boundary from the singular set and crossings.
pub fn wulff_arcspec(g: &Integrand, res: usize) -> Result<ArcSpec> {
    let singular = singular_set(g, TOL_SING)?;
    let samples = sample_frontier(g, res)?;
    let crossings = self_intersections(g, &samples)?;
    Ok(ArcSpec::new(wulff_arcs(g, &singular, &crossings)?.arcs))
}

/// Resolves `--curve` / `--arcs`: a catalogue name, `wulff`, or an arc file.
pub fn load_arcs(g: &Integrand, spec: &str, res: usize) -> Result<(String, ArcSpec)> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let arcs = ArcSpec::from_json(&text).with_context(|| format!("arc file {}", path.display()))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve").to_string();
        return Ok((name, arcs));
    }
    if g.kind().is_planar_hexic() {
        return Ok((spec.to_string(), catalogue_curve(g, spec)?));
    }
    if spec.eq_ignore_ascii_case("wulff") {
        return Ok(("wulff".into(), wulff_arcspec(g, res)?));
    }
    bail!(Invalid(format!("'{spec}' is not an arc file, and kind '{}' has no catalogue", g.kind())))
}
