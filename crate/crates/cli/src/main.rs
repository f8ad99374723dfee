// `!(x <= tol)` also fails on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use wulff::ErrorCategory;

use crate::config::{Invalid, RunConfig, ToleranceFailure};

#[derive(Debug, Parser)]
#[command(name = "wulff", version, about = "Cahn-Hoffman frontiers, Wulff shapes, CAMC curves and surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Sample the Cahn-Hoffman frontier, its singular set and self-crossings.
    Frontier,
    /// Build the Wulff shape by half-planes and by frontier arcs and compare.
    Wulff,
    /// Classify one closed frontier curve.
    Classify,
    /// Enumerate closed CAMC curves up to congruence.
    Enumerate,
    /// Mesh a rotational frontier surface and classify it.
    Surface,
    /// Check a self-similar shrinking family.
    Flow,
    /// Convexity verdict of the integrand.
    Convexity,
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// JSON run file with any of the flag values (unknown keys are rejected).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Integrand spec file, or a builtin kind name.
    #[arg(long, global = true)]
    integrand: Option<String>,
    /// Resolution (samples, samples per arc, or grid size).
    #[arg(long, global = true)]
    res: Option<usize>,
    /// Tolerance override for the command's main check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    report: bool,
    /// Render SVG (with neither --svg nor --obj, every render is written).
    #[arg(long, global = true)]
    svg: bool,
    /// Render OBJ.
    #[arg(long, global = true)]
    obj: bool,
    /// Catalogue curve name, `wulff`, or arc file.
    #[arg(long, visible_alias = "arcs", global = true)]
    curve: Option<String>,
    /// Cap on partial paths during enumeration.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Extinction time of the flow.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Time at which the flow is checked
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Central-difference time step of the flow checks
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Flow base: `wulff`, a catalogue name, `circle-isotropic` or `sphere`.
    #[arg(long, global = true)]
    base: Option<String>,
    /// Fail unless the dissipation identity holds within --tol.
    #[arg(long, global = true)]
    dissipation: bool,
}

/// Settings after merging the run file under the flags.
#[derive(Debug, Clone)]
pub struct Run {
    pub integrand: Option<String>,
    pub res: Option<usize>,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub report: bool,
    pub svg: bool,
    pub obj: bool,
    pub curve: Option<String>,
    pub cap: Option<usize>,
    pub c: Option<f64>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub base: Option<String>,
    pub dissipation: bool,
}

impl Run {
    fn merge(flags: Flags, file: RunConfig) -> Self {
        let svg = flags.svg || file.svg.unwrap_or(false);
        let obj = flags.obj || file.obj.unwrap_or(false);
        Self {
            integrand: flags.integrand.or(file.integrand),
            res: flags.res.or(file.res),
            tol: flags.tol.or(file.tol),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            report: flags.report || file.report.unwrap_or(false),
            svg: svg || !obj,
            obj: obj || !svg,
            curve: flags.curve.or(file.curve),
            cap: flags.cap.or(file.cap),
            c: flags.c.or(file.c),
            t: flags.t.or(file.t),
            dt: flags.dt.or(file.dt),
            base: flags.base.or(file.base),
            dissipation: flags.dissipation || file.dissipation.unwrap_or(false),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let run = Run::merge(cli.flags, file);
    std::fs::create_dir_all(&run.out)?;
    match cli.command {
        Command::Frontier => commands::frontier(&run),
        Command::Wulff => commands::wulff(&run),
        Command::Classify => commands::classify(&run),
        Command::Enumerate => commands::enumerate(&run),
        Command::Surface => commands::surface(&run),
        Command::Flow => commands::flow(&run),
        Command::Convexity => commands::convexity(&run),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ToleranceFailure>().is_some() {
        return 3;
    }
    if err.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    match err.chain().find_map(|e| e.downcast_ref::<wulff::Error>()).map(wulff::Error::category) {
        Some(ErrorCategory::Validation) => 2,
        Some(ErrorCategory::Numerical) => 3,
        Some(ErrorCategory::ResourceCap) => 4,
        // I/O and parse failures on user input.
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
