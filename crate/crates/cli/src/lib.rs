//! Command-line front-end: profile export, Dirichlet solves and the
//! verification suite.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use horo_core::dirichlet::{self, SolveOptions};
use horo_core::geometry::{self, GeodesicConfig, GeodesicState};
use horo_core::io::{self, Problem};
use horo_core::profiles::{self, ShootingConfig};
use horo_core::suite::{self, Check, Report, Suite, SuiteConfig};
use horo_core::{HoroError, Result};

/// Exit status when a report was written but some check failed.
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const GEODESIC_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "horo", version, about = "Conformal solitons of mean curvature flow in hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grim-reaper cylinder profile.
    #[command(allow_negative_numbers = true)]
    Grim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        height: f64,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bowl soliton, given its height or its radius at infinity.
    #[command(allow_negative_numbers = true)]
    Bowl(BowlArgs),
    /// Both branches of a winglike soliton.
    #[command(allow_negative_numbers = true)]
    Wing {
        #[arg(long)]
        n: usize,
        #[arg(long = "tip-height")]
        tip_height: f64,
        #[arg(long = "tip-radius")]
        tip_radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Geodesic of the Ilmanen metric in a vertical plane.
    #[command(allow_negative_numbers = true)]
    Geodesic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        z0: f64,
        #[arg(long)]
        w0: f64,
        #[arg(long)]
        angle: f64,
        #[arg(long, default_value_t = 50.0)]
        span: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dirichlet problem from a JSON problem file.
    #[command(allow_negative_numbers = true)]
    Dirichlet {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Oracle::Radial)]
        oracle: Oracle,
    },
    /// Verification suite and profile round-trip checks.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("size").required(true).args(["height", "radius"]))]
struct BowlArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    zfloor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true).multiple(true).args(["suite", "curve"]))]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Option<SuiteArg>,
    /// Profile CSV to re-check against its stored residual.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SuiteArg {
    Geometry,
    Profiles,
    Operator,
    Dirichlet,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Geometry => Suite::Geometry,
            SuiteArg::Profiles => Suite::Profiles,
            SuiteArg::Operator => Suite::Operator,
            SuiteArg::Dirichlet => Suite::Dirichlet,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Oracle {
    Radial,
    None,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Grim { n, height, samples, out } => {
            let curve = profiles::grim_curve(height, n, samples)?;
            io::write_profile(&curve, &out)?;
        }
        Command::Bowl(a) => {
            let h = match (a.height, a.radius) {
                (Some(h), _) => h,
                (None, Some(r)) => profiles::h_of_r2(r, a.n, 1e-13)?,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let cfg = ShootingConfig::default().with_z_floor(a.zfloor);
            let curve = profiles::bowl_shoot(h, a.n, &cfg)?;
            io::write_profile(&curve, &a.out)?;
        }
        Command::Wing { n, tip_height, tip_radius, out } => {
            let (upper, lower) = profiles::wing_shoot(tip_radius, tip_height, n, &ShootingConfig::default())?;
            io::write_profile(&upper, &out)?;
            io::write_profile(&lower, &lower_branch_path(&out))?;
        }
        Command::Geodesic { n, z0, w0, angle, span, out } => {
            if !(span.is_finite() && span > 0.0) {
                return Err(HoroError::InvalidInput(format!("span must be positive, got {span}")));
            }
            let init = GeodesicState::from_angle(z0, w0, angle)?;
            let half = 0.5 * span;
            let curve =
                geometry::integrate_geodesic_with(init, n, (-half, half), GEODESIC_TOL, &GeodesicConfig::default())?;
            io::write_geodesic(&curve, &out)?;
        }
        Command::Dirichlet { problem, out, oracle } => dirichlet_command(&problem, &out, oracle)?,
        Command::Verify(a) => return verify_command(a),
    }
    Ok(0)
}

/// `wing.csv` → `wing_lower.csv`.
pub fn lower_branch_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_lower.{}", ext.to_string_lossy()),
        None => format!("{stem}_lower"),
    };
    out.with_file_name(name)
}

fn dirichlet_command(problem: &Path, out: &Path, oracle: Oracle) -> Result<()> {
    let p = Problem::read(problem)?;
    let (u, report) = dirichlet::solve_with(&p.domain, &p.bc, p.n, &SolveOptions::new(p.tol))?;
    let mut meta = report.to_json();
    let oracle_json = if oracle == Oracle::Radial && p.domain.is_radial() {
        let rad = dirichlet::solve_radial(&p.domain, &p.bc, p.n, p.tol.min(1e-10))?;
        let err = u.values.iter().zip(&rad.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        json!({ "kind": "radial", "max_abs_error": err, "parameter": rad.parameter })
    } else {
        serde_json::Value::Null
    };
    meta["oracle"] = oracle_json;
    io::write_grid(&u, &meta, out)
}

fn verify_command(a: VerifyArgs) -> Result<i32> {
    let mut checks = Vec::new();
    if let Some(s) = a.suite {
        let cfg = SuiteConfig::new(a.tol, a.seed);
        checks.extend(suite::run(s.into(), &cfg)?.checks);
    }
    if let Some(path) = &a.curve {
        let curve = io::read_profile(path)?;
        let stored = curve.residual_max;
        let recomputed = curve.kind_residual()?;
        let ratio = recomputed.max(stored) / recomputed.min(stored);
        let pass = ratio <= 2.0 || recomputed.max(stored) <= f64::EPSILON;
        checks.push(Check {
            name: "curve_residual_roundtrip".into(),
            anchor: "stored profile residual reproduced".into(),
            value: ratio,
            threshold: 2.0,
            pass,
        });
    }
    let report = Report::new(checks);
    io::write_text(&a.report, &report.to_json_text())?;
    Ok(if report.pass { 0 } else { EXIT_CHECKS_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_branch_sits_next_to_the_upper_one() {
        assert_eq!(lower_branch_path(Path::new("out/w.csv")), PathBuf::from("out/w_lower.csv"));
        assert_eq!(lower_branch_path(Path::new("wing")), PathBuf::from("wing_lower"));
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(run(["horo", "--help"]), 0);
        assert_eq!(run(["horo", "grim", "--n"]), EXIT_VALIDATION);
    }
}
