//! CSV and JSON artifacts: profile and geodesic samples, grid functions,
//! residual fields and Dirichlet problem files.
//!
//! Floats are written with 17 significant digits so every value survives a
//! round trip. Each CSV has a JSON sidecar with the same stem.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dirichlet::BoundaryData;
use crate::error::{invalid, HoroError, Result};
use crate::geometry::GeodesicCurve;
use crate::grid::{DomainSpec, GridFunction};
use crate::operator::ResidualReport;
use crate::profiles::{BranchMarks, ProfileCurve, ProfileKind, ProfileSample};

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HoroError::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HoroError::Io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn csv_rows<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn profile_csv(curve: &ProfileCurve) -> String {
    csv_rows("s,z,rho,alpha", curve.samples.iter().map(|p| vec![p.s, p.z, p.rho, p.alpha]))
}

/// Writes the samples and the metadata sidecar.
pub fn write_profile(curve: &ProfileCurve, path: &Path) -> Result<()> {
    write_text(path, &profile_csv(curve))?;
    write_text(&sidecar_path(path), &json_text(&curve.metadata_json()))
}

fn parse_table(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| invalid("empty CSV"))?;
    if first.trim() != header {
        return Err(invalid(format!("CSV header `{}` is not `{header}`", first.trim())));
    }
    let cols = header.split(',').count();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("CSV line {}: {e}", k + 2)))?;
        if row.len() != cols {
            return Err(invalid(format!("CSV line {} has {} fields, expected {cols}", k + 2, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct ProfileMeta {
    kind: String,
    n: usize,
    h: f64,
    #[serde(rename = "R", default)]
    tip_radius: f64,
    r2: Option<f64>,
    lambda0: Option<f64>,
    endpoints: Option<(f64, f64)>,
    residual_max: f64,
}

/// Reads a profile written by [`write_profile`]; the sidecar is required.
pub fn read_profile(path: &Path) -> Result<ProfileCurve> {
    let rows = parse_table(&read_text(path)?, "s,z,rho,alpha")?;
    let meta: ProfileMeta = serde_json::from_str(&read_text(&sidecar_path(path))?)
        .map_err(|e| invalid(format!("profile metadata: {e}")))?;
    let kind =
        ProfileKind::parse(&meta.kind).ok_or_else(|| invalid(format!("unknown profile kind `{}`", meta.kind)))?;
    let samples = rows.into_iter().map(|r| ProfileSample { s: r[0], z: r[1], rho: r[2], alpha: r[3] }).collect();
    Ok(ProfileCurve {
        kind,
        n: meta.n,
        h: meta.h,
        tip_radius: meta.tip_radius,
        r2: meta.r2,
        samples,
        marks: BranchMarks { lambda0: meta.lambda0, endpoints: meta.endpoints, min_radius: None },
        residual_max: meta.residual_max,
    })
}

pub fn geodesic_csv(curve: &GeodesicCurve) -> String {
    csv_rows("s,z,w,dz,dw", curve.t.iter().zip(&curve.states).map(|(&t, s)| vec![t, s.z, s.w, s.dz, s.dw]))
}

pub fn write_geodesic(curve: &GeodesicCurve, path: &Path) -> Result<()> {
    write_text(path, &geodesic_csv(curve))?;
    write_text(&sidecar_path(path), &json_text(&curve.metadata_json()))
}

/// Node coordinates and values; radial grids list the radius as `x1`.
pub fn grid_csv(u: &GridFunction) -> String {
    let dim = u.domain.dim();
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.push("u".into());
    csv_rows(
        &header.join(","),
        (0..u.values.len()).map(|i| {
            let mut row = u.domain.coords(i);
            row.push(u.values[i]);
            row
        }),
    )
}

/// Writes the grid and the solve report sidecar.
pub fn write_grid(u: &GridFunction, report: &serde_json::Value, path: &Path) -> Result<()> {
    write_text(path, &grid_csv(u))?;
    write_text(&sidecar_path(path), &json_text(report))
}

/// Evaluated nodes as `i,j,residual` (`j = 0` on one-dimensional grids).
pub fn residual_csv(report: &ResidualReport, dom: &DomainSpec) -> String {
    let mut out = String::from("i,j,residual\n");
    for (idx, r) in report.evaluated() {
        let (i, j) = if dom.dim() == 1 { (idx, 0) } else { dom.unflatten(idx) };
        let _ = writeln!(out, "{i},{j},{}", fmt_f64(r));
    }
    out
}

/// Dirichlet problem file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Problem {
    pub domain: DomainSpec,
    pub bc: BoundaryData,
    pub n: usize,
    pub tol: f64,
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Problem = serde_json::from_str(text).map_err(|e| invalid(format!("problem file: {e}")))?;
        p.domain.validate()?;
        Ok(p)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Problem::from_json(&read_text(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, -2.5e17, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn problem_parsing() {
        let p = Problem::from_json(
            r#"{"domain":{"shape":"annulus","r_in":0.5,"r_out":1.0,"resolution":33},
                "bc":{"kind":"per_side","values":[1.0,0.8]},"n":2,"tol":1e-9}"#,
        )
        .unwrap();
        assert_eq!(p.domain.resolution, 33);
        assert!(Problem::from_json(r#"{"domain":{"shape":"ball","radius":-1.0,"resolution":9},"bc":{"kind":"constant","c":1.0},"n":2,"tol":1e-9}"#).is_err());
        assert!(Problem::from_json("{").is_err());
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(parse_table("s,z,rho,alpha\n1,2,3\n", "s,z,rho,alpha").is_err());
        assert!(parse_table("a,b\n1,2\n", "s,z,rho,alpha").is_err());
        assert_eq!(parse_table("a,b\n1,2\n\n", "a,b").unwrap(), vec![vec![1.0, 2.0]]);
    }
}
