//! JSON and CSV rendering. Output depends only on the value, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use lkcurv::crofton::{ConsistencyReport, CurvatureProfile};
use lkcurv::{Error, Result};
use serde::Serialize;

use crate::harness::{AnnotationCheck, BoundsGrid, RegularityRun, RetractReport, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Invalid(format!("unknown format {other}"))),
        }
    }
}

pub trait Emit: Serialize {
    fn csv(&self) -> String;

    fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
        }
    }
}

/// Columns: k, r, value, stderr.
impl Emit for CurvatureProfile {
    fn csv(&self) -> String {
        let mut s = String::from("k,r,value,stderr\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(s, "{},{},{},{}", self.k, self.radii[i], self.values[i], self.stderrs[i]);
        }
        s
    }
}

/// Columns: path, k, r, value, stderr with path curvature or density.
impl Emit for ConsistencyReport {
    fn csv(&self) -> String {
        let mut s = String::from("path,k,r,value,stderr\n");
        for (name, p) in [("curvature", &self.curvature), ("density", &self.density)] {
            for i in 0..p.radii.len() {
                let _ = writeln!(s, "{name},{},{},{},{}", p.k, p.radii[i], p.values[i], p.stderrs[i]);
            }
        }
        s
    }
}

/// Columns: t, k, value, stderr.
impl Emit for SweepResult {
    fn csv(&self) -> String {
        let mut s = String::from("t,k,value,stderr\n");
        for i in 0..self.t.len() {
            let _ = writeln!(s, "{},{},{},{}", self.t[i], self.k, self.values[i], self.stderrs[i]);
        }
        s
    }
}

impl Emit for BoundsGrid {
    fn csv(&self) -> String {
        let mut s = String::from("t,r,psi_quotient,tube_quotient\n");
        for (i, t) in self.t.iter().enumerate() {
            for (j, r) in self.r.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", t, r, self.psi[i][j], self.tube[i][j]);
            }
        }
        s
    }
}

/// One row per scale bucket.
impl Emit for RegularityRun {
    fn csv(&self) -> String {
        let mut s = String::from("scale,probes,max_gap_secant,max_kuo,max_verdier,max_gap_xy\n");
        for b in &self.report.buckets {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                b.scale, b.probes, b.max_gap_secant, b.max_kuo, b.max_verdier, b.max_gap_xy
            );
        }
        s
    }
}

/// Columns: trajectory, s, x0.., stratum, rho.
impl Emit for RetractReport {
    fn csv(&self) -> String {
        let n = self.trajectories.first().and_then(|t| t.points.first()).map(|p| p.len()).unwrap_or(0);
        let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let mut s = format!("trajectory,s,{},stratum,rho\n", coords.join(","));
        for (j, t) in self.trajectories.iter().enumerate() {
            for i in 0..t.times.len() {
                let p: Vec<String> = t.points[i].iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{j},{},{},{},{}", t.times[i], p.join(","), t.labels[i], t.rho[i]);
            }
        }
        s
    }
}

/// Columns: entry, what, expected, got, stderr, tol, passed.
impl Emit for Vec<AnnotationCheck> {
    fn csv(&self) -> String {
        let mut s = String::from("entry,what,expected,got,stderr,tol,passed\n");
        for c in self {
            let _ = writeln!(
                s,
                "{},\"{}\",{},{},{},{},{}",
                c.entry, c.what, c.expected, c.got, c.stderr, c.tol, c.passed
            );
        }
        s
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn emit<T: Emit>(result: &T, format: Format, path: Option<&Path>) -> Result<()> {
    let text = result.render(format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lkcurv::crofton::FitMethod;

    #[test]
    fn profile_csv_header() {
        let p = CurvatureProfile {
            k: 1,
            center: vec![0.0],
            radii: vec![0.2, 0.1],
            values: vec![0.5, 0.5],
            stderrs: vec![0.0, 0.0],
            limit: 0.5,
            limit_stderr: 0.0,
            exponent: None,
            method: FitMethod::Constant,
            residual: 0.0,
        };
        assert_eq!(p.csv(), "k,r,value,stderr\n1,0.2,0.5,0\n1,0.1,0.5,0\n");
        assert!(p.json().contains("\"method\": \"constant\""));
        assert!("xml".parse::<Format>().is_err());
    }
}
