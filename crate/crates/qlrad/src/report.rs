//! Machine-readable reports for the command-line pipeline.
//!
//! All reports serialize with a fixed key order (struct order) and plain
//! f64 round-trip formatting, so the same configuration and seed produce
//! byte-identical files.

use crate::error::Result;
use crate::exponents::ExponentWindow;
use crate::grid::GridFunction;
use crate::probe::ProbeResult;
use crate::solver::SolutionReport;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowReport {
    pub command: &'static str,
    pub n: u32,
    pub p: f64,
    pub a0: f64,
    pub a_inf: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha_inf: f64,
    pub beta_inf: f64,
    pub fit_residual0: f64,
    pub fit_residual_inf: f64,
    pub p0: f64,
    pub p_inf: f64,
    pub window: ExponentWindow,
    /// Lower `q1` endpoint with the existence requirement `q1 > p` applied.
    pub q1_lo_existence: f64,
    pub feasible: bool,
    pub diagnosis: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleCheck {
    pub q: f64,
    pub radius: f64,
    pub side: &'static str,
    pub ascent: f64,
    pub eigenvalue: f64,
    pub agreement: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeReport {
    pub command: &'static str,
    pub q1: f64,
    pub q2: f64,
    pub origin: ProbeResult,
    pub infinity: ProbeResult,
    /// Present when `p = q = 2` makes the dense eigenproblem an oracle.
    pub oracle: Option<OracleCheck>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub command: &'static str,
    pub energy: f64,
    pub residual_norm: f64,
    pub nehari_gap: f64,
    pub nonnegative: bool,
    pub rho: f64,
    pub norm: f64,
    /// Absent when too few live nodes support a fit.
    pub decay_fit_origin: Option<f64>,
    pub decay_fit_infinity: Option<f64>,
    pub verified: bool,
    pub iterations: usize,
    pub profile_csv: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub command: &'static str,
    pub checks: Vec<CheckRow>,
    pub all_pass: bool,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::Config(format!("serialization failed: {e}")))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Profile CSV `r,u,du` at full precision.
pub fn write_profile_csv(path: &Path, u: &GridFunction, du: &GridFunction) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "r,u,du")?;
    for ((r, uv), dv) in u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .zip(du.values())
    {
        writeln!(file, "{r},{uv},{dv}")?;
    }
    Ok(())
}

pub fn write_probe_csv(path: &Path, result: &ProbeResult) -> Result<()> {
    let file = std::fs::File::create(path)?;
    result.write_csv(file)?;
    Ok(())
}

impl SolveReport {
    pub fn from_solution(report: &SolutionReport, profile_csv: &str) -> Self {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        SolveReport {
            command: "solve",
            energy: report.energy,
            residual_norm: report.residual_norm,
            nehari_gap: report.nehari_gap,
            nonnegative: report.nonnegative,
            rho: report.rho,
            norm: report.norm,
            decay_fit_origin: finite(report.decay_fit_origin),
            decay_fit_infinity: finite(report.decay_fit_infinity),
            verified: report.verified,
            iterations: report.iterations,
            profile_csv: profile_csv.to_string(),
        }
    }
}
