//! Batch configuration: a single TOML file describing the problem,
//! potentials, hypothesis pairs, grid, exponents, nonlinearity and solver
//! settings. Unknown keys are rejected.

use crate::error::{Error, Result};
use crate::exponents::{best_alpha_infinity, best_alpha_origin, ProblemParams};
use crate::grid::RadialGrid;
use crate::potential::{
    default_infinity_samples, default_origin_samples, estimate_asymptotics, AsymptoticProfile,
    PotentialExpr,
};
use crate::probe::AscentConfig;
use crate::solver::{Nonlinearity, NonlinearityKind, SolverConfig};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub potentials: PotentialsSection,
    #[serde(default)]
    pub hypotheses: HypothesesSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    /// Local-integrability order for `K`; defaults to 2.
    #[serde(default = "default_s")]
    pub s: f64,
}

fn default_s() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsSection {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "V")]
    pub v: String,
    #[serde(rename = "K")]
    pub k: String,
}

/// All optional; anything absent is derived from the potentials.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesSection {
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
    #[serde(rename = "alphaInf")]
    pub alpha_inf: Option<f64>,
    #[serde(rename = "betaInf")]
    pub beta_inf: Option<f64>,
    /// Manual override of the fitted origin exponent of `A`.
    pub a0: Option<f64>,
    /// Manual override of the fitted infinity exponent of `A`.
    #[serde(rename = "aInf")]
    pub a_inf: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "rMin", default = "default_r_min")]
    pub r_min: f64,
    #[serde(rename = "rMax", default = "default_r_max")]
    pub r_max: f64,
    #[serde(rename = "nodesPerDecade", default = "default_npd")]
    pub nodes_per_decade: usize,
}

fn default_r_min() -> f64 {
    1e-4
}
fn default_r_max() -> f64 {
    1e3
}
fn default_npd() -> usize {
    64
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            r_min: default_r_min(),
            r_max: default_r_max(),
            nodes_per_decade: default_npd(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    pub q1: Option<f64>,
    pub q2: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub kind: String,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "maxIterations", default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(rename = "residualTol", default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(rename = "pathResolution", default = "default_path_resolution")]
    pub path_resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "initialAmplitude", default = "default_initial_amplitude")]
    pub initial_amplitude: f64,
    #[serde(rename = "ascentStarts", default = "default_ascent_starts")]
    pub ascent_starts: usize,
    #[serde(rename = "ascentIterations", default = "default_ascent_iterations")]
    pub ascent_iterations: usize,
}

fn default_max_iterations() -> usize {
    20_000
}
fn default_residual_tol() -> f64 {
    1e-6
}
fn default_path_resolution() -> usize {
    32
}
fn default_initial_amplitude() -> f64 {
    2.0
}
fn default_ascent_starts() -> usize {
    8
}
fn default_ascent_iterations() -> usize {
    2000
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            max_iterations: default_max_iterations(),
            residual_tol: default_residual_tol(),
            path_resolution: default_path_resolution(),
            seed: 0,
            initial_amplitude: default_initial_amplitude(),
            ascent_starts: default_ascent_starts(),
            ascent_iterations: default_ascent_iterations(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate_ranges()?;
        Ok(cfg)
    }

    fn validate_ranges(&self) -> Result<()> {
        if self.problem.s <= 1.0 {
            return Err(Error::Config(format!(
                "problem.s must exceed 1, got {}",
                self.problem.s
            )));
        }
        if self.solver.path_resolution < 8 {
            return Err(Error::Config(format!(
                "solver.pathResolution must be at least 8, got {}",
                self.solver.path_resolution
            )));
        }
        if !(self.solver.residual_tol > 0.0) {
            return Err(Error::Config("solver.residualTol must be positive".into()));
        }
        Ok(())
    }

    /// Parse the three potentials; `K` must have positive literals.
    pub fn parse_potentials(&self) -> Result<(PotentialExpr, PotentialExpr, PotentialExpr)> {
        let a = PotentialExpr::parse(&self.potentials.a)
            .map_err(|e| Error::Config(format!("potentials.A: {e}")))?;
        let v = PotentialExpr::parse(&self.potentials.v)
            .map_err(|e| Error::Config(format!("potentials.V: {e}")))?;
        let k = PotentialExpr::parse_positive(&self.potentials.k)
            .map_err(|e| Error::Config(format!("potentials.K: {e}")))?;
        Ok((a, v, k))
    }

    /// Resolve the full problem: parse potentials, fit or accept the
    /// asymptotic exponents, fill absent hypothesis pairs by the
    /// `beta = 0` scan, and build the grid.
    ///
    /// Derivation order for absent hypotheses: exponents of `A` from the
    /// log-log fit, then `(alpha, 0)` pairs from the boundedness scan of
    /// `K/r^alpha`, with default radii `R1 = 1`, `R2 = 2`.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Resolved> {
        let (a, v, k) = self.parse_potentials()?;

        let fitted = estimate_asymptotics(&a, &default_origin_samples(), &default_infinity_samples())?;
        let profile = AsymptoticProfile {
            a0: self.hypotheses.a0.unwrap_or(fitted.a0),
            a_inf: self.hypotheses.a_inf.unwrap_or(fitted.a_inf),
            ..fitted
        };

        let r1 = self.hypotheses.r1.unwrap_or(1.0);
        let r2 = self.hypotheses.r2.unwrap_or(2.0);
        let beta0 = self.hypotheses.beta0.unwrap_or(0.0);
        let beta_inf = self.hypotheses.beta_inf.unwrap_or(0.0);
        let alpha0 = match self.hypotheses.alpha0 {
            Some(a) => a,
            None => best_alpha_origin(&k, r1)?,
        };
        let alpha_inf = match self.hypotheses.alpha_inf {
            Some(a) => a,
            None => best_alpha_infinity(&k, r2)?,
        };

        let params = ProblemParams::new(
            self.problem.n,
            self.problem.p,
            profile.a0,
            profile.a_inf,
            alpha0,
            beta0,
            alpha_inf,
            beta_inf,
            r1,
            r2,
        )
        .map_err(|e| Error::Config(e.to_string()))?;

        let grid = RadialGrid::geometric(
            self.grid.r_min,
            self.grid.r_max,
            self.grid.nodes_per_decade,
            self.problem.n,
        )?;

        let nonlinearity = match &self.nonlinearity {
            None => None,
            Some(sec) => {
                let kind = match sec.kind.as_str() {
                    "doublePowerMin" => NonlinearityKind::DoublePowerMin,
                    "smoothQuotient" => NonlinearityKind::SmoothQuotient,
                    "purePower" => NonlinearityKind::PurePower,
                    other => {
                        return Err(Error::Config(format!(
                            "nonlinearity.kind must be doublePowerMin, smoothQuotient or purePower, got '{other}'"
                        )))
                    }
                };
                Some(Nonlinearity::new(kind, sec.q1, sec.q2).map_err(|e| Error::Config(e.to_string()))?)
            }
        };

        let seed = seed_override.unwrap_or(self.solver.seed);
        let solver = SolverConfig {
            max_iterations: self.solver.max_iterations,
            residual_tol: self.solver.residual_tol,
            path_resolution: self.solver.path_resolution,
            seed,
            initial_amplitude: self.solver.initial_amplitude,
            ascent: AscentConfig {
                starts: self.solver.ascent_starts,
                max_iterations: self.solver.ascent_iterations,
                rel_tolerance: 1e-10,
                seed,
            },
        };

        Ok(Resolved {
            params,
            a,
            v,
            k,
            profile,
            fitted_profile: fitted,
            grid,
            s: self.problem.s,
            q1: self.exponents.q1,
            q2: self.exponents.q2,
            nonlinearity,
            solver,
        })
    }
}

/// Fully resolved problem ready to run.
pub struct Resolved {
    pub params: ProblemParams,
    pub a: PotentialExpr,
    pub v: PotentialExpr,
    pub k: PotentialExpr,
    /// Profile in effect (manual overrides applied).
    pub profile: AsymptoticProfile,
    /// Raw least-squares fit, before overrides.
    pub fitted_profile: AsymptoticProfile,
    pub grid: Arc<RadialGrid>,
    pub s: f64,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub nonlinearity: Option<Nonlinearity>,
    pub solver: SolverConfig,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EX1: &str = r#"
[problem]
N = 4
p = 2.0

[potentials]
A = "min(r^0.5, r^1.5)"
V = "min(1, r^-1.5)"
K = "max(r^0.5, r^1.5)"

[hypotheses]
alpha0 = 0.5
beta0 = 0.0
alphaInf = 1.5
betaInf = 0.0

[exponents]
q1 = 2.3
q2 = 4.5
"#;

    #[test]
    fn parses_and_resolves_first_example() {
        let cfg = RunConfig::parse(EX1).unwrap();
        let res = cfg.resolve(None).unwrap();
        assert_relative_eq!(res.params.a0, 1.5, epsilon = 1e-9);
        assert_relative_eq!(res.params.a_inf, 0.5, epsilon = 1e-9);
        assert_eq!(res.params.n, 4);
        assert_eq!(res.q1, Some(2.3));
        assert!(res.nonlinearity.is_none());
    }

    #[test]
    fn auto_derives_hypotheses_when_absent() {
        let text = EX1.replace(
            r#"[hypotheses]
alpha0 = 0.5
beta0 = 0.0
alphaInf = 1.5
betaInf = 0.0
"#,
            "",
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let res = cfg.resolve(None).unwrap();
        assert_relative_eq!(res.params.alpha0, 0.5, epsilon = 1e-12);
        assert_relative_eq!(res.params.alpha_inf, 1.5, epsilon = 1e-12);
        assert_eq!(res.params.beta0, 0.0);
        assert_relative_eq!(res.params.r1, 1.0);
        assert_relative_eq!(res.params.r2, 2.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EX1.replace("[exponents]", "[exponents]\nbogus = 1.0");
        assert!(RunConfig::parse(&text).is_err());
        let text2 = format!("{EX1}\n[extra]\nx = 1\n");
        assert!(RunConfig::parse(&text2).is_err());
    }

    #[test]
    fn manual_exponent_override_is_honored() {
        let text = EX1.replace(
            "[hypotheses]",
            "[hypotheses]\na0 = 3.5\naInf = 0.5",
        );
        let cfg = RunConfig::parse(&text).unwrap();
        // a0 = 3.5 > p violates the admissible range
        assert!(cfg.resolve(None).is_err());
    }

    #[test]
    fn nonlinearity_section_parses() {
        let text = format!(
            "{EX1}\n[nonlinearity]\nkind = \"purePower\"\nq1 = 4.0\nq2 = 4.0\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let res = cfg.resolve(None).unwrap();
        assert!(res.nonlinearity.is_some());

        let bad = format!(
            "{EX1}\n[nonlinearity]\nkind = \"cubicSpline\"\nq1 = 4.0\nq2 = 4.0\n"
        );
        assert!(RunConfig::parse(&bad).unwrap().resolve(None).is_err());
    }

    #[test]
    fn seed_override_applies() {
        let cfg = RunConfig::parse(EX1).unwrap();
        let res = cfg.resolve(Some(42)).unwrap();
        assert_eq!(res.solver.seed, 42);
        assert_eq!(res.solver.ascent.seed, 42);
    }
}
