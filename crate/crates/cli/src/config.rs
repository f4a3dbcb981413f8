//! Problem configuration: a single JSON document with a versioned schema tag.
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use schwarz_core::geometry::{build_cut_system, AnnularDomain, BoundaryData, Circle, CurveData, CutSystem};
use schwarz_core::operator::{Discretization, SolveMethod};
use schwarz_core::oracle::AnalyticSolution;
use schwarz_core::{Complex64, Error};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA: &str = "schwarz-problem/1";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema: String,
    pub geometry: GeometryConfig,
    pub cuts: CutsConfig,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub outer: CircleConfig,
    pub inner: CircleConfig,
}

/// Cut angles, radial in the normalized annulus.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutsConfig {
    pub sigma: f64,
    pub tau: f64,
}

/// Boundary data, either a named preset or per-circle piecewise constants.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Zero,
    Constant { value: f64 },
    /// `outer` on the outer circle and `inner` on the inner one.
    TwoLevel { outer: f64, inner: f64 },
    /// Traces of `a + b log|z|`.
    LogRadial { a: f64, b: f64 },
    /// Traces of `Re zⁿ`.
    HarmonicPolynomial { n: i32 },
    /// Traces of `Re z⁻ⁿ`.
    InversePower { n: i32 },
    /// `[start angle, value]` pairs per circle, angles about each circle's center.
    Piecewise { outer: Vec<[f64; 2]>, inner: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    pub panels: usize,
    pub nodes: usize,
    pub grading: f64,
    pub m_samples: usize,
    pub m_inflation: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        let d = Discretization::default();
        DiscretizationConfig {
            panels: d.panels,
            nodes: d.nodes,
            grading: d.grading,
            m_samples: d.m_samples,
            m_inflation: d.m_inflation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Iterate,
    Direct,
    ClosedForm,
}

impl Mode {
    /// How the fixed point is found; closed-form runs still need one for diagnostics.
    pub fn method(self) -> SolveMethod {
        match self {
            Mode::Direct => SolveMethod::Direct,
            Mode::Iterate | Mode::ClosedForm => SolveMethod::Iterate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Iterate => "iterate",
            Mode::Direct => "direct",
            Mode::ClosedForm => "closed-form",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mode: Mode,
    pub tol: f64,
    /// Truncation order for closed-form evaluation and the top row of `converge`.
    pub t: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { mode: Mode::Iterate, tol: 1e-12, t: 8 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Radial levels of the evaluation grid, in the normalized annulus.
    pub radial: usize,
    /// Angular levels of the evaluation grid.
    pub angular: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, radial: 16, angular: 64 }
    }
}

/// A validated problem ready for the solver.
pub struct Problem {
    pub domain: AnnularDomain,
    pub cuts: CutSystem,
    pub data: BoundaryData,
    pub discretization: Discretization,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    /// Exact solution when the boundary preset has one.
    pub exact: Option<AnalyticSolution>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: &Path) -> Result<ProblemConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ProblemConfig, CliError> {
    let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
    if cfg.schema != SCHEMA {
        return Err(config_error(format!("schema: expected \"{SCHEMA}\", got \"{}\"", cfg.schema)));
    }
    Ok(cfg)
}

fn circle(c: &CircleConfig, outer: bool) -> Circle {
    let center = Complex64::new(c.center[0], c.center[1]);
    if outer {
        Circle::outer(center, c.radius)
    } else {
        Circle::inner(center, c.radius)
    }
}

fn curve(pieces: &[[f64; 2]], key: &str) -> Result<CurveData, CliError> {
    if pieces.is_empty() {
        return Err(config_error(format!("boundary.{key}: at least one [angle, value] piece is required")));
    }
    let pairs: Vec<(f64, f64)> = pieces.iter().map(|p| (p[0], p[1])).collect();
    CurveData::piecewise_constant(&pairs).map_err(|e| config_error(format!("boundary.{key}: {e}")))
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem, CliError> {
        let outer = circle(&self.geometry.outer, true);
        let inner = circle(&self.geometry.inner, false);
        let domain = AnnularDomain::new(outer, inner).map_err(|e| config_error(format!("geometry: {e}")))?;
        let cuts = build_cut_system(&domain, self.cuts.sigma, self.cuts.tau).map_err(|e| match e {
            Error::AnglesCoincide { .. } => config_error(format!("cuts.sigma and cuts.tau coincide: {e}")),
            other => config_error(format!("cuts: {other}")),
        })?;
        let (data, exact) = match &self.boundary {
            BoundaryConfig::Zero => (BoundaryData::zero(), Some(AnalyticSolution::Constant(0.0))),
            BoundaryConfig::Constant { value } => (BoundaryData::constant(*value), Some(AnalyticSolution::Constant(*value))),
            BoundaryConfig::TwoLevel { outer, inner } => (BoundaryData::two_level(*outer, *inner), None),
            BoundaryConfig::LogRadial { a, b } => analytic(AnalyticSolution::LogRadial { a: *a, b: *b }, &domain),
            BoundaryConfig::HarmonicPolynomial { n } => analytic(AnalyticSolution::HarmonicPolynomial { n: *n }, &domain),
            BoundaryConfig::InversePower { n } => analytic(AnalyticSolution::InversePower { n: *n }, &domain),
            BoundaryConfig::Piecewise { outer, inner } => {
                (BoundaryData::new(curve(outer, "outer")?, curve(inner, "inner")?), None)
            }
        };
        if !data.sup_norm().is_finite() {
            return Err(config_error("boundary: data is not finite on the boundary circles"));
        }
        if self.solver.mode == Mode::ClosedForm && self.solver.t > 12 {
            return Err(config_error(format!("solver.t: at most 12, got {}", self.solver.t)));
        }
        if !(self.solver.tol > 0.0) {
            return Err(config_error(format!("solver.tol: must be positive, got {}", self.solver.tol)));
        }
        if self.output.radial < 1 || self.output.angular < 1 {
            return Err(config_error("output.radial and output.angular must be at least 1"));
        }
        let d = &self.discretization;
        let discretization = Discretization {
            panels: d.panels,
            nodes: d.nodes,
            grading: d.grading,
            m_samples: d.m_samples,
            m_inflation: d.m_inflation,
        };
        discretization.validate().map_err(|e| config_error(format!("discretization: {e}")))?;
        Ok(Problem {
            domain,
            cuts,
            data,
            discretization,
            solver: self.solver.clone(),
            output: self.output.clone(),
            exact,
        })
    }
}

fn analytic(sol: AnalyticSolution, domain: &AnnularDomain) -> (BoundaryData, Option<AnalyticSolution>) {
    (sol.boundary_data(*domain.outer(), *domain.inner()), Some(sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": "schwarz-problem/1",
        "geometry": {"outer": {"center": [0, 0], "radius": 1}, "inner": {"center": [0, 0], "radius": 0.5}},
        "cuts": {"sigma": 0, "tau": 3.141592653589793},
        "boundary": {"preset": "two_level", "outer": 0, "inner": 1}
    }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.solver.mode, Mode::Iterate);
        assert_eq!(cfg.discretization.panels, Discretization::default().panels);
        let p = cfg.build().unwrap();
        assert_eq!(p.data.sup_norm(), 1.0);
        assert!(p.exact.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replacen("\"cuts\"", "\"extra\": 1, \"cuts\"", 1);
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
        let text = MINIMAL.replace("\"outer\": 0, \"inner\": 1", "\"outer\": 0, \"inner\": 1, \"scale\": 2");
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn schema_and_cut_errors_name_keys() {
        let text = MINIMAL.replace("schwarz-problem/1", "schwarz-problem/0");
        let CliError::Config(msg) = parse(&text).unwrap_err() else { panic!() };
        assert!(msg.contains("schema"));
        let text = MINIMAL.replace("3.141592653589793", "0");
        let CliError::Config(msg) = parse(&text).unwrap().build().err().unwrap() else { panic!() };
        assert!(msg.contains("cuts.sigma") && msg.contains("cuts.tau"));
    }

    #[test]
    fn presets_parse() {
        for preset in [
            r#"{"preset": "zero"}"#,
            r#"{"preset": "constant", "value": 2.5}"#,
            r#"{"preset": "log_radial", "a": 0, "b": -1.4426950408889634}"#,
            r#"{"preset": "harmonic_polynomial", "n": 2}"#,
            r#"{"preset": "inverse_power", "n": 1}"#,
            r#"{"preset": "piecewise", "outer": [[0, 1], [3.14, 0]], "inner": [[0, 0.5]]}"#,
        ] {
            let text = MINIMAL.replace(r#"{"preset": "two_level", "outer": 0, "inner": 1}"#, preset);
            parse(&text).unwrap().build().unwrap();
        }
    }
}
