//! Study configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use fracdiff_core::problem::ProblemDoc;
use fracdiff_core::{DomainKind, FractionalProblem};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    P1Uniform,
    P1Graded,
    Sparse,
    HpInY,
    #[serde(rename = "hp_full_1d")]
    HpFull1d,
}

impl std::str::FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Spec(format!("unknown method `{s}`")))
    }
}

/// Optional replacements for the default discretization parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Truncation height `Y`.
    pub y_max: Option<f64>,
    /// Radical grading exponent of the P1 y-mesh.
    pub eta: Option<f64>,
    /// Radical mesh parameter `k` (must be `1/N`).
    pub k: Option<f64>,
    /// Geometric grading factor of the hp y-mesh.
    pub sigma: Option<f64>,
    /// Number of geometric y-elements.
    pub m: Option<usize>,
    /// Slope of the linear degree vector.
    pub slope: Option<f64>,
    /// Polynomial degree in the spatial variable (`hp_full_1d`).
    pub q: Option<usize>,
    /// Number of boundary layers of the spatial mesh (`hp_full_1d`).
    pub layers: Option<usize>,
    /// Spatial grading factor toward the endpoints (`hp_full_1d`).
    pub sigma_x: Option<f64>,
    /// Corner grading exponent at re-entrant corners; turns grading on for
    /// `hp_in_y`.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Exact eigen-expansion (intervals, rectangles, polygon eigenfunctions).
    Oracle,
    /// A frozen solve `extra_levels` beyond the finest study level.
    FineSolve {
        #[serde(default = "default_extra_levels")]
        extra_levels: usize,
        /// Method of the fine solve; defaults to the study method.
        #[serde(default)]
        method: Option<Method>,
    },
    /// A pairing value supplied by the user.
    Value { pairing: f64 },
}

fn default_extra_levels() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Inline(ProblemDoc),
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub problem: ProblemSource,
    pub method: Method,
    /// Inclusive level range.
    pub levels: [usize; 2],
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_reference")]
    pub reference: ReferenceMode,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_reference() -> ReferenceMode {
    ReferenceMode::Oracle
}

impl StudySpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))
    }

    /// Reads a spec file; a relative problem path is resolved next to it.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
        let mut spec = Self::from_json(&text)?;
        if let ProblemSource::File(p) = &spec.problem {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    spec.problem = ProblemSource::File(dir.join(p));
                }
            }
        }
        Ok(spec)
    }

    pub fn load_problem(&self) -> Result<FractionalProblem, CliError> {
        let doc = match &self.problem {
            ProblemSource::Inline(d) => d.clone(),
            ProblemSource::File(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| CliError::Spec(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Spec(e.to_string()))?
            }
        };
        doc.into_problem().map_err(|e| CliError::Spec(e.to_string()))
    }

    /// Method/domain compatibility and level range checks.
    pub fn validate(&self, problem: &FractionalProblem) -> Result<(), CliError> {
        let [lo, hi] = self.levels;
        if lo > hi {
            return Err(CliError::Spec(format!("empty level range {lo}..{hi}")));
        }
        let interval = matches!(problem.domain.kind, DomainKind::Interval { .. });
        match self.method {
            Method::HpFull1d if !interval => {
                return Err(CliError::Spec("hp_full_1d needs an interval domain".into()));
            }
            Method::HpFull1d if lo == 0 => return Err(CliError::Spec("hp_full_1d levels start at 1".into())),
            Method::P1Uniform | Method::P1Graded | Method::HpInY if lo == 0 => {
                return Err(CliError::Spec("mesh levels start at 1 (h = 2^-level)".into()));
            }
            _ => {}
        }
        if let Some(b) = self.overrides.beta {
            if !(0.0..1.0).contains(&b) {
                return Err(CliError::Spec(format!("beta {b} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_spec() {
        let spec = StudySpec::from_json(
            r#"{"problem": {"s": 0.5, "domain": {"interval": [0, 1]}, "forcing": {"constant": 1.0}},
                "method": "hp_full_1d", "levels": [2, 4]}"#,
        )
        .unwrap();
        assert_eq!(spec.method, Method::HpFull1d);
        assert_eq!(spec.reference, ReferenceMode::Oracle);
        let p = spec.load_problem().unwrap();
        spec.validate(&p).unwrap();
    }

    #[test]
    fn rejects_incompatible_method() {
        let spec = StudySpec::from_json(
            r#"{"problem": {"s": 0.5, "domain": "l_shape", "forcing": {"constant": 1.0}},
                "method": "hp_full_1d", "levels": [2, 4]}"#,
        )
        .unwrap();
        let p = spec.load_problem().unwrap();
        assert!(matches!(spec.validate(&p), Err(CliError::Spec(_))));
        assert!("p1_graded".parse::<Method>().is_ok());
        assert!("p2".parse::<Method>().is_err());
    }

    #[test]
    fn fine_solve_reference_defaults() {
        let spec = StudySpec::from_json(
            r#"{"problem": {"s": 0.75, "domain": "l_shape", "forcing": {"constant": 1.0}},
                "method": "p1_graded", "levels": [2, 5], "reference": {"mode": "fine_solve"}}"#,
        )
        .unwrap();
        assert_eq!(spec.reference, ReferenceMode::FineSolve { extra_levels: 2, method: None });
    }
}
