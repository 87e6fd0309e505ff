//! JSON problem files.
//!
//! ```json
//! {
//!   "T": 5,
//!   "p": "const:2",
//!   "nonlinearity": "example1-corrected",
//!   "alpha": 1, "beta": 1,
//!   "gamma": 0.1, "lambda": 1,
//!   "solver": { "n_starts": 64, "seed": 7 }
//! }
//! ```
//!
//! `p` is `"const:<v>"`, `"linear:<a>:<b>"` (`p(k) = a + b·k/(T+1)`) or an
//! explicit array of `T + 2` values. `alpha` and `beta` are a number or an
//! array of `T` values. `f` and `g` optionally replace the preset's terms by
//! `"zero"`, `"cubic"`, `"linear:<c>"` or `"constant:<c>"`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{ExponentProfile, ProblemSpec};
use crate::error::{ReportError, SpecError};
use crate::nonlinearity::{
    example1_pair, ConstantTerm, CubicTerm, GVariant, LinearTerm, SharedTerm, ZeroTerm,
};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Example1Corrected,
    Example1Paper,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentField {
    Formula(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficients {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl Coefficients {
    fn expand(&self, what: &'static str, len: usize) -> Result<Vec<f64>, SpecError> {
        match self {
            Coefficients::Uniform(v) => Ok(vec![*v; len]),
            Coefficients::PerSite(v) if v.len() == len => Ok(v.clone()),
            Coefficients::PerSite(v) => Err(SpecError::Length {
                what,
                got: v.len(),
                expected: len,
            }),
        }
    }
}

/// The problem file as written, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(rename = "T")]
    pub t: usize,
    pub p: ExponentField,
    pub nonlinearity: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Coefficients>,
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// A validated problem with its solver settings.
#[derive(Debug, Clone)]
pub struct ParsedSpec {
    pub file: SpecFile,
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
}

fn field(field: &str, message: impl Into<String>) -> ReportError {
    ReportError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_number(field_name: &str, s: &str) -> Result<f64, ReportError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| field(field_name, format!("`{s}` is not a number")))
}

fn exponents(t: usize, p: &ExponentField) -> Result<ExponentProfile, ReportError> {
    match p {
        ExponentField::Values(v) => {
            if v.len() != t + 2 {
                return Err(SpecError::ExponentLength {
                    got: v.len(),
                    expected: t + 2,
                }
                .into());
            }
            Ok(ExponentProfile::new(v.clone())?)
        }
        ExponentField::Formula(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                ["const", v] => Ok(ExponentProfile::constant(t, parse_number("p", v)?)?),
                ["linear", a, b] => Ok(ExponentProfile::linear(t, parse_number("p", a)?, parse_number("p", b)?)?),
                _ => Err(field("p", format!("`{s}`: expected const:<v> or linear:<a>:<b>"))),
            }
        }
    }
}

fn simple_term(name: &str, s: &str) -> Result<SharedTerm, ReportError> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["zero"] => Arc::new(ZeroTerm),
        ["cubic"] => Arc::new(CubicTerm),
        ["linear", c] => Arc::new(LinearTerm { slope: parse_number(name, c)? }),
        ["constant", c] => Arc::new(ConstantTerm { c: parse_number(name, c)? }),
        _ => {
            return Err(field(
                name,
                format!("`{s}`: expected zero, cubic, linear:<c> or constant:<c>"),
            ))
        }
    })
}

impl SpecFile {
    /// Validates every field and assembles the problem.
    pub fn build(&self) -> Result<ParsedSpec, ReportError> {
        if self.t == 0 {
            return Err(SpecError::EmptyGrid.into());
        }
        let exps = exponents(self.t, &self.p)?;
        let coeffs = |c: &Option<Coefficients>, what| {
            c.as_ref()
                .unwrap_or(&Coefficients::Uniform(1.0))
                .expand(what, self.t)
        };
        let (mut f, mut g): (SharedTerm, SharedTerm) = match self.nonlinearity {
            Preset::Zero => (Arc::new(ZeroTerm), Arc::new(ZeroTerm)),
            Preset::Example1Corrected | Preset::Example1Paper => {
                let variant = if self.nonlinearity == Preset::Example1Paper {
                    GVariant::PaperG
                } else {
                    GVariant::CorrectedOddG
                };
                example1_pair(variant, coeffs(&self.alpha, "alpha")?, coeffs(&self.beta, "beta")?)?
            }
        };
        if let Some(s) = &self.f {
            f = simple_term("f", s)?;
        }
        if let Some(s) = &self.g {
            g = simple_term("g", s)?;
        }
        let spec = ProblemSpec::new(exps, f, g, self.gamma, self.lambda)?;
        self.solver.validate()?;
        Ok(ParsedSpec {
            file: self.clone(),
            spec,
            solver: self.solver.clone(),
        })
    }
}

/// Parses a problem file from JSON text; `path` only labels errors.
pub fn parse_spec_str(text: &str, path: &Path) -> Result<ParsedSpec, ReportError> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| ReportError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.build()
}

pub fn parse_spec(path: &Path) -> Result<ParsedSpec, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedSpec, ReportError> {
        parse_spec_str(text, Path::new("test.json"))
    }

    const MINIMAL: &str = r#"{"T": 5, "p": "const:2", "nonlinearity": "example1-corrected",
        "alpha": 1, "beta": 1, "gamma": 0.1, "lambda": 1}"#;

    #[test]
    fn minimal_spec_gets_defaults() {
        let p = parse(MINIMAL).unwrap();
        assert_eq!(p.spec.len(), 5);
        assert_eq!(p.solver, SolverConfig::default());
        assert_eq!(p.spec.gamma(), 0.1);
        assert_eq!(p.spec.exponents().constant_value(), Some(2.0));
    }

    #[test]
    fn zero_gamma_rejected() {
        let err = parse(&MINIMAL.replace("0.1", "0")).unwrap_err();
        assert!(err.to_string().contains("gamma must be positive"), "{err}");
    }

    #[test]
    fn exponent_array_length_checked() {
        let err = parse(&MINIMAL.replace("\"const:2\"", "[2, 2, 2, 2, 2]")).unwrap_err();
        assert!(matches!(err, ReportError::Spec(SpecError::ExponentLength { got: 5, expected: 7 })));
        let ok = parse(&MINIMAL.replace("\"const:2\"", "[2, 2, 2.5, 2, 2, 2, 2]")).unwrap();
        assert_eq!(ok.spec.exponents().p_plus(), 2.5);
    }

    #[test]
    fn linear_profile_and_overrides() {
        let text = MINIMAL
            .replace("\"const:2\"", "\"linear:2:1\"")
            .replace("\"alpha\": 1", "\"alpha\": [1, 2, 3, 4, 5], \"f\": \"cubic\"");
        let p = parse(&text).unwrap();
        assert_eq!(p.spec.exponents().at(6), 3.0);
        assert_eq!(p.spec.fterm().name(), "cubic");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("{\n  \"T\": 5,\n  \"p\": }").unwrap_err();
        match err {
            ReportError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        assert!(matches!(parse(&MINIMAL.replace("\"T\"", "\"N\"")), Err(ReportError::Parse { .. })));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse(&MINIMAL.replace("\"beta\": 1", "\"beta\": -1")).is_err());
        assert!(parse(&MINIMAL.replace("\"const:2\"", "\"const:1\"")).is_err());
        assert!(parse(&MINIMAL.replace("\"const:2\"", "\"cosine\"")).is_err());
        assert!(parse(&MINIMAL.replace("\"alpha\": 1", "\"alpha\": [1, 2]")).is_err());
        let bad_solver = MINIMAL.replace("\"lambda\": 1", "\"lambda\": 1, \"solver\": {\"n_starts\": 0}");
        assert!(matches!(parse(&bad_solver), Err(ReportError::Solver(_))));
    }
}
