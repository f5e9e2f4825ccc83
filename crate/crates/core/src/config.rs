//! The run configuration file.
//!
//! A TOML file: `[section]` headers, `key = value` pairs and `#`
//! comments. Values are numbers or double-quoted strings.
//!
//! ```text
//! [problem]
//! preset = "example32"
//! L = 10
//!
//! [comparison]
//! preset = "example32"
//!
//! [solver]
//! grid_n = 2001
//! tol = 1e-10
//! mode = "picard"
//! ```
//!
//! Every expression is parsed while the file is read, so a malformed
//! formula is reported with its line number before anything runs.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;
use toml::de::{DeTable, DeValue};

use crate::comparison::{self, ComparisonTriple, Preset};
use crate::expr::Expr;
use crate::grid::{QuadRule, DEFAULT_HORIZON, DEFAULT_NODES};
use crate::mnc::{self, DarboConfig};
use crate::problem::{self, IntegralProblem};
use crate::sampling::SampleDomain;
use crate::solver::{self, Initial, Mode, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key {key:?} in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: bad value for {key}: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("{0}")]
    Missing(String),
    #[error("{0}")]
    Build(#[from] crate::Error),
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("problem", &["preset", "f", "g", "a", "b", "L", "domain"]),
    (
        "comparison",
        &["preset", "psi", "phi_big", "phi_density", "k", "check_domain", "check_points", "n_max", "decay_tol"],
    ),
    ("solver", &["grid_n", "tol", "max_iter", "mode", "initial", "rule"]),
    ("mnc", &["ensemble_size", "steps", "hull_count", "seed", "tail_fraction"]),
];

#[derive(Debug, Clone, Default)]
pub struct ProblemSection {
    /// Only `example32` is known; it fills in any of f, g, a, b left unset.
    pub preset: Option<Preset>,
    pub f: Option<Expr>,
    pub g: Option<Expr>,
    pub a: Option<Expr>,
    pub b: Option<Expr>,
    pub horizon: f64,
    pub domain: Option<SampleDomain>,
}

#[derive(Debug, Clone)]
pub struct ComparisonSection {
    pub preset: Option<Preset>,
    pub psi: Option<Expr>,
    pub phi_big: Option<Expr>,
    pub phi_density: Option<Expr>,
    pub k: f64,
    pub check_domain: f64,
    pub check_points: usize,
    pub n_max: usize,
    pub decay_tol: f64,
}

impl Default for ComparisonSection {
    fn default() -> Self {
        ComparisonSection {
            preset: None,
            psi: None,
            phi_big: None,
            phi_density: None,
            k: comparison::DEFAULT_K,
            check_domain: comparison::DEFAULT_CHECK_DOMAIN,
            check_points: comparison::DEFAULT_CHECK_POINTS,
            n_max: comparison::DEFAULT_N_MAX,
            decay_tol: comparison::DEFAULT_DECAY_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverSection {
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: Mode,
    pub initial: Initial,
    pub rule: QuadRule,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            grid_n: DEFAULT_NODES,
            tol: solver::DEFAULT_TOL,
            max_iter: solver::DEFAULT_MAX_ITER,
            mode: Mode::Picard,
            initial: Initial::Zero,
            rule: QuadRule::Trapezoid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MncSection {
    pub ensemble_size: usize,
    pub steps: usize,
    /// Defaults to four times the ensemble size.
    pub hull_count: Option<usize>,
    pub seed: u64,
    pub tail_fraction: f64,
}

impl Default for MncSection {
    fn default() -> Self {
        MncSection {
            ensemble_size: mnc::DEFAULT_ENSEMBLE_SIZE,
            steps: mnc::DEFAULT_STEPS,
            hull_count: None,
            seed: mnc::DEFAULT_SEED,
            tail_fraction: mnc::DEFAULT_TAIL_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub problem: Option<ProblemSection>,
    pub comparison: ComparisonSection,
    pub solver: SolverSection,
    pub mnc: MncSection,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: String,
}

impl Entry<'_> {
    fn parse<T: FromStr>(&self, what: &str) -> Result<T, ConfigError> {
        self.value.parse().map_err(|_| self.bad(format!("expected {what}, got {:?}", self.value)))
    }

    fn expr(&self) -> Result<Expr, ConfigError> {
        self.value.parse().map_err(|e: crate::expr::ParseError| self.bad(e.to_string()))
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.parse("a number")?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(format!("must be positive, got {v}")))
        }
    }

    fn count(&self) -> Result<usize, ConfigError> {
        self.parse("a nonnegative integer")
    }

    fn via<T, E: ToString>(&self, r: Result<T, E>) -> Result<T, ConfigError> {
        r.map_err(|e| self.bad(e.to_string()))
    }

    fn bad(&self, message: String) -> ConfigError {
        ConfigError::Value { line: self.line, key: self.key.to_string(), message }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Numbers keep their source spelling so integer-valued keys reject `2.5`.
fn scalar_text(value: &DeValue, line: usize, key: &str) -> Result<String, ConfigError> {
    match value {
        DeValue::String(s) => Ok(s.to_string()),
        DeValue::Integer(i) if i.radix() == 10 => Ok(i.as_str().replace('_', "")),
        DeValue::Float(f) => Ok(f.as_str().replace('_', "")),
        other => Err(ConfigError::Value {
            line,
            key: key.to_string(),
            message: format!("expected a number or a quoted string, got {}", other.type_str()),
        }),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let root = DeTable::parse(text).map_err(|e| ConfigError::Syntax {
            line: line_of(text, e.span().map_or(0, |s| s.start)),
            message: e.message().to_string(),
        })?;

        let mut cfg = Config::default();
        for (name, body) in root.get_ref() {
            let line = line_of(text, name.span().start);
            let DeValue::Table(body) = body.get_ref() else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key {:?} outside any section", name.get_ref()),
                });
            };
            let Some(&(section, allowed)) = SECTIONS.iter().find(|(s, _)| *s == name.get_ref().as_ref()) else {
                return Err(ConfigError::UnknownSection { line, name: name.get_ref().to_string() });
            };
            if section == "problem" {
                cfg.problem = Some(ProblemSection { horizon: DEFAULT_HORIZON, ..ProblemSection::default() });
            }
            for (key, value) in body {
                let line = line_of(text, key.span().start);
                let Some(&key) = allowed.iter().find(|k| **k == key.get_ref().as_ref()) else {
                    return Err(ConfigError::UnknownKey {
                        line,
                        section: section.to_string(),
                        key: key.get_ref().to_string(),
                    });
                };
                let value = scalar_text(value.get_ref(), line, key)?;
                cfg.apply(section, &Entry { line, key, value })?;
            }
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, e: &Entry) -> Result<(), ConfigError> {
        match section {
            "problem" => {
                let p = self.problem.as_mut().expect("problem section registered");
                match e.key {
                    "preset" => {
                        let preset: Preset = e.via(e.value.parse())?;
                        if preset != Preset::Example32 {
                            return Err(e.bad(format!("{preset} has no problem data; only example32 does")));
                        }
                        p.preset = Some(preset);
                    }
                    "f" => p.f = Some(e.expr()?),
                    "g" => p.g = Some(e.expr()?),
                    "a" => p.a = Some(e.expr()?),
                    "b" => p.b = Some(e.expr()?),
                    "L" => p.horizon = e.positive()?,
                    "domain" => p.domain = Some(e.via(e.value.parse())?),
                    _ => unreachable!("keys are validated"),
                }
            }
            "comparison" => {
                let c = &mut self.comparison;
                match e.key {
                    "preset" => c.preset = Some(e.via(e.value.parse())?),
                    "psi" => c.psi = Some(e.expr()?),
                    "phi_big" => c.phi_big = Some(e.expr()?),
                    "phi_density" => c.phi_density = Some(e.expr()?),
                    "k" => c.k = e.parse("a number")?,
                    "check_domain" => c.check_domain = e.positive()?,
                    "check_points" => c.check_points = e.count()?,
                    "n_max" => c.n_max = e.count()?,
                    "decay_tol" => c.decay_tol = e.positive()?,
                    _ => unreachable!("keys are validated"),
                }
            }
            "solver" => {
                let s = &mut self.solver;
                match e.key {
                    "grid_n" => s.grid_n = e.count()?,
                    "tol" => s.tol = e.positive()?,
                    "max_iter" => s.max_iter = e.count()?,
                    "mode" => s.mode = e.via(e.value.parse())?,
                    "initial" => s.initial = e.via(Initial::parse(&e.value))?,
                    "rule" => s.rule = e.via(e.value.parse())?,
                    _ => unreachable!("keys are validated"),
                }
            }
            "mnc" => {
                let m = &mut self.mnc;
                match e.key {
                    "ensemble_size" => m.ensemble_size = e.count()?,
                    "steps" => m.steps = e.count()?,
                    "hull_count" => m.hull_count = Some(e.count()?),
                    "seed" => m.seed = e.parse("an unsigned integer")?,
                    "tail_fraction" => m.tail_fraction = e.positive()?,
                    _ => unreachable!("keys are validated"),
                }
            }
            _ => unreachable!("sections are validated"),
        }
        Ok(())
    }

    /// The comparison triple: the preset's functions (Φ = u, Ψ = ln(1 + u),
    /// φ = 1 when no preset is named) with explicit keys taking precedence.
    pub fn triple(&self) -> Result<ComparisonTriple, ConfigError> {
        let c = &self.comparison;
        let (psi, phi_big, phi_density) = c.preset.unwrap_or(Preset::Example32).sources(c.k);
        let pick = |explicit: &Option<Expr>, fallback: String| -> Result<Expr, ConfigError> {
            match explicit {
                Some(e) => Ok(e.clone()),
                None => Ok(fallback.parse().map_err(crate::Error::from)?),
            }
        };
        let mut triple = ComparisonTriple::with_domain(
            pick(&c.psi, psi)?,
            pick(&c.phi_big, phi_big)?,
            pick(&c.phi_density, phi_density)?,
            c.check_domain,
            c.check_points,
        )?;
        triple.preset = c.preset;
        Ok(triple)
    }

    pub fn problem(&self) -> Result<IntegralProblem, ConfigError> {
        let Some(p) = &self.problem else {
            return Err(ConfigError::Missing("problem required: add a [problem] section".into()));
        };
        let example = p.preset == Some(Preset::Example32);
        let field = |e: &Option<Expr>, name: &str, fallback: &str| -> Result<Expr, ConfigError> {
            match (e, example) {
                (Some(e), _) => Ok(e.clone()),
                (None, true) => Ok(fallback.parse().map_err(crate::Error::from)?),
                (None, false) => Err(ConfigError::Missing(format!("problem.{name} is required"))),
            }
        };
        let f = field(&p.f, "f", problem::EXAMPLE_F)?;
        let g = field(&p.g, "g", problem::EXAMPLE_G)?;
        let a = field(&p.a, "a", problem::EXAMPLE_A)?;
        let b = field(&p.b, "b", problem::EXAMPLE_B)?;
        let domain = p.domain.unwrap_or(if example { SampleDomain::Nonnegative } else { SampleDomain::Symmetric });
        Ok(IntegralProblem::new(f, g, a, b, p.horizon, self.triple()?)?.with_domain(domain))
    }

    pub fn solver_config(&self, bracket_radius: f64) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            mode: s.mode,
            tol: s.tol,
            max_iter: s.max_iter,
            initial: s.initial.clone(),
            rule: s.rule,
            bracket_radius,
        }
    }

    pub fn hull_count(&self) -> usize {
        self.mnc.hull_count.unwrap_or(4 * self.mnc.ensemble_size)
    }

    pub fn darbo_config(&self) -> DarboConfig {
        DarboConfig {
            steps: self.mnc.steps,
            hull_count: self.hull_count(),
            seed: self.mnc.seed,
            tail_fraction: self.mnc.tail_fraction,
            rule: self.solver.rule,
        }
    }
}
