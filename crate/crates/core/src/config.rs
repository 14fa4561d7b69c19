//! Run configuration documents (TOML).
//!
//! Parsing is strict: unknown keys are rejected, and every semantic problem
//! found after the structural parse is reported with the path of the field
//! that caused it.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::integrator::IntegratorConfig;
use crate::model::{KnowledgeState, Model, ModelKind, ModelParams};
use crate::scenario::{RequirementSchedule, RequirementSegment, SchoolCareerConfig, TaskSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Lessons,
    TaskSequence,
    SchoolCareer,
}

/// Model family as written in a config. `general` takes its dimension from
/// the parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Two,
    Three,
    Four,
    General,
}

impl ModelChoice {
    /// Model kind for parameter vectors of length `n`.
    pub fn kind(self, n: usize) -> ModelKind {
        match self {
            ModelChoice::Two => ModelKind::Two,
            ModelChoice::Three => ModelKind::Three,
            ModelChoice::Four => ModelKind::Four,
            ModelChoice::General => ModelKind::General(n),
        }
    }

    pub fn of(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Two => ModelChoice::Two,
            ModelKind::Three => ModelChoice::Three,
            ModelKind::Four => ModelChoice::Four,
            ModelKind::General(_) => ModelChoice::General,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    /// Also write a gnuplot script next to the trace.
    #[serde(default)]
    pub plot: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: OutputFormat::Csv,
            plot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    alphas: Vec<f64>,
    gammas: Vec<f64>,
    #[serde(default)]
    b: f64,
    #[serde(default = "one")]
    lambda: f64,
    #[serde(default)]
    s: f64,
}

fn one() -> f64 {
    1.0
}

/// Document layout, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    scenario: ScenarioKind,
    model: ModelChoice,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_state: Option<Vec<f64>>,
    params: ParamsDoc,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<RequirementSegment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tasks: Option<TaskSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    career: Option<SchoolCareerConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Lessons(RequirementSchedule),
    TaskSequence(TaskSet),
    SchoolCareer(SchoolCareerConfig),
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioConfig::Lessons(_) => ScenarioKind::Lessons,
            ScenarioConfig::TaskSequence(_) => ScenarioKind::TaskSequence,
            ScenarioConfig::SchoolCareer(_) => ScenarioKind::SchoolCareer,
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub model: Model,
    pub initial_state: KnowledgeState,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    pub unit: String,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.issues
            .iter()
            .any(|i| i.path.contains(needle) || i.message.contains(needle))
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn push_error(&mut self, prefix: &str, err: Error) {
        match err {
            Error::InvalidParam { field, reason } => self.push(format!("{prefix}{field}"), reason),
            Error::Dimension { what, expected, found } => {
                self.push(what, format!("length {found} does not match expected length {expected}"))
            }
            other => self.push(prefix.trim_end_matches('.'), other.to_string()),
        }
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::single("", e.to_string()))?;
    let doc: ConfigDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::single(path, e.into_inner().message().to_string())
    })?;
    validate(doc)
}

fn validate(doc: ConfigDoc) -> Result<RunConfig, ConfigError> {
    let mut issues = Issues::default();

    let p = doc.params;
    let n = p.alphas.len();
    let params = match ModelParams::new(p.alphas, p.gammas, p.b, p.lambda, p.s) {
        Ok(params) => Some(params),
        Err(e) => {
            issues.push_error("params.", e);
            None
        }
    };

    let kind = doc.model.kind(n);
    if n != kind.dim() {
        issues.push(
            "params.alphas",
            format!(
                "model `{}` needs {} components but params have {n}",
                kind.name(),
                kind.dim()
            ),
        );
    }
    let model = params.and_then(|p| Model::new(kind, p).ok());

    let initial_state = match doc.initial_state {
        None => Some(KnowledgeState::zeros(kind.dim())),
        Some(z) if z.len() != kind.dim() => {
            issues.push(
                "initial_state",
                format!("has length {} but the model has {} components", z.len(), kind.dim()),
            );
            None
        }
        Some(z) => match KnowledgeState::new(z) {
            Ok(s) => Some(s),
            Err(e) => {
                issues.push("initial_state", e.to_string());
                None
            }
        },
    };

    if let Err(e) = doc.integrator.validate() {
        issues.push_error("", e);
    }

    let present = [
        ("schedule", doc.schedule.is_some(), ScenarioKind::Lessons),
        ("tasks", doc.tasks.is_some(), ScenarioKind::TaskSequence),
        ("career", doc.career.is_some(), ScenarioKind::SchoolCareer),
    ];
    for (key, is_present, kind_for) in present {
        if is_present && kind_for != doc.scenario {
            issues.push(key, format!("not used by scenario `{:?}`", doc.scenario));
        }
    }

    let scenario = match doc.scenario {
        ScenarioKind::Lessons => match doc.schedule {
            None => {
                issues.push("schedule", "required for scenario `lessons`");
                None
            }
            Some(segs) => match RequirementSchedule::new(segs) {
                Ok(s) => Some(ScenarioConfig::Lessons(s)),
                Err(e) => {
                    issues.push("schedule", e.to_string());
                    None
                }
            },
        },
        ScenarioKind::TaskSequence => match doc.tasks {
            None => {
                issues.push("tasks", "required for scenario `task_sequence`");
                None
            }
            Some(t) => match t.validate() {
                Ok(()) => Some(ScenarioConfig::TaskSequence(t)),
                Err(e) => {
                    issues.push_error("", e);
                    None
                }
            },
        },
        ScenarioKind::SchoolCareer => {
            if kind.dim() != 3 {
                issues.push(
                    "model",
                    format!("school_career uses the three-component model, got `{}`", kind.name()),
                );
            }
            match doc.career {
                None => {
                    issues.push("career", "required for scenario `school_career`");
                    None
                }
                Some(c) => match c.validate() {
                    Ok(()) => Some(ScenarioConfig::SchoolCareer(c)),
                    Err(e) => {
                        issues.push_error("", e);
                        None
                    }
                },
            }
        }
    };

    match (scenario, model, initial_state) {
        (Some(scenario), Some(model), Some(initial_state)) if issues.0.is_empty() => Ok(RunConfig {
            scenario,
            model,
            initial_state,
            integrator: doc.integrator,
            seed: doc.seed,
            unit: doc.unit,
            output: doc.output,
        }),
        _ => Err(ConfigError { issues: issues.0 }),
    }
}

impl RunConfig {
    fn to_doc(&self) -> ConfigDoc {
        let p = self.model.params();
        let model = ModelChoice::of(self.model.kind());
        let (schedule, tasks, career) = match &self.scenario {
            ScenarioConfig::Lessons(s) => (Some(s.segments().to_vec()), None, None),
            ScenarioConfig::TaskSequence(t) => (None, Some(*t), None),
            ScenarioConfig::SchoolCareer(c) => (None, None, Some(c.clone())),
        };
        ConfigDoc {
            scenario: self.scenario.kind(),
            model,
            seed: self.seed,
            unit: self.unit.clone(),
            initial_state: Some(self.initial_state.as_slice().to_vec()),
            params: ParamsDoc {
                alphas: p.alphas().to_vec(),
                gammas: p.gammas().to_vec(),
                b: p.b(),
                lambda: p.lambda(),
                s: p.complexity(),
            },
            integrator: self.integrator,
            output: self.output.clone(),
            schedule,
            tasks,
            career,
        }
    }

    /// Serializes back to a TOML document that parses to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_doc()).expect("config documents always serialize")
    }
}
