//! Recorded output of a simulation run.

use serde::{Deserialize, Serialize};

use crate::model::{total_knowledge, ModelParams, StrengthKind, TeachingControl};
use crate::solver::AttemptRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub u: f64,
    pub teaching: bool,
    pub z: Vec<f64>,
}

impl Sample {
    pub fn new(t: f64, control: TeachingControl, z: &[f64]) -> Self {
        Self {
            t,
            u: control.u,
            teaching: control.teaching,
            z: z.to_vec(),
        }
    }

    pub fn total(&self) -> f64 {
        total_knowledge(&self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    LessonStart { t: f64, lesson: usize },
    LessonEnd { t: f64, lesson: usize },
    TaskAttempt(AttemptRecord),
    TasksCompleted { t: f64, tasks: usize },
}

impl Event {
    pub fn t(&self) -> f64 {
        match self {
            Event::LessonStart { t, .. }
            | Event::LessonEnd { t, .. }
            | Event::TasksCompleted { t, .. } => *t,
            Event::TaskAttempt(a) => a.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scenario: String,
    pub model: String,
    pub components: usize,
    pub strength: StrengthKind,
    pub unit: String,
    #[serde(default)]
    pub params: Option<ModelParams>,
    pub dt: f64,
    pub method: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub rng: Option<String>,
    /// Steps in which a component had to be clamped at zero.
    pub clamp_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub metadata: TraceMetadata,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl SimulationTrace {
    pub fn dim(&self) -> usize {
        self.metadata.components
    }

    pub fn strength(&self, sample: &Sample) -> f64 {
        self.metadata.strength.eval(&sample.z)
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn totals(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(Sample::total)
    }

    /// Sample exactly at time `t`, if one was recorded.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.t == t)
    }

    pub fn attempts(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.events.iter().filter_map(|e| match e {
            Event::TaskAttempt(a) => Some(a),
            _ => None,
        })
    }
}
