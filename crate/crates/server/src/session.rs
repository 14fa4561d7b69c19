//! A simulated class that advances on a shared clock under operator control.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use learnsim::config::ModelChoice;
use learnsim::solver::{self, SimRng};
use learnsim::{
    ConsolidationDynamics, ConstantDynamics, Integrator, IntegratorConfig, KnowledgeState, Model, ModelParams,
    Outcome, TeachingControl,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_HISTORY_CAP: usize = 2000;
pub const DEFAULT_CONSOLIDATION_TIME: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub params: ModelParams,
    #[serde(default)]
    pub initial_state: Option<KnowledgeState>,
}

/// Weights of the teacher grade
/// `100 * (z * min(1, mean Z / max U) + strength * mean strength + quiz * pass rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeWeights {
    pub z: f64,
    pub strength: f64,
    pub quiz: f64,
}

impl Default for GradeWeights {
    fn default() -> Self {
        Self {
            z: 0.5,
            strength: 0.3,
            quiz: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub model: ModelChoice,
    pub students: Vec<StudentSpec>,
    /// Simulated time units per real second.
    #[serde(default = "one")]
    pub speed: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_history_cap")]
    pub history_cap: usize,
    /// Students who pass a quiz consolidate for `consolidation_time`.
    #[serde(default)]
    pub consolidate_on_pass: bool,
    #[serde(default = "default_consolidation_time")]
    pub consolidation_time: f64,
    #[serde(default)]
    pub grade_weights: GradeWeights,
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_history_cap() -> usize {
    DEFAULT_HISTORY_CAP
}

fn default_consolidation_time() -> f64 {
    DEFAULT_CONSOLIDATION_TIME
}

impl ClassConfig {
    pub fn new(model: ModelChoice, students: Vec<StudentSpec>) -> Self {
        Self {
            model,
            students,
            speed: 1.0,
            seed: 0,
            dt: DEFAULT_DT,
            history_cap: DEFAULT_HISTORY_CAP,
            consolidate_on_pass: false,
            consolidation_time: DEFAULT_CONSOLIDATION_TIME,
            grade_weights: GradeWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid request: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error("unknown student `{0}`")]
    UnknownStudent(String),
    #[error(transparent)]
    Simulation(#[from] learnsim::Error),
}

impl SessionError {
    fn invalid(path: &str, message: impl Into<String>) -> Self {
        SessionError::Invalid(vec![issue(path, message)])
    }
}

fn positive(path: &str, v: f64, issues: &mut Vec<Issue>) {
    if !(v.is_finite() && v > 0.0) {
        issues.push(issue(path, format!("must be a positive finite number, got {v}")));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub t: f64,
    pub u: f64,
    pub teaching: bool,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Student {
    id: String,
    model: Model,
    z: Vec<f64>,
    history: VecDeque<HistoryPoint>,
}

impl Student {
    fn total(&self) -> f64 {
        self.z.iter().sum()
    }

    fn view(&self) -> StudentView {
        StudentView {
            id: self.id.clone(),
            z: self.z.clone(),
            total: self.total(),
            strength: self.model.strength(&self.z),
        }
    }

    fn info(&self) -> StudentInfo {
        StudentInfo {
            id: self.id.clone(),
            params: self.model.params().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentView {
    pub id: String,
    pub z: Vec<f64>,
    pub total: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentInfo {
    pub id: String,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session: String,
    pub seq: u64,
    pub clock: f64,
    pub speed: f64,
    pub running: bool,
    pub control: TeachingControl,
    pub students: Vec<StudentView>,
    pub clamp_events: u64,
}

/// Everything a new subscriber needs before it can apply increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub snapshot: Snapshot,
    pub model: String,
    pub strength: String,
    pub students: Vec<StudentInfo>,
    pub quiz_log: Vec<QuizResult>,
    pub history_cap: usize,
    pub consolidate_on_pass: bool,
    pub grade_weights: GradeWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizEntry {
    pub student: String,
    pub z: f64,
    pub probability: f64,
    pub outcome: Outcome,
    /// 1 for a pass, 0 for a fail.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizResult {
    pub seq: u64,
    pub t: f64,
    pub theta: f64,
    pub entries: Vec<QuizEntry>,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAck {
    pub seq: u64,
    pub clock: f64,
    pub control: TeachingControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizPoint {
    pub t: f64,
    pub theta: f64,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub clock: f64,
    pub mean_z: f64,
    pub mean_strength: f64,
    /// Highest requirement level set while teaching.
    pub max_u: f64,
    pub quizzes: Vec<QuizPoint>,
    pub pass_rate: f64,
    pub weights: GradeWeights,
    pub grade: f64,
    pub students: Vec<StudentView>,
}

/// `100 * (w.z * min(1, mean_z / max_u) + w.strength * mean_strength + w.quiz * pass_rate)`,
/// with the knowledge term 0 when nothing was ever taught.
pub fn grade(weights: &GradeWeights, mean_z: f64, max_u: f64, mean_strength: f64, pass_rate: f64) -> f64 {
    let coverage = if max_u > 0.0 { (mean_z / max_u).min(1.0) } else { 0.0 };
    100.0 * (weights.z * coverage + weights.strength * mean_strength + weights.quiz * pass_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Update {
    State(SessionState),
    Snapshot(Snapshot),
    Control(ControlAck),
    Speed { seq: u64, clock: f64, speed: f64 },
    Running { seq: u64, clock: f64, running: bool },
    Quiz(QuizResult),
    Student { seq: u64, clock: f64, student: StudentInfo },
    Closed { seq: u64, clock: f64 },
}

impl Update {
    pub fn seq(&self) -> u64 {
        match self {
            Update::State(s) => s.snapshot.seq,
            Update::Snapshot(s) => s.seq,
            Update::Control(c) => c.seq,
            Update::Quiz(q) => q.seq,
            Update::Speed { seq, .. }
            | Update::Running { seq, .. }
            | Update::Student { seq, .. }
            | Update::Closed { seq, .. } => *seq,
        }
    }

    pub fn clock(&self) -> f64 {
        match self {
            Update::State(s) => s.snapshot.clock,
            Update::Snapshot(s) => s.clock,
            Update::Control(c) => c.clock,
            Update::Quiz(q) => q.t,
            Update::Speed { clock, .. }
            | Update::Running { clock, .. }
            | Update::Student { clock, .. }
            | Update::Closed { clock, .. } => *clock,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Update::State(_) => "state",
            Update::Snapshot(_) => "snapshot",
            Update::Control(_) => "control",
            Update::Speed { .. } => "speed",
            Update::Running { .. } => "running",
            Update::Quiz(_) => "quiz",
            Update::Student { .. } => "student",
            Update::Closed { .. } => "closed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    id: String,
    config: ClassConfig,
    students: Vec<Student>,
    clock: f64,
    control: TeachingControl,
    running: bool,
    max_u: f64,
    rng: SimRng,
    quiz_log: Vec<QuizResult>,
    seq: u64,
    clamp_events: u64,
    #[serde(skip)]
    outbox: Vec<Update>,
}

impl Session {
    pub fn new(id: impl Into<String>, config: ClassConfig) -> Result<Self, SessionError> {
        let students = validate(&config)?;
        let mut session = Self {
            id: id.into(),
            rng: solver::seeded_rng(config.seed),
            config,
            students,
            clock: 0.0,
            control: TeachingControl::idle(),
            running: false,
            max_u: 0.0,
            quiz_log: Vec::new(),
            seq: 0,
            clamp_events: 0,
            outbox: Vec::new(),
        };
        session.record_history();
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn control(&self) -> TeachingControl {
        self.control
    }

    pub fn speed(&self) -> f64 {
        self.config.speed
    }

    pub fn running(&self) -> bool {
        self.running
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn config(&self) -> &ClassConfig {
        &self.config
    }

    pub fn student_count(&self) -> usize {
        self.students.len()
    }

    /// Current per-student states.
    pub fn states(&self) -> Vec<Vec<f64>> {
        self.students.iter().map(|s| s.z.clone()).collect()
    }

    pub fn quiz_log(&self) -> &[QuizResult] {
        &self.quiz_log
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            session: self.id.clone(),
            seq: self.seq,
            clock: self.clock,
            speed: self.config.speed,
            running: self.running,
            control: self.control,
            students: self.students.iter().map(Student::view).collect(),
            clamp_events: self.clamp_events,
        }
    }

    pub fn state(&self) -> SessionState {
        let first = &self.students[0].model;
        SessionState {
            snapshot: self.snapshot(),
            model: first.kind().name(),
            strength: first.strength_kind().label().into(),
            students: self.students.iter().map(Student::info).collect(),
            quiz_log: self.quiz_log.clone(),
            history_cap: self.config.history_cap,
            consolidate_on_pass: self.config.consolidate_on_pass,
            grade_weights: self.config.grade_weights,
        }
    }

    /// Updates produced since the last call, in the order they happened.
    pub fn drain_updates(&mut self) -> Vec<Update> {
        std::mem::take(&mut self.outbox)
    }

    fn record_history(&mut self) {
        let cap = self.config.history_cap;
        let (t, control) = (self.clock, self.control);
        for s in &mut self.students {
            if s.history.len() == cap {
                s.history.pop_front();
            }
            s.history.push_back(HistoryPoint {
                t,
                u: control.u,
                teaching: control.teaching,
                z: s.z.clone(),
            });
        }
    }

    /// Integrates every student by `delta` simulated time units under the
    /// current control. Either all students advance or none do.
    pub fn advance(&mut self, delta: f64) -> Result<Snapshot, SessionError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(SessionError::invalid("dt", format!("must be a non-negative finite number, got {delta}")));
        }
        if delta > 0.0 {
            let t0 = self.clock;
            let t1 = t0 + delta;
            let cfg = IntegratorConfig::rk4(self.config.dt).with_record_every(usize::MAX);
            let mut next = Vec::with_capacity(self.students.len());
            let mut clamps = 0;
            for s in &self.students {
                let mut integrator = Integrator::new(cfg)?;
                let mut z = s.z.clone();
                let dynamics = ConstantDynamics {
                    model: &s.model,
                    control: self.control,
                };
                integrator.advance(&dynamics, t0, t1, &mut z, |_, _| {})?;
                clamps += integrator.clamp_events();
                next.push(z);
            }
            for (s, z) in self.students.iter_mut().zip(next) {
                s.z = z;
            }
            self.clamp_events += clamps;
            self.clock = t1;
            self.record_history();
        }
        self.next_seq();
        let snap = self.snapshot();
        self.outbox.push(Update::Snapshot(snap.clone()));
        Ok(snap)
    }

    /// Advances by `seconds` of wall-clock time at the session speed.
    pub fn advance_real(&mut self, seconds: f64) -> Result<Snapshot, SessionError> {
        if !(seconds.is_finite() && seconds >= 0.0) {
            return Err(SessionError::invalid(
                "real_seconds",
                format!("must be a non-negative finite number, got {seconds}"),
            ));
        }
        self.advance(seconds * self.config.speed)
    }

    /// Takes effect at the next advance.
    pub fn set_control(&mut self, control: TeachingControl) -> Result<ControlAck, SessionError> {
        if !(control.u.is_finite() && control.u >= 0.0) {
            return Err(SessionError::invalid("u", format!("must be a non-negative finite number, got {}", control.u)));
        }
        let control = if control.teaching { control } else { TeachingControl::idle() };
        if control.teaching {
            self.max_u = self.max_u.max(control.u);
        }
        self.control = control;
        let ack = ControlAck {
            seq: self.next_seq(),
            clock: self.clock,
            control,
        };
        self.outbox.push(Update::Control(ack.clone()));
        Ok(ack)
    }

    pub fn set_speed(&mut self, speed: f64) -> Result<f64, SessionError> {
        let mut issues = Vec::new();
        positive("speed", speed, &mut issues);
        if !issues.is_empty() {
            return Err(SessionError::Invalid(issues));
        }
        self.config.speed = speed;
        let seq = self.next_seq();
        self.outbox.push(Update::Speed {
            seq,
            clock: self.clock,
            speed,
        });
        Ok(speed)
    }

    pub fn set_running(&mut self, running: bool) -> bool {
        self.running = running;
        let seq = self.next_seq();
        self.outbox.push(Update::Running {
            seq,
            clock: self.clock,
            running,
        });
        running
    }

    /// Every student attempts a task of difficulty `theta`. States do not
    /// change unless `consolidate_on_pass` is set.
    pub fn give_quiz(&mut self, theta: f64) -> Result<QuizResult, SessionError> {
        if !theta.is_finite() {
            return Err(SessionError::invalid("theta", format!("must be finite, got {theta}")));
        }
        let mut entries = Vec::with_capacity(self.students.len());
        for s in &self.students {
            let z = s.total();
            let (probability, outcome) = solver::attempt(z, theta, s.model.params().lambda(), &mut self.rng);
            entries.push(QuizEntry {
                student: s.id.clone(),
                z,
                probability,
                outcome,
                score: if outcome.is_solved() { 1.0 } else { 0.0 },
            });
        }
        if self.config.consolidate_on_pass && self.config.consolidation_time > 0.0 {
            let cfg = IntegratorConfig::rk4(self.config.dt).with_record_every(usize::MAX);
            for (s, e) in self.students.iter_mut().zip(&entries) {
                if e.outcome.is_solved() {
                    let mut integrator = Integrator::new(cfg)?;
                    let dynamics = ConsolidationDynamics {
                        model: &s.model,
                        shown_u: theta,
                    };
                    let mut z = s.z.clone();
                    integrator.advance(&dynamics, 0.0, self.config.consolidation_time, &mut z, |_, _| {})?;
                    self.clamp_events += integrator.clamp_events();
                    s.z = z;
                }
            }
        }
        let passed = entries.iter().filter(|e| e.outcome.is_solved()).count();
        let result = QuizResult {
            seq: self.next_seq(),
            t: self.clock,
            theta,
            pass_rate: passed as f64 / entries.len() as f64,
            entries,
        };
        self.quiz_log.push(result.clone());
        self.outbox.push(Update::Quiz(result.clone()));
        Ok(result)
    }

    /// Replaces one student's parameters; the state is kept.
    pub fn update_student(&mut self, student: &str, params: ModelParams) -> Result<StudentInfo, SessionError> {
        let idx = self
            .students
            .iter()
            .position(|s| s.id == student)
            .ok_or_else(|| SessionError::UnknownStudent(student.into()))?;
        let kind = self.config.model.kind(params.dim());
        let model = Model::new(kind, params).map_err(|e| SessionError::invalid("params", e.to_string()))?;
        if model.dim() != self.students[idx].z.len() {
            return Err(SessionError::invalid(
                "params.alphas",
                format!(
                    "student has {} components, parameters have {}",
                    self.students[idx].z.len(),
                    model.dim()
                ),
            ));
        }
        self.students[idx].model = model;
        let info = self.students[idx].info();
        let seq = self.next_seq();
        self.outbox.push(Update::Student {
            seq,
            clock: self.clock,
            student: info.clone(),
        });
        Ok(info)
    }

    pub fn history(&self, student: &str) -> Result<Vec<HistoryPoint>, SessionError> {
        self.students
            .iter()
            .find(|s| s.id == student)
            .map(|s| s.history.iter().cloned().collect())
            .ok_or_else(|| SessionError::UnknownStudent(student.into()))
    }

    pub fn score(&self) -> ScoreReport {
        let n = self.students.len() as f64;
        let views: Vec<StudentView> = self.students.iter().map(Student::view).collect();
        let mean_z = views.iter().map(|v| v.total).sum::<f64>() / n;
        let mean_strength = views.iter().map(|v| v.strength).sum::<f64>() / n;
        let (passed, taken) = self.quiz_log.iter().fold((0.0, 0usize), |(p, t), q| {
            (p + q.entries.iter().map(|e| e.score).sum::<f64>(), t + q.entries.len())
        });
        let pass_rate = if taken > 0 { passed / taken as f64 } else { 0.0 };
        let weights = self.config.grade_weights;
        ScoreReport {
            clock: self.clock,
            mean_z,
            mean_strength,
            max_u: self.max_u,
            quizzes: self
                .quiz_log
                .iter()
                .map(|q| QuizPoint {
                    t: q.t,
                    theta: q.theta,
                    pass_rate: q.pass_rate,
                })
                .collect(),
            pass_rate,
            weights,
            grade: grade(&weights, mean_z, self.max_u, mean_strength, pass_rate),
            students: views,
        }
    }

    /// Marks the session closed for subscribers.
    pub fn close(&mut self) {
        let seq = self.next_seq();
        self.running = false;
        self.outbox.push(Update::Closed { seq, clock: self.clock });
    }
}

fn validate(config: &ClassConfig) -> Result<Vec<Student>, SessionError> {
    let mut issues = Vec::new();
    if config.students.is_empty() {
        issues.push(issue("students", "at least one student is required"));
    }
    positive("speed", config.speed, &mut issues);
    positive("dt", config.dt, &mut issues);
    if config.history_cap == 0 {
        issues.push(issue("history_cap", "must be at least 1"));
    }
    if !(config.consolidation_time.is_finite() && config.consolidation_time >= 0.0) {
        issues.push(issue("consolidation_time", "must be a non-negative finite number"));
    }
    let w = config.grade_weights;
    if [w.z, w.strength, w.quiz].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        issues.push(issue("grade_weights", "weights must be non-negative finite numbers"));
    }

    let mut ids = HashSet::new();
    let mut students = Vec::new();
    for (i, spec) in config.students.iter().enumerate() {
        let id = spec.id.clone().unwrap_or_else(|| format!("s{}", i + 1));
        if !ids.insert(id.clone()) {
            issues.push(issue(format!("students[{i}].id"), format!("duplicate student id `{id}`")));
        }
        let n = spec.params.dim();
        let kind = config.model.kind(n);
        let model = match Model::new(kind, spec.params.clone()) {
            Ok(m) => m,
            Err(e) => {
                issues.push(issue(format!("students[{i}].params.alphas"), e.to_string()));
                continue;
            }
        };
        let z = match &spec.initial_state {
            Some(state) if state.len() != n => {
                issues.push(issue(
                    format!("students[{i}].initial_state"),
                    format!("has {} components, the model has {n}", state.len()),
                ));
                continue;
            }
            Some(state) => state.as_slice().to_vec(),
            None => vec![0.0; n],
        };
        students.push(Student {
            id,
            model,
            z,
            history: VecDeque::new(),
        });
    }
    if issues.is_empty() {
        Ok(students)
    } else {
        Err(SessionError::Invalid(issues))
    }
}

impl Session {
    /// Reads a session written with `serde_json` and re-checks every student's
    /// model against its parameters.
    pub fn restore(bytes: &[u8]) -> Result<Self, String> {
        let session: Session = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        if session.students.is_empty() {
            return Err("session has no students".into());
        }
        for s in &session.students {
            Model::new(s.model.kind(), s.model.params().clone()).map_err(|e| format!("student {}: {e}", s.id))?;
            if s.z.len() != s.model.dim() || s.z.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(format!("student {}: bad state {:?}", s.id, s.z));
            }
        }
        Ok(session)
    }
}
