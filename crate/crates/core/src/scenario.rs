//! Declarative teaching scenarios.
//!
//! * Lessons with a piecewise-linear requirement level separated by breaks.
//! * A sequence of tasks of increasing difficulty where the teacher retries a
//!   failed task after a short teaching interval.
//! * A multi-year school career with study months and vacations.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Dynamics, Integrator, IntegratorConfig};
use crate::model::{KnowledgeState, Model, ModelKind, TeachingControl};
use crate::solver::{self, AttemptRecord, SimRng, RNG_NAME};
use crate::trace::{Event, Sample, SimulationTrace, TraceMetadata};

/// One piece of a requirement schedule. Breaks (`teaching = false`) always
/// carry `U = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub teaching: bool,
    #[serde(default)]
    pub u_base: f64,
    #[serde(default)]
    pub u_slope: f64,
}

impl RequirementSegment {
    pub fn lesson(t_start: f64, t_end: f64, u_base: f64, u_slope: f64) -> Self {
        Self {
            t_start,
            t_end,
            teaching: true,
            u_base,
            u_slope,
        }
    }

    pub fn pause(t_start: f64, t_end: f64) -> Self {
        Self {
            t_start,
            t_end,
            teaching: false,
            u_base: 0.0,
            u_slope: 0.0,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Control inside this segment, without checking the time bounds.
    pub fn control_at(&self, t: f64) -> TeachingControl {
        if self.teaching {
            TeachingControl::teach(self.u_slope * (t - self.t_start) + self.u_base)
        } else {
            TeachingControl::idle()
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let at = |msg: String| Error::Schedule(format!("segment {index}: {msg}"));
        if !self.t_start.is_finite() || !self.t_end.is_finite() || self.t_end <= self.t_start {
            return Err(at(format!(
                "t_end ({}) must be greater than t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if self.teaching {
            if !self.u_base.is_finite() || self.u_base < 0.0 {
                return Err(at(format!("u_base must be >= 0, got {}", self.u_base)));
            }
            let u_end = self.u_slope * self.duration() + self.u_base;
            if !u_end.is_finite() || u_end < 0.0 {
                return Err(at(format!("requirement level becomes negative ({u_end}) by t_end")));
            }
        }
        Ok(())
    }
}

/// Contiguous, gap-free list of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RequirementSegment>", into = "Vec<RequirementSegment>")]
pub struct RequirementSchedule {
    segments: Vec<RequirementSegment>,
}

impl TryFrom<Vec<RequirementSegment>> for RequirementSchedule {
    type Error = Error;

    fn try_from(segments: Vec<RequirementSegment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<RequirementSchedule> for Vec<RequirementSegment> {
    fn from(s: RequirementSchedule) -> Self {
        s.segments
    }
}

impl RequirementSchedule {
    pub fn new(segments: Vec<RequirementSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Schedule("schedule has no segments".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            seg.validate(i)?;
            if i > 0 && seg.t_start != segments[i - 1].t_end {
                return Err(Error::Schedule(format!(
                    "segment {i} starts at {} but segment {} ends at {}",
                    seg.t_start,
                    i - 1,
                    segments[i - 1].t_end
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Lessons of equal length separated by breaks, starting at `t = 0`.
    /// `lessons` holds `(u_base, u_slope)` per lesson. The schedule ends with a
    /// break of `final_break` after the last lesson (omitted when zero).
    pub fn alternating(
        lesson_len: f64,
        break_len: f64,
        lessons: &[(f64, f64)],
        final_break: f64,
    ) -> Result<Self> {
        let mut segments = Vec::new();
        let mut t = 0.0;
        for (i, &(u_base, u_slope)) in lessons.iter().enumerate() {
            segments.push(RequirementSegment::lesson(t, t + lesson_len, u_base, u_slope));
            t += lesson_len;
            let pause = if i + 1 == lessons.len() { final_break } else { break_len };
            if pause > 0.0 {
                segments.push(RequirementSegment::pause(t, t + pause));
                t += pause;
            }
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[RequirementSegment] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    /// Index of the segment containing `t`: intervals are right-open except
    /// the last, which is closed.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::Domain(format!(
                "t = {t} outside schedule span [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        Ok(idx.min(self.segments.len() - 1))
    }

    pub fn requirement_at(&self, t: f64) -> Result<TeachingControl> {
        let i = self.segment_index(t)?;
        Ok(self.segments[i].control_at(t))
    }
}

/// Free function form of [`RequirementSchedule::requirement_at`].
pub fn requirement_at(schedule: &RequirementSchedule, t: f64) -> Result<TeachingControl> {
    schedule.requirement_at(t)
}

struct SegmentDynamics<'a> {
    model: &'a Model,
    segment: RequirementSegment,
}

impl Dynamics for SegmentDynamics<'_> {
    fn rates(&self, t: f64, z: &[f64], out: &mut [f64]) {
        self.model.rates_into(z, &self.segment.control_at(t), out);
    }

    fn control(&self, t: f64) -> TeachingControl {
        self.segment.control_at(t)
    }
}

/// A model under a fixed control.
pub struct ConstantDynamics<'a> {
    pub model: &'a Model,
    pub control: TeachingControl,
}

impl Dynamics for ConstantDynamics<'_> {
    fn rates(&self, _t: f64, z: &[f64], out: &mut [f64]) {
        self.model.rates_into(z, &self.control, out);
    }

    fn control(&self, _t: f64) -> TeachingControl {
        self.control
    }
}

/// Transitions between categories run, acquisition does not. `shown_u` is the
/// requirement level reported in the trace.
pub struct ConsolidationDynamics<'a> {
    pub model: &'a Model,
    pub shown_u: f64,
}

impl Dynamics for ConsolidationDynamics<'_> {
    fn rates(&self, _t: f64, z: &[f64], out: &mut [f64]) {
        self.model.consolidation_rates_into(z, out);
    }

    fn control(&self, _t: f64) -> TeachingControl {
        TeachingControl::teach(self.shown_u)
    }
}

/// Accumulates samples across consecutive intervals. The sample at the end of
/// an interval is held back until the control of the following interval is
/// known, so each boundary sample reports the control that starts there.
struct TraceBuilder {
    integrator: Integrator,
    t: f64,
    z: Vec<f64>,
    samples: Vec<Sample>,
    pending: bool,
    events: Vec<Event>,
}

impl TraceBuilder {
    fn new(model: &Model, state0: &KnowledgeState, t0: f64, cfg: &IntegratorConfig) -> Result<Self> {
        model.check_state(state0)?;
        Ok(Self {
            integrator: Integrator::new(*cfg)?,
            t: t0,
            z: state0.as_slice().to_vec(),
            samples: Vec::new(),
            pending: true,
            events: Vec::new(),
        })
    }

    fn flush(&mut self, control: TeachingControl) {
        if self.pending {
            self.samples.push(Sample::new(self.t, control, &self.z));
            self.pending = false;
        }
    }

    fn run<D: Dynamics>(&mut self, dynamics: &D, duration: f64) -> Result<()> {
        let t0 = self.t;
        let t1 = t0 + duration;
        self.flush(dynamics.control(t0));
        let samples = &mut self.samples;
        let mut last = None;
        self.integrator.advance(dynamics, t0, t1, &mut self.z, |t, z| {
            if t == t1 {
                last = Some(t);
            } else {
                samples.push(Sample::new(t, dynamics.control(t), z));
            }
        })?;
        self.t = t1;
        self.pending = last.is_some();
        Ok(())
    }

    fn total(&self) -> f64 {
        self.z.iter().sum()
    }

    fn finish(mut self, final_control: TeachingControl, metadata: TraceMetadata) -> SimulationTrace {
        self.flush(final_control);
        let mut metadata = metadata;
        metadata.clamp_events = self.integrator.clamp_events();
        SimulationTrace {
            metadata,
            samples: self.samples,
            events: self.events,
        }
    }
}

fn metadata(scenario: &str, model: &Model, cfg: &IntegratorConfig) -> TraceMetadata {
    TraceMetadata {
        scenario: scenario.into(),
        model: model.kind().name(),
        components: model.dim(),
        strength: model.strength_kind(),
        unit: String::new(),
        params: Some(model.params().clone()),
        dt: cfg.dt,
        method: cfg.method.name().into(),
        seed: None,
        rng: None,
        clamp_events: 0,
    }
}

/// Integrates `model` under a requirement schedule, splitting the integration
/// at every segment boundary. Lesson start and end events are logged.
pub fn run_lessons(
    schedule: &RequirementSchedule,
    model: &Model,
    state0: &KnowledgeState,
    cfg: &IntegratorConfig,
) -> Result<SimulationTrace> {
    let mut b = TraceBuilder::new(model, state0, schedule.start(), cfg)?;
    let mut lesson = 0;
    let mut in_lesson = false;
    for seg in schedule.segments() {
        if seg.teaching && !in_lesson {
            b.events.push(Event::LessonStart { t: seg.t_start, lesson });
            in_lesson = true;
        } else if !seg.teaching && in_lesson {
            b.events.push(Event::LessonEnd { t: seg.t_start, lesson });
            lesson += 1;
            in_lesson = false;
        }
        let dynamics = SegmentDynamics { model, segment: *seg };
        b.run(&dynamics, seg.duration())?;
        // keep the exact breakpoint rather than the accumulated sum
        b.t = seg.t_end;
    }
    let end = schedule.end();
    if in_lesson {
        b.events.push(Event::LessonEnd { t: end, lesson });
    }
    let last = schedule.requirement_at(end)?;
    Ok(b.finish(last, metadata("lessons", model, cfg)))
}

/// Scenario with tasks of difficulty `theta_i = i * d_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSet {
    pub n_tasks: usize,
    pub d_theta: f64,
    pub attempt_dt: f64,
    pub lesson_len: f64,
    pub break_len: f64,
    pub n_lessons: usize,
}

impl TaskSet {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(Error::param("tasks.n_tasks", "must be >= 1"));
        }
        if self.n_lessons == 0 {
            return Err(Error::param("tasks.n_lessons", "must be >= 1"));
        }
        for (name, v) in [
            ("tasks.d_theta", self.d_theta),
            ("tasks.attempt_dt", self.attempt_dt),
            ("tasks.lesson_len", self.lesson_len),
            ("tasks.break_len", self.break_len),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Advisory checks that do not prevent a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lesson_len < 10.0 * self.attempt_dt {
            out.push(format!(
                "lesson_len {} is less than 10 attempt intervals ({})",
                self.lesson_len, self.attempt_dt
            ));
        }
        if self.break_len < 10.0 * self.attempt_dt {
            out.push(format!(
                "break_len {} is less than 10 attempt intervals ({})",
                self.break_len, self.attempt_dt
            ));
        }
        out
    }

    pub fn theta(&self, task_index: usize) -> f64 {
        task_index as f64 * self.d_theta
    }
}

/// Teacher loop over a task sequence.
///
/// At each attempt boundary the student tries task `i`. A solved task is
/// followed by a consolidation interval of `attempt_dt` and the next task; a
/// failed one by a teaching interval of `attempt_dt` at `U = theta_i` and a
/// retry. A lesson ends at the first attempt boundary at or after
/// `lesson_len`; breaks are pure forgetting. The run stops after `n_lessons`
/// lessons or once every task is solved.
pub fn run_task_sequence(
    tasks: &TaskSet,
    model: &Model,
    state0: &KnowledgeState,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<SimulationTrace> {
    tasks.validate()?;
    for w in tasks.warnings() {
        warn!("{w}");
    }
    let mut rng = solver::seeded_rng(seed);
    let mut b = TraceBuilder::new(model, state0, 0.0, cfg)?;
    let lambda = model.params().lambda();
    let mut task = 1usize;
    let mut last_control = TeachingControl::idle();

    'lessons: for lesson in 0..tasks.n_lessons {
        let lesson_start = b.t;
        b.events.push(Event::LessonStart { t: lesson_start, lesson });
        let mut attempts = 0usize;
        loop {
            let theta = tasks.theta(task);
            let record = draw_attempt(&mut rng, b.t, task, theta, b.total(), lambda);
            let solved = record.outcome.is_solved();
            b.events.push(Event::TaskAttempt(record));
            if solved {
                b.run(&ConsolidationDynamics { model, shown_u: theta }, tasks.attempt_dt)?;
                last_control = TeachingControl::teach(theta);
                task += 1;
            } else {
                let control = TeachingControl::teach(theta);
                b.run(&ConstantDynamics { model, control }, tasks.attempt_dt)?;
                last_control = control;
            }
            attempts += 1;
            b.t = lesson_start + attempts as f64 * tasks.attempt_dt;

            if task > tasks.n_tasks {
                b.events.push(Event::LessonEnd { t: b.t, lesson });
                b.events.push(Event::TasksCompleted {
                    t: b.t,
                    tasks: tasks.n_tasks,
                });
                break 'lessons;
            }
            if attempts as f64 * tasks.attempt_dt >= tasks.lesson_len * (1.0 - 1e-12) {
                break;
            }
        }
        b.events.push(Event::LessonEnd { t: b.t, lesson });
        if lesson + 1 < tasks.n_lessons {
            let pause_start = b.t;
            let control = TeachingControl::idle();
            b.run(&ConstantDynamics { model, control }, tasks.break_len)?;
            b.t = pause_start + tasks.break_len;
            last_control = control;
        }
    }

    let mut meta = metadata("task_sequence", model, cfg);
    meta.seed = Some(seed);
    meta.rng = Some(RNG_NAME.into());
    Ok(b.finish(last_control, meta))
}

fn draw_attempt(rng: &mut SimRng, t: f64, task_index: usize, theta: f64, z: f64, lambda: f64) -> AttemptRecord {
    let (probability, outcome) = solver::attempt(z, theta, lambda, rng);
    AttemptRecord {
        t,
        task_index,
        theta,
        z_at_attempt: z,
        probability,
        outcome,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchoolCareerConfig {
    #[serde(default = "default_grades")]
    pub n_grades: usize,
    #[serde(default = "default_study")]
    pub months_study: u32,
    #[serde(default = "default_vacation")]
    pub months_vacation: u32,
    pub grade_requirements: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub post_school_horizon: f64,
}

fn default_grades() -> usize {
    11
}
fn default_study() -> u32 {
    9
}
fn default_vacation() -> u32 {
    3
}
fn default_horizon() -> f64 {
    24.0
}

impl SchoolCareerConfig {
    pub fn new(grade_requirements: Vec<f64>) -> Self {
        Self {
            n_grades: grade_requirements.len(),
            months_study: default_study(),
            months_vacation: default_vacation(),
            grade_requirements,
            post_school_horizon: default_horizon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grades == 0 {
            return Err(Error::param("career.n_grades", "must be >= 1"));
        }
        if self.months_study == 0 {
            return Err(Error::param("career.months_study", "must be >= 1"));
        }
        if self.months_vacation == 0 {
            return Err(Error::param("career.months_vacation", "must be >= 1"));
        }
        if self.grade_requirements.len() != self.n_grades {
            return Err(Error::Dimension {
                what: "career.grade_requirements",
                expected: self.n_grades,
                found: self.grade_requirements.len(),
            });
        }
        if let Some((i, u)) = self
            .grade_requirements
            .iter()
            .enumerate()
            .find(|(_, u)| !u.is_finite() || **u < 0.0)
        {
            return Err(Error::param(
                format!("career.grade_requirements[{i}]"),
                format!("must be >= 0, got {u}"),
            ));
        }
        if !self.post_school_horizon.is_finite() || self.post_school_horizon < 0.0 {
            return Err(Error::param("career.post_school_horizon", "must be >= 0"));
        }
        Ok(())
    }

    pub fn year_len(&self) -> f64 {
        f64::from(self.months_study + self.months_vacation)
    }

    /// Time at which vacation of grade `g` (0-based) starts.
    pub fn vacation_start(&self, grade: usize) -> f64 {
        grade as f64 * self.year_len() + f64::from(self.months_study)
    }

    pub fn graduation(&self) -> f64 {
        self.n_grades as f64 * self.year_len()
    }

    /// Study months at each grade's requirement level, vacations and the
    /// post-school period as breaks.
    pub fn schedule(&self) -> Result<RequirementSchedule> {
        self.validate()?;
        let mut segments = Vec::with_capacity(2 * self.n_grades + 1);
        for (g, &u) in self.grade_requirements.iter().enumerate() {
            let start = g as f64 * self.year_len();
            let vac = self.vacation_start(g);
            // a grade without requirements holds no lessons
            segments.push(if u > 0.0 {
                RequirementSegment::lesson(start, vac, u, 0.0)
            } else {
                RequirementSegment::pause(start, vac)
            });
            segments.push(RequirementSegment::pause(vac, (g + 1) as f64 * self.year_len()));
        }
        if self.post_school_horizon > 0.0 {
            let t = self.graduation();
            segments.push(RequirementSegment::pause(t, t + self.post_school_horizon));
        }
        RequirementSchedule::new(segments)
    }
}

/// School career with the three-category generalized model.
pub fn run_school_career(
    career: &SchoolCareerConfig,
    model: &Model,
    state0: &KnowledgeState,
    cfg: &IntegratorConfig,
) -> Result<SimulationTrace> {
    if !matches!(model.kind(), ModelKind::Three | ModelKind::General(3)) {
        return Err(Error::Dimension {
            what: "career model",
            expected: 3,
            found: model.dim(),
        });
    }
    let schedule = career.schedule()?;
    let mut trace = run_lessons(&schedule, model, state0, cfg)?;
    trace.metadata.scenario = "school_career".into();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use approx::assert_abs_diff_eq;

    fn four() -> Model {
        let p = ModelParams::simple(vec![0.8, 0.5, 0.3, 0.2], vec![0.6, 0.2, 0.05, 0.01]).unwrap();
        Model::new(ModelKind::Four, p).unwrap()
    }

    #[test]
    fn requirement_lookup() {
        let s = RequirementSchedule::new(vec![
            RequirementSegment::lesson(0.0, 2.0, 5.0, 0.0),
            RequirementSegment::pause(2.0, 3.0),
            RequirementSegment::lesson(3.0, 7.0, 2.0, 1.5),
        ])
        .unwrap();
        assert_eq!(s.requirement_at(1.0).unwrap(), TeachingControl::teach(5.0));
        assert_eq!(s.requirement_at(2.5).unwrap(), TeachingControl::idle());
        assert_eq!(s.requirement_at(2.0).unwrap(), TeachingControl::idle());
        assert_eq!(s.requirement_at(5.0).unwrap(), TeachingControl::teach(5.0));
        assert_eq!(s.requirement_at(7.0).unwrap(), TeachingControl::teach(8.0));
        assert!(s.requirement_at(7.5).is_err());
        assert!(s.requirement_at(-0.1).is_err());
    }

    #[test]
    fn linear_segment_value() {
        let s = RequirementSchedule::new(vec![RequirementSegment::lesson(0.0, 4.0, 2.0, 1.5)]).unwrap();
        assert_eq!(s.requirement_at(2.0).unwrap(), TeachingControl::teach(5.0));
    }

    #[test]
    fn schedule_validation() {
        assert!(RequirementSchedule::new(vec![]).is_err());
        assert!(RequirementSchedule::new(vec![RequirementSegment::lesson(1.0, 1.0, 1.0, 0.0)]).is_err());
        assert!(RequirementSchedule::new(vec![
            RequirementSegment::lesson(0.0, 1.0, 1.0, 0.0),
            RequirementSegment::pause(1.5, 2.0),
        ])
        .is_err());
        assert!(RequirementSchedule::new(vec![RequirementSegment::lesson(0.0, 1.0, 1.0, -2.0)]).is_err());
        assert!(RequirementSchedule::new(vec![RequirementSegment::lesson(0.0, 1.0, -1.0, 0.0)]).is_err());
    }

    #[test]
    fn break_only_schedule_is_exponential_decay() {
        let m = four();
        let s = RequirementSchedule::new(vec![RequirementSegment::pause(0.0, 5.0)]).unwrap();
        let state0 = KnowledgeState::new(vec![1.0; 4]).unwrap();
        let trace = run_lessons(&s, &m, &state0, &IntegratorConfig::rk4(0.01)).unwrap();
        for sample in &trace.samples {
            for (z, g) in sample.z.iter().zip(m.params().gammas()) {
                assert_abs_diff_eq!(*z, (-g * sample.t).exp(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn lesson_then_break_forgets_weak_knowledge_faster() {
        let m = four();
        let s = RequirementSchedule::alternating(3.0, 0.0, &[(10.0, 0.0)], 4.0).unwrap();
        let trace = run_lessons(&s, &m, &KnowledgeState::zeros(4), &IntegratorConfig::default()).unwrap();
        let end_lesson = trace.sample_at(3.0).unwrap();
        let end = trace.last().unwrap();
        assert!(end_lesson.total() > 0.0);
        assert!(end.total() < end_lesson.total());
        let keep1 = end.z[0] / end_lesson.z[0];
        let keep4 = end.z[3] / end_lesson.z[3];
        assert!(keep1 < keep4);
        assert_eq!(trace.metadata.clamp_events, 0);
    }

    #[test]
    fn samples_at_every_breakpoint() {
        let m = four();
        let s = RequirementSchedule::alternating(1.0, 0.5, &[(4.0, 0.0), (7.0, 0.0), (10.0, 0.0)], 2.0).unwrap();
        let cfg = IntegratorConfig::rk4(0.03).with_record_every(7);
        let trace = run_lessons(&s, &m, &KnowledgeState::zeros(4), &cfg).unwrap();
        for seg in s.segments() {
            assert!(trace.sample_at(seg.t_start).is_some(), "missing {}", seg.t_start);
            assert!(trace.sample_at(seg.t_end).is_some(), "missing {}", seg.t_end);
        }
        assert!(trace.samples.windows(2).all(|w| w[1].t > w[0].t));
        // boundary samples carry the control that starts there
        assert!(!trace.sample_at(1.0).unwrap().teaching);
        assert!(trace.sample_at(1.5).unwrap().teaching);
    }

    #[test]
    fn task_set_warnings() {
        let t = TaskSet {
            n_tasks: 3,
            d_theta: 1.0,
            attempt_dt: 1.0,
            lesson_len: 5.0,
            break_len: 20.0,
            n_lessons: 1,
        };
        assert_eq!(t.warnings().len(), 1);
        assert!(t.validate().is_ok());
        assert!(TaskSet { n_tasks: 0, ..t }.validate().is_err());
    }

    #[test]
    fn saturated_failure_then_teaching() {
        let p = ModelParams::new(vec![0.5, 0.2], vec![0.05, 0.01], 0.0, 1000.0, 0.0).unwrap();
        let m = Model::new(ModelKind::Two, p).unwrap();
        let tasks = TaskSet {
            n_tasks: 5,
            d_theta: 1.0,
            attempt_dt: 0.2,
            lesson_len: 4.0,
            break_len: 2.0,
            n_lessons: 1,
        };
        let trace = run_task_sequence(&tasks, &m, &KnowledgeState::zeros(2), &IntegratorConfig::default(), 3).unwrap();
        let first = trace.attempts().next().unwrap();
        assert!(!first.outcome.is_solved());
        assert_eq!(first.probability, 0.0);
        let after = trace.samples.iter().find(|s| s.t > 0.0).unwrap();
        assert!(after.teaching);
        assert_eq!(after.u, 1.0);
        assert!(after.total() > 0.0);
    }

    #[test]
    fn consolidation_keeps_total_but_firms_up() {
        // no forgetting in the firm category, tiny elsewhere
        let p = ModelParams::new(vec![0.5, 0.4], vec![1e-9, 0.0], 0.0, 1000.0, 0.0).unwrap();
        let m = Model::new(ModelKind::Two, p).unwrap();
        let tasks = TaskSet {
            n_tasks: 1,
            d_theta: 1.0,
            attempt_dt: 1.0,
            lesson_len: 10.0,
            break_len: 10.0,
            n_lessons: 1,
        };
        let s0 = KnowledgeState::new(vec![10.0, 0.0]).unwrap();
        let trace = run_task_sequence(&tasks, &m, &s0, &IntegratorConfig::rk4(0.01), 0).unwrap();
        let end = trace.last().unwrap();
        assert_abs_diff_eq!(end.total(), 10.0, epsilon = 1e-6);
        assert!(end.z[1] > 3.0);
    }

    #[test]
    fn career_schedule_layout() {
        let c = SchoolCareerConfig::new(vec![1.0; 11]);
        let s = c.schedule().unwrap();
        assert_eq!(s.segments().len(), 23);
        assert_eq!(s.end(), 132.0 + 24.0);
        assert_eq!(c.vacation_start(0), 9.0);
        assert_eq!(c.vacation_start(10), 129.0);
        let bad = SchoolCareerConfig {
            n_grades: 10,
            ..c.clone()
        };
        assert!(matches!(bad.validate(), Err(Error::Dimension { .. })));
    }

    #[test]
    fn career_requires_three_components() {
        let c = SchoolCareerConfig::new(vec![1.0; 11]);
        let r = run_school_career(&c, &four(), &KnowledgeState::zeros(4), &IntegratorConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn zero_requirements_career_is_pure_decay() {
        let p = ModelParams::simple(vec![0.3, 0.1, 0.05], vec![0.3, 0.05, 0.005]).unwrap();
        let m = Model::new(ModelKind::Three, p).unwrap();
        let c = SchoolCareerConfig::new(vec![0.0; 11]);
        let s0 = KnowledgeState::new(vec![1.0, 1.0, 1.0]).unwrap();
        let trace = run_school_career(&c, &m, &s0, &IntegratorConfig::rk4(0.05).with_record_every(20)).unwrap();
        assert!(trace.samples.iter().all(|s| !s.teaching));
        for sample in &trace.samples {
            for (z, g) in sample.z.iter().zip(m.params().gammas()) {
                assert_abs_diff_eq!(*z, (-g * sample.t).exp(), epsilon = 1e-7);
            }
        }
    }
}
