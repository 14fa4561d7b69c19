//! Summaries of finished traces and the batch `run` entry point.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig, ScenarioConfig};
use crate::error::{Error, Result};
use crate::export;
use crate::scenario::{run_lessons, run_school_career, run_task_sequence};
use crate::trace::{Event, Sample, SimulationTrace};

/// Relative drop below which a decrease of `Z` is treated as numerical noise.
const DIP_NOISE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub model: String,
    pub samples: usize,
    pub t_end: f64,
    pub final_state: Vec<f64>,
    pub final_z: f64,
    pub strength: String,
    pub final_strength: f64,
    /// Total knowledge at the end of each lesson.
    pub lesson_end_z: Vec<f64>,
    /// Number of separate stretches during which `Z` falls.
    pub dips: usize,
    /// Per-component decay rates fitted on the trailing break, if any.
    pub terminal_decay_rates: Option<Vec<Option<f64>>>,
    pub attempts: usize,
    pub solved: usize,
    pub clamp_events: u64,
}

pub fn summarize(trace: &SimulationTrace) -> Result<Summary> {
    let last = trace
        .last()
        .ok_or_else(|| Error::Domain("cannot summarize an empty trace".into()))?;
    let attempts = trace.attempts().count();
    let solved = trace.attempts().filter(|a| a.outcome.is_solved()).count();
    let terminal = terminal_break(&trace.samples);
    Ok(Summary {
        scenario: trace.metadata.scenario.clone(),
        model: trace.metadata.model.clone(),
        samples: trace.samples.len(),
        t_end: last.t,
        final_state: last.z.clone(),
        final_z: last.total(),
        strength: trace.metadata.strength.label().into(),
        final_strength: trace.strength(last),
        lesson_end_z: lesson_end_totals(&trace.samples),
        dips: dip_starts(trace).len(),
        terminal_decay_rates: (terminal.len() >= 2).then(|| fit_decay_rates(terminal)),
        attempts,
        solved,
        clamp_events: trace.metadata.clamp_events,
    })
}

/// `Z` at every switch from teaching to not teaching, plus the final sample
/// when the trace ends mid-lesson.
pub fn lesson_end_totals(samples: &[Sample]) -> Vec<f64> {
    let mut out: Vec<f64> = samples
        .windows(2)
        .filter(|w| w[0].teaching && !w[1].teaching)
        .map(|w| w[1].total())
        .collect();
    if let Some(last) = samples.last() {
        if last.teaching {
            out.push(last.total());
        }
    }
    out
}

/// Times at which `Z` starts a stretch of strict decrease whose relative drop
/// exceeds numerical noise.
pub fn dip_starts(trace: &SimulationTrace) -> Vec<f64> {
    let totals: Vec<f64> = trace.totals().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k + 1 < totals.len() {
        if totals[k + 1] < totals[k] {
            let start = k;
            while k + 1 < totals.len() && totals[k + 1] < totals[k] {
                k += 1;
            }
            let drop = totals[start] - totals[k];
            if drop > DIP_NOISE * totals[start].abs().max(f64::MIN_POSITIVE) {
                out.push(trace.samples[start].t);
            }
        } else {
            k += 1;
        }
    }
    out
}

/// The trailing run of samples without teaching.
pub fn terminal_break(samples: &[Sample]) -> &[Sample] {
    let start = samples
        .iter()
        .rposition(|s| s.teaching)
        .map_or(0, |i| i + 1);
    &samples[start..]
}

/// Least-squares slope of `ln z_i` against `t`, negated, for each component.
/// `None` where fewer than two positive values exist.
pub fn fit_decay_rates(samples: &[Sample]) -> Vec<Option<f64>> {
    let n = samples.first().map_or(0, |s| s.z.len());
    (0..n)
        .map(|i| {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| s.z[i] > 0.0)
                .map(|s| (s.t, s.z[i].ln()))
                .collect();
            log_linear_slope(&pts).map(|slope| -slope)
        })
        .collect()
}

fn log_linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    Some(sxy / sxx)
}

/// Runs the configured scenario and returns its trace without touching disk.
pub fn simulate(config: &RunConfig) -> Result<SimulationTrace> {
    let mut trace = match &config.scenario {
        ScenarioConfig::Lessons(schedule) => {
            run_lessons(schedule, &config.model, &config.initial_state, &config.integrator)?
        }
        ScenarioConfig::TaskSequence(tasks) => run_task_sequence(
            tasks,
            &config.model,
            &config.initial_state,
            &config.integrator,
            config.seed,
        )?,
        ScenarioConfig::SchoolCareer(career) => {
            run_school_career(career, &config.model, &config.initial_state, &config.integrator)?
        }
    };
    trace.metadata.unit = config.unit.clone();
    trace.metadata.seed = Some(config.seed);
    Ok(trace)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Simulation(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

type WriteJob<'a> = Box<dyn Fn(&mut dyn Write) -> io::Result<()> + 'a>;

/// Simulates `config` and writes the trace, event log, metadata, summary and
/// (optionally) a gnuplot script into `config.output.dir`. Files are staged
/// under temporary names and renamed once all of them are written; nothing is
/// left behind on failure.
pub fn run(config: &RunConfig) -> std::result::Result<RunOutput, RunError> {
    let trace = simulate(config)?;
    let summary = summarize(&trace)?;
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;

    let trace_name = match config.output.format {
        OutputFormat::Csv => export::TRACE_CSV,
        OutputFormat::Json => export::TRACE_JSON,
    };
    let mut jobs: Vec<(&str, WriteJob<'_>)> = vec![
        (
            trace_name,
            Box::new(|w: &mut dyn Write| match config.output.format {
                OutputFormat::Csv => export::write_csv(&trace, w),
                OutputFormat::Json => export::write_json(&trace, w),
            }),
        ),
        (export::EVENTS_JSON, Box::new(|w: &mut dyn Write| export::write_events(&trace.events, w))),
        (
            export::METADATA_JSON,
            Box::new(|w: &mut dyn Write| export::write_metadata(&trace.metadata, w)),
        ),
        (
            export::SUMMARY_JSON,
            Box::new(|w: &mut dyn Write| serde_json::to_writer_pretty(w, &summary).map_err(io::Error::from)),
        ),
    ];
    if config.output.plot && config.output.format == OutputFormat::Csv {
        jobs.push((
            export::PLOT_SCRIPT,
            Box::new(|w: &mut dyn Write| w.write_all(export::gnuplot_script(&trace, export::TRACE_CSV).as_bytes())),
        ));
    }

    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let result = (|| {
        for (name, write) in &jobs {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            staged.push((tmp.clone(), target));
            let file = File::create(&tmp).map_err(|e| RunError::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(|e| RunError::io(&tmp, e))?;
            w.flush().map_err(|e| RunError::io(&tmp, e))?;
        }
        for (tmp, target) in &staged {
            fs::rename(tmp, target).map_err(|e| RunError::io(target, e))?;
        }
        Ok(())
    })();

    drop(jobs);
    if let Err(e) = result {
        for (tmp, target) in &staged {
            let _ = fs::remove_file(tmp);
            let _ = fs::remove_file(target);
        }
        return Err(e);
    }

    Ok(RunOutput {
        dir,
        files: staged.into_iter().map(|(_, target)| target).collect(),
        summary,
    })
}

/// Events of one kind, for report tables.
pub fn lesson_events(trace: &SimulationTrace) -> impl Iterator<Item = &Event> {
    trace
        .events
        .iter()
        .filter(|e| matches!(e, Event::LessonStart { .. } | Event::LessonEnd { .. }))
}
