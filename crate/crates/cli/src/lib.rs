//! `simulate`: run one or more scenario configs and write their traces.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use learnsim::config::{parse_config, OutputFormat, RunConfig};
use learnsim::report::{run, RunError, RunOutput, Summary};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Run learning/forgetting scenario configs")]
pub struct Args {
    /// Scenario config files (TOML).
    #[arg(required = true, value_name = "CONFIG")]
    pub configs: Vec<PathBuf>,
    /// Override the RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory. With several configs each run gets `<DIR>/<config stem>`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Trace format.
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Override the integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of configs run in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    /// Write a gnuplot script next to CSV traces.
    #[arg(long)]
    pub plot: bool,
    /// Only print errors.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Reads, parses and applies command-line overrides to every config. All
/// problems are collected before anything runs.
pub fn load_configs(args: &Args) -> Result<Vec<RunConfig>, Vec<String>> {
    let mut errors = Vec::new();
    let mut out = Vec::new();
    if let Some(dt) = args.dt {
        if !(dt.is_finite() && dt > 0.0) {
            errors.push(format!("--dt: must be a positive finite number, got {dt}"));
        }
    }
    for path in &args.configs {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                errors.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        match parse_config(&text) {
            Ok(mut cfg) => {
                apply_overrides(&mut cfg, args, path);
                out.push(cfg);
            }
            Err(e) => errors.push(format!("{}: {e}", path.display())),
        }
    }

    let mut seen: HashMap<&Path, &Path> = HashMap::new();
    for (cfg, path) in out.iter().zip(&args.configs) {
        if let Some(other) = seen.insert(cfg.output.dir.as_path(), path) {
            errors.push(format!(
                "{} and {} both write to {}",
                other.display(),
                path.display(),
                cfg.output.dir.display()
            ));
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn apply_overrides(cfg: &mut RunConfig, args: &Args, path: &Path) {
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = if args.configs.len() > 1 {
            dir.join(path.file_stem().unwrap_or(path.as_os_str()))
        } else {
            dir.clone()
        };
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    if let Some(dt) = args.dt {
        cfg.integrator.dt = dt;
    }
    if args.plot {
        cfg.output.plot = true;
    }
}

/// Runs every config on a pool of `jobs` threads. Results keep input order.
pub fn run_all(configs: &[RunConfig], jobs: usize) -> Vec<Result<RunOutput, RunError>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| configs.par_iter().map(run).collect())
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
}

pub fn format_summary(name: &str, out: &RunOutput, unit: &str) -> String {
    let s: &Summary = &out.summary;
    let mut text = String::new();
    let files: Vec<String> = out
        .files
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let _ = writeln!(text, "{name} -> {} ({})", out.dir.display(), files.join(", "));
    let unit = if unit.is_empty() { String::new() } else { format!(" {unit}") };
    let _ = writeln!(
        text,
        "  scenario {}, model {}, t_end {}{unit}, {} samples",
        s.scenario, s.model, s.t_end, s.samples
    );
    let _ = writeln!(
        text,
        "  final Z {:.4}, final {} {:.4}, state [{}]",
        s.final_z,
        s.strength,
        s.final_strength,
        fmt_list(&s.final_state)
    );
    if !s.lesson_end_z.is_empty() {
        let _ = writeln!(text, "  lesson-end Z: {}", fmt_list(&s.lesson_end_z));
    }
    let _ = writeln!(text, "  dips in Z: {}", s.dips);
    if let Some(rates) = &s.terminal_decay_rates {
        let shown: Vec<String> = rates
            .iter()
            .map(|r| r.map_or_else(|| "-".to_string(), |v| format!("{v:.5}")))
            .collect();
        let _ = writeln!(text, "  decay rates on final break: {}", shown.join(" "));
    }
    if s.attempts > 0 {
        let _ = writeln!(text, "  task attempts {}, solved {}", s.attempts, s.solved);
    }
    let _ = writeln!(text, "  clamp events: {}", s.clamp_events);
    text
}

/// Parses `argv`, runs everything and returns the process exit code.
pub fn main_with(argv: impl IntoIterator<Item = std::ffi::OsString>) -> u8 {
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let configs = match load_configs(&args) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            return EXIT_INVALID;
        }
    };

    let mut code = EXIT_OK;
    for ((result, cfg), path) in run_all(&configs, args.jobs.into()).into_iter().zip(&configs).zip(&args.configs) {
        let name = path.display().to_string();
        match result {
            Ok(out) => {
                if !args.quiet {
                    print!("{}", format_summary(&name, &out, &cfg.unit));
                }
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                code = EXIT_RUNTIME;
            }
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> Args {
        let mut argv = vec!["simulate"];
        argv.extend_from_slice(extra);
        Args::try_parse_from(argv).unwrap()
    }

    fn a1() -> RunConfig {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/a1_three_lessons.toml");
        parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn single_config_uses_out_directly() {
        let a = args(&["a.toml", "--out", "o", "--seed", "5", "--format", "json", "--plot"]);
        let mut cfg = a1();
        apply_overrides(&mut cfg, &a, Path::new("dir/a.toml"));
        assert_eq!(cfg.output.dir, PathBuf::from("o"));
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.output.format, OutputFormat::Json);
        assert!(cfg.output.plot);
    }

    #[test]
    fn batch_gets_one_directory_per_config() {
        let a = args(&["x/a.toml", "y/b.toml", "--out", "o", "--dt", "0.05"]);
        let mut cfg = a1();
        apply_overrides(&mut cfg, &a, Path::new("y/b.toml"));
        assert_eq!(cfg.output.dir, PathBuf::from("o/b"));
        assert_eq!(cfg.integrator.dt, 0.05);
    }

    #[test]
    fn without_overrides_file_values_stay() {
        let a = args(&["a.toml"]);
        let mut cfg = a1();
        let before = cfg.clone();
        apply_overrides(&mut cfg, &a, Path::new("a.toml"));
        assert_eq!(cfg, before);
    }

    #[test]
    fn jobs_must_be_positive() {
        assert!(Args::try_parse_from(["simulate", "a.toml", "--jobs", "0"]).is_err());
        assert_eq!(args(&["a.toml", "--jobs", "3"]).jobs, 3);
    }

    #[test]
    fn summary_text_lists_key_numbers() {
        let dir = std::env::temp_dir().join(format!("learnsim-cli-{}", std::process::id()));
        let mut cfg = a1();
        cfg.output.dir = dir.clone();
        let out = run(&cfg).unwrap();
        let text = format_summary("a1", &out, "hours");
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(text.starts_with("a1 -> "));
        assert!(text.contains("t_end 6 hours"));
        assert!(text.contains("lesson-end Z: 2.7289 5.1038 7.5612"));
        assert!(text.contains("dips in Z: 3"));
        assert!(!text.contains("task attempts"));
    }
}
