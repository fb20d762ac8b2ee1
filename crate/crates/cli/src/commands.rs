//! Command implementations. Each run resolves into a [`Job`], so a manifest
//! can replay it exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use capture_core::design::evaluate_design;
use capture_core::dynamics::trace::write_csv;
use capture_core::experiments::{
    bundled_text, run_batch_with_outcomes, run_trial, sweep, SweepSpec, BUNDLED, SCENARIO_NAMES,
};
use capture_core::mission::Phase;
use capture_core::{Config, ConfigError, TrialOutcome};

use crate::manifest::{CommandKind, RunManifest, MANIFEST_FILE};
use crate::output::{write_sweep_csv, write_trials_csv};
use crate::{default_run_dir, Cli, CliError, Command, ConfigArgs, ExitCode};

const DEFAULT_SOURCE: &str = "paper_design";

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct Job {
    pub kind: CommandKind,
    pub source: String,
    pub config: Config,
    pub sweep: Option<SweepSpec>,
}

impl Job {
    fn seed(&self) -> u64 {
        self.config.experiments.seed
    }

    fn trials(&self) -> Option<u64> {
        match self.kind {
            CommandKind::Montecarlo => Some(self.config.experiments.trials),
            CommandKind::Sweep => self.sweep.as_ref().and_then(|s| s.trials),
            _ => None,
        }
    }
}

pub fn load_config(args: &ConfigArgs) -> Result<(Config, String), CliError> {
    if let Some(path) = &args.config {
        return Ok((Config::load(path)?, path.display().to_string()));
    }
    let name = args.scenario.as_deref().unwrap_or(DEFAULT_SOURCE);
    let text = bundled_text(name).ok_or_else(|| {
        let known: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        CliError::Invalid(format!(
            "unknown scenario `{name}` (known: {})",
            known.join(", ")
        ))
    })?;
    Ok((Config::from_json(text)?, format!("scenario:{name}")))
}

fn with_overrides(
    mut config: Config,
    seed: Option<u64>,
    trials: Option<u64>,
) -> Result<Config, CliError> {
    if let Some(s) = seed {
        config.experiments.seed = s;
    }
    if let Some(n) = trials {
        config.experiments.trials = n;
    }
    config.validate()?;
    Ok(config)
}

fn load_spec(path: &Path) -> Result<SweepSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Config(ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let job = match &cli.command {
        Command::Scenarios { show } => return scenarios(show.as_deref(), cli.quiet),
        Command::Rerun { manifest } => {
            let m = RunManifest::load(manifest)?;
            m.config.validate()?;
            let out = cli
                .out
                .clone()
                .unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).join("rerun"));
            let job = Job {
                kind: m.command,
                source: m.source,
                config: m.config,
                sweep: m.sweep,
            };
            return execute(&job, &out, cli.quiet);
        }
        Command::Analyze { source } => {
            let (config, source) = load_config(source)?;
            Job {
                kind: CommandKind::Analyze,
                source,
                config,
                sweep: None,
            }
        }
        Command::Simulate { source, seed } => {
            let (config, source) = load_config(source)?;
            Job {
                kind: CommandKind::Simulate,
                source,
                config: with_overrides(config, *seed, None)?,
                sweep: None,
            }
        }
        Command::Montecarlo {
            source,
            trials,
            seed,
        } => {
            let (config, source) = load_config(source)?;
            Job {
                kind: CommandKind::Montecarlo,
                source,
                config: with_overrides(config, *seed, *trials)?,
                sweep: None,
            }
        }
        Command::Sweep {
            source,
            spec,
            trials,
            seed,
        } => {
            let (config, source) = load_config(source)?;
            let mut spec = load_spec(spec)?;
            if trials.is_some() {
                spec.trials = *trials;
            }
            if seed.is_some() {
                spec.seed = *seed;
            }
            if spec.trials == Some(0) {
                return Err(CliError::Invalid("trial count must be at least 1".into()));
            }
            Job {
                kind: CommandKind::Sweep,
                source,
                config,
                sweep: Some(spec),
            }
        }
    };
    let out = match &cli.out {
        Some(d) => d.clone(),
        None => default_run_dir(job.kind.as_str(), &job.config.hash(), job.seed()),
    };
    execute(&job, &out, cli.quiet)
}

fn scenarios(show: Option<&str>, quiet: bool) -> Result<ExitCode, CliError> {
    if let Some(name) = show {
        let text = bundled_text(name)
            .ok_or_else(|| CliError::Invalid(format!("unknown scenario `{name}`")))?;
        print!("{text}");
        return Ok(ExitCode::Ok);
    }
    if !quiet {
        for (name, text) in BUNDLED {
            let config = Config::from_json(text)?;
            let kind = if SCENARIO_NAMES.contains(&name) {
                "scenario"
            } else {
                "design"
            };
            let path = &config.encounter.carrier;
            println!(
                "{name:<14} {kind:<9} carrier max {:.1} m/s, gust sigma {:.1} m/s, {} trials",
                path.max_speed(),
                config.encounter.gust.sigma,
                config.experiments.trials
            );
        }
    }
    Ok(ExitCode::Ok)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(&path, e))
}

fn finish(mut w: BufWriter<File>, dir: &Path, name: &str) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(&dir.join(name), e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("result serializes") + "\n";
    write_text(dir, name, &text)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs `job` into `out` and writes its manifest last.
pub fn execute(job: &Job, out: &Path, quiet: bool) -> Result<ExitCode, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let started_at = now();
    let (code, outputs) = match job.kind {
        CommandKind::Analyze => analyze(job, out, quiet)?,
        CommandKind::Simulate => simulate(job, out, quiet)?,
        CommandKind::Montecarlo => montecarlo(job, out, quiet)?,
        CommandKind::Sweep => run_sweep(job, out, quiet)?,
    };
    let manifest = RunManifest {
        tool: "capsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: job.kind,
        source: job.source.clone(),
        config: job.config.clone(),
        config_hash: job.config.hash(),
        seed: job.seed(),
        trials: job.trials(),
        sweep: job.sweep.clone(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        started_at,
        finished_at: now(),
    };
    manifest.write(out)?;
    if !quiet {
        println!("wrote {}", out.join(MANIFEST_FILE).display());
    }
    Ok(code)
}

type Ran = (ExitCode, Vec<&'static str>);

fn analyze(job: &Job, out: &Path, quiet: bool) -> Result<Ran, CliError> {
    let c = &job.config;
    let report =
        evaluate_design(&c.design, &c.target, &c.requirements).map_err(ConfigError::from)?;
    let table = report.render_table();
    write_json(out, "report.json", &report)?;
    write_text(out, "report.txt", &table)?;
    if !quiet {
        print!("{table}");
    }
    let code = if report.overall_pass {
        ExitCode::Ok
    } else {
        ExitCode::DesignFail
    };
    Ok((code, vec!["report.json", "report.txt"]))
}

fn phase_path(rows: &[capture_core::dynamics::trace::TraceRow]) -> Vec<&'static str> {
    let mut phases: Vec<&'static str> = Vec::new();
    for r in rows {
        if phases.last() != Some(&r.phase) {
            phases.push(r.phase);
        }
    }
    phases
}

fn describe(o: &TrialOutcome) -> String {
    let t = |v: Option<f64>| v.map(|x| format!("{x:.3} s")).unwrap_or_else(|| "-".into());
    format!(
        "seed {}: {} ({}), detach {}, capture {}, end {:.3} s",
        o.seed,
        if o.success { "success" } else { "failure" },
        match (o.terminal_phase, o.failure_cause) {
            (Phase::Done, _) => "DONE".to_string(),
            (p, Some(c)) => format!("{p} {c}"),
            (p, None) => p.to_string(),
        },
        t(o.detach_time),
        t(o.capture_time),
        o.end_time
    )
}

fn simulate(job: &Job, out: &Path, quiet: bool) -> Result<Ran, CliError> {
    let mut rows = Vec::new();
    let mut outcome = run_trial(&job.config, 0, job.seed(), Some(&mut rows));
    outcome.trace_file = Some("trace.csv".into());
    let mut w = create(out, "trace.csv")?;
    write_csv(&rows, &mut w).map_err(|e| CliError::io(&out.join("trace.csv"), e))?;
    finish(w, out, "trace.csv")?;
    write_json(out, "outcome.json", &outcome)?;
    if !quiet {
        println!("{}", describe(&outcome));
        println!("phases: {}", phase_path(&rows).join(" -> "));
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: trial seed {}: {e}", outcome.seed);
        return Ok((ExitCode::Diverged, vec!["trace.csv", "outcome.json"]));
    }
    Ok((ExitCode::Ok, vec!["trace.csv", "outcome.json"]))
}

fn montecarlo(job: &Job, out: &Path, quiet: bool) -> Result<Ran, CliError> {
    let c = &job.config;
    let (result, outcomes) = run_batch_with_outcomes(c, c.experiments.trials, c.experiments.seed)?;
    write_json(out, "batch.json", &result)?;
    let mut w = create(out, "trials.csv")?;
    write_trials_csv(&outcomes, &mut w).map_err(|e| CliError::io(&out.join("trials.csv"), e))?;
    finish(w, out, "trials.csv")?;
    if !quiet {
        println!(
            "{}/{} succeeded, estimate {:.4}, 95% CI [{:.4}, {:.4}]",
            result.successes,
            result.trials,
            result.estimate,
            result.interval.lower,
            result.interval.upper
        );
        for (cause, n) in result.failures.iter().filter(|(_, n)| **n > 0) {
            println!("  {cause:<15} {n}");
        }
    }
    Ok((ExitCode::Ok, vec!["batch.json", "trials.csv"]))
}

fn run_sweep(job: &Job, out: &Path, quiet: bool) -> Result<Ran, CliError> {
    let spec = job
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Invalid("sweep run without a sweep spec".into()))?;
    let table = sweep(&job.config, spec)?;
    let text = table.render();
    write_json(out, "sweep.json", &table)?;
    write_text(out, "sweep.txt", &text)?;
    let mut w = create(out, "sweep.csv")?;
    write_sweep_csv(&table, &mut w).map_err(|e| CliError::io(&out.join("sweep.csv"), e))?;
    finish(w, out, "sweep.csv")?;
    if !quiet {
        print!("{text}");
    }
    Ok((ExitCode::Ok, vec!["sweep.json", "sweep.csv", "sweep.txt"]))
}

/// Files of a run directory other than the manifest, sorted by name.
pub fn run_outputs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .collect();
    files.sort();
    Ok(files)
}
