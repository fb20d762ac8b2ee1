//! # Experiments
//!
//! Single trials, Monte Carlo batches, grid sweeps and the bundled scenarios.
//!
//! Trial `i` of a batch runs with `trial_seed(master, i)`. Its uncertainty
//! draws (initial sway, chaser offset) come from the setup stream; gusts and
//! camera noise have their own streams. Batches run in parallel and are
//! reduced by trial index, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::dynamics::trace::TraceRow;
use crate::dynamics::world::{
    step_world, AttachmentStatus, InitialConditions, Scene, WorldEvent, WorldState,
};
use crate::dynamics::DynamicsError;
use crate::mission::{mission_step, AbortCause, MissionEvent, MissionState, Phase};
use crate::rng::{stream_rng, trial_seed, Stream, Streams};
use crate::stats::{wilson_interval, Interval, Z_95};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep axis {path} has no values")]
    EmptyAxis { path: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCause {
    NeverDetected,
    EngageTimeout,
    DetachFailed,
    BallLost,
    DropMissed,
    Diverged,
}

impl FailureCause {
    pub const ALL: [FailureCause; 6] = [
        FailureCause::NeverDetected,
        FailureCause::EngageTimeout,
        FailureCause::DetachFailed,
        FailureCause::BallLost,
        FailureCause::DropMissed,
        FailureCause::Diverged,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FailureCause::NeverDetected => "never-detected",
            FailureCause::EngageTimeout => "engage-timeout",
            FailureCause::DetachFailed => "detach-failed",
            FailureCause::BallLost => "ball-lost",
            FailureCause::DropMissed => "drop-missed",
            FailureCause::Diverged => "diverged",
        }
    }
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a mission abort to the reported failure. A ball that fell out of the
/// basket is reported as lost whatever the mission was doing.
pub fn failure_cause(
    cause: AbortCause,
    status: AttachmentStatus,
    phase_before: Phase,
    hooked: bool,
) -> FailureCause {
    if status == AttachmentStatus::Lost {
        return FailureCause::BallLost;
    }
    match cause {
        AbortCause::Diverged => FailureCause::Diverged,
        AbortCause::NeverDetected => FailureCause::NeverDetected,
        AbortCause::EngageTimeout => FailureCause::EngageTimeout,
        AbortCause::DetachFailed => FailureCause::DetachFailed,
        AbortCause::RetriesExhausted => FailureCause::BallLost,
        AbortCause::TransportTimeout | AbortCause::DropMissed => FailureCause::DropMissed,
        AbortCause::DurationExceeded => match phase_before {
            Phase::Search => FailureCause::NeverDetected,
            Phase::Approach | Phase::Engage if hooked => FailureCause::DetachFailed,
            Phase::Approach | Phase::Engage => FailureCause::EngageTimeout,
            Phase::Confirm => FailureCause::BallLost,
            _ => FailureCause::DropMissed,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: u64,
    pub seed: u64,
    pub success: bool,
    pub terminal_phase: Phase,
    pub failure_cause: Option<FailureCause>,
    pub abort_cause: Option<AbortCause>,
    pub detach_time: Option<f64>,
    pub capture_time: Option<f64>,
    pub end_time: f64,
    /// Diverged-simulation message, when there is one.
    pub error: Option<String>,
    pub trace_file: Option<String>,
}

/// Per-trial random draws from the setup stream.
pub fn draw_initial_conditions(config: &Config, seed: u64) -> InitialConditions {
    let mut rng = stream_rng(seed, Stream::Setup);
    let x = &config.experiments;
    let u: f64 = rng.random();
    let azimuth: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let n: [f64; 3] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    InitialConditions {
        sway_angle: u * x.max_sway_angle,
        sway_azimuth: azimuth,
        chaser_offset: Vec3::from(n) * x.chaser_offset_std,
    }
}

/// Runs one trial. When `trace` is given every step and event is appended.
pub fn run_trial(
    config: &Config,
    index: u64,
    seed: u64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> TrialOutcome {
    let scene = Scene::new(&config.design, &config.target, &config.encounter);
    let init = draw_initial_conditions(config, seed);
    let mut streams = Streams::new(seed);
    let mut mission = MissionState::default();
    let mut outcome = TrialOutcome {
        index,
        seed,
        success: false,
        terminal_phase: Phase::Abort,
        failure_cause: None,
        abort_cause: None,
        detach_time: None,
        capture_time: None,
        end_time: 0.0,
        error: None,
        trace_file: None,
    };
    let finish_diverged = |mut o: TrialOutcome, e: DynamicsError, t: f64| {
        o.terminal_phase = Phase::Abort;
        o.abort_cause = Some(AbortCause::Diverged);
        o.failure_cause = Some(FailureCause::Diverged);
        o.error = Some(e.to_string());
        o.end_time = t;
        o
    };
    let mut world = match WorldState::new(&scene, &init, &mut streams) {
        Ok(w) => w,
        Err(e) => return finish_diverged(outcome, e, 0.0),
    };
    let mut controls = mission.controls(&world, &scene, &config.mission);
    let mut phase_before = mission.phase;
    let mut hooked = false;
    if let Some(rows) = trace.as_deref_mut() {
        rows.push(TraceRow::step(&world, mission.phase.as_str(), None));
    }
    loop {
        let report = match step_world(&mut world, &scene, &controls, &mut streams) {
            Ok(r) => r,
            Err(e) => {
                let events = mission.diverged(world.time);
                if let Some(rows) = trace.as_deref_mut() {
                    for ev in events {
                        rows.push(TraceRow::event(
                            &world,
                            mission.phase.as_str(),
                            ev.to_string(),
                        ));
                    }
                }
                return finish_diverged(outcome, e, world.time);
            }
        };
        for ev in &report.events {
            match ev {
                WorldEvent::Hooked { .. } => hooked = true,
                WorldEvent::Detached { .. } => outcome.detach_time = Some(world.time),
                WorldEvent::Captured { .. } => outcome.capture_time = Some(world.time),
                _ => {}
            }
        }
        let out = mission_step(
            &mut mission,
            &world,
            &scene,
            &config.mission,
            &report,
            config.encounter.duration,
        );
        for ev in &out.events {
            if let MissionEvent::Phase {
                from,
                to: Phase::Abort,
            } = ev
            {
                phase_before = *from;
            }
        }
        if let Some(rows) = trace.as_deref_mut() {
            let phase = mission.phase.as_str();
            rows.push(TraceRow::step(&world, phase, report.measurement));
            for ev in &report.events {
                rows.push(TraceRow::event(&world, phase, ev.to_string()));
            }
            for ev in &out.events {
                rows.push(TraceRow::event(&world, phase, ev.to_string()));
            }
        }
        controls = out.controls;
        if mission.phase.is_terminal() {
            break;
        }
    }
    outcome.end_time = world.time;
    outcome.terminal_phase = mission.phase;
    outcome.success = mission.phase == Phase::Done;
    if !outcome.success {
        let cause = mission.cause.unwrap_or(AbortCause::DurationExceeded);
        outcome.abort_cause = Some(cause);
        outcome.failure_cause = Some(failure_cause(cause, world.status, phase_before, hooked));
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub interval: Interval,
    /// Count per failure cause, every cause listed.
    pub failures: BTreeMap<FailureCause, u64>,
    pub config_hash: String,
    pub master_seed: u64,
}

impl BatchResult {
    pub fn from_outcomes(outcomes: &[TrialOutcome], config_hash: String, master_seed: u64) -> Self {
        let trials = outcomes.len() as u64;
        let successes = outcomes.iter().filter(|o| o.success).count() as u64;
        let mut failures: BTreeMap<FailureCause, u64> =
            FailureCause::ALL.iter().map(|c| (*c, 0)).collect();
        for c in outcomes.iter().filter_map(|o| o.failure_cause) {
            *failures.entry(c).or_default() += 1;
        }
        Self {
            trials,
            successes,
            estimate: if trials > 0 {
                successes as f64 / trials as f64
            } else {
                0.0
            },
            interval: wilson_interval(successes, trials, Z_95),
            failures,
            config_hash,
            master_seed,
        }
    }
}

/// Runs trials with explicit seeds, in parallel, results in input order.
pub fn run_trials_with_seeds(config: &Config, seeds: &[(u64, u64)]) -> Vec<TrialOutcome> {
    seeds
        .par_iter()
        .map(|&(index, seed)| run_trial(config, index, seed, None))
        .collect()
}

pub fn batch_seeds(master_seed: u64, n_trials: u64) -> Vec<(u64, u64)> {
    (0..n_trials)
        .map(|i| (i, trial_seed(master_seed, i)))
        .collect()
}

/// Runs a batch and also returns every trial's outcome.
pub fn run_batch_with_outcomes(
    config: &Config,
    n_trials: u64,
    master_seed: u64,
) -> Result<(BatchResult, Vec<TrialOutcome>), ExperimentError> {
    if n_trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    config.validate()?;
    let outcomes = run_trials_with_seeds(config, &batch_seeds(master_seed, n_trials));
    let result = BatchResult::from_outcomes(&outcomes, config.hash(), master_seed);
    Ok((result, outcomes))
}

pub fn run_batch(
    config: &Config,
    n_trials: u64,
    master_seed: u64,
) -> Result<BatchResult, ExperimentError> {
    run_batch_with_outcomes(config, n_trials, master_seed).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// JSON pointer of a numeric config field, e.g. `/design/arm_extension`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    /// Trials per cell; the config's batch size when absent.
    #[serde(default)]
    pub trials: Option<u64>,
    /// Master seed shared by every cell; the config's seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub values: Vec<f64>,
    pub result: BatchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub paths: Vec<String>,
    pub trials: u64,
    pub seed: u64,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn render(&self) -> String {
        let mut header: Vec<String> = self.paths.clone();
        header.extend(["successes", "trials", "estimate", "ci_low", "ci_high"].map(String::from));
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                let mut r: Vec<String> = c.values.iter().map(|v| v.to_string()).collect();
                r.push(c.result.successes.to_string());
                r.push(c.result.trials.to_string());
                r.push(format!("{:.4}", c.result.estimate));
                r.push(format!("{:.4}", c.result.interval.lower));
                r.push(format!("{:.4}", c.result.interval.upper));
                r
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                rows.iter()
                    .map(|r| r[i].len())
                    .chain([header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cols: &[String]| {
            cols.iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = line(&header);
        out.push('\n');
        for r in &rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Cartesian product of the axes, last axis fastest.
fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }
    cells
}

/// Evaluates every grid cell with the same master seed, so cells differ only
/// in the swept parameters. All cells are built and validated first.
pub fn sweep(config: &Config, spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    if spec.axes.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    for axis in &spec.axes {
        config.check_numeric_path(&axis.path)?;
        if axis.values.is_empty() {
            return Err(ExperimentError::EmptyAxis {
                path: axis.path.clone(),
            });
        }
    }
    let trials = spec.trials.unwrap_or(config.experiments.trials);
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let seed = spec.seed.unwrap_or(config.experiments.seed);
    let cells = grid(&spec.axes);
    let configs = cells
        .iter()
        .map(|values| {
            spec.axes
                .iter()
                .zip(values)
                .try_fold(config.clone(), |c, (axis, v)| c.with_value(&axis.path, *v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results = configs
        .iter()
        .map(|c| run_batch(c, trials, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        paths: spec.axes.iter().map(|a| a.path.clone()).collect(),
        trials,
        seed,
        cells: cells
            .into_iter()
            .zip(results)
            .enumerate()
            .map(|(index, (values, result))| SweepCell {
                index,
                values,
                result,
            })
            .collect(),
    })
}

const PAPER_DESIGN: &str = include_str!("../configs/paper_design.json");
const STATIC_BALL: &str = include_str!("../configs/static_ball.json");
const STRAIGHT_6MS: &str = include_str!("../configs/straight_6ms.json");
const CURVED_ARC: &str = include_str!("../configs/curved_arc.json");
const WINDY: &str = include_str!("../configs/windy.json");

/// Bundled config documents by name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("paper_design", PAPER_DESIGN),
    ("static_ball", STATIC_BALL),
    ("straight_6ms", STRAIGHT_6MS),
    ("curved_arc", CURVED_ARC),
    ("windy", WINDY),
];

pub const SCENARIO_NAMES: [&str; 4] = ["static_ball", "straight_6ms", "curved_arc", "windy"];

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn scenario(name: &str) -> Result<Config, ExperimentError> {
    let text =
        bundled_text(name).ok_or_else(|| ExperimentError::UnknownScenario(name.to_string()))?;
    Ok(Config::from_json(text)?)
}

/// The encounter scenarios, in a fixed order.
pub fn scenario_library() -> Vec<(&'static str, Config)> {
    SCENARIO_NAMES
        .iter()
        .map(|n| (*n, scenario(n).expect("bundled scenario must be valid")))
        .collect()
}
