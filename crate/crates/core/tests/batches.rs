//! Batch-level properties: reproducibility, exchangeability, degenerate
//! geometries and matched-seed monotonicity.

use capture_core::dynamics::trace::write_csv;
use capture_core::dynamics::world::{step_world, Scene, WorldEvent, WorldState};
use capture_core::experiments::{
    batch_seeds, draw_initial_conditions, run_batch, run_trial, run_trials_with_seeds, scenario,
    SCENARIO_NAMES,
};
use capture_core::mission::{mission_step, MissionState};
use capture_core::rng::Streams;
use capture_core::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn trace_bytes(config: &Config, seed: u64) -> Vec<u8> {
    let mut rows = Vec::new();
    run_trial(config, 0, seed, Some(&mut rows));
    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    out
}

#[test]
fn same_seed_same_trace() {
    let config = scenario("straight_6ms").unwrap();
    assert_eq!(trace_bytes(&config, 77), trace_bytes(&config, 77));
    assert_ne!(trace_bytes(&config, 77), trace_bytes(&config, 78));
}

#[test]
fn same_seed_same_batch() {
    let config = scenario("static_ball").unwrap();
    let a = run_batch(&config, 200, 9).unwrap();
    let b = run_batch(&config, 200, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn permuted_trials_match() {
    let config = scenario("static_ball").unwrap();
    let seeds = batch_seeds(3, 200);
    let forward = run_trials_with_seeds(&config, &seeds);
    let mut shuffled = seeds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    let permuted = run_trials_with_seeds(&config, &shuffled);
    for o in &permuted {
        assert_eq!(o, &forward[o.index as usize]);
    }
    let count = |v: &[capture_core::TrialOutcome]| v.iter().filter(|o| o.success).count();
    assert_eq!(count(&forward), count(&permuted));
}

/// Runs a trial and returns the work reported at every detachment.
fn detachment_works(config: &Config, seed: u64) -> Vec<f64> {
    let scene = Scene::new(&config.design, &config.target, &config.encounter);
    let init = draw_initial_conditions(config, seed);
    let mut streams = Streams::new(seed);
    let mut world = WorldState::new(&scene, &init, &mut streams).unwrap();
    let mut m = MissionState::default();
    let mut controls = m.controls(&world, &scene, &config.mission);
    let mut works = Vec::new();
    while !m.phase.is_terminal() {
        let Ok(report) = step_world(&mut world, &scene, &controls, &mut streams) else {
            break;
        };
        for ev in &report.events {
            if let WorldEvent::Detached { work } = ev {
                works.push(*work);
            }
        }
        controls = mission_step(
            &mut m,
            &world,
            &scene,
            &config.mission,
            &report,
            config.encounter.duration,
        )
        .controls;
    }
    works
}

#[test]
fn no_detachment_below_work_budget() {
    let results: Vec<(f64, Vec<f64>)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let mut config = scenario(SCENARIO_NAMES[i as usize % 2]).unwrap();
            config.target.detachment_force = rng.random_range(1.0..8.0);
            config.target.detachment_distance = rng.random_range(0.003..0.03);
            config.encounter.peel_factor = rng.random_range(0.2..=1.0);
            config.encounter.duration = 20.0;
            let budget = config.target.detachment_force * config.target.detachment_distance;
            (budget, detachment_works(&config, rng.random()))
        })
        .collect();
    let mut detached = 0;
    for (budget, works) in &results {
        for w in works {
            assert!(*w >= *budget, "detached at {w} J with a {budget} J budget");
            detached += 1;
        }
    }
    assert!(detached > 300, "only {detached} detachments exercised");
}

fn calm_static() -> Config {
    let mut config = scenario("static_ball").unwrap();
    let e = &mut config.encounter;
    e.gust.sigma = 0.0;
    e.downwash.enabled = false;
    e.camera.noise_std = 0.0;
    e.chaser.gust_coupling = 0.0;
    config.experiments.max_sway_angle = 0.0;
    config.experiments.chaser_offset_std = 0.0;
    config
}

#[test]
fn undisturbed_perfect_sensing_always_captures() {
    let r = run_batch(&calm_static(), 100, 1).unwrap();
    assert_eq!(r.successes, 100);
    assert_eq!(r.estimate, 1.0);
}

#[test]
fn pinhole_ring_never_captures() {
    let mut config = scenario("static_ball").unwrap();
    config.design.basket_ring_diameter = 0.01;
    config.validate().unwrap();
    let r = run_batch(&config, 100, 1).unwrap();
    assert_eq!(r.successes, 0);
}

#[test]
fn wider_ring_keeps_every_capture() {
    let mut narrow = scenario("straight_6ms").unwrap();
    narrow.design.basket_ring_diameter = 0.175;
    let mut wide = narrow.clone();
    wide.design.basket_ring_diameter = 0.20;
    let seeds = batch_seeds(2, 300);
    let a = run_trials_with_seeds(&narrow, &seeds);
    let b = run_trials_with_seeds(&wide, &seeds);
    let mut captured = 0;
    for (x, y) in a.iter().zip(&b) {
        if let Some(t) = x.capture_time {
            assert_eq!(y.capture_time, Some(t), "trial {}", x.index);
            captured += 1;
        }
    }
    assert!(captured > 100);
}

#[test]
fn larger_rectangle_never_loses_a_success() {
    for name in ["static_ball", "straight_6ms"] {
        let base = scenario(name).unwrap();
        let mut big = base.clone();
        big.design.capture_width *= 1.25;
        big.design.capture_height *= 1.25;
        let seeds = batch_seeds(4, 300);
        let a = run_trials_with_seeds(&base, &seeds);
        let b = run_trials_with_seeds(&big, &seeds);
        for (x, y) in a.iter().zip(&b) {
            assert!(!x.success || y.success, "{name} trial {} flipped", x.index);
        }
    }
}
