//! Seed sweeps over randomized scenarios.
//!
//! Each trial is a pure function of its seed, so sweeps can run on a rayon
//! pool without changing results. `SweepMode::Parallel` needs the `parallel`
//! feature; without it both modes run sequentially.

use std::ops::Range;

use helio_asl::parse_program;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::platform::{EnergyBuffer, EnergyPlatform, HarvestTrace};
use crate::sim::Simulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Sequential,
    Parallel,
}

pub fn for_each_seed<T, F>(mode: SweepMode, seeds: Range<u64>, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        SweepMode::Sequential => seeds.map(trial).collect(),
        #[cfg(feature = "parallel")]
        SweepMode::Parallel => {
            use rayon::prelude::*;
            seeds.into_par_iter().map(trial).collect()
        }
        #[cfg(not(feature = "parallel"))]
        SweepMode::Parallel => seeds.map(trial).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub seed: u64,
    pub residual_uj: f64,
    pub residual_rel: f64,
}

fn random_trace<R: Rng>(rng: &mut R) -> HarvestTrace {
    let segments = rng.random_range(20..=60);
    let mut samples = Vec::with_capacity(segments);
    let mut t = 0u64;
    for _ in 0..segments {
        samples.push((t, rng.random_range(0.0..400.0)));
        t += rng.random_range(1..=200);
    }
    HarvestTrace::new(samples).expect("strictly increasing times")
}

/// Hammers one platform with a random trace and a random op mix, then
/// reports the conservation residual relative to the energy throughput.
pub fn conservation_trial(seed: u64) -> ConservationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = random_trace(&mut rng);
    let capacity_uj = rng.random_range(200.0..2000.0);
    let level_uj = rng.random_range(0.0..capacity_uj);
    let brown_out_uj = rng.random_range(0.0..5.0);
    let buffer = EnergyBuffer::new(capacity_uj, level_uj, brown_out_uj, brown_out_uj);
    let mut platform = EnergyPlatform::new(buffer, trace);
    for _ in 0..300 {
        if rng.random_bool(0.7) {
            let dt = rng.random_range(1..=50);
            let load = rng.random_range(0.0..40.0);
            platform.advance(dt, load);
        } else {
            platform.spend(rng.random_range(0.0..20.0));
        }
    }
    let residual_uj = platform.conservation_residual_uj();
    let throughput = (platform.level_start_uj() + platform.harvested_uj()).max(1.0);
    ConservationReport { seed, residual_uj, residual_rel: residual_uj.abs() / throughput }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardReport {
    pub seed: u64,
    pub brown_outs: u64,
    pub actions_run: u64,
}

/// Runs a full agent whose single plan is guarded by a learned energy
/// estimate, on a randomized harvest and cost model. The wake threshold
/// keeps 40 uJ of headroom above the initial estimate, so a sound guard
/// never lets the device brown out.
pub fn guard_soundness_trial(seed: u64) -> GuardReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let trace = random_trace(&mut rng);
    let task_cost_uj: f64 = rng.random_range(5.0..60.0);
    let margin_uj: f64 = rng.random_range(4.0..10.0);
    let estimate_uj = task_cost_uj + 1.0 + margin_uj;
    let threshold_uj = estimate_uj + 40.0;
    let capacity_uj = threshold_uj + rng.random_range(50.0..500.0);
    let initial_uj = rng.random_range(threshold_uj..capacity_uj);
    let program_text = format!(
        "e_task({estimate_uj})[persist(\"fram\")].\n\
         +!work : e_available(A) & e_task(R) & A > R\n\
         <- energy_checkpoint(); do_task(); update_estimate(\"e_task\"); deep_sleep().\n"
    );
    let config_text = format!(
        "version = 1\n\
         [buffer]\n\
         capacity_uj = {capacity_uj}\n\
         initial_uj = {initial_uj}\n\
         [sim]\n\
         horizon_ms = 120000\n\
         [cycle]\n\
         overhead_uj = 0.5\n\
         [wake]\n\
         energy_threshold_uj = {threshold_uj}\n\
         [boot]\n\
         goals = [\"work\"]\n\
         [actions.do_task]\n\
         energy_uj = {task_cost_uj}\n\
         duration_ms = 2\n"
    );
    let program = parse_program(&program_text).expect("template parses");
    let config = SimConfig::from_toml_str(&config_text).expect("template config is valid");
    let mut sim = Simulation::new(program, config, trace).expect("template simulation builds");
    sim.run();
    let summary = sim.summary().expect("finished run has a summary");
    GuardReport {
        seed,
        brown_outs: summary.brown_out_count,
        actions_run: summary.action_counts.values().sum(),
    }
}
