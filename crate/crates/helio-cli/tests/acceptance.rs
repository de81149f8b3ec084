//! Acceptance suite. Each test prints one PASS or FAIL line so a full run
//! reads as a checklist (`cargo test --test acceptance -- --nocapture`).

use std::fs;
use std::process::Command;
use std::time::Instant;

use helio_asl::{parse_literal, parse_program, Term};
use helio_sim::{
    conservation_trial, decode_image, for_each_seed, guard_soundness_trial, HarvestTrace, Medium,
    Phase, RecordKind, SimConfig, Simulation, SweepMode,
};

const LISTING_PATH: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../programs/temperature_sensor.asl"
);

fn report(n: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("ACCEPTANCE {n} {name}: PASS"),
        Err(msg) => {
            println!("ACCEPTANCE {n} {name}: FAIL ({msg})");
            panic!("acceptance criterion {n} ({name}) failed: {msg}");
        }
    }
}

macro_rules! check {
    ($cond:expr, $($arg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($arg)+));
        }
    };
}

fn listing() -> String {
    fs::read_to_string(LISTING_PATH).expect("corpus program present")
}

#[test]
fn acceptance_1_corpus_parse() {
    report(1, "corpus parse", || {
        let start = Instant::now();
        let program = parse_program(&listing()).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        check!(program.initial_beliefs.len() == 5, "expected 5 initial beliefs");
        check!(program.plans.len() == 4, "expected 4 plans");
        let estimate = &program.initial_beliefs[0];
        check!(
            estimate.functor == "e_meas_temperature"
                && estimate.args == vec![Term::Number(30.0)],
            "first belief is e_meas_temperature(30)"
        );
        let persist = estimate.annotation("persist").ok_or("persist annotation missing")?;
        check!(
            persist.args == vec![Term::Str("fram".into())],
            "persist names the fram medium"
        );
        let impacts: Vec<f64> = program
            .initial_beliefs
            .iter()
            .filter(|b| b.functor == "transmit_power")
            .filter_map(|b| b.annotation("impact"))
            .filter_map(|a| match a.args.first() {
                Some(Term::Number(v)) => Some(*v),
                _ => None,
            })
            .collect();
        check!(impacts == vec![101.0, 30.0], "impact annotations are 101 and 30");
        check!(elapsed.as_secs_f64() < 1.0, "parse took {elapsed:?}");
        Ok(())
    });
}

#[test]
fn acceptance_2_guard_scenario() {
    report(2, "guard scenario", || {
        let config = SimConfig::from_toml_str(
            "version = 1\n\
             [buffer]\n\
             capacity_uj = 1000\n\
             initial_uj = 25\n\
             [sim]\n\
             horizon_ms = 60000\n\
             [boot]\n\
             goals = [\"meas_temperature\"]\n\
             [actions.read_trh_sensor]\n\
             energy_uj = 30\n\
             [actions.start_ble_adv]\n\
             energy_uj = 101\n\
             impact_from = \"transmit_power\"\n\
             [actions.store_for_later_tx]\n\
             energy_uj = 5\n",
        )
        .map_err(|e| e.to_string())?;
        let program = parse_program(&listing()).map_err(|e| e.to_string())?;
        let mut sim = Simulation::new(program, config, HarvestTrace::constant(0.0))
            .map_err(|e| e.to_string())?;
        sim.run();
        let published = sim.records().iter().any(|r| {
            matches!(&r.kind, RecordKind::BeliefChange { literal, .. }
                if literal == "e_available(25)")
        });
        check!(published, "e_available(25) must be published exactly");
        let rejected = sim.records().iter().any(|r| {
            matches!(&r.kind, RecordKind::Event { event, disposition, .. }
                if event == "+!meas_temperature" && disposition == "no_plan")
        });
        check!(rejected, "+!meas_temperature must select no plan at A=25, R=30");
        let plan_selections = sim
            .records()
            .iter()
            .filter(|r| matches!(r.kind, RecordKind::PlanSelected { .. }))
            .count();
        check!(plan_selections == 0, "found {plan_selections} plan selections");
        let actions = sim
            .records()
            .iter()
            .filter(|r| matches!(r.kind, RecordKind::Action { .. }))
            .count();
        check!(actions == 0, "found {actions} external actions");
        let summary = sim.summary().ok_or("missing summary")?;
        check!(summary.brown_out_count == 0, "brown-outs: {}", summary.brown_out_count);
        check!(summary.end_time_ms == 60000, "run must cover the full horizon");
        Ok(())
    });
}

#[test]
fn acceptance_3_tx_power_adaptation() {
    report(3, "tx power adaptation", || {
        let config = SimConfig::from_toml_str(
            "version = 1\n\
             [buffer]\n\
             capacity_uj = 1000\n\
             initial_uj = 197.5\n\
             [sim]\n\
             horizon_ms = 40\n\
             [cycle]\n\
             overhead_uj = 0.25\n\
             [boot]\n\
             on_idle = \"spin\"\n\
             [[inject]]\n\
             at_ms = 10\n\
             goal = \"transmit_data\"\n\
             [[inject]]\n\
             at_ms = 14\n\
             goal = \"transmit_data\"\n\
             [[inject]]\n\
             at_ms = 34\n\
             goal = \"transmit_data\"\n\
             [actions.read_trh_sensor]\n\
             energy_uj = 18\n\
             [actions.start_ble_adv]\n\
             energy_uj = 9999\n\
             impact_from = \"transmit_power\"\n\
             [actions.store_for_later_tx]\n\
             energy_uj = 5\n",
        )
        .map_err(|e| e.to_string())?;
        let program = parse_program(&listing()).map_err(|e| e.to_string())?;
        let mut sim = Simulation::new(program, config, HarvestTrace::constant(500.0))
            .map_err(|e| e.to_string())?;
        sim.run();
        let mut projection = Vec::new();
        for record in sim.records() {
            let t = record.time_ms;
            match &record.kind {
                RecordKind::Event { event, provenance, disposition } => {
                    projection.push(format!("t={t} event {event} [{provenance}] {disposition}"));
                }
                RecordKind::PlanSelected { plan_line, trigger, intention } => {
                    projection.push(format!(
                        "t={t} plan_selected line={plan_line} trigger={trigger} intention={intention}"
                    ));
                }
                RecordKind::Action { name, args, energy_uj, tx_power, .. } => {
                    let tx = tx_power.as_deref().unwrap_or("-");
                    projection.push(format!(
                        "t={t} action {name}({}) energy={energy_uj} tx={tx}",
                        args.join(",")
                    ));
                }
                _ => {}
            }
        }
        let golden = include_str!("golden/tx_adaptation.txt");
        let got = projection.join("\n") + "\n";
        check!(
            got == golden,
            "plan-selection trace diverged from golden\n--- got ---\n{got}\n--- want ---\n{golden}"
        );
        let summary = sim.summary().ok_or("missing summary")?;
        check!(
            summary.tx_counts.get("8") == Some(&1) && summary.tx_counts.get("4") == Some(&1),
            "tx counts: {:?}",
            summary.tx_counts
        );
        check!(
            summary.level_end_uj.to_bits() == 76.5f64.to_bits(),
            "final level {} != 76.5",
            summary.level_end_uj
        );
        Ok(())
    });
}

const LEARNING_CONFIG: &str = "version = 1\n\
    [buffer]\n\
    capacity_uj = 2000\n\
    initial_uj = 500\n\
    [sim]\n\
    horizon_ms = 2500\n\
    [wake]\n\
    timer_ms = 200\n\
    [boot]\n\
    goals = [\"meas_temperature\"]\n\
    [actions.read_trh_sensor]\n\
    energy_uj = 46\n";

fn estimate_updates(sim: &Simulation) -> Vec<f64> {
    sim.records()
        .iter()
        .filter_map(|r| match &r.kind {
            RecordKind::InternalAction { name, detail, .. } if name == "update_estimate" => {
                detail.rsplit(" new ").next()?.parse().ok()
            }
            _ => None,
        })
        .collect()
}

#[test]
fn acceptance_4_learning_convergence() {
    report(4, "learning convergence", || {
        let program_text = "e_meas_temperature(30)[persist(\"fram\")].\n\
            +!meas_temperature\n\
            <-  energy_checkpoint();\n\
                read_trh_sensor();\n\
                update_estimate(\"e_meas_temperature\");\n\
                deep_sleep().\n";
        let program = parse_program(program_text).map_err(|e| e.to_string())?;
        let config = SimConfig::from_toml_str(LEARNING_CONFIG).map_err(|e| e.to_string())?;
        let mut sim = Simulation::new(program, config, HarvestTrace::constant(100.0))
            .map_err(|e| e.to_string())?;
        sim.run();
        let updates = estimate_updates(&sim);
        check!(updates.len() >= 6, "only {} estimate updates in the run", updates.len());
        for (i, value) in updates.iter().take(6).enumerate() {
            let n = (i + 1) as i32;
            let oracle = 48.0 - 18.0 * 0.5f64.powi(n);
            check!(
                (value - oracle).abs() <= 1e-6,
                "update {n}: {value} differs from closed form {oracle}"
            );
        }
        check!(
            (updates[5] - 48.0).abs() < 1.0,
            "after 6 updates the estimate {} is not within 1 uJ of 48",
            updates[5]
        );
        Ok(())
    });
}

const ROUND_TRIP_PROGRAM: &str = "e_meas_temperature(30)[persist(\"fram\")].\n\
    calib(7).\n\
    +!meas_temperature\n\
    <-  energy_checkpoint();\n\
        read_trh_sensor();\n\
        -calib(7);\n\
        +calib(9);\n\
        update_estimate(\"e_meas_temperature\");\n\
        deep_sleep().\n";

fn run_to_sleep(sim: &mut Simulation) -> Result<(), String> {
    for _ in 0..1000 {
        if sim.phase() == Phase::Sleeping {
            return Ok(());
        }
        sim.step();
    }
    Err("simulation never reached deep sleep".into())
}

fn run_to_wake(sim: &mut Simulation) -> Result<(), String> {
    for _ in 0..1000 {
        if sim.phase() != Phase::Sleeping {
            return Ok(());
        }
        sim.step();
    }
    Err("simulation never woke".into())
}

#[test]
fn acceptance_5_persistence_round_trip() {
    report(5, "persistence round trip", || {
        let build = || -> Result<Simulation, String> {
            let program = parse_program(ROUND_TRIP_PROGRAM).map_err(|e| e.to_string())?;
            let config = SimConfig::from_toml_str(LEARNING_CONFIG).map_err(|e| e.to_string())?;
            Simulation::new(program, config, HarvestTrace::constant(100.0))
                .map_err(|e| e.to_string())
        };

        let mut sim = build()?;
        run_to_sleep(&mut sim)?;
        let slept_via_deep_sleep = sim.records().iter().any(|r| {
            matches!(&r.kind, RecordKind::InternalAction { name, .. } if name == "deep_sleep")
        });
        check!(slept_via_deep_sleep, "sleep must come from the plan's deep_sleep()");
        let image = sim.media().active(Medium::Fram).ok_or("no fram image written")?.clone();
        let stored = decode_image(&image).map_err(|e| e.to_string())?;
        check!(stored.len() == 1, "only the annotated estimate persists");
        let pre_sleep = match stored[0].literal.args.first() {
            Some(Term::Number(v)) => *v,
            _ => return Err("stored estimate is not numeric".into()),
        };
        check!(pre_sleep == 40.0, "first learned value should be 40, got {pre_sleep}");

        run_to_wake(&mut sim)?;
        let restored = sim.beliefs().find("e_meas_temperature", 1).ok_or("estimate lost")?;
        let restored_value = match restored.literal.args.first() {
            Some(Term::Number(v)) => *v,
            _ => return Err("restored estimate is not numeric".into()),
        };
        check!(
            restored_value.to_bits() == pre_sleep.to_bits(),
            "restored {restored_value} is not bit-identical to {pre_sleep}"
        );
        let calib = sim.beliefs().find("calib", 1).ok_or("calib lost")?;
        check!(
            calib.literal == parse_literal("calib(7)").unwrap(),
            "volatile calib must reset to the program initial, got {}",
            calib.literal
        );
        check!(
            sim.beliefs().len() == 2,
            "exactly the restored estimate and the reseeded initials remain"
        );

        let mut corrupted = build()?;
        run_to_sleep(&mut corrupted)?;
        check!(
            corrupted.media_mut().flip_payload_byte(Medium::Fram, 5),
            "fault injection must hit the stored image"
        );
        run_to_wake(&mut corrupted)?;
        let warned = corrupted.records().iter().any(|r| {
            matches!(&r.kind, RecordKind::Restore { status, .. } if status == "corrupt_fallback")
        });
        check!(warned, "corrupted image must log a corruption warning");
        let fallback = corrupted.beliefs().find("e_meas_temperature", 1).ok_or("estimate lost")?;
        check!(
            fallback.literal.args.first() == Some(&Term::Number(30.0)),
            "corrupted restore must fall back to the initial 30, got {}",
            fallback.literal
        );
        Ok(())
    });
}

#[test]
fn acceptance_6_conservation() {
    report(6, "conservation", || {
        let start = Instant::now();
        let reports = for_each_seed(SweepMode::Parallel, 0..1000, conservation_trial);
        let elapsed = start.elapsed();
        check!(reports.len() == 1000, "expected 1000 trials");
        for r in &reports {
            check!(
                r.residual_rel <= 1e-9,
                "seed {} residual {} exceeds 1e-9 relative",
                r.seed,
                r.residual_rel
            );
        }
        check!(elapsed.as_secs_f64() < 30.0, "sweep took {elapsed:?}");
        Ok(())
    });
}

#[test]
fn acceptance_7_guard_soundness() {
    report(7, "guard soundness", || {
        let reports = for_each_seed(SweepMode::Parallel, 0..200, guard_soundness_trial);
        let brown_outs: u64 = reports.iter().map(|r| r.brown_outs).sum();
        let actions: u64 = reports.iter().map(|r| r.actions_run).sum();
        check!(brown_outs == 0, "{brown_outs} brown-outs across 200 scenarios");
        check!(actions > 0, "guarded scenarios must actually run actions");
        Ok(())
    });
}

#[test]
fn acceptance_8_determinism() {
    report(8, "determinism", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../configs/temperature_sensor.toml"
        );
        let trace = concat!(env!("CARGO_MANIFEST_DIR"), "/../../traces/constant_50uw.csv");
        let mut logs = Vec::new();
        for name in ["a.jsonl", "b.jsonl"] {
            let out = dir.path().join(name);
            let status = Command::new(env!("CARGO_BIN_EXE_helio"))
                .args(["run", LISTING_PATH, config, trace, "-o", out.to_str().unwrap()])
                .env_remove("HELIO_HORIZON_MS")
                .env_remove("HELIO_SEED")
                .status()
                .map_err(|e| e.to_string())?;
            check!(status.success(), "run {name} failed");
            logs.push(fs::read(&out).map_err(|e| e.to_string())?);
        }
        check!(!logs[0].is_empty(), "log must not be empty");
        check!(logs[0] == logs[1], "two identical runs produced different logs");
        Ok(())
    });
}
