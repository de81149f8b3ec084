//! `helio`: validate agent programs, run simulations, and replay logs.
//!
//! `run` honors two environment overrides, `HELIO_HORIZON_MS` and
//! `HELIO_SEED`, so sweeps can reuse one config file.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use helio_asl::parse_program;
use helio_sim::{parse_jsonl, HarvestTrace, LogRecord, RecordKind, SimConfig, Simulation, Summary};

#[derive(Parser)]
#[command(
    name = "helio",
    version,
    about = "Energy-aware BDI agent simulator for battery-less devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and cross-check it against a config.
    Validate { program: PathBuf, config: PathBuf },
    /// Simulate to the horizon and write a JSON-lines event log.
    Run {
        program: PathBuf,
        config: PathBuf,
        trace: PathBuf,
        /// Log destination; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pretty-print a log, optionally restricted to one record kind.
    Replay {
        log: PathBuf,
        #[arg(long)]
        filter: Option<String>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { program, config } => cmd_validate(&program, &config),
        Command::Run { program, config, trace, output } => {
            cmd_run(&program, &config, &trace, output.as_deref())
        }
        Command::Replay { log, filter } => cmd_replay(&log, filter.as_deref()),
    }
}

fn read(path: &std::path::Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_validate(program_path: &std::path::Path, config_path: &std::path::Path) -> Result<ExitCode> {
    let program = parse_program(&read(program_path)?)
        .with_context(|| format!("parsing {}", program_path.display()))?;
    let config = SimConfig::from_toml_str(&read(config_path)?)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let mut errors = 0usize;
    for action in program.action_names() {
        if !config.actions.contains_key(action) {
            println!("error: action `{action}` has no entry in the [actions] cost model");
            errors += 1;
        }
    }
    let seeded: BTreeSet<&str> =
        program.initial_beliefs.iter().map(|b| b.functor.as_str()).collect();
    for guard in program.estimate_guard_functors() {
        if guard == "e_available" || guard == "e_tendency" {
            continue;
        }
        if !seeded.contains(guard) {
            println!(
                "warning: guard references `{guard}` but no initial belief seeds it \
                 (it may be asserted at runtime)"
            );
        }
    }
    if program.plans.is_empty() {
        println!("warning: program has no plans; only initial beliefs will take effect");
    }
    if errors == 0 {
        println!(
            "ok: {} initial beliefs, {} plans, {} distinct actions",
            program.initial_beliefs.len(),
            program.plans.len(),
            program.action_names().len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_run(
    program_path: &std::path::Path,
    config_path: &std::path::Path,
    trace_path: &std::path::Path,
    output: Option<&std::path::Path>,
) -> Result<ExitCode> {
    let program = parse_program(&read(program_path)?)
        .with_context(|| format!("parsing {}", program_path.display()))?;
    let mut config = SimConfig::from_toml_str(&read(config_path)?)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    if let Ok(value) = std::env::var("HELIO_HORIZON_MS") {
        config.sim.horizon_ms =
            value.parse().context("HELIO_HORIZON_MS must be a millisecond count")?;
    }
    if let Ok(value) = std::env::var("HELIO_SEED") {
        config.sim.seed = value.parse().context("HELIO_SEED must be an integer")?;
    }
    let trace = HarvestTrace::from_csv(&read(trace_path)?)
        .with_context(|| format!("parsing {}", trace_path.display()))?;
    let mut sim = Simulation::new(program, config, trace)?;
    sim.run();
    let log = sim.log_jsonl();
    match output {
        Some(path) => {
            fs::write(path, &log).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{log}"),
    }
    if let Some(summary) = sim.summary() {
        eprintln!(
            "done: {} ms, {} cycles, {:.3} uJ harvested, {:.3} uJ consumed, {} brown-outs",
            summary.end_time_ms,
            summary.cycles,
            summary.harvested_uj,
            summary.consumed_uj,
            summary.brown_out_count
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(log_path: &std::path::Path, filter: Option<&str>) -> Result<ExitCode> {
    let records = parse_jsonl(&read(log_path)?)?;
    for record in &records {
        if let Some(kind) = filter {
            if record.kind.kind_name() != kind {
                continue;
            }
        }
        println!("{}", format_record(record));
    }
    if let Some(embedded) = records.iter().find_map(|r| match &r.kind {
        RecordKind::Summary(s) => Some(s),
        _ => None,
    }) {
        let recomputed = Summary::from_records(&records, embedded.level_start_uj);
        if &recomputed != embedded {
            bail!("log does not reproduce its own summary; the file was edited or truncated");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn format_record(record: &LogRecord) -> String {
    let detail = match &record.kind {
        RecordKind::Cycle { cycle, overhead_uj, .. } => {
            format!("cycle {cycle} overhead {overhead_uj} uJ")
        }
        RecordKind::Event { event, provenance, disposition } => {
            format!("{event} [{provenance}] {disposition}")
        }
        RecordKind::PlanSelected { plan_line, trigger, intention } => {
            format!("plan at line {plan_line} for {trigger} (intention {intention})")
        }
        RecordKind::Action { name, args, energy_uj, duration_ms, tx_power, .. } => {
            let mut text = format!("{name}({}) {energy_uj} uJ {duration_ms} ms", args.join(", "));
            if let Some(power) = tx_power {
                text.push_str(&format!(" tx {power} dBm"));
            }
            text
        }
        RecordKind::InternalAction { name, detail, .. } => format!("{name} {detail}"),
        RecordKind::BeliefChange { op, literal, origin } => format!("{op} {literal} ({origin})"),
        RecordKind::Persist { medium, bytes, energy_uj, status, .. } => {
            format!("{medium} {bytes} B {energy_uj} uJ {status}")
        }
        RecordKind::Restore { medium, bytes, energy_uj, status } => {
            format!("{medium} {bytes} B {energy_uj} uJ {status}")
        }
        RecordKind::Sleep { cause } => cause.clone(),
        RecordKind::Wake { cause, slept_ms, harvested_uj, .. } => {
            format!("{cause} after {slept_ms} ms (+{harvested_uj} uJ)")
        }
        RecordKind::BrownOut { cause, slept_ms, .. } => format!("{cause} after {slept_ms} ms"),
        RecordKind::ClampLoss { energy_uj } => format!("{energy_uj} uJ discarded at full buffer"),
        RecordKind::Summary(s) => format!(
            "{} cycles, {:.3} uJ harvested, {:.3} uJ consumed, {} brown-outs, sleep {:.1}%",
            s.cycles,
            s.harvested_uj,
            s.consumed_uj,
            s.brown_out_count,
            s.sleep_fraction * 100.0
        ),
    };
    format!(
        "{:>9} ms {:>10.3} uJ {:<13} {}",
        record.time_ms,
        record.buffer_uj,
        record.kind.kind_name(),
        detail
    )
}
