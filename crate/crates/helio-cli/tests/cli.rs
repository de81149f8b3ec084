//! End-to-end tests of the `helio` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const LISTING: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../programs/temperature_sensor.asl"
);
const CONFIG: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../configs/temperature_sensor.toml"
);
const TRACE_50UW: &str =
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../traces/constant_50uw.csv");

fn helio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helio"))
        .args(args)
        .env_remove("HELIO_HORIZON_MS")
        .env_remove("HELIO_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

#[test]
fn validate_accepts_the_listing_with_its_config() {
    let output = helio(&["validate", LISTING, CONFIG]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("ok: 5 initial beliefs, 4 plans"));
}

#[test]
fn validate_names_an_action_missing_from_the_cost_model() {
    let dir = tempfile::tempdir().unwrap();
    let program = write(&dir.path().join(""), "p.asl", "+!go <- foo().\n");
    let output = helio(&["validate", program.to_str().unwrap(), CONFIG]);
    assert!(!output.status.success());
    assert!(stdout(&output).contains("`foo`"), "{}", stdout(&output));
}

#[test]
fn validate_warns_on_an_unseeded_estimate_guard() {
    let dir = tempfile::tempdir().unwrap();
    let program = write(
        dir.path(),
        "p.asl",
        "+!send : e_broadcast(R) & e_available(A) & A > R <- store_for_later_tx().\n",
    );
    let output = helio(&["validate", program.to_str().unwrap(), CONFIG]);
    assert!(output.status.success(), "warnings are not errors");
    let text = stdout(&output);
    assert!(text.contains("warning") && text.contains("e_broadcast"), "{text}");
}

#[test]
fn validate_rejects_a_parse_error_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let program = write(dir.path(), "p.asl", "belief(1).\n+!go <- ???.\n");
    let output = helio(&["validate", program.to_str().unwrap(), CONFIG]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("at 2:"), "{}", stderr(&output));
}

#[test]
fn run_on_the_listing_measures_without_browning_out() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.jsonl");
    let output =
        helio(&["run", LISTING, CONFIG, TRACE_50UW, "-o", log_path.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let log = fs::read_to_string(&log_path).unwrap();
    let measurements = log
        .lines()
        .filter(|l| l.contains("\"kind\":\"action\"") && l.contains("read_trh_sensor"))
        .count();
    assert!(measurements >= 1);
    let last = log.lines().last().unwrap();
    assert!(last.contains("\"kind\":\"summary\""));
    assert!(last.contains("\"brown_out_count\":0"));
}

#[test]
fn run_never_booted_writes_a_single_brown_out_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "dead.toml",
        "version = 1\n\
         [buffer]\n\
         capacity_uj = 1000\n\
         initial_uj = 5\n\
         cold_start_uj = 50\n\
         [sim]\n\
         horizon_ms = 60000\n\
         [actions.read_trh_sensor]\n\
         energy_uj = 18\n\
         [actions.start_ble_adv]\n\
         energy_uj = 101\n\
         [actions.store_for_later_tx]\n\
         energy_uj = 5\n",
    );
    let trace = write(dir.path(), "zero.csv", "time_ms,power_uW\n0,0\n");
    let log_path = dir.path().join("dead.jsonl");
    let output = helio(&[
        "run",
        LISTING,
        config.to_str().unwrap(),
        trace.to_str().unwrap(),
        "-o",
        log_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let log = fs::read_to_string(&log_path).unwrap();
    let brown_outs =
        log.lines().filter(|l| l.contains("\"kind\":\"brown_out\"")).count();
    let cycles = log.lines().filter(|l| l.contains("\"kind\":\"cycle\"")).count();
    assert_eq!(brown_outs, 1);
    assert_eq!(cycles, 0);
    assert!(log.contains("never_booted"));
}

#[test]
fn horizon_env_override_shortens_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("short.jsonl");
    let output = Command::new(env!("CARGO_BIN_EXE_helio"))
        .args(["run", LISTING, CONFIG, TRACE_50UW, "-o", log_path.to_str().unwrap()])
        .env("HELIO_HORIZON_MS", "7000")
        .env_remove("HELIO_SEED")
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    let log = fs::read_to_string(&log_path).unwrap();
    assert!(log.lines().last().unwrap().contains("\"end_time_ms\":7000"));
}

#[test]
fn replay_filters_and_verifies_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.jsonl");
    let run =
        helio(&["run", LISTING, CONFIG, TRACE_50UW, "-o", log_path.to_str().unwrap()]);
    assert!(run.status.success());

    let empty = helio(&["replay", log_path.to_str().unwrap(), "--filter", "brown_out"]);
    assert!(empty.status.success());
    assert!(stdout(&empty).is_empty(), "clean run has no brown-outs to print");

    let actions = helio(&["replay", log_path.to_str().unwrap(), "--filter", "action"]);
    assert!(actions.status.success());
    let text = stdout(&actions);
    assert!(text.lines().all(|l| l.contains("action")));
    assert!(text.contains("read_trh_sensor") && text.contains("uJ"), "{text}");
}

#[test]
fn replay_reports_the_malformed_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.jsonl");
    let run =
        helio(&["run", LISTING, CONFIG, TRACE_50UW, "-o", log_path.to_str().unwrap()]);
    assert!(run.status.success());
    let mut lines: Vec<String> =
        fs::read_to_string(&log_path).unwrap().lines().map(String::from).collect();
    lines[2] = "{\"time_ms\": not json".to_string();
    let broken = write(dir.path(), "broken.jsonl", &lines.join("\n"));
    let output = helio(&["replay", broken.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("line 3"), "{}", stderr(&output));
}

#[test]
fn replay_rejects_a_tampered_summary() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.jsonl");
    let run =
        helio(&["run", LISTING, CONFIG, TRACE_50UW, "-o", log_path.to_str().unwrap()]);
    assert!(run.status.success());
    let text = fs::read_to_string(&log_path).unwrap();
    let tampered = text.replacen("\"brown_out_count\":0", "\"brown_out_count\":7", 1);
    assert_ne!(text, tampered, "summary field must exist to tamper with");
    let path = write(dir.path(), "tampered.jsonl", &tampered);
    let output = helio(&["replay", path.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("summary"), "{}", stderr(&output));
}
