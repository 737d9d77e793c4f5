//! End-to-end checks of the command-line surface: exit codes, schemas, and
//! byte-for-byte determinism.

use chokepoint::model::TraceJson;
use std::process::{Command, Output};

fn chokepoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chokepoint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn run_prints_trace_summary_and_verdict() {
    let out = chokepoint(&[
        "run",
        "--alg",
        "optimized",
        "--d",
        "2",
        "--input",
        "3,1,2",
        "--t",
        "64",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    let trace: TraceJson = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(trace.n, 3);
    assert_eq!(trace.d, 2);
    assert_eq!(trace.t, 64);
    assert_eq!(
        trace.output,
        vec![Some("3".into()), Some("5".into()), Some("4".into())]
    );
    assert_eq!(
        lines.next().unwrap(),
        "reads=5 first_pass=4 second_pass=1 max_state_bits=10"
    );
    assert_eq!(lines.next().unwrap(), "verdict=correct");
}

#[test]
fn run_flags_incorrect_output() {
    let out = chokepoint(&[
        "run", "--alg", "cheat:1", "--d", "1", "--input", "0,0,1", "--t", "64",
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout(&out).contains("verdict=incorrect cells=0"));
}

#[test]
fn run_supports_seeded_instances() {
    let a = chokepoint(&[
        "run", "--alg", "standard", "--d", "3", "--n", "5", "--seed", "9",
    ]);
    let b = chokepoint(&[
        "run", "--alg", "standard", "--d", "3", "--n", "5", "--seed", "9",
    ]);
    assert_eq!(exit_code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = chokepoint(&[
        "run", "--alg", "standard", "--d", "3", "--n", "5", "--seed", "10",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(exit_code(&chokepoint(&["run", "--nope"])), 2);
    assert_eq!(
        exit_code(&chokepoint(&[
            "run", "--alg", "standard", "--d", "1", "--input", "0,5"
        ])),
        2
    );
    assert_eq!(
        exit_code(&chokepoint(&[
            "run", "--alg", "mystery", "--d", "1", "--input", "0"
        ])),
        2
    );
    assert_eq!(
        exit_code(&chokepoint(&["bounds", "--n", "2", "--d", "1"])),
        2
    );
}

#[test]
fn guard_trips_exit_three() {
    assert_eq!(
        exit_code(&chokepoint(&["search", "--n", "3", "--d", "2", "--t", "4"])),
        3
    );
    assert_eq!(
        exit_code(&chokepoint(&[
            "audit", "--alg", "standard", "--n", "11", "--d", "2"
        ])),
        3
    );
    assert_eq!(
        exit_code(&chokepoint(&[
            "falsify", "--alg", "standard", "--n", "11", "--d", "2"
        ])),
        3
    );
}

#[test]
fn bounds_csv_has_the_documented_columns() {
    let out = chokepoint(&["bounds", "--n", "2", "--d", "1", "--t", "1"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,d,t,first_pass_bound,second_pass_bound_raw,total_bound,standard_memory_bits,read_gap"
    );
    assert_eq!(lines.next().unwrap(), "2,1,1,1,1,2,2,1");
}

#[test]
fn identical_flags_produce_identical_bytes() {
    let args = [
        "bounds", "--n", "2,4,8", "--d", "1,2", "--t", "0,3", "--auto-t",
    ];
    let a = chokepoint(&args);
    let b = chokepoint(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(exit_code(&a), 0);
}

#[test]
fn falsify_finds_and_replays_cheat_witnesses() {
    let out = chokepoint(&["falsify", "--alg", "cheat:1", "--n", "3", "--d", "1"]);
    assert_eq!(exit_code(&out), 0);
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["perturbed_index"], 2);
    assert_eq!(value["affected_output_index"], 0);
    assert_eq!(value["replayed"], true);
}

#[test]
fn falsify_verifies_correct_algorithms() {
    for alg in ["standard", "optimized", "first-pass-minimal"] {
        let out = chokepoint(&["falsify", "--alg", alg, "--n", "3", "--d", "2"]);
        assert_eq!(exit_code(&out), 0, "{alg}");
        let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
        assert_eq!(value["bound_respected"], true);
    }
}

#[test]
fn audit_reports_injectivity() {
    let out = chokepoint(&["audit", "--alg", "optimized", "--n", "3", "--d", "1"]);
    assert_eq!(exit_code(&out), 0);
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["injective"], true);
    assert_eq!(value["distinct_pairs"], 8);
    assert_eq!(value["bit_inequality_holds"], true);
    assert!(value.get("pairs").is_none());

    let out = chokepoint(&[
        "audit",
        "--alg",
        "standard",
        "--n",
        "2",
        "--d",
        "1",
        "--dump-pairs",
    ]);
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["pairs"].as_array().unwrap().len(), 4);
}

#[test]
fn audit_refuses_incorrect_algorithms() {
    let out = chokepoint(&["audit", "--alg", "cheat:1", "--n", "3", "--d", "1"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stdout(&out).contains("violation"));
}

#[test]
fn reconstruct_round_trips_and_rejects() {
    let out = chokepoint(&["reconstruct", "--input", "5,4,3"]);
    assert_eq!(exit_code(&out), 0);
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["input"], serde_json::json!(["1", "2", "3"]));

    let out = chokepoint(&["reconstruct", "--input", "1,2,2"]);
    assert_eq!(exit_code(&out), 1);

    let out = chokepoint(&["reconstruct", "--input", "0,1,5", "--d", "2"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn search_csv_is_one_row() {
    let out = chokepoint(&[
        "search", "--n", "2", "--d", "1", "--t", "1", "--format", "csv",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("n,d,t,protocols_enumerated"));
    let row = lines.next().unwrap();
    assert_eq!(row, "2,1,1,24137569,3240577,1520,2,1,1,2,true");
    assert_eq!(lines.next(), None);
}

#[test]
fn thread_cap_env_var_is_respected() {
    let out = Command::new(env!("CARGO_BIN_EXE_chokepoint"))
        .env("CHOKEPOINT_THREADS", "1")
        .args(["search", "--n", "2", "--d", "1", "--t", "1"])
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&out), 0);
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["min_total_reads"], 2);
}
