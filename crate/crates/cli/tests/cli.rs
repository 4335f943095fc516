use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sfclab_core::dataset::{parse_instance, read_dataset, Records};

fn sfclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfclab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&sfclab(&["bogus"])), 1);
    assert_eq!(code(&sfclab(&["eval", "--seeds", "many"])), 1);
    assert_eq!(code(&sfclab(&["eval", "--policy", "bridge"])), 1);
    assert_eq!(code(&sfclab(&["demos", "--rounds", "1"])), 1, "--out is required");
    assert_eq!(code(&sfclab(&["--help"])), 0);
}

#[test]
fn eval_prints_the_metric_table() {
    let out =
        sfclab(&["eval", "--policy", "greedy", "--nodes", "5", "--sfcs", "30", "--horizon", "80", "--seeds", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,reward,avg_waiting,blocked,efficiency");
    assert_eq!(lines.len(), 1 + 4 + 2);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[5].starts_with("mean,") && lines[6].starts_with("std,"));
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 5);
    }
}

#[test]
fn gen_writes_a_parsable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inst.txt");
    let out =
        sfclab(&["gen", "--seed", "3", "--nodes", "4", "--sfcs", "6", "--horizon", "30", "--out", path_arg(&file)]);
    assert_eq!(code(&out), 0);
    let inst = parse_instance(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!((inst.node_count(), inst.chain_count(), inst.deadline), (4, 6, 30));
}

#[test]
fn demos_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    for f in [&a, &b] {
        let out = sfclab(&["demos", "--rounds", "3", "--seed", "7", "--out", path_arg(f)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let ds = read_dataset(&a).unwrap();
    assert!(matches!(ds.records, Records::Demonstrations(ref d) if d.len() == 3));

    let summary = sfclab(&["dataset", path_arg(&a)]);
    assert_eq!(code(&summary), 0);
    assert!(stdout(&summary).contains("records 3"));
    assert!(stdout(&summary).contains("sidecar ok"));
}

#[test]
fn config_file_sets_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.cfg");
    fs::write(&cfg, "# tiny\nnodes 3\nchains 2\nlength 2 2\nhorizon 12\n").unwrap();
    let out_file = dir.path().join("d.bin");
    let out = sfclab(&["demos", "--config", path_arg(&cfg), "--out", path_arg(&out_file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ds = read_dataset(&out_file).unwrap();
    assert_eq!((ds.header.nodes, ds.header.horizon), (3, 12));

    fs::write(&cfg, "nodes three\n").unwrap();
    assert_eq!(code(&sfclab(&["demos", "--config", path_arg(&cfg), "--out", path_arg(&out_file)])), 2);
}

#[test]
fn damaged_datasets_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.bin");
    assert_eq!(code(&sfclab(&["demos", "--rounds", "1", "--out", path_arg(&file)])), 0);
    let bytes = fs::read(&file).unwrap();
    fs::write(&file, &bytes[..bytes.len() - 7]).unwrap();
    let out = sfclab(&["dataset", path_arg(&file)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
    assert_eq!(code(&sfclab(&["dataset", "/nonexistent/file.bin"])), 2);
}

#[test]
fn lexopt_reports_budget_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.bin");
    let refined = dir.path().join("r.bin");
    assert_eq!(code(&sfclab(&["demos", "--rounds", "2", "--seed", "4", "--out", path_arg(&file)])), 0);
    assert_eq!(code(&sfclab(&["lexopt", path_arg(&file), "--max-states", "3"])), 3);
    let out = sfclab(&["lexopt", path_arg(&file), "--beam", "64", "--out", path_arg(&refined)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read_dataset(&refined).is_ok());
}

#[test]
fn baseline_can_save_its_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.bin");
    let out =
        sfclab(&["baseline", "--policy", "random", "--sfcs", "10", "--horizon", "25", "--trajectory", path_arg(&traj)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 2);
    let ds = read_dataset(&traj).unwrap();
    assert_eq!(ds.header.horizon, 25);
}

// A peer that defers every chain, or refuses the handshake.
const PEER: &str = r#"
import json, sys
refuse = len(sys.argv) > 1
for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        reply = {"type": "refuse", "reason": "busy"} if refuse else {"type": "ready"}
        n, m = msg["n"], msg["m"]
    else:
        reply = {"type": "action", "matrix": [[0] * n for _ in range(m)]}
    print(json.dumps(reply), flush=True)
"#;

fn python_available() -> bool {
    Command::new("python3").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn bridge_policy_over_a_subprocess() {
    if !python_available() {
        eprintln!("python3 not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let peer = dir.path().join("peer.py");
    fs::write(&peer, PEER).unwrap();
    let endpoint = format!("exec:python3 {}", peer.display());
    let out = sfclab(&[
        "eval",
        "--policy",
        "bridge",
        "--endpoint",
        &endpoint,
        "--sfcs",
        "8",
        "--horizon",
        "20",
        "--seeds",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // Deferring everything places nothing.
    for row in stdout(&out).lines().skip(1).take(2) {
        assert_eq!(row.split(',').nth(1), Some("0"));
    }

    let refusing = format!("exec:python3 {} refuse", peer.display());
    assert_eq!(code(&sfclab(&["eval", "--policy", "bridge", "--endpoint", &refusing, "--seeds", "1"])), 3);
}

#[test]
fn unreachable_bridge_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let out = sfclab(&["eval", "--policy", "bridge", "--endpoint", &addr.to_string(), "--seeds", "1"]);
    assert_eq!(code(&out), 4);
}
