//! On-disk format round-trips and end-to-end CLI behaviour (exit codes,
//! output layout, deterministic replay).

use std::path::PathBuf;
use std::process::Command;

use elflow::field::{State, VectorField};
use elflow::grid::{BoundaryMode, Grid};
use elflow::io::{read_snapshot, write_snapshot};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elflow"))
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elflow-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn snapshot_survives_a_disk_round_trip() {
    let dir = tmp("snap");
    let grid = Grid::new(3, &[4, 4, 4], &[1.0, 1.0, 1.0], BoundaryMode::Periodic).unwrap();
    let mut state = State::zero(&grid);
    state.t = 2.5;
    state.u = VectorField::from_fn(&grid, |x| [x[0], x[1] * x[2], -x[0] * 0.5]);
    let path = dir.join("snap.elf1");
    write_snapshot(&path, &state).unwrap();
    let back = read_snapshot(&path, &grid).unwrap();
    assert_eq!(back, state);
    // write -> read -> write produces identical bytes
    let again = dir.join("snap2.elf1");
    write_snapshot(&again, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn scenario_list_names_the_bundled_constructors() {
    let out = bin().args(["scenario", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["zero", "small_vortex", "near_identity", "mms", "periodic_wave"] {
        assert!(text.contains(name), "missing {name} in {text}");
    }
}

#[test]
fn missing_config_exits_with_code_two() {
    let out = bin().args(["run", "/nonexistent/elflow.conf"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_scenario_exits_with_code_two_and_writes_nothing() {
    let dir = tmp("badsc");
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, format!("scenario = warp\nout_dir = {}/out\n", dir.display())).unwrap();
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("out").exists(), "no partial outputs on config errors");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_verify_suite_exits_with_code_two() {
    let out = bin().args(["verify", "warp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_the_documented_outputs_and_replays_bitwise() {
    let dir = tmp("run");
    let mut csvs: Vec<Vec<u8>> = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = dir.join(tag);
        let cfg = dir.join(format!("{tag}.conf"));
        std::fs::write(
            &cfg,
            format!(
                "scenario = small_vortex\nn = 8\ndt = 1e-3\nt_end = 4e-3\nintegrator = both\n\
                 snapshot_every = 2\nout_dir = {}\n",
                out_dir.display()
            ),
        )
        .unwrap();
        let out = bin().args(["run"]).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("status = ok"));
        assert!(out_dir.join("diagnostics_picard.csv").is_file());
        assert!(out_dir.join("diagnostics_weak.csv").is_file());
        assert!(out_dir.join("gronwall.csv").is_file());
        assert!(out_dir.join("summary.txt").is_file());
        assert!(out_dir.join("snapshots_picard/snap_000000.elf1").is_file());
        csvs.push(std::fs::read(out_dir.join("diagnostics_picard.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "identical configs must replay bitwise");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn summary_reports_solver_divergence_with_exit_three() {
    let dir = tmp("div");
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "scenario = small_vortex\nn = 8\namplitude = 10\ndt = 5e-2\nt_end = 0.5\n\
             max_picard = 10\nout_dir = {}/out\n",
            dir.display()
        ),
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let summary = std::fs::read_to_string(dir.join("out/summary.txt")).unwrap();
    assert!(summary.contains("status = solver_diverged"), "summary: {summary}");
    assert!(summary.contains("error = "));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn mms_subcommand_prints_a_two_level_table() {
    let out = bin().args(["mms", "--refine", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("l2_error"));
    assert!(text.lines().count() >= 3, "table: {text}");
}
