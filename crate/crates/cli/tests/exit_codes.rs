//! Error paths map to the documented exit codes: 2 I/O, 3 format,
//! 4 shape/config mismatch, 5 degenerate input, 6 divergence.

use std::path::Path;
use std::process::Command;

use aegroup::grid::io::write_tensor;
use aegroup::grid::Grid;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aegroup")
}

fn run_code(args: &[&str]) -> i32 {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn aegroup")
        .status
        .code()
        .expect("exit code")
}

fn write_grids(path: &Path, count: usize) {
    let grids = vec![Grid::zeros(8, 8).unwrap(); count];
    write_tensor(path, &grids).unwrap();
}

#[test]
fn bad_magic_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.aehm");
    let tag = dir.path().join("tag.aehm");
    write_grids(&tag, 2);
    std::fs::write(&det, b"NOPE____________________").unwrap();
    let code = run_code(&[
        "decode-pose",
        det.to_str().unwrap(),
        tag.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn truncated_tensor_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.aehm");
    let tag = dir.path().join("tag.aehm");
    write_grids(&tag, 1);
    let mut bytes = std::fs::read(&tag).unwrap();
    bytes.truncate(bytes.len() - 10);
    std::fs::write(&det, bytes).unwrap();
    let code = run_code(&[
        "decode-pose",
        det.to_str().unwrap(),
        tag.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn channel_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.aehm");
    let tag = dir.path().join("tag.aehm");
    write_grids(&det, 2);
    write_grids(&tag, 3);
    let code = run_code(&[
        "decode-pose",
        det.to_str().unwrap(),
        tag.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn unknown_config_key_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.ini");
    std::fs::write(&cfg, "[run]\nwibble = 1\n").unwrap();
    let code = run_code(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"a file, not a directory").unwrap();
    let code = run_code(&[
        "synth",
        "--out",
        blocker.join("nested").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn degenerate_input_exits_5() {
    // All-zero detection heatmap: the foreground mask is empty and the
    // tag histogram is degenerate.
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.aehm");
    let tag = dir.path().join("tag.aehm");
    write_grids(&det, 1);
    write_grids(&tag, 1);
    let code = run_code(&[
        "decode-instance",
        det.to_str().unwrap(),
        tag.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 5);
}

#[test]
fn divergent_training_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.ini");
    std::fs::write(
        &cfg,
        "[run]\nmode = pose\nseed = 1\n[scene]\ncount_min = 2\ncount_max = 3\n\
         [train]\nlearning_rate = 1e9\nsteps = 200\n",
    )
    .unwrap();
    let code = run_code(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 6);
}
