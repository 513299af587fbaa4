use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlsinflate"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nlsinflate-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn print_config_emits_loadable_toml() {
    let out = bin().args(["print-config", "--dim", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[inflation]"));
    let dir = scratch("config");
    let path = dir.join("cfg.toml");
    std::fs::write(&path, &text).unwrap();
    let again = bin()
        .args(["print-config", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(again.status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn passing_experiment_writes_report_and_exits_zero() {
    let dir = scratch("run");
    let out = bin()
        .args(["scale-separation", "--seed", "3", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.matches("[PASS] criterion 6").count(), 4);
    assert!(dir.join("scale_separation_summary.json").exists());
    assert!(dir.join("scale_separation_sums.csv").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_criterion_exits_one() {
    let dir = scratch("fail");
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "[scale_separation]\nrungs = 2\n").unwrap();
    let out = bin()
        .args(["scale-separation", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_config_exits_two() {
    let dir = scratch("bad");
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "[bilinear]\nunknown_key = 1\n").unwrap();
    let out = bin()
        .args(["bilinear", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("unknown_key"));
    std::fs::remove_dir_all(&dir).unwrap();
}
