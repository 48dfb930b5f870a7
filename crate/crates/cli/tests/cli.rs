use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logdecay"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../ex").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("logdecay-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn phase_on_flat_writes_columns() {
    let out = scratch("phase");
    let o = run(&["phase", "--config", example("flat.ini").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("phase.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,psi,y,phi"));
    assert!(csv.lines().count() > 100);
    assert!(out.join("phase_checks.csv").exists());
}

#[test]
fn goal_estimate_margins_are_nonnegative_on_jump() {
    let out = scratch("goal");
    let o = run(&["goal-est", "--config", example("jump.ini").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("goal.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "margin").unwrap();
    let margins: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(margins.len(), 100);
    assert!(margins.iter().all(|m| *m >= 0.0));
}

#[test]
fn decay_sim_plots_both_envelopes() {
    let out = scratch("decay");
    let o = run(&["decay-sim", "--config", example("bump3d.ini").to_str().unwrap(), "--plot"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(csv.starts_with("t,value,A_sq,fit_model,fit_param1,fit_param2,r2\n"));
    assert!(csv.contains("log_envelope"));
    let svg = std::fs::read_to_string(out.join("decay.svg")).unwrap();
    assert!(svg.contains("log_envelope") && svg.contains("power"));
    assert!(!svg.contains("href"));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let cfg = example("bump3d.ini");
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&["stone-compare", "--config", cfg.to_str().unwrap(), "--seed", "7", "--threads", threads], dir);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    for name in ["stone.csv", "stone-compare_checks.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = scratch("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.ini");
    std::fs::write(&path, "[grid]\nr_max = 10\n\nspeling = 3\n").unwrap();
    let o = run(&["phase", "--config", path.to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("speling"), "{err}");

    let o = run(&["phase", "--config", dir.join("missing.ini").to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("not-a-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_checks_are_named_and_exit_one() {
    // A 2% Stone tolerance cannot hold at t = 30 on this grid.
    let dir = scratch("fail");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("stone.ini");
    std::fs::write(&path, "[grid]\nr_max = 60\nn_interior = 300\n[decay]\nstone_times = 30\nstone_cap = 3\n").unwrap();
    let o = run(&["stone-compare", "--config", path.to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL stone_difference"), "{}", stdout(&o));
}

#[test]
fn numerical_failure_exits_one() {
    // Times beyond the causality window.
    let dir = scratch("window");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.ini");
    std::fs::write(&path, "[grid]\nr_max = 12\nn_interior = 100\n[decay]\ntimes = 1:20:1\n").unwrap();
    let o = run(&["decay-sim", "--config", path.to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL decay-sim") && stdout(&o).contains("causality"), "{}", stdout(&o));
}

#[test]
fn quick_commands_pass_with_defaults() {
    for cmd in ["specfun-audit", "fredholm", "inequalities", "weight-check"] {
        let out = scratch(cmd);
        let o = run(&[cmd], &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stdout(&o));
        assert!(out.join(format!("{cmd}_checks.csv")).exists());
    }
}
