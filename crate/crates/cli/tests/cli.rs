use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"
seed = 3
margin = 2.0
output_dir = "unused"
l_ladder = [0.16, 0.08, 0.04]

[grid]
dims = [8, 8, 8]
box_min = [-4.0, -4.0, -4.0]
box_max = [4.0, 4.0, 4.0]

[boundary]
kind = "near_constant"
eps = 0.2
pattern = "saddle"

[solver]
residual_tol = 1e-10
"#;

fn ldg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldg")).args(args).env("RUST_LOG", "warn").output().expect("spawn ldg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn check_geometry_single_trial_passes() {
    let o = ldg(&["check-geometry", "--trials", "1", "--seed", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("trials=1 seed=0 passed=true"));
    assert!(text.lines().filter(|l| l.starts_with("check=")).count() >= 10);
}

#[test]
fn check_geometry_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geo");
    let o = ldg(&["check-geometry", "--trials", "50", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("geometry.csv")).unwrap();
    assert!(csv.starts_with("check,worst,tolerance,failures\n"));
}

#[test]
fn missing_config_is_an_error() {
    let o = ldg(&["sweep"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        QUICK.replace("[0.16, 0.08, 0.04]", "[0.04, 0.08]"),
        QUICK.replace("margin = 2.0", "margin = 0.1"),
        QUICK.replace("seed = 3", "seed = 3\nunknown_key = 1"),
    ] {
        let cfg = write_config(dir.path(), &bad);
        let o = ldg(&["solve-ldg", "--config", &cfg]);
        assert!(!o.status.success(), "accepted:\n{bad}");
    }
}

#[test]
fn zero_threads_is_an_error() {
    let o = ldg(&["check-geometry", "--trials", "1", "--threads", "0"]);
    assert!(!o.status.success());
}

#[test]
fn sweep_writes_tables_and_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUICK);
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}"));
        let o = ldg(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (out, stdout(&o))
    };
    let (a, text) = run("1");
    let (b, _) = run("3");
    assert!(text.contains("solve=harmonic"));
    assert_eq!(text.lines().filter(|l| l.starts_with("rate=")).count(), 6);
    let sweep = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    assert!(sweep.starts_with("l,iterations,energy,el_residual,l2_err"));
    for f in ["sweep.csv", "rates.csv", "q_star.csv", "q_l_min.csv", "y_l_min.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn hedgehog_corrector_reports_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
margin = 0.4
output_dir = "unused"
l_ladder = [0.05]

[grid]
dims = [12, 12, 12]
box_min = [-1.0, -1.0, -1.0]
box_max = [1.0, 1.0, 1.0]

[boundary]
kind = "hedgehog"
"#;
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("corr");
    let o = ldg(&["corrector", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("corrector=hedgehog kappa=-3.6"));
    assert!(out.join("a.csv").exists());
    assert!(out.join("corrector.csv").exists());
}

#[test]
fn solve_commands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &QUICK.replace("[0.16, 0.08, 0.04]", "[0.1]"));
    let out = dir.path().join("solve");
    let o = ldg(&["solve-harmonic", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("solve=harmonic iterations="));
    assert!(out.join("q_star.bin").exists());
    let o = ldg(&["solve-ldg", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("solve=ldg l=1e-1"));
    assert!(out.join("solve_ldg.csv").exists());
}
