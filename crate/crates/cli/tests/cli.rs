use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUADRATIC: &str = r#"
schema_version = 1
n_iters = 60
seeds = [0, 1, 2]
noise_sigma = 0.05
target_loss = 0.5

[problem]
kind = "quadratic"
seed = 1
d = 5

[method]
kind = "or_smd_b"

[geometry]
kind = "euclidean"

[step]
rule = "constant"
eta = 0.2

[relaxation]
schedule = "two_point"
lambda_lo = 0.8
lambda_hi = 1.6
p_lo = 0.5
"#;

fn bregman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bregman")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_trace_per_seed_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let out = tmp.path().join("run");
    let o = bregman(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        assert!(out.join(format!("trace_seed{i}.csv")).exists());
        assert!(out.join(format!("reference_seed{i}.csv")).exists());
    }
    let trace = fs::read_to_string(out.join("trace_seed0.csv")).unwrap();
    assert_eq!(trace.lines().count(), 62);
    assert!(trace.starts_with("n,loss,bregman_to_ref,grad_norm,eta_used,lambda_used,step_norm,descent_term,domain_clamp_flag\n"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    assert!(summary.lines().nth(4).unwrap().starts_with("mean,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        assert!(bregman(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]).status.success());
    }
    for name in ["trace_seed0.csv", "trace_seed1.csv", "trace_seed2.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn summarize_reproduces_the_run_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let out = tmp.path().join("run");
    assert!(bregman(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]).status.success());
    let o = bregman(&["summarize", out.to_str().unwrap(), "--target-loss", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), fs::read_to_string(out.join("summary.csv")).unwrap());
}

#[test]
fn invalid_schedule_exits_2_naming_the_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let text = QUADRATIC.replace(
        "schedule = \"two_point\"\nlambda_lo = 0.8\nlambda_hi = 1.6\np_lo = 0.5",
        "schedule = \"constant\"\nlambda = 2.5\nmode = \"bounded\"",
    );
    let config = write_config(tmp.path(), "bad.toml", &text);
    let o = bregman(&["run", "--config", &config, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bounded mode violated"), "{}", stderr(&o));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn malformed_config_exits_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &QUADRATIC.replace("eta = 0.2", "eta = \"fast\""));
    let o = bregman(&["run", "--config", &config, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_3_with_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
n_iters = 50
reference = false

[problem]
kind = "simplex_estimation"
seed = 0
d = 5

[method]
kind = "smd"

[geometry]
kind = "entropy"

[step]
rule = "constant"
eta = 1e6
"#;
    let config = write_config(tmp.path(), "blowup.toml", text);
    let o = bregman(&["run", "--config", &config, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("iteration"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_cells_and_comparison_and_summarize_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let out = tmp.path().join("sweep");
    let o = bregman(&["sweep", "--config", &config, "--out", out.to_str().unwrap(), "--grid", "1.0,1.4,1.8", "--seeds", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);
    for cell in ["lambda_1.0", "lambda_1.4", "lambda_1.8"] {
        assert!(out.join(cell).join("trace_seed1.csv").exists());
        assert!(!out.join(cell).join("trace_seed2.csv").exists());
    }
    let o = bregman(&["summarize", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);

    let again = tmp.path().join("again");
    let o = bregman(&["summarize", out.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(again.join("comparison.csv")).unwrap(), table);
    assert_eq!(
        fs::read(again.join("lambda_1.4").join("summary.csv")).unwrap(),
        fs::read(out.join("lambda_1.4").join("summary.csv")).unwrap()
    );
}

#[test]
fn baseline_only_grid_reaches_its_own_target() {
    let tmp = tempfile::tempdir().unwrap();
    let text = QUADRATIC.replace("noise_sigma = 0.05", "noise_sigma = 0.0");
    let config = write_config(tmp.path(), "q.toml", &text);
    let out = tmp.path().join("sweep");
    let o = bregman(&["sweep", "--config", &config, "--out", out.to_str().unwrap(), "--grid", "1.0", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    let steps: f64 = row[3].parse().unwrap();
    assert!(steps > 0.0 && steps <= 60.0);
}

#[test]
fn sweep_without_baseline_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let out = tmp.path().join("sweep");
    let o = bregman(&["sweep", "--config", &config, "--out", out.to_str().unwrap(), "--grid", "1.3,1.6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bregman(&["sweep", "--config", &config, "--out", out.to_str().unwrap(), "--grid", "1.3,1.6", "--no-target", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn summarize_rejects_empty_and_mismatched_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(bregman(&["summarize", empty.to_str().unwrap()]).status.code(), Some(2));

    let config = write_config(tmp.path(), "q.toml", QUADRATIC);
    let out = tmp.path().join("run");
    assert!(bregman(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]).status.success());
    let path = out.join("trace_seed2.csv");
    let text = fs::read_to_string(&path).unwrap();
    let shorter: String = text.lines().take(30).map(|l| format!("{l}\n")).collect();
    fs::write(&path, shorter).unwrap();
    let o = bregman(&["summarize", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema mismatch") && stderr(&o).contains("trace_seed2.csv"), "{}", stderr(&o));
}
