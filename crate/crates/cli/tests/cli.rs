use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dualsys(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualsys"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DUALSYS_OUT")
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let output = dualsys(args, out);
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn system_two_plan_always_reaches_kale() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["plan", "--mode", "system2"], dir.path());
    let csv = read(dir.path(), "plan-system2.csv");
    let actions = column(&csv, "action");
    let basins = column(&csv, "basin");
    let moving: Vec<_> = basins
        .iter()
        .zip(&actions)
        .filter(|(_, a)| !a.is_empty())
        .collect();
    assert_eq!(moving.len(), 47);
    assert!(moving.iter().all(|(b, _)| *b == "kale"));
    assert!(dir.path().join("plan-system2-policy.svg").exists());
    assert!(dir.path().join("plan-system2.manifest").exists());
}

#[test]
fn sophisticated_plan_from_the_corner_reaches_kale() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["plan", "--mode", "soph"], dir.path());
    assert!(stdout.contains("start (0,6): kale"), "{stdout}");
    let costs = column(&read(dir.path(), "plan-soph.csv"), "control_cost");
    assert!(costs.iter().all(|c| c.parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn sampling_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sample", "--mode", "naive", "--n", "50", "--seed", "3"];
    ok(&args, a.path());
    ok(&args, b.path());
    let text = read(a.path(), "sample-naive-seed3.txt");
    assert_eq!(text, read(b.path(), "sample-naive-seed3.txt"));
    let body: Vec<&str> = text.lines().skip_while(|l| *l != "---").skip(1).collect();
    assert_eq!(body.len(), 50);
    assert!(body.iter().all(|l| l.ends_with(" done")));
}

#[test]
fn unknown_world_lists_bundled_worlds() {
    let dir = tempfile::tempdir().unwrap();
    let output = dualsys(&["plan", "--world", "nowhere"], dir.path());
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    for name in ["donut-kale", "snack-immediate", "snack-delayed", "stop-go"] {
        assert!(stderr.contains(name), "{stderr}");
    }
}

#[test]
fn unknown_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let output = dualsys(&["experiment", "figure9"], dir.path());
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("figure1"));
}

#[test]
fn irl_writes_one_record_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "irl",
        "--mode",
        "rational",
        "--replicates",
        "3",
        "--n",
        "10",
        "--de-pop",
        "8",
        "--de-gens",
        "5",
        "--seed-stride",
        "0",
    ];
    ok(&args, dir.path());
    for r in 0..3 {
        let record = read(dir.path(), &format!("irl-rational-on-naive-r{r}.txt"));
        assert!(record.contains("model=rational\n"));
    }
    assert!(!dir.path().join("irl-rational-on-naive-r3.txt").exists());
    let estimates = read(dir.path(), "irl-rational-on-naive-estimates.csv");
    assert_eq!(estimates.lines().count(), 4);
    let aggregate = read(dir.path(), "irl-rational-on-naive-aggregate.csv");
    assert_eq!(column(&aggregate, "sd"), ["0", "0", "0"]);
}

#[test]
fn naive_fits_recover_the_mean_signs() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "irl",
            "--mode",
            "naive",
            "--data-mode",
            "naive",
            "--replicates",
            "16",
        ],
        dir.path(),
    );
    let aggregate = read(dir.path(), "irl-naive-on-naive-aggregate.csv");
    let mean = |name: &str| -> f64 {
        let line = aggregate
            .lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(mean("donut1") > 0.0);
    assert!(mean("donut2") < 0.0);
}

#[test]
fn replay_reproduces_outputs_exactly() {
    let first = tempfile::tempdir().unwrap();
    let args = [
        "irl",
        "--mode",
        "naive",
        "--replicates",
        "2",
        "--n",
        "10",
        "--de-pop",
        "8",
        "--de-gens",
        "4",
    ];
    ok(&args, first.path());
    let second = tempfile::tempdir().unwrap();
    let manifest = first.path().join("irl-naive-on-naive.manifest");
    let output = Command::new(env!("CARGO_BIN_EXE_dualsys"))
        .arg("replay")
        .arg(&manifest)
        .arg("--out")
        .arg(second.path())
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let outputs: Vec<String> = read(first.path(), "irl-naive-on-naive.manifest")
        .lines()
        .filter_map(|l| l.strip_prefix("output="))
        .map(String::from)
        .collect();
    assert_eq!(outputs.len(), 8);
    for name in outputs {
        assert_eq!(
            read(first.path(), &name),
            read(second.path(), &name),
            "{name}"
        );
    }
}

#[test]
fn thresholds_match_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["experiment", "thresholds"], dir.path());
    let csv = read(dir.path(), "thresholds.csv");
    let predicted = column(&csv, "predicted");
    assert!(!predicted.is_empty());
    assert_eq!(predicted, column(&csv, "naive"));
    assert_eq!(predicted, column(&csv, "soph"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let output = Command::new(env!("CARGO_BIN_EXE_dualsys"))
        .args(["plan", "--mode", "system1"])
        .env("DUALSYS_OUT", &target)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(target.join("plan-system1.csv").exists());
}
