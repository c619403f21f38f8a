//! End-to-end checks of the `groupcover` binary: subcommands, flags,
//! environment overrides and exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_groupcover"))
}

const CONFIG: &str = "pool_size = 3\nuser_count = 10\nsensitive_topics = 3\nsteps = 5\n\
                      delta = 1.0\nbackground_pairs = 6\nseed = 11\ninput_features = 20\n\
                      output_features = 20\npairs_per_topic = 15\n";

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_produces_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.cfg", CONFIG);
    let out = dir.path().join("out");
    let output = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("final step 5"));
    assert!(out.join("metrics.csv").exists());
}

#[test]
fn invalid_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.cfg", "user_count = 9999\n");
    let output = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "{output:?}");
}

#[test]
fn missing_metrics_dir_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args([
            "plotdata",
            dir.path().join("nowhere").to_str().unwrap(),
            "utility-loss",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn unknown_figure_exits_with_code_one_and_lists_ids() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cell_x.csv", "run_id,seed,step\n");
    let output = bin()
        .args(["plotdata", dir.path().to_str().unwrap(), "not-a-figure"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("selection-convergence"), "{stderr}");
}

#[test]
fn seed_flag_overrides_environment_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.cfg", CONFIG);
    let out = dir.path().join("out");
    let output = bin()
        .args(["run", config.to_str().unwrap()])
        .args(["--seed", "55", "--out", out.to_str().unwrap()])
        .env("GROUPCOVER_SEED", "77")
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.contains("# seed = 55"), "flag did not win over env");

    let output = bin()
        .args(["run", config.to_str().unwrap()])
        .env("GROUPCOVER_SEED", "77")
        .env("GROUPCOVER_OUT", out.to_str().unwrap())
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.contains("# seed = 77"), "env did not win over config");
}

#[test]
fn sweep_then_plotdata_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.cfg",
        &format!("{CONFIG}axis.noise_ratio_pct = 0,100\nrepetitions = 2\n"),
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["sweep", spec.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap(), "--workers", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(
        stdout.contains("sweep: 2 cells x 2 repetitions = 4 runs"),
        "{stdout}"
    );
    assert!(out.join("aggregate.csv").exists());

    let output = bin()
        .args(["plotdata", out.to_str().unwrap(), "noise-vs-pd"])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let plot = std::fs::read_to_string(out.join("plot_noise-vs-pd.csv")).unwrap();
    assert!(plot.lines().next().unwrap() == "x,series,mean,stderr");
    assert!(plot.contains("noise-100pct"));
}
