use std::path::Path;
use std::process::{Command, Output};

use stochconv_cli::config::SEED_ENV;
use stochconv_cli::ExperimentReport;

fn stochconv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochconv"))
        .args(args)
        .current_dir(dir)
        .env_remove(SEED_ENV)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn passing_preset_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = stochconv(&["run", "--preset", "embedding-check", "--out", "emb"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS")), "{stdout}");
    let emb = dir.path().join("emb");
    for file in ["report.json", "config.toml", "timing.json", "seminorm.csv", "holder.csv", "plots/campanato-scales.csv"] {
        assert!(emb.join(file).exists(), "{file}");
    }
    assert!(!emb.join("FAILED").exists());
    let report = ExperimentReport::load(&emb.join("report.json")).unwrap();
    assert!(report.pass);
}

#[test]
fn failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "strict.toml",
        "experiment = \"embedding-check\"\n[tolerances]\nexponent = 1e-9\n",
    );
    let out = stochconv(&["run", "--config", &cfg, "--out", "strict"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn theta_one_is_an_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "theta.toml",
        "experiment = \"embedding-check\"\n[seminorm]\ntheta = 1.0\n",
    );
    let out = stochconv(&["run", "--config", &cfg, "--out", "theta"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    assert!(!dir.path().join("theta/report.json").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", "experiment = \"kernel-audit\"\nsede = 1\n");
    assert_eq!(code(&stochconv(&["run", "--config", &typo], dir.path())), 2);
    assert_eq!(code(&stochconv(&["run", "--config", "missing.toml"], dir.path())), 2);
    assert_eq!(code(&stochconv(&["run"], dir.path())), 2);
    assert_eq!(code(&stochconv(&["run", "--preset", "nonsense"], dir.path())), 2);
    assert_eq!(
        code(&stochconv(&["simulate", "--preset", "kernel-audit", "--out", "x"], dir.path())),
        2
    );
    assert_eq!(code(&stochconv(&["moments", "--preset", "brownian-regularity", "--out", "none"], dir.path())), 2);
    assert_eq!(code(&stochconv(&["emit-plots", "--out", "nowhere"], dir.path())), 2);
}

#[test]
fn numerical_failure_exits_three_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "coarse.toml",
        "experiment = \"kernel-audit\"\n[grid]\npoints_per_axis = 64\n",
    );
    std::fs::create_dir_all(dir.path().join("coarse")).unwrap();
    let out = stochconv(&["run", "--config", &cfg, "--out", "coarse"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `kernel`"));
    let marker = std::fs::read_to_string(dir.path().join("coarse/FAILED")).unwrap();
    assert!(marker.starts_with("stage: kernel"), "{marker}");
    assert!(dir.path().join("coarse/report.partial.json").exists());
    assert!(!dir.path().join("coarse/report.json").exists());
}

#[test]
fn seed_flag_beats_file_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let seeded = write(dir.path(), "seeded.toml", "experiment = \"embedding-check\"\nseed = 5\n");
    let plain = write(dir.path(), "plain.toml", "experiment = \"embedding-check\"\n");
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_stochconv"));
        cmd.args(args).current_dir(dir.path()).env_remove(SEED_ENV);
        if let Some(v) = env {
            cmd.env(SEED_ENV, v);
        }
        let out = cmd.output().unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let out_dir = args[args.iter().position(|a| *a == "--out").unwrap() + 1];
        ExperimentReport::load(&dir.path().join(out_dir).join("report.json"))
            .unwrap()
            .provenance
            .seed
    };
    assert_eq!(run(&["run", "--config", &plain, "--out", "a"], None), 0);
    assert_eq!(run(&["run", "--config", &plain, "--out", "b"], Some("8")), 8);
    assert_eq!(run(&["run", "--config", &seeded, "--out", "c"], Some("8")), 5);
    assert_eq!(run(&["run", "--config", &seeded, "--seed", "3", "--out", "d"], Some("8")), 3);
    assert_eq!(run(&["run", "--preset", "embedding-check", "--out", "e"], Some("21")), 21);
}

#[test]
fn staged_subcommands_reuse_the_saved_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let args = |cmd: &'static str| [cmd, "--preset", "brownian-regularity", "--seed", "4", "--out", "b", "--threads", "1"];
    for cmd in ["simulate", "moments", "seminorm", "run"] {
        let out = stochconv(&args(cmd), dir.path());
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let b = dir.path().join("b");
    assert!(b.join("ensemble.json").exists() && b.join("ensemble.bin").exists());
    let staged = ExperimentReport::load(&b.join("moments.json")).unwrap();
    let full = ExperimentReport::load(&b.join("report.json")).unwrap();
    assert_eq!(staged.stages.moments, full.stages.moments);
    assert_eq!(staged.stages.oracle, full.stages.oracle);
    let other_seed = stochconv(
        &["moments", "--preset", "brownian-regularity", "--seed", "5", "--out", "b"],
        dir.path(),
    );
    assert_eq!(code(&other_seed), 2);
}

#[test]
fn emit_plots_rebuilds_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&stochconv(&["run", "--preset", "embedding-check", "--out", "e"], dir.path())), 0);
    std::fs::remove_dir_all(dir.path().join("e/plots")).unwrap();
    let out = stochconv(&["emit-plots", "--out", "e"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    assert!(dir.path().join("e/plots/holder-scales.csv").exists());
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = stochconv(&["--help"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["audit-kernel", "simulate", "moments", "seminorm", "run", "emit-plots"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
