use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: [&str; 4] = [
    "fock_cutoff=6",
    "grid.t_end_us=0.02",
    "grid.records=40",
    "grid.step_refinement=4",
];

fn spinamp(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinamp"));
    cmd.args(args).env_remove("SPINAMP_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn with_overrides<'a>(mut args: Vec<&'a str>, overrides: &[&'a str]) -> Vec<&'a str> {
    for o in overrides {
        args.push("--override");
        args.push(o);
    }
    args
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn figure2_writes_csv_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("f2.csv");
    let out_s = out.to_str().unwrap();
    let o = spinamp(&with_overrides(vec!["figure2", "--out", out_s], &QUICK), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t_us,n_num_e,n_ana_e,n_num_g,n_ana_g");
    assert_eq!(lines.count(), 41);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f2.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "figure2");
    assert_eq!(meta["fock_cutoff"], 6);
    assert_eq!(meta["config"]["grid"]["t_end_us"], 0.02);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let extra = ["gamma_sweep_mhz=[10, 25]", QUICK[0], QUICK[1], QUICK[2], QUICK[3]];
    let run = |p: &Path, threads: &str| {
        let o = spinamp(
            &with_overrides(vec!["figure3", "--out", p.to_str().unwrap()], &extra),
            &[("SPINAMP_THREADS", threads)],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(&a, "1");
    run(&b, "2");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_with_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"experiment": "spectrum", "fock_cutoff": 6, "params": {"g_mhz": 50.0}}"#,
    );
    let out = dir.path().join("s.csv");
    let o = spinamp(
        &[
            "spectrum",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--override",
            "fock_cutoff=9",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    let meta = std::fs::read_to_string(dir.path().join("s.csv.meta.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(meta["config"]["params"]["g_mhz"], 50.0);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let out_s = out.to_str().unwrap();

    let cfg = write(dir.path(), "bad.json", r#"{"fock_cutoff": 6, "fock_cutof": 7}"#);
    let o = spinamp(&["spectrum", "--config", &cfg, "--out", out_s], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fock_cutof"), "{}", stderr(&o));

    let o = spinamp(&["spectrum", "--out", out_s, "--override", "params.nope=1"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = spinamp(&["spectrum", "--out", out_s, "--override", "params.gamma_mhz=-3"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = spinamp(&["spectrum", "--out", out_s], &[("SPINAMP_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));

    let o = spinamp(&["spectrum"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = spinamp(&["frobnicate", "--out", out_s], &[]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write(dir.path(), "other.json", r#"{"experiment": "figure3"}"#);
    let o = spinamp(&["spectrum", "--config", &cfg, "--out", out_s], &[]);
    assert_eq!(o.status.code(), Some(2));

    assert!(!out.exists());
}

#[test]
fn failed_convergence_check_exits_1_with_suggestion() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("f2.csv");
    let o = spinamp(
        &with_overrides(
            vec!["figure2", "--out", out.to_str().unwrap()],
            &["fock_cutoff=3", QUICK[1], QUICK[2], QUICK[3]],
        ),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fock_cutoff="), "{}", stderr(&o));
}

#[test]
fn validate_names_the_violated_step_guard() {
    let o = spinamp(
        &["validate", "--override", "grid.n_steps=10", "--override", "grid.records=10"],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(
        text.lines().any(|l| l.starts_with("FAIL") && l.contains("timestep_guard")),
        "{text}"
    );
}

#[test]
fn validate_flags_a_small_cutoff() {
    let o = spinamp(&["validate", "--override", "fock_cutoff=3"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(
        text.lines().any(|l| l.starts_with("FAIL") && l.contains("cutoff_convergence")),
        "{text}"
    );
}

#[test]
fn validate_passes_with_defaults_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let o = spinamp(&["validate", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(dir.path().join("report.json.meta.json").exists());
}
