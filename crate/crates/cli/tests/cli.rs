use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn glory(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glory"))
        .args(args)
        .env("GLORY_OUT", out_root)
        .output()
        .expect("spawn glory")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL: &[&str] = &["--n1", "4", "--n2", "4", "--dt", "0.01"];

#[test]
fn explicit_solution_decay_rate() {
    let root = tempfile::tempdir().unwrap();
    let args = ["run", "explicit-solution", "--mu", "1", "--alpha", "0", "--t-end", "3", "--n1", "4", "--n2", "4", "--dt", "0.002"];
    let o = glory(&args, root.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = report(&root.path().join("explicit-solution"));
    assert_eq!(r["schema_version"], 1);
    let rate = r["members"][0]["growth_fit"]["rate"].as_f64().unwrap();
    assert!((rate + 1.0).abs() < 1e-3, "{rate}");
}

#[test]
fn negative_mu_is_a_config_error() {
    let root = tempfile::tempdir().unwrap();
    let o = glory(&["run", "explicit-solution", "--mu", "-1"], root.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu must be positive"));
}

#[test]
fn growup_reports_rate() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("g");
    let o = glory(
        &["run", "growup", "--alpha", "1.5", "--mu", "1", "--n1", "2", "--n2", "2", "--dt", "0.002", "-o", out.to_str().unwrap()],
        root.path(),
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = report(&out);
    let rate = r["members"][0]["growth_fit"]["rate"].as_f64().unwrap();
    assert!((rate - 0.5).abs() < 1e-3);
    assert_eq!(r["members"][0]["status"], "diverged");
}

#[test]
fn malformed_config_names_line_and_field() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("bad.toml");
    fs::write(&cfg, "scenario = \"growup\"\nalpha = \"lots\"\n").unwrap();
    let o = glory(&["run", cfg.to_str().unwrap()], root.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("alpha"), "{err}");
    let o = glory(&["run", "no-such-scenario"], root.path());
    assert_eq!(code(&o), 1);
    let o = glory(&["run", "explicit-solution", "--bogus"], root.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn failing_check_exits_2_and_divergence_exits_3() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("tight.toml");
    fs::write(
        &cfg,
        "scenario = \"explicit-solution\"\nalpha = 0.5\nn1 = 2\nn2 = 2\ndt = 0.1\nt_end = 2.0\ndrift_tol = 1e-12\n",
    )
    .unwrap();
    let o = glory(&["run", cfg.to_str().unwrap()], root.path());
    assert_eq!(code(&o), 2, "{}", stdout(&o));

    let mut args = vec!["run", "oracle-crosscheck", "--alpha", "40", "--beta", "0", "--t-end", "2"];
    args.extend_from_slice(SMALL);
    let o = glory(&args, root.path());
    assert_eq!(code(&o), 3, "{}", stdout(&o));
}

#[test]
fn verify_default_vacuous_and_injected() {
    let root = tempfile::tempdir().unwrap();
    let o = glory(&["verify", "--n1", "6", "--n2", "6", "--count", "50", "--lady-samples", "500"], root.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("skew-b-u-w"));

    let o = glory(&["verify", "--count", "0"], root.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("vacuous"));

    let o = glory(&["verify", "--n1", "4", "--n2", "4", "--count", "5", "--inject-bug"], root.path());
    assert_eq!(code(&o), 2);
    let table = stdout(&o);
    let line = table.lines().find(|l| l.starts_with("skew-b-u-w")).unwrap();
    assert!(line.ends_with("NO"), "{line}");
}

#[test]
fn split_run_resume_matches() {
    let root = tempfile::tempdir().unwrap();
    let whole = root.path().join("whole");
    let split = root.path().join("split");
    let base = ["run", "explicit-solution", "--alpha", "1", "--beta", "0.2", "--n1", "4", "--n2", "4", "--dt", "0.01", "--t-end", "10"];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["-o", whole.to_str().unwrap()]);
    assert_eq!(code(&glory(&a, root.path())), 0);

    let mut b: Vec<&str> = base.to_vec();
    b.extend(["-o", split.to_str().unwrap(), "--stop-at", "5"]);
    let o = glory(&b, root.path());
    assert_eq!(code(&o), 0);
    assert!(split.join("checkpoint.json").exists());
    let o = glory(&["resume", split.join("checkpoint.json").to_str().unwrap()], root.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(
        fs::read(whole.join("diagnostics.csv")).unwrap(),
        fs::read(split.join("diagnostics.csv")).unwrap()
    );
    let o = glory(&["resume", split.to_str().unwrap()], root.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("already complete"));
}

#[test]
fn resume_errors_exit_1() {
    let root = tempfile::tempdir().unwrap();
    let o = glory(&["resume", root.path().join("missing.json").to_str().unwrap()], root.path());
    assert_eq!(code(&o), 1);
    let ck = root.path().join("checkpoint.json");
    fs::write(&ck, r#"{"format":"glory-checkpoint","version":2}"#).unwrap();
    let o = glory(&["resume", ck.to_str().unwrap()], root.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("version"));
}

#[test]
fn shipped_scenario_files_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = glory_core::scenarios::ScenarioConfig::from_file(&path).unwrap();
            glory_core::scenarios::Suite::from_config(&cfg).unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
}
