use std::process::{Command, Output};

fn nullframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullframe"))
        .args(args)
        .env_remove("NULLFRAME_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_includes_builtins() {
    let o = nullframe(&["list-scenarios"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["pp-wave", "minkowski-null-plane", "minkowski-light-cone", "gi-violation"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn describe_pp_wave_and_unknown() {
    let o = nullframe(&["describe", "pp-wave"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("covariantly constant"));
    assert_eq!(nullframe(&["describe", "unknown"]).status.code(), Some(2));
}

#[test]
fn null_plane_defaults_pass() {
    let o = nullframe(&["run", "minkowski-null-plane", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: PASS"));
}

#[test]
fn pp_wave_all_checks_pass() {
    let o = nullframe(&["run", "pp-wave", "--check=all", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for check in ["nabla_beta", "xi_parallel", "bianchi", "ricci_shape"] {
        assert!(text.contains(check));
    }
}

#[test]
fn gi_violation_exits_one_and_names_chi() {
    let o = nullframe(&["run", "gi-violation", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("chi_admissibility") && text.contains("FAIL") && text.contains("χ residual"));
}

#[test]
fn json_report_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = nullframe(&[
            "run",
            "flat-random-z",
            "--samples",
            "6",
            "--seed",
            "9",
            "--format",
            "json",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let report = nullframe::scenario::Report::from_json(&text).unwrap();
    assert_eq!(report.seed, 9);
    assert_eq!(report.points.len(), 6);
    assert!(report.verdicts.iter().all(|v| v.passed));
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema_version"], 1);
}

#[test]
fn seed_environment_variable() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_nullframe"));
        c.args(["run", "flat-random-z", "--samples", "3", "--format", "json"]).args(extra);
        match env {
            Some(v) => c.env("NULLFRAME_SEED", v),
            None => c.env_remove("NULLFRAME_SEED"),
        };
        let o = c.output().unwrap();
        nullframe::scenario::Report::from_json(&String::from_utf8_lossy(&o.stdout)).unwrap()
    };
    assert_eq!(run(Some("17"), &[]).seed, 17);
    assert_eq!(run(Some("17"), &["--seed", "5"]).seed, 5);
    assert_eq!(run(None, &[]).seed, nullframe::scenario::DEFAULT_SEED);
    let o = Command::new(env!("CARGO_BIN_EXE_nullframe"))
        .args(["run", "pp-wave"])
        .env("NULLFRAME_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scenario_file_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("s.json");
    let s = nullframe::scenario::builtin("curved-beta", 1).unwrap();
    std::fs::write(&good, s.to_json()).unwrap();
    let o = nullframe(&["run", good.to_str().unwrap(), "--samples", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(nullframe(&["run", bad.to_str().unwrap()]).status.code(), Some(2));

    let mut invalid = s.clone();
    invalid.samples = 0;
    std::fs::write(&bad, serde_json::to_string(&invalid).unwrap()).unwrap();
    assert_eq!(nullframe(&["run", bad.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(nullframe(&["run", "pp-wave", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(nullframe(&["run", "pp-wave", "--check", "obstruction,nope"]).status.code(), Some(2));
    assert_eq!(nullframe(&["run", "flat-random-z", "--check", "obstruction"]).status.code(), Some(2));
    assert_eq!(nullframe(&["run", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn tolerance_scale_loosens_bounds() {
    let o = nullframe(&["run", "gi-violation", "--samples", "5", "--tol-scale", "1e9", "--format", "json"]);
    let r = nullframe::scenario::Report::from_json(&stdout(&o)).unwrap();
    let v = r.verdicts.iter().find(|v| v.check.name() == "chi_admissibility").unwrap();
    assert_eq!(v.tolerance, 10.0);
    assert_eq!(nullframe(&["run", "pp-wave", "--tol-scale", "-1"]).status.code(), Some(2));
}
