use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn macres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macres"))
        .args(args)
        .env("RESOLVE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn out_arg(dir: &TempDir, sub: &str) -> String {
    dir.path().join(sub).to_string_lossy().into_owned()
}

#[test]
fn region_reports_case_and_three_constraints() {
    let dir = TempDir::new().unwrap();
    let out = macres(&["region", "--channel", "builtin:adder", "--out-dir", &out_arg(&dir, "a")]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("a/region.csv"));
    assert!(csv.contains("case,case1,,1"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("constraint,")).count(), 3);

    let out = macres(&["region", "--channel", "builtin:parallel", "--out-dir", &out_arg(&dir, "p")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(read(&dir.path().join("p/region.csv")).contains("case,case2,,2"));
}

#[test]
fn missing_row_names_the_row() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("ch.json");
    std::fs::write(&spec, r#"{"inputs":[2,2],"output":3,"transition":[[1,0,0],[0,1,0],[0,1,0]]}"#).unwrap();
    let out = macres(&["region", "--channel", spec.to_str().unwrap(), "--out-dir", &out_arg(&dir, "r")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3 is missing"), "{err}");
}

#[test]
fn infeasible_target_cites_interval() {
    let dir = TempDir::new().unwrap();
    let out = macres(&["build", "--channel", "builtin:adder", "--target-r1", "1.5", "--out-dir", &out_arg(&dir, "b")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[I(X;Z), I(X;Z|Y)] = [0.5, 1]"), "{err}");
}

#[test]
fn endpoint_target_gives_zero_split() {
    let dir = TempDir::new().unwrap();
    let out = macres(&[
        "build", "--channel", "builtin:adder", "--target-r1", "0.5", "--idealized", "0,0", "--out-dir",
        &out_arg(&dir, "b"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let desc: serde_json::Value = serde_json::from_str(&read(&dir.path().join("b/descriptor.json"))).unwrap();
    assert_eq!(desc["scheme"]["split"]["eps"], 0.0);
}

#[test]
fn clamped_plan_gets_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let out = macres(&["build", "--channel", "builtin:adder", "--n", "8", "--out-dir", &out_arg(&dir, "b")]);
    assert_eq!(out.status.code(), Some(3));
    let desc: serde_json::Value = serde_json::from_str(&read(&dir.path().join("b/descriptor.json"))).unwrap();
    assert_eq!(desc["plan"]["asymptotic_only"], true);
}

#[test]
fn rebuild_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = |sub: &str| {
        vec![
            "build".to_string(),
            "--channel".into(),
            "builtin:xor".into(),
            "--idealized".into(),
            "0,0".into(),
            "--seed".into(),
            "9".into(),
            "--out-dir".into(),
            out_arg(&dir, sub),
        ]
    };
    for sub in ["a", "b"] {
        let a = args(sub);
        let out = macres(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(dir.path().join("a/descriptor.json")).unwrap(),
        std::fs::read(dir.path().join("b/descriptor.json")).unwrap()
    );
}

#[test]
fn small_simulation_is_exhaustive() {
    let dir = TempDir::new().unwrap();
    let out = macres(&[
        "simulate", "--channel", "builtin:adder", "--n", "4", "--k", "1", "--idealized", "0,0", "--out-dir",
        &out_arg(&dir, "s"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("s/report.csv"));
    let row = csv.lines().find(|l| l.starts_with("joint_tv,")).expect("exact row");
    assert!(row.ends_with(",,,,exhaustive"), "{row}");
}

#[test]
fn descriptor_replay_matches_inline_build() {
    let dir = TempDir::new().unwrap();
    let common = ["--channel", "builtin:adder", "--n", "8", "--k", "2", "--idealized", "0,0", "--seed", "4"];
    let b_dir = out_arg(&dir, "b");
    let mut build = vec!["build"];
    build.extend(common);
    build.extend(["--out-dir", b_dir.as_str()]);
    assert_eq!(macres(&build).status.code(), Some(0));

    let inline_dir = out_arg(&dir, "inline");
    let mut inline = vec!["simulate", "--trials", "2000"];
    inline.extend(common);
    inline.extend(["--out-dir", inline_dir.as_str()]);
    assert_eq!(macres(&inline).status.code(), Some(0));

    let replay_dir = out_arg(&dir, "replay");
    let desc = dir.path().join("b/descriptor.json");
    let replay = [
        "simulate", "--descriptor", desc.to_str().unwrap(), "--seed", "4", "--trials", "2000", "--out-dir",
        replay_dir.as_str(),
    ];
    assert_eq!(macres(&replay).status.code(), Some(0));
    assert_eq!(
        read(&dir.path().join("inline/report.json")),
        read(&dir.path().join("replay/report.json"))
    );
}

#[test]
fn reports_identical_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (sub, workers) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out_dir = out_arg(&dir, sub);
        let out = macres(&[
            "--workers", workers, "simulate", "--channel", "builtin:adder", "--n", "8", "--k", "3", "--idealized",
            "0,0", "--trials", "3000", "--seed", "11", "--out-dir", &out_dir,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((read(&dir.path().join(sub).join("report.json")), read(&dir.path().join(sub).join("report.csv"))));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn too_few_trials_is_a_budget_error() {
    let dir = TempDir::new().unwrap();
    let out = macres(&[
        "simulate", "--channel", "builtin:adder", "--n", "8", "--k", "2", "--idealized", "0,0", "--trials", "10",
        "--out-dir", &out_arg(&dir, "s"),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 1000"));
}

#[test]
fn sweep_emits_one_csv() {
    let dir = TempDir::new().unwrap();
    let out = macres(&[
        "sweep", "--channel", "builtin:adder", "--n-grid", "2,4", "--k-grid", "1", "--eps-grid", "0,1", "--idealized",
        "0,0", "--out-dir", &out_arg(&dir, "w"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("w/sweep.csv"));
    for prefix in ["2,1,0,", "2,1,1,", "4,1,0,", "4,1,1,"] {
        assert!(csv.lines().any(|l| l.starts_with(prefix) && l.contains(",joint_tv,")), "{prefix}");
    }
}
