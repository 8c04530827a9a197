use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const AB_PRIOR: &str = r#"version = 1
d = 2
T = 1
K = 1000

[actions]
kind = "singletons"

[[scenario]]
weight = 0.5
losses = [0, 1000]

[[scenario]]
weight = 0.5
losses = [1000, 0]
"#;

fn tslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tslab")).args(args).current_dir(dir).env_remove("TSLAB_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exact_on_two_expert_prior() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ab.toml"), AB_PRIOR).unwrap();
    let o = tslab(dir.path(), &["exact", "--prior", "ab.toml", "--feedback", "full", "--policy", "ts", "--out", "res"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("E[R_T]     0.500000000"));
    let json = fs::read_to_string(dir.path().join("res/report.json")).unwrap();
    assert!(json.contains("\"expected_regret\": 0.5"));

    let again = tslab(dir.path(), &["report", "res"]);
    assert_eq!(again.status.code(), Some(0));
    assert!(stdout(&again).contains("E[R_T]     0.500000000"));
}

#[test]
fn scenario_then_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let o = tslab(dir.path(), &["scenario", "interval-expert", "--d", "4", "--m", "2", "-T", "3", "--seed", "1", "-o", "p.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let config = r#"
mode = "monte-carlo"
trials = 500

[prior]
file = "p.toml"

[feedback]
kind = "semi-bandit"
"#;
    fs::write(dir.path().join("run.toml"), config).unwrap();
    for out in ["a", "b"] {
        let o = tslab(dir.path(), &["run", "--config", "run.toml", "--seed", "9", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["report.json", "rounds.csv", "trials.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tslab(dir.path(), &["run", "--config", "missing.toml"]).status.code(), Some(1));
    assert_eq!(tslab(dir.path(), &["frobnicate"]).status.code(), Some(1));
    fs::write(dir.path().join("bad.toml"), "mode = \"exact\"\n[prior]\ngenerator = \"nohighprob\"\nT = 5\n[feedback]\nkind = \"full\"\n").unwrap();
    assert_eq!(tslab(dir.path(), &["run", "--config", "bad.toml"]).status.code(), Some(1));
    fs::write(
        dir.path().join("big.toml"),
        "mode = \"exact\"\n[prior]\ngenerator = \"tdependent\"\nd = 6\nlstar = 4\nT = 64\n[feedback]\nkind = \"semi-bandit\"\n",
    )
    .unwrap();
    let o = tslab(dir.path(), &["run", "--config", "big.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("monte-carlo"));
}
