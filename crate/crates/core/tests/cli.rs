use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use cmgym::harness::{load_results_csv, RESULTS_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_cmgym");

const TINY: &str = r#"
seed = 2
fleet_size = 8
duration_s = 3600.0
[synthetic.ring]
count = 4
radius_m = 6000.0
[harness]
steps = 90
rolling_window = 5
"#;

fn write_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p
}

fn cmgym(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn run_writes_transcript_metrics_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let o = cmgym(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "energy.e_max=150"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let transcript = std::fs::read_to_string(out.join("transcript.csv")).unwrap();
    assert!(transcript.starts_with("t,agent_id,action"));
    assert!(out.join("metrics.json").exists());
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER);
    let rows = load_results_csv(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].e_max_kwh, 150.0);

    // the same invocation reproduces the transcript byte for byte
    let again = dir.path().join("again");
    let o = cmgym(&["run", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap(), "energy.e_max=150"]);
    assert!(o.status.success());
    assert_eq!(transcript, std::fs::read_to_string(again.join("transcript.csv")).unwrap());
}

#[test]
fn sweep_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let res = dir.path().join("results.csv");
    let o = cmgym(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "energy.e_max=50,250",
        "--axis",
        "nav.p_nav=0,1e-5",
        "--seeds",
        "2",
        "--out",
        res.to_str().unwrap(),
        "--set",
        "env.record_transcript=false",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = load_results_csv(&res).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.windows(2).all(|w| (w[0].e_max_kwh, w[0].p_nav) <= (w[1].e_max_kwh, w[1].p_nav)));

    let figs = dir.path().join("figs");
    let o = cmgym(&["plot", "--in", res.to_str().unwrap(), "--out", figs.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(figs.join("max_p_dest.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = cmgym(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "energy.bogus=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    let o = cmgym(&["run", "--config", "/nonexistent.toml"]);
    assert!(!o.status.success());
    let o = cmgym(&["sweep", "--config", cfg.to_str().unwrap(), "--axis", "oops"]);
    assert!(!o.status.success());
}

#[test]
fn train_saves_a_loadable_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let table = dir.path().join("q.json");
    let curve = dir.path().join("curve.csv");
    let o = cmgym(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "harness.q.episodes=3",
        "harness.q.steps=30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&curve).unwrap().lines().count(), 4);
    let out = dir.path().join("qrun");
    let o = cmgym(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "harness.policy=tabular_q",
        &format!("harness.q_table={}", table.display()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn serve_stdio_session() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let mut child = Command::new(BIN)
        .args(["serve", "--stdio", "--config", cfg.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut ask = |line: &str| -> serde_json::Value {
        writeln!(stdin, "{line}").unwrap();
        stdin.flush().unwrap();
        let mut reply = String::new();
        stdout.read_line(&mut reply).unwrap();
        serde_json::from_str(&reply).unwrap()
    };
    let hello = ask(r#"{"id":1,"type":"HELLO","version":"cmgym/1"}"#);
    assert_eq!(hello["type"], "HELLO");
    assert!(hello["observation_len"].as_u64().unwrap() > 0);
    assert_eq!(ask(r#"{"id":2,"type":"STEP","actions":{}}"#)["code"], "NOT_RESET");
    let obs = ask(r#"{"id":3,"type":"RESET","seed":4}"#);
    assert_eq!(obs["type"], "OBS");
    let agent = obs["observations"].as_object().unwrap().keys().next().unwrap().clone();
    let bad = ask(&format!(r#"{{"id":4,"type":"STEP","actions":{{"{agent}":17}}}}"#));
    assert_eq!(bad["code"], "BAD_ACTION");
    let ok = ask(&format!(r#"{{"id":5,"type":"STEP","actions":{{"{agent}":1}}}}"#));
    assert_eq!(ok["type"], "STEP_RESULT");
    assert_eq!(ok["agents"][agent.as_str()]["info"]["action"], "HEADING_HOLD");
    assert_eq!(ask(r#"{"id":5,"type":"CLOSE"}"#)["code"], "ID_NOT_INCREASING");
    assert_eq!(ask(r#"{"id":6,"type":"CLOSE"}"#)["type"], "BYE");
    drop(stdin);
    assert!(child.wait().unwrap().success());
}
