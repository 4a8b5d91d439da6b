use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use fairgsa_cli::external::{ExternalError, ExternalModel, ExternalModelProtocol};
use fairgsa_cli::run;
use ndarray::array;
use serde_json::Value;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["fairgsa"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn synthetic_experiment_one_json() {
    let (code, out, _) = run_cli(&[
        "synthetic",
        "--experiment",
        "1",
        "--n",
        "100000",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let x = &v["rows"][0];
    assert_eq!(x["variable"], "X");
    let theory: Vec<f64> = ["sob", "sob_total", "sob_ind", "sob_total_ind"]
        .iter()
        .map(|k| (x["theory"][k].as_f64().unwrap() * 100.0).round() / 100.0)
        .collect();
    assert_eq!(theory, vec![1.0, 1.0, 0.75, 0.75]);
    assert_eq!(v["seeds"]["monte_carlo"], 7);
    assert_eq!(x["estimate"]["sob"]["method"], "clt");
    assert_eq!(x["estimate"]["sob"]["n"], 100000);
}

#[test]
fn disparate_impact_audit() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "di.csv", "s,f\n0,0\n0,1\n1,1\n1,1\n");
    let (code, out, _) = run_cli(&[
        "audit",
        &data,
        "--sensitive",
        "s",
        "--prediction",
        "f",
        "--measure",
        "statistical_parity",
        "--epsilon",
        "0.02",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let verdict = &v["verdicts"][0];
    let var_f = 0.1875;
    assert!((verdict["index"]["value"].as_f64().unwrap() - 0.0625 / var_f).abs() < 1e-15);
    assert!(
        (verdict["disparate_impact"]["identity_index"]
            .as_f64()
            .unwrap()
            - 0.0625 / var_f)
            .abs()
            < 1e-15
    );
    assert_eq!(v["dataset"]["rows"], 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "di.csv", "s,f\n0,0\n0,1\n1,1\n1,1\n");
    let (code, _, err) = run_cli(&["audit", &data, "--prediction", "f"]);
    assert_eq!(code, 1);
    assert!(err.contains("schema error"), "{err}");

    let (code, _, _) = run_cli(&[
        "audit",
        "/nonexistent.csv",
        "--sensitive",
        "s",
        "--prediction",
        "f",
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["synthetic", "--experiment", "9"]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["no-such-command"]);
    assert_eq!(code, 1);
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("audit"));

    let bad = write(dir.path(), "bad.csv", "s,f\n0,0\n1,oops\n");
    let (code, _, err) = run_cli(&["audit", &bad, "--sensitive", "s", "--prediction", "f"]);
    assert_eq!(code, 1);
    assert!(err.contains("row 2"), "{err}");

    // a constant sensitive column passes validation but breaks the rank index
    let flat = write(
        dir.path(),
        "flat.csv",
        "s,x,f\n1,0,0\n1,1,1\n1,2,0\n1,3,1\n",
    );
    let (code, _, err) = run_cli(&[
        "cvm",
        &flat,
        "--prediction",
        "f",
        "--features",
        "x",
        "--sensitive",
        "s",
        "--replicates",
        "100",
    ]);
    assert_eq!(code, 0, "{err}");

    let (code, _, err) = run_cli(&["sobol", "--features", "x1", "--linear", "1,1"]);
    assert_eq!(code, 1, "{err}");

    let spec = write(
        dir.path(),
        "m.json",
        r#"{"mean":[0,0],"covariance":[[1,0],[0,1]]}"#,
    );
    let (code, _, err) = run_cli(&[
        "sobol",
        "--model-spec",
        &spec,
        "--features",
        "x1",
        "--linear",
        "0,0",
        "--n-mc",
        "100",
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn binary_exit_status() {
    let status = Command::new(env!("CARGO_BIN_EXE_fairgsa"))
        .args(["audit", "missing.csv"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("missing --sensitive"));
}

#[test]
fn byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,s,f,y\n");
    for i in 0..300 {
        let x = ((i * 37) % 101) as f64 / 10.0;
        let s = (i % 3) as f64;
        let y = ((i / 3) % 2) as f64;
        text.push_str(&format!("{x},{s},{},{y}\n", x * 0.2 + s));
    }
    let data = write(dir.path(), "d.csv", &text);
    let args = [
        "audit",
        &data,
        "--features",
        "x",
        "--sensitive",
        "s",
        "--prediction",
        "f",
        "--target",
        "y",
        "--linear",
        "0.2,1",
        "--n-mc",
        "2000",
        "--seed",
        "5",
    ];
    let (c1, a, e1) = run_cli(&args);
    let (c2, b, _) = run_cli(&args);
    assert_eq!((c1, c2), (0, 0), "{e1}");
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    let kinds: Vec<&str> = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["measure"]["kind"].as_str().unwrap())
        .collect();
    assert_eq!(
        kinds,
        [
            "statistical_parity",
            "avoiding_disparate_treatment",
            "equality_of_odds",
            "avoiding_disparate_mistreatment"
        ]
    );
    assert_eq!(v["quartets"][0]["quartet"]["seed"], 5);
    assert!(!v["cvm"].as_array().unwrap().is_empty());
    assert!(!v["causal"].as_array().unwrap().is_empty());

    let (code, csv, _) = run_cli(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(code, 0);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("measure,target,sensitive,index,value"));
}

#[test]
fn output_file_and_graph_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let (code, _, _) = run_cli(&[
        "synthetic",
        "--graph",
        "c",
        "--n",
        "20",
        "--seed",
        "3",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,s,yhat\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn cvm_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,b,y\n");
    for i in 0..400 {
        let a = ((i * 17) % 97) as f64;
        let b = ((i * 29) % 89) as f64;
        text.push_str(&format!("{a},{b},{}\n", a + 0.01 * b));
    }
    let data = write(dir.path(), "c.csv", &text);
    let (code, out, err) = run_cli(&[
        "cvm",
        &data,
        "--prediction",
        "y",
        "--features",
        "a,b",
        "--replicates",
        "100",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let cvm = v["cvm"].as_array().unwrap();
    assert_eq!(cvm.len(), 4);
    assert_eq!(cvm[0]["estimate"]["kind"], "classical");
    assert!(cvm[0]["estimate"]["value"].as_f64().unwrap() > 0.8);
    assert_eq!(cvm[0]["estimate"]["ci"]["method"], "bootstrap");
}

#[test]
fn sobol_command_with_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "m.json",
        r#"{"mean":[0,0],"covariance":[[1,0.5],[0.5,1]]}"#,
    );
    let (code, out, err) = run_cli(&[
        "sobol",
        "--model-spec",
        &spec,
        "--features",
        "x2",
        "--linear",
        "0.7,0.3",
        "--n-mc",
        "50000",
        "--seed",
        "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let sob = v["result"]["quartet"]["sob"]["value"].as_f64().unwrap();
    assert!((sob - 0.4225 / 0.79).abs() < 0.03);
    assert_eq!(v["causal"]["finding"], "direct_influence_possible");
}

fn protocol(cmd: &str) -> ExternalModelProtocol {
    let mut p = ExternalModelProtocol::new(cmd);
    p.batch_size = 3;
    p.timeout = Duration::from_secs(20);
    p
}

const ECHO_FIRST: &str = "python3 -u -c \"import sys\nfor line in sys.stdin:\n    line = line.strip()\n    if not line: break\n    print(line.split(',')[0])\"";

#[test]
fn identity_child() {
    let mut m = ExternalModel::spawn(protocol(ECHO_FIRST)).unwrap();
    let rows = array![
        [1.5, 2.0],
        [-3.25, 0.0],
        [0.1, 9.0],
        [7.0, 1.0],
        [1e-300, 2.0]
    ];
    let out = m.query(rows.view()).unwrap();
    assert_eq!(out, vec![1.5, -3.25, 0.1, 7.0, 1e-300]);
    m.close().unwrap();
}

#[test]
fn short_reply_is_protocol_violation() {
    let cmd = "python3 -u -c \"import sys\nsys.stdin.readline()\nprint(1.0)\"";
    let mut m = ExternalModel::spawn(protocol(cmd)).unwrap();
    let rows = array![[1.0], [2.0], [3.0]];
    assert!(matches!(
        m.query(rows.view()),
        Err(ExternalError::ProtocolViolation(_))
    ));
}

#[test]
fn non_numeric_reply() {
    let cmd = "python3 -u -c \"import sys\nfor line in sys.stdin:\n    print('abc')\"";
    let mut m = ExternalModel::spawn(protocol(cmd)).unwrap();
    assert!(matches!(
        m.query(array![[1.0]].view()),
        Err(ExternalError::ProtocolViolation(_))
    ));
}

#[test]
fn crashing_child() {
    let cmd = "python3 -u -c \"import sys\nsys.stdin.readline()\nsys.exit(3)\"";
    let mut m = ExternalModel::spawn(protocol(cmd)).unwrap();
    assert!(matches!(
        m.query(array![[1.0], [2.0]].view()),
        Err(ExternalError::ChildCrashed(_))
    ));
}

#[test]
fn silent_child_times_out() {
    let cmd = "python3 -u -c \"import sys, time\nsys.stdin.readline()\ntime.sleep(30)\"";
    let mut p = protocol(cmd);
    p.timeout = Duration::from_millis(500);
    let mut m = ExternalModel::spawn(p).unwrap();
    assert!(matches!(
        m.query(array![[1.0]].view()),
        Err(ExternalError::Timeout(_))
    ));
}

#[test]
fn external_linear_model_reproduces_experiment_two() {
    let cmd = "python3 -u -c \"import sys\nfor line in sys.stdin:\n    line = line.strip()\n    if not line: break\n    a, b = map(float, line.split(','))\n    print(repr(0.7 * a + 0.3 * b))\"";
    let (code, out, err) = run_cli(&[
        "synthetic",
        "--experiment",
        "2",
        "--n",
        "20000",
        "--seed",
        "11",
        "--model-cmd",
        cmd,
    ]);
    assert_eq!(code, 0, "{err}");
    let external: Value = serde_json::from_str(&out).unwrap();
    let (_, native, _) = run_cli(&[
        "synthetic",
        "--experiment",
        "2",
        "--n",
        "20000",
        "--seed",
        "11",
    ]);
    let native: Value = serde_json::from_str(&native).unwrap();
    for row in 0..2 {
        for k in ["sob", "sob_total", "sob_ind", "sob_total_ind"] {
            let e = external["rows"][row]["estimate"][k]["value"]
                .as_f64()
                .unwrap();
            let n = native["rows"][row]["estimate"][k]["value"]
                .as_f64()
                .unwrap();
            let t = external["rows"][row]["theory"][k].as_f64().unwrap();
            let se = external["rows"][row]["estimate"][k]["stderr"]
                .as_f64()
                .unwrap();
            assert!((e - n).abs() < 1e-9, "{k}: {e} vs {n}");
            assert!((e - t).abs() <= 0.02f64.max(4.0 * se), "{k}: {e} vs {t}");
        }
    }
}
