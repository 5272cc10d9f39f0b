use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn xxqst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xxqst")).args(args).env_remove("XXQST_ORACLE_CAP").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_body(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn coefficients_endpoint_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let o = xxqst(&[
        "coefficients",
        "--profile",
        "perfect",
        "--n",
        "5",
        "--t-max",
        "0.7853981634",
        "--steps",
        "200",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(&format!("# xxqst {}\n# run: ", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("# timestamp: "));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 200);
    assert!((rows.last().unwrap()[5] - 1.0).abs() < 1e-9);
}

#[test]
fn boundary_trace_peaks_near_revival() {
    let o = xxqst(&[
        "coefficients",
        "--profile",
        "boundary",
        "--eta",
        "0.815",
        "--n",
        "5",
        "--t-max",
        "3",
        "--no-timestamp",
    ]);
    let rows = csv_rows(&stdout(&o));
    let best = rows.iter().max_by(|a, b| (a[5] * a[5]).total_cmp(&(b[5] * b[5]))).unwrap();
    assert!(best[5] * best[5] > 0.999);
    assert!((best[0] - 1.9).abs() < 0.1);
}

#[test]
fn usage_errors_exit_2() {
    let o = xxqst(&["coefficients", "--n", "5", "--t-max", "1", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps must be ≥ 2"));
    assert_eq!(xxqst(&["transfer", "--n", "4", "--input", "+q"]).status.code(), Some(2));
    assert_eq!(xxqst(&["transfer", "--n", "4", "--t", "pi/zero"]).status.code(), Some(2));
    assert_eq!(xxqst(&["sweep", "--n", "5", "--resolution", "3"]).status.code(), Some(2));
    assert_eq!(xxqst(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn oracle_cap_exits_3() {
    let o = xxqst(&["transfer", "--n", "5", "--oracle-cap", "4"]);
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_xxqst"))
        .args(["transfer", "--n", "6"])
        .env("XXQST_ORACLE_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn perfect_transfer_every_branch() {
    let d = json_body(&xxqst(&[
        "transfer",
        "--n",
        "5",
        "--profile",
        "perfect",
        "--t",
        "0.7853981634",
        "--input",
        "+x",
        "--medium",
        "random",
        "--seed",
        "7",
    ]));
    let branches = d["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 4);
    for b in branches {
        assert!((b["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    assert_eq!(d["metadata"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(d["metadata"]["run"]["params"]["seed"], 7);
}

#[test]
fn classical_corner_and_boundary_chain() {
    let d = json_body(&xxqst(&["transfer", "--n", "5", "--medium", "zero", "--input", "0"]));
    for b in d["branches"].as_array().unwrap() {
        assert!((b["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    let d = json_body(&xxqst(&[
        "transfer",
        "--n",
        "5",
        "--profile",
        "boundary",
        "--eta",
        "0.815",
        "--t",
        "1.9",
        "--medium",
        "zero",
    ]));
    for b in d["branches"].as_array().unwrap() {
        let f = b["fidelity"].as_f64().unwrap();
        assert!(f < 1.0 && f > 0.99, "{f}");
    }
}

#[test]
fn sampled_transfer_reports_one_branch() {
    let d = json_body(&xxqst(&[
        "transfer",
        "--n",
        "4",
        "--medium",
        "thermal:1",
        "--theta",
        "1.1",
        "--phi",
        "2.3",
        "--sample",
        "--seed",
        "9",
    ]));
    assert_eq!(d["branches"].as_array().unwrap().len(), 1);
    assert_eq!(d["metadata"]["run"]["params"]["mode"], "sampled");
}

#[test]
fn verify_tables() {
    for n in ["5", "6"] {
        let o = xxqst(&["verify", "--n", n, "--t", "pi/4"]);
        assert!(o.status.success());
        let text = stdout(&o);
        assert!(text.contains("all checks pass"));
        assert!(!text.contains("FAIL"));
    }
    let o = xxqst(&["verify", "--profile", "boundary", "--eta", "0.815", "--n", "5", "--t", "1.9", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let d: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(d["all_pass"], false);
}

#[test]
fn identity_covers_every_pair() {
    let d = json_body(&xxqst(&["identity", "--n", "7", "--json", "--no-timestamp"]));
    assert_eq!(d["rows"].as_array().unwrap().len(), 9);
    assert_eq!(d["all_pass"], true);
    assert!(d["metadata"].get("timestamp").is_none());
}

#[test]
fn optimize_reproduces_boundary_optimum() {
    let d = json_body(&xxqst(&["optimize", "--n", "5"]));
    let eta = d["eta"].as_f64().unwrap();
    let t = d["t"].as_f64().unwrap();
    assert!((0.80..=0.83).contains(&eta), "{eta}");
    assert!((1.8..=2.0).contains(&t), "{t}");
    assert!(d["estimate"].as_f64().unwrap() > 0.999);
}

#[test]
fn sweep_csv_and_best_json() {
    let dir = tempfile::tempdir().unwrap();
    let best = dir.path().join("best.json");
    let o = xxqst(&[
        "sweep",
        "--n",
        "5",
        "--eta-min",
        "0.5",
        "--eta-max",
        "1.2",
        "--t-min",
        "0.5",
        "--t-max",
        "3",
        "--resolution",
        "32",
        "--best-out",
        best.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "eta,t,estimate"));
    assert_eq!(csv_rows(&text).len(), 32 * 32);
    let b: Value = serde_json::from_str(&fs::read_to_string(best).unwrap()).unwrap();
    assert!(b["estimate"].as_f64().unwrap() > 0.99);
}

#[test]
fn identical_flags_give_identical_bytes() {
    let args = ["transfer", "--n", "6", "--medium", "random", "--seed", "11", "--no-timestamp"];
    assert_eq!(xxqst(&args).stdout, xxqst(&args).stdout);
    let other = ["transfer", "--n", "6", "--medium", "random", "--seed", "12", "--no-timestamp"];
    assert_ne!(xxqst(&args).stdout, xxqst(&other).stdout);
}
