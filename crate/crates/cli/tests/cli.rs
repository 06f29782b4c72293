use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn zle(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zle"))
        .args(args)
        .current_dir(dir)
        .env_remove("ZLE_PRECISION_BITS")
        .env_remove("ZLE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("json on stderr")
}

#[test]
fn two_extension_poset_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), r#"{"n":3,"relations":[[2,3],[2,1]]}"#).unwrap();
    let o = zle(&["gen", "--poset", "p.json", "--out", "m.json"], dir.path());
    assert!(o.status.success());
    let m = fs::read_to_string(dir.path().join("m.json")).unwrap();
    assert_eq!(m, "{\"n\":2,\"symbols\":[\"11\",\"10\"],\"entries\":[[1,2],[2,1]]}\n");

    let o = zle(&["eig", "--in", "m.json", "--verify", "4"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "{\"symbols\":[\"11\",\"10\"],\"forms\":[[1,1],[1,-1]]}\n");
    assert_eq!(stderr_json(&o)["verification"]["trials"], 4);

    let o = zle(&["eig", "--in", "m.json", "--text"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "11 + 10\n11 - 10\n");
}

#[test]
fn scalar_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.json"), r#"{"n":1,"symbols":["1"],"entries":[[1]]}"#).unwrap();
    let s = stdout_json(&zle(&["eig", "--in", "one.json"], dir.path()));
    assert_eq!(s, serde_json::json!({"symbols":["1"],"forms":[[1]]}));
}

#[test]
fn batched_matches_unbatched_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = zle(&["gen-stochastic", "--dfac", "8,2", "--out", "m.json"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("m.json")).unwrap();
    // re-serializing the parsed file reproduces it byte for byte
    let m: zle::mx::SymbolicMatrix = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&m).unwrap() + "\n", text);
    assert_eq!(m.n(), 16);

    let plain = zle(&["eig", "--in", "m.json"], dir.path());
    let batched = zle(&["eig", "--in", "m.json", "--batches", "4", "--workers", "3"], dir.path());
    assert!(plain.status.success() && batched.status.success());
    assert_eq!(plain.stdout, batched.stdout);
}

#[test]
fn linear_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    // [[a, b], [b, a]] with the linear layout
    fs::write(
        dir.path().join("l.json"),
        r#"{"n":2,"symbols":["a","b"],"entries":[[[[1,1]],[[2,1]]],[[[2,1]],[[1,1]]]]}"#,
    )
    .unwrap();
    let s = stdout_json(&zle(&["eig", "--in", "l.json"], dir.path()));
    assert_eq!(s["forms"], serde_json::json!([[1, 1], [1, -1]]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = zle(&["gen-stochastic", "--dfac", "4"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "NotFibonacci");

    fs::write(dir.path().join("c.json"), r#"{"n":2,"relations":[[1,2],[2,1]]}"#).unwrap();
    let o = zle(&["gen", "--poset", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "CycleDetected");

    let o = zle(&["eig", "--in", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "Io");

    // a pinned precision too small to separate the digits
    zle(&["gen-stochastic", "--dfac", "13", "--out", "m.json"], dir.path());
    let o = zle(&["eig", "--in", "m.json", "--precision-bits", "8"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "NotZLinear");

    // the same through the environment
    let o = Command::new(env!("CARGO_BIN_EXE_zle"))
        .args(["eig", "--in", "m.json"])
        .current_dir(dir.path())
        .env("ZLE_PRECISION_BITS", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));

    let o = zle(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "Usage");
}

#[test]
fn non_linear_matrix_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // [[a, b], [b, a + b]] has eigenvalues involving a square root
    fs::write(
        dir.path().join("q.json"),
        r#"{"n":2,"symbols":["a","b"],"entries":[[[[1,1]],[[2,1]]],[[[2,1]],[[1,1],[2,1]]]]}"#,
    )
    .unwrap();
    let o = zle(&["eig", "--in", "q.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn san_model() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("san.json"),
        r#"{"factors":[{"n":3,"symbols":["a","b","c"],"entries":[[1,2,3],[2,1,3],[3,2,1]]},
                       {"n":2,"symbols":["d","e"],"entries":[[1,2],[2,1]]}],
            "terms":[{"kind":"local","components":[1,null]},{"kind":"local","components":[null,2]}]}"#,
    )
    .unwrap();
    let v = stdout_json(&zle(&["san", "--model", "san.json", "--solve"], dir.path()));
    assert_eq!(v["dims"], serde_json::json!([3, 2]));
    assert_eq!(v["agrees"], true);
    assert_eq!(v["composed_spectrum"].as_array().unwrap().len(), 6);
    assert!(v["composed_spectrum"].as_array().unwrap().contains(&Value::from("0")));
}

#[test]
fn sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&zle(&["--seed", "3", "sweep", "--steps", "11"], dir.path()));
    assert_eq!(v["dimension"], 12);
    assert_eq!(v["continuity"]["continuous"], true);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("t,lambda1,"));
    assert!(fs::read_to_string(dir.path().join("sweep.svg")).unwrap().contains("<polyline"));
}

#[test]
fn bench_json() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&zle(&["bench", "--sizes", "2,3,5,8", "--reps", "1", "--json"], dir.path()));
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["fit"]["slope"].is_number());
}
