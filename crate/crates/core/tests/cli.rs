use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wolffkit"));
    c.env_remove("WOLFFKIT_THREADS");
    c
}

fn workdir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const DIRAC3: &str = r#"{"type":"points","atoms":[{"x":[0,0,0],"m":1}]}"#;

#[test]
fn pointwise_liouville_exits_three_with_sentinel() {
    let d = workdir("liouville");
    let m = write(&d, "dirac.json", DIRAC3);
    let out = run(&["verify", "pointwise", "--measure", &m, "--params", "n=3,p=2,q=2", "--r", "inf"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["report"]["best_constant"], "inf");
    assert!(v["config"].is_object());
}

#[test]
fn oracle_plap_constant() {
    let out = run(&["oracle", "plap", "--n", "3", "--p", "2", "--q", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let c = v.pointer("/solution/c").and_then(Value::as_f64).unwrap();
    assert!((c - 0.5f64.sqrt()).abs() <= 1e-15);
}

#[test]
fn solve_zero_data_gives_zero() {
    let d = workdir("zero");
    let f = write(&d, "zero.json", r#"{"box":{"generation":0,"index":[0]},"generation":-3,"values":[0,0,0,0,0,0,0,0]}"#);
    let out = run(&["solve", "--f", &f, "--params", "n=1,alpha=0.4,p=2,q=3", "--window", "-3:0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let values = v.pointer("/solution/values").and_then(Value::as_array).unwrap();
    assert_eq!(values.len(), 8);
    assert!(values.iter().all(|x| x.as_f64() == Some(0.0)));
}

#[test]
fn solve_indicator_certificate() {
    let d = workdir("indicator");
    let mut values = vec!["0"; 32];
    values[11] = "1";
    let f = write(
        &d,
        "f.json",
        &format!(r#"{{"box":{{"generation":0,"index":[0]}},"generation":-5,"values":[{}]}}"#, values.join(",")),
    );
    let out_path = d.join("u.json");
    let out = run(&[
        "--out",
        out_path.to_str().unwrap(),
        "solve",
        "--f",
        &f,
        "--params",
        "n=1,alpha=0.4,p=2,q=3",
        "--window=-5:0",
        "--recursion",
        "certified",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let cert = &v["certificate"];
    assert_eq!(cert["monotone"], true);
    assert_eq!(cert["upper_ok"], true);
    assert_eq!(cert["lower_ok"], true);
}

#[test]
fn malformed_input_exits_two_with_pointer() {
    let d = workdir("malformed");
    let m = write(&d, "bad.json", r#"{"type":"points","atoms":[{"x":[0,0,0],"m":-1}]}"#);
    let out = run(&["verify", "frostman", "--measure", &m, "--params", "n=3,p=2,q=5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/atoms/0/m"));
    let m = write(&d, "truncated.json", r#"{"type":"points","atoms":["#);
    assert_eq!(run(&["verify", "frostman", "--measure", &m, "--params", "n=3,p=2,q=5"]).status.code(), Some(2));
}

#[test]
fn regime_errors_exit_two() {
    let out = run(&["oracle", "plap", "--n", "3", "--p", "2", "--q", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["capacity", "scaling", "--params", "n=3,p=2,q=2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["oracle", "plap", "--n", "3", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_solve_exits_three() {
    let d = workdir("divergent");
    let f = write(&d, "f.json", r#"{"box":{"generation":0,"index":[0]},"generation":-2,"values":[0,1,0,0]}"#);
    let out = run(&[
        "solve", "--f", &f, "--params", "n=1,alpha=0.4,p=2,q=3", "--window=-2:0", "--C", "1", "--eps", "1000",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn potential_csv_profile() {
    let d = workdir("csv");
    let m = write(&d, "dirac.json", DIRAC3);
    let out = run(&["potential", "--measure", &m, "--params", "n=3,p=2,q=5", "--rmin", "0.5", "--rmax", "2", "--count", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "radius,value");
    assert_eq!(lines.len(), 4);
    // W_{1,2} of a unit mass at distance d is 1/d
    for l in &lines[1..] {
        let mut it = l.split(',').map(|s| s.parse::<f64>().unwrap());
        let (r, w) = (it.next().unwrap(), it.next().unwrap());
        assert!((w * r - 1.0).abs() <= 1e-12, "{l}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let d = workdir("threads");
    let m = write(&d, "two.json", r#"{"type":"points","atoms":[{"x":[0,0],"m":1},{"x":[0.3,0.7],"m":2.5}]}"#);
    let args = ["verify", "a123", "--measure", &m, "--params", "n=2,alpha=0.5,p=3,q=4", "--cube", "0:0,0", "--window=-4:0"];
    let one = bin().args(args).env("WOLFFKIT_THREADS", "1").output().unwrap();
    let many = bin().args(args).env("WOLFFKIT_THREADS", "8").output().unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, many.stdout);
}
