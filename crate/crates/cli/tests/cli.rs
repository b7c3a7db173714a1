use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::{json, Value};

fn exchg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exchg")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exchg-cli-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn assert_valid(schema: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{instance} does not match: {msgs:?}");
}

fn json_out(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("not JSON ({e}): {}", stdout(out)))
}

fn complete_graph(n: u32) -> Value {
    let mut entries = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            entries.push(json!([{ "set": [i, j] }, 1]));
        }
    }
    json!({ "array": entries })
}

fn empty_graph(n: u32) -> Value {
    let mut entries = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            entries.push(json!([{ "set": [i, j] }, 0]));
        }
    }
    json!({ "array": entries })
}

fn write_records(name: &str, records: &[(u32, Value)]) -> String {
    let path = scratch(name);
    let text: String = records.iter().map(|(n, x)| format!("{}\n", json!({ "n": n, "element": x }))).collect();
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn csv_values(text: &str) -> Vec<(usize, f64)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].parse().unwrap(), rec[2].parse().unwrap())
    }).collect()
}

#[test]
fn depth_of_total_orders() {
    let out = exchg(&["depth", "--structure", "total"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "2\n");
    let out = exchg(&["depth", "--structure", "array({0,1},subsets(2))", "--format", "json"]);
    let v = json_out(&out);
    assert_valid("depth", &v);
    assert_eq!(v["depth"], 2);
    assert_eq!(v["certified"], true);
}

#[test]
fn axioms_pass_for_composed_system() {
    let out = exchg(&["axioms", "--indexing", "compose(powerset,dtuples_star)", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let v = json_out(&out);
    assert_valid("axioms", &v);
    assert_eq!(v["passed"], true);
    assert_eq!(v["violations"], json!([]));
}

#[test]
fn parse_errors_exit_with_two() {
    let out = exchg(&["axioms", "--indexing", "subsets(2,3)", "--n", "3"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&exchg(&["depth", "--bogus"])), 2);
}

#[test]
fn skeleton_report() {
    let v = json_out(&exchg(&["skeleton", "--indexing", "tuples(2)", "--n", "2"]));
    assert_valid("skeleton", &v);
    let reps: Vec<&str> = v["representatives"].as_array().unwrap().iter().map(|r| r["rep"].as_str().unwrap()).collect();
    assert_eq!(reps, vec!["(1,1)", "(1,2)"]);
}

#[test]
fn element_listing() {
    let v = json_out(&exchg(&["elements", "--structure", "total", "--n", "3", "--format", "json"]));
    assert_valid("elements", &v);
    assert_eq!(v["count"], 6);
}

#[test]
fn mixture_fails_independence() {
    let out = exchg(&["law-check", "--law", &data("mixture.json"), "--independence"]);
    assert_eq!(code(&out), 1);
    let v = json_out(&out);
    assert_valid("law-check", &v);
    assert_eq!(v["exchangeable"]["passed"], true);
    let w = &v["independence"]["witness"];
    assert_eq!(w["covariance"], "9/100");
    assert!((w["covariance_value"].as_f64().unwrap() - 0.09).abs() < 1e-12);

    let out = exchg(&["law-check", "--law", &data("iid.json"), "--independence"]);
    assert_eq!(code(&out), 0);
    assert_valid("law-check", &json_out(&out));
}

#[test]
fn sample_records_are_deterministic() {
    let args = ["sample", "--structure", "graph2", "--kernels", &data("er_kernels.json"), "--n", "4", "--seed", "9", "--count", "20"];
    let first = exchg(&args);
    assert_eq!(code(&first), 0);
    let text = stdout(&first);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 20);
    for (j, line) in lines.iter().enumerate() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_valid("sample-record", &v);
        assert_eq!(v["draw"], j);
        assert_eq!(v["element"]["array"].as_array().unwrap().len(), 6);
    }
    assert_eq!(stdout(&exchg(&args)), text);

    let mut parallel = args.to_vec();
    parallel.extend(["--jobs", "3"]);
    assert_eq!(stdout(&exchg(&parallel)), text);

    let out = exchg(&["sample", "--structure", "total", "--n", "3", "--count", "5"]);
    for line in stdout(&out).lines() {
        assert_valid("sample-record", &serde_json::from_str(line).unwrap());
    }
    let out = exchg(&["sample", "--law", &data("mixture.json"), "--n", "2", "--count", "5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 5);
}

#[test]
fn sample_writes_to_a_file() {
    let path = scratch("draws.jsonl");
    let out = exchg(&["sample", "--structure", "total", "--n", "4", "--count", "3", "--out", &path.display().to_string()]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 3);
}

#[test]
fn densities_and_limits() {
    let hosts = write_records("complete.jsonl", &(3..=6).map(|n| (n, complete_graph(n))).collect::<Vec<_>>());
    let edge = write_records("edge.jsonl", &[(2, complete_graph(2))]);
    let out = exchg(&["density", "--structure", "graph2", "--hosts", &hosts, "--targets", &edge]);
    assert_eq!(code(&out), 0);
    let rows = csv_values(&stdout(&out));
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
    assert!(rows.iter().all(|r| r.1 == 1.0));

    let out = exchg(&["avg", "--structure", "graph2", "--statistic", "indicator", "--hosts", &hosts, "--targets", &edge]);
    assert!(csv_values(&stdout(&out)).iter().all(|r| r.1 == 1.0));

    let out = exchg(&["limit", "--structure", "graph2", "--hosts", &hosts, "--targets", &edge]);
    assert_eq!(code(&out), 0);

    let alternating: Vec<(u32, Value)> =
        (3..=8).map(|n| (n, if n % 2 == 0 { complete_graph(n) } else { empty_graph(n) })).collect();
    let alt = write_records("alternating.jsonl", &alternating);
    let out = exchg(&["limit", "--structure", "graph2", "--hosts", &alt, "--targets", &edge]);
    assert_eq!(code(&out), 1);
    let rows = csv_values(&stdout(&out));
    assert_eq!(rows.len(), 6);
}

#[test]
fn ustat_report_for_the_mixture() {
    let out = exchg(&["ustat", "--law", &data("mixture.json"), "--statistic", "product", "--k", "1"]);
    assert_eq!(code(&out), 0);
    let v = json_out(&out);
    assert_valid("ustat", &v);
    assert_eq!(v["c"][0], "9/100");
    assert_eq!(v["c"][1], "1/4");
    assert_eq!(v["symmetric"], true);
}

#[test]
fn embedding_report() {
    let out = exchg(&["embed", "--structure", "total", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let v = json_out(&out);
    assert_valid("embed", &v);
    assert_valid("naturality", &v["naturality"]);
    assert_eq!(v["injective"], true);
}

fn kernel_file(name: &str, f: impl Fn(i64, i64) -> i64) -> String {
    let mut rows = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            rows.push(json!({ "element": { "array": [[1, a], [2, b]] }, "value": f(a, b) }));
        }
    }
    let spec = json!({
        "source": "array({0,1},id)",
        "alphabet": [0, 1],
        "indexing": "subsets(2)",
        "kernels": { "{1,2}": rows },
    });
    let path = scratch(name);
    fs::write(&path, spec.to_string()).unwrap();
    path.display().to_string()
}

#[test]
fn kernel_builds() {
    let good = kernel_file("and.json", |a, b| a * b);
    let out = exchg(&["build-nat", "--kernels", &good, "--n", "3"]);
    assert_eq!(code(&out), 0);
    let v = json_out(&out);
    assert_valid("build-nat", &v);
    assert_valid("naturality", &v["naturality"]);
    assert_eq!(v["target"], "array({0,1},subsets(2))");

    let bad = kernel_file("first.json", |a, _| a);
    let out = exchg(&["build-nat", "--kernels", &bad]);
    assert_eq!(code(&out), 1);
    let v = json_out(&out);
    assert_valid("build-nat", &v);
    assert_eq!(v["asymmetry"]["perm"], json!([2, 1]));
}

#[test]
fn missing_files_are_errors() {
    let out = exchg(&["law-check", "--law", "/nonexistent/law.json"]);
    assert_eq!(code(&out), 2);
}
