use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use entrocone::{EntropyVector, JointPMF, LogLinear};
use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrocone")).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_entrocone"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn log(m: u64) -> LogLinear {
    LogLinear::from_log_int(m).unwrap()
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn entropy_of_table1_is_f() {
    let out = run(&["entropy", &fixture("table1.pmf")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let h = EntropyVector::from_json_value(&r["vector"]).unwrap();
    assert_eq!(h, EntropyVector::from_log_naturals(3, &[4, 4, 4, 16, 16, 16, 48]).unwrap());
    assert_eq!(r["bits"], json!(["2.000000", "2.000000", "2.000000", "4.000000", "4.000000", "4.000000", "5.584963"]));
}

#[test]
fn entropy_of_table2_shows_the_irrational_coordinate() {
    let out = run(&["entropy", &fixture("table2.pmf")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["vector"]["coords"][3]["log_terms"], json!({"2": "11/6", "3": "11/4"}));
    let bits: f64 = r["bits"][3].as_str().unwrap().parse().unwrap();
    assert!((bits - 73.1091f64.log2()).abs() < 1e-5, "{bits}");
}

#[test]
fn single_point_distribution_has_zero_entropy() {
    let pmf = temp_file("pmf n=2 sizes=3,1\n2 0 : 1/1\n");
    let r = report(&run(&["entropy", pmf.path().to_str().unwrap()]));
    assert_eq!(EntropyVector::from_json_value(&r["vector"]).unwrap(), EntropyVector::zero(2));
}

/// Entropy report fed back as a vector, against the quasi-uniform support sizes.
#[test]
fn entropy_and_qu_check_agree() {
    let entropy = run(&["entropy", &fixture("table1.pmf")]);
    let qu = run(&["qu-check", &fixture("table1.pmf")]);
    assert_eq!(code(&qu), 0);
    let qu = report(&qu);
    assert_eq!(qu["is_qu"], json!(true));
    let h = EntropyVector::from_json_value(&report(&entropy)["vector"]).unwrap();
    let labels = h.order_labels();
    for (label, c) in labels.iter().zip(h.coords()) {
        assert_eq!(Some(qu["support_sizes"][label].as_u64().unwrap()), c.as_log_natural(), "{label}");
    }
    let gamma = run_stdin(&["gamma", "-"], &entropy.stdout);
    assert_eq!(code(&gamma), 0);
}

#[test]
fn table2_is_not_quasi_uniform() {
    let out = run(&["qu-check", &fixture("table2.pmf")]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["witness"]["subset"], json!("12"));
}

#[test]
fn g_fails_both_omega_conditions() {
    let out = run(&["inner", &fixture("g.vec"), "omega"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    let conditions = r["conditions"].as_array().unwrap();
    let eq39 = conditions.iter().find(|c| c["name"] == "eq39").unwrap();
    let eq40 = conditions.iter().find(|c| c["name"] == "eq40").unwrap();
    assert_eq!(eq39["holds"], json!(false));
    let lhs: LogLinear = serde_json::from_value(eq39["lhs"].clone()).unwrap();
    let rhs: LogLinear = serde_json::from_value(eq39["rhs"].clone()).unwrap();
    assert_eq!(lhs, LogLinear::from_log_rational(9, 4).unwrap());
    assert_eq!(rhs, log(3));
    assert_eq!(eq40["holds"], json!(false));
}

#[test]
fn f_fails_theta_inner_bound() {
    let out = run(&["inner", &fixture("f.vec"), "theta"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert_eq!(r["in_face"], json!(true));
    let l: LogLinear = serde_json::from_value(r["decomposition"]["123p"].clone()).unwrap();
    assert_eq!(l, LogLinear::from_log_rational(4, 3).unwrap());
}

#[test]
fn f_is_strictly_inside_theta() {
    let out = run(&["face", &fixture("f.vec"), "theta"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["position"], json!("StrictlyInside"));
    let out = run(&["face", &fixture("f.vec"), "1,2,123p"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["position"], json!("Outside"));
}

#[test]
fn g_decomposes_over_omega_only() {
    let out = run(&["decompose", &fixture("g.vec"), "omega"]);
    assert_eq!(code(&out), 0);
    let l1: LogLinear = serde_json::from_value(report(&out)["certificate"]["1"].clone()).unwrap();
    assert_eq!(l1, log(4));
    let out = run(&["decompose", &fixture("g.vec"), "theta"]);
    assert_eq!(code(&out), 1);
    let obs = report(&out)["obstructions"].to_string();
    assert!(obs.contains("h1 + h2 >= h12"), "{obs}");
}

#[test]
fn gamma_reports_violations() {
    let bad = temp_file(r#"{"coords": ["log 2", "log 2", "log 2", "log 4", "log 4", "log 4", "log 16"]}"#);
    let out = run(&["gamma", bad.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["member"], json!(false));
}

#[test]
fn spec_command() {
    let out = run(&["spec", &fixture("eq41.vec")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["spec"]["m"]["123"], json!(216));
    assert_eq!(r["hints"], json!(["{1}⊥{3}", "{2}⊥{3}"]));
    assert_eq!(code(&run(&["spec", &fixture("g.vec")])), 1);
}

#[test]
fn deterministic_search_finds_f_reproducibly() {
    let args = ["search", &fixture("spec_f.json"), "--deterministic"];
    let first = run(&args);
    assert_eq!(code(&first), 0);
    let r = report(&first);
    assert_eq!(r["status"], json!("Found"));
    assert!(r.get("elapsed_ms").is_none());
    let pmf = JointPMF::parse(r["witness"].as_str().unwrap()).unwrap();
    assert!(pmf.is_quasi_uniform().is_qu);
    assert_eq!(pmf.entropy_vector(), EntropyVector::from_log_naturals(3, &[4, 4, 4, 16, 16, 16, 48]).unwrap());
    assert_eq!(run(&args).stdout, first.stdout);
}

#[test]
fn small_budget_is_inconclusive() {
    let out = run(&["search", &fixture("spec_eq41.json"), "--budget", "5000", "--deterministic"]);
    assert_eq!(code(&out), 2);
    assert_eq!(report(&out)["status"], json!("BudgetExceeded"));
}

#[test]
fn infeasible_spec_exhausts() {
    let spec = temp_file(r#"{"n": 3, "m": {"1": 3, "2": 3, "3": 3, "12": 6, "13": 6, "23": 6, "123": 12}}"#);
    let out = run(&["search", spec.path().to_str().unwrap(), "--deterministic"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["status"], json!("ExhaustedInfeasible"));
}

#[test]
fn catalog_lists_nineteen_faces() {
    let out = run(&["catalog"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["count"], json!(19));
    assert_eq!(r["faces"][0]["generators"], json!(["123p"]));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["bogus"])), 64);
    assert_eq!(code(&run(&["face", &fixture("f.vec"), "nonsense"])), 64);
    assert_eq!(code(&run(&["face", &fixture("f.vec"), "123,123p"])), 64);
    assert_eq!(code(&run(&["inner", &fixture("f.vec"), "sigma"])), 64);
    assert_eq!(code(&run(&["search", &fixture("spec_f.json"), "--deterministic", "--parallel"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn data_errors_exit_65() {
    assert_eq!(code(&run(&["entropy", "/nonexistent/file.pmf"])), 65);
    let short = temp_file("pmf n=1 sizes=2\n0 : 1/48\n1 : 46/48\n");
    let out = run(&["entropy", short.path().to_str().unwrap()]);
    assert_eq!(code(&out), 65);
    assert!(report(&out)["error"].as_str().unwrap().contains("mass sum ≠ 1"));
    let decimal = temp_file(r#"{"coords": [1.5, 1.5, 3.0]}"#);
    assert_eq!(code(&run(&["gamma", decimal.path().to_str().unwrap()])), 65);
    assert_eq!(code(&run(&["face", &fixture("table1.pmf"), "theta"])), 65);
    let two = temp_file(r#"{"coords": ["log 2", "log 2", "log 4"]}"#);
    assert_eq!(code(&run(&["inner", two.path().to_str().unwrap(), "theta"])), 65);
}
