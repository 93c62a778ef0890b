//! End-to-end checks of the `divlift` binary: grammar, exit codes and
//! report shapes.

use assert_cmd::Command;
use serde_json::Value;

fn divlift() -> Command {
    let mut c = Command::cargo_bin("divlift").unwrap();
    for v in ["DIVLIFT_DIGITS", "DIVLIFT_ORDER", "DIVLIFT_THREADS", "DIVLIFT_FORMAT"] {
        c.env_remove(v);
    }
    c
}

fn json_of(out: &[u8]) -> Value {
    serde_json::from_slice(out).expect("stdout is one complete JSON document")
}

#[test]
fn faber_two_json() {
    let out = divlift().args(["faber", "2", "--order", "8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out.stdout);
    assert_eq!(v["schema"], "divlift-report/1");
    assert_eq!(v["result"]["polynomial"], "L^2 - 1488*L + 159768");
    let c = &v["result"]["series"]["coeffs"];
    // J_2 = q^-2 + 42987520 q + 40491909396 q^2 + ...
    assert_eq!(v["result"]["series"]["lead"], -2);
    assert_eq!(c[0], "1");
    assert_eq!(c[2], "0");
    assert_eq!(c[3], "42987520");
    assert_eq!(c[4], "40491909396");
}

#[test]
fn verify_hecke_system_passes() {
    let out = divlift().args(["verify", "hecke-system"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["pass"], true);
}

#[test]
fn verify_trace_ratio_reports_factor_five() {
    let out = divlift().args(["verify", "trace-ratio", "--format", "text"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("(5, 4, 3), factor 5"), "{s}");
}

#[test]
fn failing_suite_exits_one_with_full_json() {
    let out = divlift().args(["verify", "bp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["pass"], false);
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = divlift().args(["faber", "2", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_suite_and_name_are_usage_errors() {
    let out = divlift().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = divlift().args(["series", "E5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = divlift().args(["trace", "--delta", "5", "--d", "4", "--f", "eta"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_independent_of_thread_count() {
    let run = |t: &str| divlift().args(["verify", "kronecker-limit", "--threads", t]).output().unwrap().stdout;
    assert_eq!(run("1"), run("3"));
}

#[test]
fn environment_overrides_defaults() {
    let out = divlift().env("DIVLIFT_ORDER", "4").args(["series", "E4"]).output().unwrap();
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["series"]["coeffs"].as_array().unwrap().len(), 4);
    let out = divlift().env("DIVLIFT_FORMAT", "text").args(["series", "delta", "--order", "3"]).output().unwrap();
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.trim(), "1*q^1 + -24*q^2 + 252*q^3 + O(q^4)");
}

#[test]
fn qf_and_trace_commands() {
    let out = divlift().args(["qf", "list", "-20", "--delta", "5"]).output().unwrap();
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["class_number"], 2);
    let chis: Vec<i64> = v["result"]["forms"].as_array().unwrap().iter().map(|f| f["chi"].as_i64().unwrap()).collect();
    assert_eq!(chis, vec![1, -1]);

    // Tr_(5,4)(frakf) = log((1 + sqrt 5)/2) = 0.48121182505960344...
    let out = divlift().args(["trace", "--delta", "5", "--d", "4", "--f", "frakf", "--digits", "25"]).output().unwrap();
    let v = json_of(&out.stdout);
    assert!(v["result"]["value"].as_str().unwrap().starts_with("4.8121182505960344749775"));
}

#[test]
fn lift_recovers_divisor() {
    let out = divlift().args(["lift", "divisor", "E6", "--weight", "6", "--order", "12"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out.stdout);
    let s = v["result"]["divisor"].to_string();
    assert!(s.contains("1728"), "{s}");
}

#[test]
fn trace_relation_and_klf() {
    let out = divlift().args(["trace", "relation", "--delta", "5", "--d", "4", "--p", "3", "--f", "frakf", "--digits", "40"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["relation"], "1*Tr_(5,36)(frakf) = 5*Tr_(5,4)(frakf)");
    let out = divlift().args(["trace", "klf", "--delta", "5", "--d", "3"]).output().unwrap();
    let v = json_of(&out.stdout);
    assert_eq!(v["result"]["convention_with_ratio_one"], "narrow_totally_positive_unit");
}

#[test]
fn lv_commands() {
    let out = divlift().args(["lv", "L1", "-4", "--digits", "20"]).output().unwrap();
    let v = json_of(&out.stdout);
    // L(1, chi_-4) = pi/4.
    assert!(v["result"]["value"].as_str().unwrap().starts_with("7.8539816339744830961"));
    let out = divlift().args(["lv", "unit", "12"]).output().unwrap();
    let v = json_of(&out.stdout);
    // eps_12 = 2 + sqrt 3 = (4 + 2 sqrt 12)/2... written (x + y sqrt 12)/2 with x = 4, y = 1.
    assert_eq!((v["result"]["x"].as_str(), v["result"]["y"].as_str(), v["result"]["norm"].as_i64()), (Some("4"), Some("1"), Some(1)));
}

#[test]
fn eval_reports_re_im_rad() {
    let out = divlift().args(["eval", "j", "--tau", "0,1", "--digits", "20"]).output().unwrap();
    let v = json_of(&out.stdout);
    assert!(v["result"]["re"].as_str().unwrap().starts_with("1728.00000000000000"));
    assert!(v["result"].get("rad").is_some());
}

#[test]
fn bz_trace_check_fails_with_stated_sign() {
    let out = divlift().args(["bz", "check", "traces", "5", "3", "--n", "2", "--format", "text"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("[q^n] D(Psi) = Tr(J_n): pass"), "{s}");
}
