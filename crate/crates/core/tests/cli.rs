//! End-to-end runs of the `distilcheck` binary.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn distilcheck(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_distilcheck")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(args: &[&str]) -> Value {
    let (code, stdout, stderr) = distilcheck(args);
    assert_eq!(code, 0, "args {args:?}\nstderr: {stderr}");
    serde_json::from_str(&stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("distilcheck-cli-{}-{name}", std::process::id()))
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["optimize", "--op", "q2", "--unknown-flag"],
        vec!["no-such-command"],
        vec!["optimize", "--op", "q9"],
        vec!["optimize", "--op", "q2", "--restarts", "0"],
        vec!["appendix", "--d", "2"],
        vec!["classify", "--state", "/nonexistent/state.json"],
    ] {
        let (code, stdout, stderr) = distilcheck(&args);
        assert_eq!(code, 2, "args {args:?}: {stderr}");
        assert!(stdout.is_empty());
        assert!(!stderr.is_empty());
    }
}

#[test]
fn verify_quick_exits_zero() {
    let (code, stdout, stderr) = distilcheck(&["verify", "--quick"]);
    assert_eq!(code, 0, "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema"], "distilcheck.report.v1");
    assert_eq!(v["passed"], true);
    assert!(v["results"]["invariants_checked"].as_u64().unwrap() >= 30);
}

#[test]
fn rank_two_optimum_on_q2_is_one_half() {
    let v = json(&["optimize", "--op", "q2", "--rank", "2", "--restarts", "200", "--seed", "7", "--json"]);
    let best = v["results"]["best_value"].as_f64().unwrap();
    assert!((0.4999..=0.5 + 1e-9).contains(&best), "{best}");
    assert_eq!(v["results"]["report"]["restarts"], 200);
}

#[test]
fn results_replay_identically() {
    let args = ["optimize", "--op", "q2", "--rank", "2", "--restarts", "6", "--seed", "3"];
    let serial: Vec<&str> = args.iter().copied().chain(["--threads", "1"]).collect();
    let parallel: Vec<&str> = args.iter().copied().chain(["--threads", "3"]).collect();
    let a = json(&serial);
    let b = json(&serial);
    let c = json(&parallel);
    let text = |v: &Value| serde_json::to_string(&v["results"]).unwrap();
    assert_eq!(text(&a), text(&b));
    assert_eq!(text(&a), text(&c));
}

#[test]
fn bounds_reports_final_bound_and_gamma() {
    let v = json(&["bounds", "--restarts", "20", "--instances", "20"]);
    let lib = distilcheck::bounds::final_bound().unwrap();
    assert_eq!(v["results"]["final_bound"].as_f64().unwrap(), lib.resulting_bound);
    assert_eq!(v["results"]["final_bound_gamma"].as_f64().unwrap(), lib.gamma);
    assert_eq!(v["results"]["lambda0_table"][1]["lambda0"], 0.375);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"soft_target_17_32") && names.contains(&"soft_target_5_8"));
}

#[test]
fn bounds_csv_report() {
    let (code, stdout, _) = distilcheck(&["bounds", "--restarts", "5", "--instances", "5", "--report", "csv"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("key,value\n"));
    assert!(stdout.lines().any(|l| l.starts_with("results.final_bound,")));
}

#[test]
fn saved_state_can_be_classified_and_certified() {
    let path = scratch("state.json");
    let p = path.to_str().unwrap();
    json(&["optimize", "--op", "q2", "--rank", "2", "--restarts", "4", "--save-state", p]);
    let c = json(&["classify", "--state", p]);
    assert_eq!(c["results"]["schmidt_rank"], 2);
    assert!(c["results"]["normality"]["classification"].is_string());
    let cert = json(&["certify", "--state", p, "--method", "all"]);
    for m in ["cdf", "rank", "normal"] {
        assert!(cert["results"][m]["overlap"].is_number(), "{m}");
    }
    let only = json(&["certify", "--state", p, "--method", "cdf"]);
    assert!(only["results"].get("rank").is_none());
    std::fs::remove_file(path).ok();
}

#[test]
fn build_qn_writes_dense_operators() {
    let bin = scratch("q2.bin");
    json(&["build-qn", "--n", "2", "--format", "npz-like", "--out", bin.to_str().unwrap()]);
    let bytes = std::fs::read(&bin).unwrap();
    let m = distilcheck::io::read_matrix_binary(bytes.as_slice()).unwrap();
    let q = distilcheck::projectors::q_two_pair(4).unwrap();
    assert_eq!(m, q);
    std::fs::remove_file(bin).ok();

    let direct = json(&["build-qn", "--n", "1", "--direct", "--format", "json"]);
    assert_eq!(direct["results"]["construction"], "direct");
    assert!(direct["results"]["matrix"].is_object());

    let big = json(&["build-qn", "--n", "3"]);
    assert_eq!(big["results"]["matrix_free"], true);
    assert_eq!(big["results"]["gamma_spectrum"][3]["multiplicity"], 216);
}

#[test]
fn output_flag_writes_report_file() {
    let path = scratch("report.json");
    let (code, stdout, stderr) =
        distilcheck(&["appendix", "--d", "4", "--starts", "5", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "appendix");
    assert_eq!(v["results"]["d4"]["closed_form"], 0.5);
    std::fs::remove_file(path).ok();
}

#[test]
fn tolerance_overrides_are_echoed() {
    let v = json(&["--tol", "appendix=1e-8", "appendix", "--d", "3", "--starts", "5"]);
    assert_eq!(v["config"]["tolerances"]["appendix"], 1e-8);
    assert!(v["checks"][0]["detail"].as_str().unwrap().contains("1e-8"));
}

#[test]
fn broken_invariant_exits_one() {
    let (code, stdout, stderr) = distilcheck(&["--tol", "appendix=1e-300", "appendix", "--d", "3", "--starts", "5"]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("invariant failed: d3_matches_closed_form"), "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["passed"], false);
}
