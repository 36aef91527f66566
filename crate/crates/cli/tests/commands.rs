use std::path::PathBuf;
use std::process::Command;

use sessionml_cli::report::{AnalysisReport, RunReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sessionml"))
}

fn prog(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(format!("{name}.lml")).display().to_string()
}

fn run(args: &[&str]) -> (String, i32) {
    let out = bin().args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

#[test]
fn infer_prints_swap_sessions() {
    let (out, code) = run(&["infer", &prog("swap1")]);
    assert_eq!(code, 0);
    assert!(out.contains("swp : !int.?int.end\n"), "{out}");
    assert!(out.contains("~swp : ?int.!int.end\n"), "{out}");
}

#[test]
fn rejections_exit_one() {
    for name in ["aliasing_a", "aliasing_b", "deadlock_client", "reject_duality"] {
        let (out, code) = run(&["check", &prog(name)]);
        assert_eq!(code, 1, "{name}: {out}");
        assert!(out.contains("rejected ("), "{out}");
    }
}

#[test]
fn empty_and_missing_files_are_parse_rejections() {
    let dir = std::env::temp_dir().join(format!("sessionml-empty-{}", std::process::id()));
    std::fs::write(&dir, "").unwrap();
    let (out, code) = run(&["infer", "--json", dir.to_str().unwrap()]);
    std::fs::remove_file(&dir).unwrap();
    assert_eq!(code, 1);
    let r: AnalysisReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.verdict.category.as_deref(), Some("parse"));
    let (_, code) = run(&["infer", "/nonexistent/x.lml"]);
    assert_eq!(code, 1);
}

#[test]
fn check_reports_oracle_agreement() {
    let (out, code) = run(&["check", "--json", &prog("swap2")]);
    assert_eq!(code, 0);
    let r: AnalysisReport = serde_json::from_str(&out).unwrap();
    let o = r.oracle.unwrap();
    assert!(o.agrees);
    assert_eq!(o.outcome, "normalizes");
}

#[test]
fn tiny_budget_is_an_internal_failure() {
    let out = bin().args(["check", &prog("swap1")]).env("SESSIONML_BUDGET", "3").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn json_schema_rejects_unknown_fields() {
    let (out, _) = run(&["infer", "--json", &prog("swap1")]);
    let mut v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let back: AnalysisReport = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), v);
    v["extra"] = serde_json::json!(1);
    assert!(serde_json::from_value::<AnalysisReport>(v).is_err());
}

#[test]
fn all_stages_keeps_going() {
    let (out, _) = run(&["infer", "--json", &prog("aliasing_a")]);
    let first: AnalysisReport = serde_json::from_str(&out).unwrap();
    let (out, code) = run(&["infer", "--json", "--all-stages", &prog("aliasing_a")]);
    let all: AnalysisReport = serde_json::from_str(&out).unwrap();
    assert_eq!(code, 1);
    assert!(all.diagnostics.len() >= first.diagnostics.len());
    assert_eq!(all.verdict.category, first.verdict.category);
}

#[test]
fn run_is_clean_and_seeded() {
    let args = ["run", "--json", "--trace", "--seed", "5", "--schedules", "3", "--max-steps", "2000", &prog("swap2")];
    let (a, code) = run(&args);
    assert_eq!(code, 0);
    let (b, _) = run(&args);
    assert_eq!(a, b);
    let r: RunReport = serde_json::from_str(&a).unwrap();
    assert_eq!(r.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![5, 6, 7]);
    assert!(r.runs.iter().all(|r| r.clean() && !r.trace.is_empty()));
    assert!(r.runs[0].trace.iter().all(|l| l.split(", ").count() == 5));
}

#[test]
fn fair_scheduling_runs() {
    let (out, code) = run(&["run", "--fair", "--schedules", "2", &prog("two_clients")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("2/2 schedules clean\n"), "{out}");
}

#[test]
fn run_refuses_rejected_programs_unless_forced() {
    let (out, code) = run(&["run", &prog("deadlock_client")]);
    assert_eq!(code, 1);
    assert!(out.contains("--force"), "{out}");
    let (out, code) = run(&["run", "--force", &prog("deadlock_client")]);
    assert_eq!(code, 3, "{out}");
}

#[test]
fn trace_dumps_both_levels() {
    let (out, code) = run(&["trace", &prog("swap1")]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.starts_with("push | e | push(l1")), "{out}");
    let (out, code) = run(&["trace", "--behaviour", &prog("swap1")]);
    assert_eq!(code, 0);
    let steps: Vec<&str> = out.lines().filter(|l| l.contains(" | ")).collect();
    assert!(steps.iter().any(|l| l.trim_start().starts_with("Push | (l1:")), "{out}");
    assert!(steps.iter().all(|l| l.split(" | ").count() == 3));
}
