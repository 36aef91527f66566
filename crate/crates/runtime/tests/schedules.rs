use std::path::PathBuf;

use sessionml_core::pipeline::{analyze, Options as AOptions};
use sessionml_core::term::{Session, Type};
use sessionml_runtime::{run_schedules, Options, Policy, Program, System, ViolationKind};

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(format!("{name}.lml"));
    std::fs::read_to_string(p).unwrap()
}

fn program(src: &str) -> Program {
    let a = analyze(src, &AOptions::default());
    assert!(a.accepted(), "{:?}", a.diagnostics);
    Program::from_analysis(&a).unwrap()
}

#[test]
fn swap_examples_run_clean_under_many_schedules() {
    for name in ["swap1", "swap2"] {
        let prog = program(&corpus(name));
        let opts = Options { max_steps: 2_000, internal_budget: 200, ..Options::default() };
        for out in run_schedules(&prog, &opts, 100) {
            assert!(out.violations.is_empty(), "{name} seed {}: {:?}", out.seed, out.violations);
            assert!(out.unstacked_steps.is_empty(), "{name} seed {}", out.seed);
            assert!(out.classification.lock_free(), "{name} seed {}: {:?}", out.seed, out.classification);
        }
    }
}

#[test]
fn fair_policy_also_runs_clean() {
    let prog = program(&corpus("swap1"));
    let opts = Options { max_steps: 2_000, internal_budget: 200, policy: Policy::Fair, ..Options::default() };
    for out in run_schedules(&prog, &opts, 5) {
        assert!(out.clean(), "{:?}", out.violations);
    }
}

#[test]
fn corrupted_session_is_caught_by_the_monitor() {
    let mut prog = program("spawn (fn _ => let val p = accept c () in recv p); let val q = request c () in send q 1");
    for s in prog.sessions.values_mut() {
        if let Session::Out(_, k) = s {
            *s = Session::out(Type::Bool, (**k).clone());
        }
    }
    let out = System::new(&prog, Options::default()).run();
    assert!(out.violations.iter().any(|v| v.kind == ViolationKind::Fidelity), "{:?}", out.violations);
}

#[test]
fn pure_program_finishes() {
    let prog = program("let fun f(n) = if n == 0 then 1 else n * f (n - 1) in f 5");
    let out = System::new(&prog, Options { keep_trace: true, ..Options::default() }).run();
    assert!(out.clean());
    assert_eq!(out.classification.finished, vec![0]);
    assert!(out.trace.iter().all(|t| t.pids == vec![0]));
}

#[test]
fn lone_accept_is_waiting() {
    let prog = program("accept c ()");
    let out = System::new(&prog, Options::default()).run();
    assert_eq!(out.classification.waiting, vec![0]);
    assert!(out.classification.terminal);
    assert!(out.clean());
}

#[test]
fn endless_loop_is_diverging() {
    let prog = program("let fun f(x) = f x in f ()");
    let out = System::new(&prog, Options { max_steps: 500, internal_budget: 100, ..Options::default() }).run();
    assert_eq!(out.classification.diverging, vec![0]);
    assert!(out.clean());
}

#[test]
fn the_same_seed_gives_the_same_trace() {
    let prog = program(&corpus("swap2"));
    let opts = Options { seed: 7, max_steps: 500, internal_budget: 50, keep_trace: true, ..Options::default() };
    let a = System::new(&prog, opts.clone()).run();
    let b = System::new(&prog, opts).run();
    assert_eq!(a.trace, b.trace);
    assert!(!a.trace.is_empty());
}

#[test]
fn each_init_opens_a_fresh_session() {
    let prog = program(&corpus("swap1"));
    let opts = Options { max_steps: 2_000, internal_budget: 50, keep_trace: true, ..Options::default() };
    let out = System::new(&prog, opts).run();
    let inits: Vec<_> = out.trace.iter().filter(|t| t.rule == "RInit").map(|t| t.endpoints[0].clone()).collect();
    let mut uniq = inits.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(inits.len(), uniq.len());
    assert!(inits.len() >= 2);
}

#[test]
fn heavyweight_mode_preserves_normalization() {
    for name in ["swap1", "swap2", "delegate_simple"] {
        let prog = program(&corpus(name));
        let opts = Options { max_steps: 400, internal_budget: 50, heavyweight: true, ..Options::default() };
        for out in run_schedules(&prog, &opts, 10) {
            assert!(out.violations.is_empty(), "{name} seed {}: {:?}", out.seed, out.violations);
        }
    }
}

#[test]
fn trace_lines_have_five_fields() {
    let prog = program(&corpus("echo"));
    let out = System::new(&prog, Options { keep_trace: true, max_steps: 300, ..Options::default() }).run();
    for t in &out.trace {
        assert_eq!(t.to_string().split(", ").count(), 5, "{t}");
    }
}
