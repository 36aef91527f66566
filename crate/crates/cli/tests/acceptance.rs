//! Acceptance suite. Prints one PASS or FAIL line per criterion and fails
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sessionml_cli::report::{AnalysisReport, Status};
use sessionml_cli::{check_report, infer_report};
use sessionml_core::absint::{Explorer, Outcome};
use sessionml_core::constraint::well_formed;
use sessionml_core::infer::infer;
use sessionml_core::pipeline::{analyze, Analysis, Category, Options};
use sessionml_core::session::{infer_sessions, Stack};
use sessionml_core::syntax::{annotate, parse_program};
use sessionml_core::synth::{program, SynthConfig};
use sessionml_core::term::{ChoiceLabel, Session};
use sessionml_runtime::{run_schedules, Options as RunOptions, Program, RunOutcome};

/// Wall-clock limit for single-example criteria.
const TIME_LIMIT: Duration = Duration::from_secs(1);
/// Explorer state cap.
const STATE_BUDGET: usize = 1_000_000;
const MIN_CORPUS: usize = 30;
const MIN_RANDOM_PAIRS: usize = 500;
/// Seeds tried while collecting well-formed random pairs.
const MAX_RANDOM_SEEDS: u64 = 20_000;
/// Random accepted programs additionally checked for the size measure.
const MEASURE_RANDOM: usize = 200;
const SCHEDULES: usize = 100;
const MAX_STEPS: usize = 5_000;
const INTERNAL_BUDGET: usize = 500;
const HEAVYWEIGHT: &[&str] = &["swap1", "swap2", "db_library"];
const DUALITY_SEEDS: u64 = 20;

const SWAP1_REQUEST: &str = "!int.?int.end";
const SWAP1_ACCEPT: &str = "?int.!int.end";
const SWAP2_REQUEST: &str = "&{LEAD!: ?<?int.!int.end>.end, SWAP!: !int.?int.end}";
const SWAP2_ACCEPT: &str = "+{LEAD: !<?int.!int.end>.end, SWAP: ?int.!int.end}";

type Outcome_ = Result<String, String>;

fn programs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn path(name: &str) -> PathBuf {
    programs_dir().join(format!("{name}.lml"))
}

fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(programs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lml"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn accepted_corpus() -> Vec<(String, Analysis)> {
    corpus()
        .into_iter()
        .map(|(n, src)| (n, analyze(&src, &Options::default())))
        .filter(|(_, a)| a.accepted())
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> Result<(T, Duration), String> {
    let t = Instant::now();
    let v = f();
    let d = t.elapsed();
    ensure(d < TIME_LIMIT, || format!("took {d:?}, limit {TIME_LIMIT:?}"))?;
    Ok((v, d))
}

fn sessions(r: &AnalysisReport, chan: &str) -> (Option<String>, Option<String>) {
    r.channels.iter().find(|c| c.channel == chan).map(|c| (c.request.clone(), c.accept.clone())).unwrap_or_default()
}

fn swap_sessions() -> Outcome_ {
    let ((r, _), d) = timed(|| infer_report(&path("swap1"), false))?;
    ensure(r.verdict.status == Status::Accepted, || format!("rejected: {:?}", r.diagnostics))?;
    ensure(r.exit_code() == 0, || "exit code".into())?;
    let (req, acc) = sessions(&r, "swp");
    ensure(req.as_deref() == Some(SWAP1_REQUEST), || format!("swp : {req:?}"))?;
    ensure(acc.as_deref() == Some(SWAP1_ACCEPT), || format!("~swp : {acc:?}"))?;
    Ok(format!("swp : {SWAP1_REQUEST}, ~swp : {SWAP1_ACCEPT} in {d:?}"))
}

fn deadlock_rejected() -> Outcome_ {
    let ((r, _), d) = timed(|| infer_report(&path("deadlock_client"), false))?;
    ensure(r.verdict.status == Status::Rejected, || "accepted".into())?;
    ensure(r.verdict.category.as_deref() == Some("session"), || format!("category {:?}", r.verdict.category))?;
    let diag = r.diagnostics.first().ok_or("no diagnostic")?;
    ensure(diag.message.contains("stuck") && diag.message.contains("receive on endpoint"), || diag.message.clone())?;
    ensure(diag.span.is_some(), || "diagnostic has no span".into())?;
    Ok(format!("session stage, \"{}\" in {d:?}", diag.message.split(" [").next().unwrap_or("")))
}

fn delegation_structure() -> Outcome_ {
    let (r, a) = infer_report(&path("swap2"), false);
    let a = a.ok_or("unreadable")?;
    ensure(a.accepted(), || format!("rejected: {:?}", r.diagnostics))?;
    let (req, acc) = sessions(&r, "swp");
    ensure(req.as_deref() == Some(SWAP2_REQUEST), || format!("swp : {req:?}"))?;
    ensure(acc.as_deref() == Some(SWAP2_ACCEPT), || format!("~swp : {acc:?}"))?;
    // Structure: the coordinator selects SWAP or LEAD; LEAD delegates the
    // same session the client resumes; SWAP branches are dual.
    let chans = a.channel_sessions();
    let side = |accept: bool| chans.iter().find(|(e, _)| e.accept == accept).map(|(_, s)| s.clone()).ok_or("missing side");
    let (Session::Internal(coord), Session::External(client)) = (side(true)?, side(false)?) else {
        return Err("expected internal choice on ~swp and external on swp".into());
    };
    let c = a.constraints.as_ref().unwrap();
    let lead_out = coord.get(&ChoiceLabel::new("LEAD")).ok_or("no LEAD")?;
    let lead_in = client.branches.get(&ChoiceLabel::new("LEAD")).ok_or("no LEAD offer")?;
    let (Session::Deleg(eta1, k1), Session::Resume(eta2, k2)) = (lead_out, lead_in) else {
        return Err("LEAD branches are not a delegation pair".into());
    };
    ensure(eta1 == eta2 && **k1 == Session::End && **k2 == Session::End, || format!("{eta1} vs {eta2}"))?;
    let swap_out = coord.get(&ChoiceLabel::new("SWAP")).ok_or("no SWAP")?;
    let swap_in = client.branches.get(&ChoiceLabel::new("SWAP")).ok_or("no SWAP offer")?;
    ensure(sessionml_core::constraint::dual(c, swap_out, swap_in), || "SWAP branches not dual".into())?;
    ensure(**eta1 == swap_out.clone(), || format!("delegated {eta1} differs from coordinator SWAP {swap_out}"))?;
    Ok(format!("~swp : {SWAP2_ACCEPT}"))
}

fn aliasing() -> Outcome_ {
    let ((ra, _), da) = timed(|| infer_report(&path("aliasing_a"), false))?;
    let ((rb, _), db) = timed(|| infer_report(&path("aliasing_b"), false))?;
    ensure(ra.verdict.category.as_deref() == Some("well-formedness"), || format!("(a) {:?}", ra.verdict))?;
    ensure(ra.diagnostics.iter().any(|d| d.message.contains("Region-Consistent")), || "(a) not Region-Consistent".into())?;
    ensure(rb.verdict.category.as_deref() == Some("linearity"), || format!("(b) {:?}", rb.verdict))?;
    Ok(format!("(a) Region-Consistent in {da:?}, (b) linearity in {db:?}"))
}

fn soundness() -> Outcome_ {
    let corpus = accepted_corpus();
    ensure(corpus.len() >= MIN_CORPUS, || format!("only {} accepted corpus programs", corpus.len()))?;
    for (n, a) in &corpus {
        let out = a.oracle(STATE_BUDGET).unwrap();
        ensure(matches!(out, Ok(Outcome::Normalizes)), || format!("{n}: {out:?}"))?;
    }
    let (mut pairs, mut successes) = (0, 0);
    let mut seed = 0;
    while pairs < MIN_RANDOM_PAIRS && seed < MAX_RANDOM_SEEDS {
        let src = program(seed, SynthConfig::default());
        seed += 1;
        let (e, _) = annotate(&parse_program(&src).unwrap());
        let Ok(mut r) = infer(&e) else { continue };
        if well_formed(&r.constraints).is_err() {
            continue;
        }
        pairs += 1;
        if let Ok(si) = infer_sessions(&r.beh, &r.constraints, &mut r.supply, None) {
            successes += 1;
            let b = si.sigma.apply_beh(&r.beh);
            let out = Explorer::new(&si.constraints, STATE_BUDGET).normalizes(&Stack::new(), &b);
            ensure(matches!(out, Ok(Outcome::Normalizes)), || format!("seed {}: {out:?}\n{src}", seed - 1))?;
        }
    }
    ensure(pairs >= MIN_RANDOM_PAIRS, || format!("only {pairs} well-formed random pairs"))?;
    Ok(format!("{} corpus + {pairs} random pairs ({successes} inference successes), 0 disagreements", corpus.len()))
}

fn measure() -> Outcome_ {
    let mut checked = 0;
    let mut max_states = 0;
    let mut run = |name: &str, a: &Analysis| -> Result<(), String> {
        let (c, b) = (a.constraints.as_ref().unwrap(), a.behaviour.as_ref().unwrap());
        let mut ex = Explorer::new(c, STATE_BUDGET).with_measure_check();
        let out = ex.normalizes(&Stack::new(), b);
        ensure(out.is_ok(), || format!("{name}: {out:?}"))?;
        max_states = max_states.max(ex.states());
        checked += 1;
        Ok(())
    };
    for (n, a) in accepted_corpus() {
        run(&n, &a)?;
    }
    let mut seed = 0;
    let mut random = 0;
    while random < MEASURE_RANDOM && seed < MAX_RANDOM_SEEDS {
        let a = analyze(&program(seed, SynthConfig::default()), &Options::default());
        if a.accepted() {
            run(&format!("random seed {seed}"), &a)?;
            random += 1;
        }
        seed += 1;
    }
    ensure(max_states <= STATE_BUDGET, || format!("{max_states} states"))?;
    Ok(format!("{checked} explorations, measure strictly decreasing, max {max_states} states"))
}

fn run_corpus(heavy: bool) -> Vec<(String, Vec<RunOutcome>)> {
    accepted_corpus()
        .into_iter()
        .filter(|(n, _)| !heavy || HEAVYWEIGHT.contains(&n.as_str()))
        .map(|(n, a)| {
            let prog = Program::from_analysis(&a).unwrap();
            let opts = RunOptions {
                max_steps: MAX_STEPS,
                internal_budget: INTERNAL_BUDGET,
                heavyweight: heavy,
                state_budget: STATE_BUDGET,
                ..RunOptions::default()
            };
            (n, run_schedules(&prog, &opts, SCHEDULES))
        })
        .collect()
}

fn fidelity(light: &[(String, Vec<RunOutcome>)]) -> Outcome_ {
    let mut runs = 0;
    for (n, outs) in light {
        for o in outs {
            ensure(o.violations.is_empty(), || format!("{n} seed {}: {}", o.seed, o.violations[0]))?;
            ensure(o.unstacked_steps.is_empty(), || format!("{n} seed {}: not well stacked after step {}", o.seed, o.unstacked_steps[0]))?;
            runs += 1;
        }
    }
    let heavy = run_corpus(true);
    ensure(heavy.len() == HEAVYWEIGHT.len(), || format!("heavyweight examples missing: {}", heavy.len()))?;
    let mut checks = 0;
    for (n, outs) in &heavy {
        for o in outs {
            ensure(o.violations.is_empty(), || format!("{n} heavyweight seed {}: {}", o.seed, o.violations[0]))?;
            ensure(o.shadows_abandoned == 0, || format!("{n} seed {}: shadow abandoned", o.seed))?;
            checks += o.preservation_checks;
        }
    }
    ensure(checks > 0, || "no preservation checks ran".into())?;
    Ok(format!(
        "{} programs x {SCHEDULES} schedules ({runs} runs) clean; heavyweight on {} with {checks} normalization checks",
        light.len(),
        HEAVYWEIGHT.join(", ")
    ))
}

fn lock_freedom(light: &[(String, Vec<RunOutcome>)]) -> Outcome_ {
    let (mut premise, mut blocked_runs) = (0, 0);
    for (n, outs) in light {
        for o in outs {
            let c = &o.classification;
            if c.terminal && c.diverging.is_empty() && c.waiting.is_empty() {
                premise += 1;
                ensure(c.blocked.is_empty(), || format!("{n} seed {}: B = {:?}", o.seed, c.blocked))?;
            }
            if !c.blocked.is_empty() {
                blocked_runs += 1;
                ensure(c.blocked_justified, || format!("{n} seed {}: B = {:?} not justified by D or W", o.seed, c.blocked))?;
            }
        }
    }
    ensure(premise > 0, || "no run met the premise".into())?;
    Ok(format!("{premise} terminal runs with empty D? and W all have empty B; {blocked_runs} runs with B justified"))
}

fn duality_confluence() -> Outcome_ {
    let mut n = 0;
    for (name, src) in corpus() {
        let base = analyze(&src, &Options::default());
        let key = base.canonical_report();
        for d in 0..DUALITY_SEEDS {
            let a = analyze(&src, &Options { duality_seed: Some(d), ..Options::default() });
            ensure(a.category() == base.category(), || format!("{name} seed {d}: {:?}", a.category()))?;
            ensure(a.canonical_report() == key, || format!("{name} seed {d}: reports differ"))?;
        }
        n += 1;
    }
    Ok(format!("{n} corpus programs x {DUALITY_SEEDS} rule orders agree up to renaming"))
}

fn cli_contract() -> Outcome_ {
    for (n, _) in corpus() {
        let r = check_report(&path(&n), false);
        let json = serde_json::to_string(&r).map_err(|e| e.to_string())?;
        let back: AnalysisReport = serde_json::from_str(&json).map_err(|e| format!("{n}: {e}"))?;
        ensure(back == r, || format!("{n}: JSON does not round trip"))?;
        let expected = match r.verdict.category.as_deref().and_then(Category::parse) {
            None => 0,
            Some(Category::Internal) => 2,
            Some(_) => 1,
        };
        ensure(r.exit_code() == expected, || format!("{n}: exit {}", r.exit_code()))?;
    }
    Ok("JSON reports round trip and exit codes follow the verdict".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, what: &str, f: &mut dyn FnMut() -> Outcome_| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match r {
            Ok(m) => println!("PASS [{id}] {what}: {m} ({:.2?})", t.elapsed()),
            Err(m) => {
                failed += 1;
                println!("FAIL [{id}] {what}: {m}")
            }
        }
    };
    report("1", "swap service sessions", &mut swap_sessions);
    report("2", "deadlocking client rejected", &mut deadlock_rejected);
    report("3", "delegation sessions", &mut delegation_structure);
    report("4", "aliasing counterexamples", &mut aliasing);
    report("5", "inference soundness oracle", &mut soundness);
    report("6", "termination measure and budget", &mut measure);
    let light = run_corpus(false);
    report("7", "runtime fidelity", &mut || fidelity(&light));
    report("8", "partial lock freedom", &mut || lock_freedom(&light));
    report("9", "duality confluence", &mut duality_confluence);
    report("cli", "report schema and exit codes", &mut cli_contract);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
