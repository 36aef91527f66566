//! Command-line driver: argument parsing, command execution and reports.

pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sessionml_core::absint::{Explorer, DEFAULT_BUDGET};
use sessionml_core::pipeline::{analyze, analyze_traced, Analysis, Options};
use sessionml_core::session::Stack;
use sessionml_runtime::{run_schedules, Options as RunOptions, Policy, Program};

use report::{AnalysisReport, RunReport, RunSummary};

/// Environment variable overriding the explorer's state cap.
pub const BUDGET_VAR: &str = "SESSIONML_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "sessionml", version, about = "Session type inference for a concurrent ML core")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer channel sessions.
    Infer(AnalysisArgs),
    /// Infer, then confirm the verdict with the exhaustive explorer.
    Check(AnalysisArgs),
    /// Execute under seeded schedules with the session monitor.
    Run(RunArgs),
    /// Dump the session inference trace, or the explorer trace.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    pub path: PathBuf,
    /// Emit the JSON report.
    #[arg(long)]
    pub json: bool,
    /// Continue past the first failing stage.
    #[arg(long)]
    pub all_stages: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1)]
    pub schedules: usize,
    /// Round-robin instead of uniform random scheduling.
    #[arg(long)]
    pub fair: bool,
    /// Run even if the analysis rejects the program.
    #[arg(long)]
    pub force: bool,
    /// Also re-check normalization of every process after each step.
    #[arg(long)]
    pub heavyweight: bool,
    /// Print the event log of every run.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub path: PathBuf,
    /// Trace the explorer on the final behaviour instead of inference.
    #[arg(long)]
    pub behaviour: bool,
}

/// Text to print and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: i32,
}

/// State cap from `SESSIONML_BUDGET`, or the default.
pub fn state_budget() -> usize {
    std::env::var(BUDGET_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

fn load(path: &PathBuf) -> Result<String, AnalysisReport> {
    std::fs::read_to_string(path).map_err(|e| AnalysisReport::unreadable(&path.display().to_string(), &e))
}

fn render(r: &AnalysisReport, json: bool) -> Output {
    let stdout = if json { serde_json::to_string_pretty(r).expect("serializable") + "\n" } else { r.render() };
    Output { stdout, code: r.exit_code() }
}

pub fn infer_report(path: &PathBuf, all_stages: bool) -> (AnalysisReport, Option<Analysis>) {
    match load(path) {
        Ok(src) => {
            let a = analyze(&src, &Options { all_stages, ..Options::default() });
            (AnalysisReport::new(&path.display().to_string(), &a), Some(a))
        }
        Err(r) => (r, None),
    }
}

pub fn check_report(path: &PathBuf, all_stages: bool) -> AnalysisReport {
    let (r, a) = infer_report(path, all_stages);
    match a {
        // Inference is incomplete, so only acceptance must be confirmed.
        Some(a) if a.accepted() => r.with_oracle(true, a.oracle(state_budget())),
        _ => r,
    }
}

pub fn run_report(args: &RunArgs) -> Result<RunReport, Output> {
    let (r, a) = infer_report(&args.path, false);
    let a = a.ok_or_else(|| render(&r, false))?;
    let prog = match Program::from_analysis(&a) {
        Ok(p) => p,
        Err(_) if args.force => Program::forced(&a).ok_or_else(|| render(&r, false))?,
        Err(e) => {
            let mut out = render(&r, false);
            out.stdout.push_str(&format!("{e}; use --force to run anyway\n"));
            return Err(out);
        }
    };
    let opts = RunOptions {
        seed: args.seed,
        max_steps: args.max_steps,
        policy: if args.fair { Policy::Fair } else { Policy::Uniform },
        heavyweight: args.heavyweight,
        state_budget: state_budget(),
        keep_trace: args.trace,
        ..RunOptions::default()
    };
    let runs = run_schedules(&prog, &opts, args.schedules);
    Ok(RunReport {
        file: args.path.display().to_string(),
        forced: !a.accepted(),
        runs: runs.iter().map(RunSummary::from).collect(),
    })
}

pub fn trace(args: &TraceArgs) -> Output {
    let src = match load(&args.path) {
        Ok(s) => s,
        Err(r) => return render(&r, false),
    };
    let mut lines = String::new();
    if !args.behaviour {
        let mut sink = |rule: &str, st: &Stack, b: &sessionml_core::term::Beh| {
            lines.push_str(&format!("{rule} | {st} | {}\n", b.simplified()));
        };
        let a = analyze_traced(&src, &Options::default(), Some(&mut sink));
        let r = AnalysisReport::new(&args.path.display().to_string(), &a);
        let mut out = render(&r, false);
        out.stdout = lines + &out.stdout;
        return out;
    }
    let a = analyze(&src, &Options::default());
    let r = AnalysisReport::new(&args.path.display().to_string(), &a);
    let (Some(c), Some(b)) = (&a.constraints, &a.behaviour) else {
        return render(&r, false);
    };
    let mut sink = |depth: usize, rule: sessionml_core::absint::Rule, cfg: &sessionml_core::absint::Config| {
        lines.push_str(&format!("{}{rule} | {cfg}\n", "  ".repeat(depth)));
    };
    let res = Explorer::new(c, state_budget()).with_sink(&mut sink).normalizes(&Stack::new(), b);
    let r = r.with_oracle(a.accepted(), Some(res));
    let mut out = render(&r, false);
    out.stdout = lines + &out.stdout;
    out
}

pub fn execute(cli: &Cli) -> Output {
    match &cli.command {
        Command::Infer(a) => render(&infer_report(&a.path, a.all_stages).0, a.json),
        Command::Check(a) => render(&check_report(&a.path, a.all_stages), a.json),
        Command::Run(args) => match run_report(args) {
            Ok(r) => Output {
                stdout: if args.json { serde_json::to_string_pretty(&r).expect("serializable") + "\n" } else { r.render() },
                code: r.exit_code(),
            },
            Err(o) => o,
        },
        Command::Trace(args) => trace(args),
    }
}
