use proptest::prelude::*;

use sessionml_core::pipeline::{analyze, Options as AOptions};
use sessionml_core::synth::{program, SynthConfig};
use sessionml_runtime::{Options, Policy, Program, System};

fn accepted(seed: u64) -> Option<Program> {
    let a = analyze(&program(seed, SynthConfig::default()), &AOptions::default());
    Program::from_analysis(&a).ok()
}

fn opts(seed: u64, fair: bool) -> Options {
    Options {
        seed,
        max_steps: 3_000,
        internal_budget: 200,
        policy: if fair { Policy::Fair } else { Policy::Uniform },
        keep_trace: true,
        ..Options::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn accepted_programs_run_clean(p in any::<u64>(), s in any::<u64>(), fair: bool) {
        let Some(prog) = accepted(p) else { return Ok(()) };
        let out = System::new(&prog, opts(s, fair)).run();
        prop_assert!(out.violations.is_empty(), "{:?}", out.violations);
        prop_assert!(out.unstacked_steps.is_empty());
        prop_assert!(out.classification.lock_free(), "{:?}", out.classification);
        prop_assert!(out.classification.blocked_justified, "{:?}", out.classification);
    }

    #[test]
    fn identical_seeds_give_identical_traces(p in any::<u64>(), s in any::<u64>()) {
        let Some(prog) = accepted(p) else { return Ok(()) };
        let a = System::new(&prog, opts(s, false)).run();
        let b = System::new(&prog, opts(s, false)).run();
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn session_init_never_reuses_an_endpoint(p in any::<u64>(), s in any::<u64>()) {
        let Some(prog) = accepted(p) else { return Ok(()) };
        let out = System::new(&prog, opts(s, false)).run();
        let mut eps: Vec<String> = out.trace.iter().filter(|t| t.rule == "RInit").flat_map(|t| t.endpoints.clone()).collect();
        let n = eps.len();
        eps.sort();
        eps.dedup();
        prop_assert_eq!(eps.len(), n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn heavyweight_preservation_holds(p in any::<u64>(), s in any::<u64>()) {
        let Some(prog) = accepted(p) else { return Ok(()) };
        let out = System::new(&prog, Options { heavyweight: true, ..opts(s, false) }).run();
        prop_assert!(out.violations.is_empty(), "{:?}", out.violations);
    }
}
