use super::*;

fn program(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../programs/{name}.lml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn run(name: &str) -> Analysis {
    analyze(&program(name), &Options::default())
}

fn sessions(a: &Analysis) -> Vec<String> {
    a.channel_sessions().iter().map(|(e, s)| format!("{e} : {s}")).collect()
}

fn label(a: &Analysis, n: u32) -> String {
    a.label_sessions().iter().find(|(l, _)| l.to_string() == format!("l{n}")).map(|(_, s)| s.to_string()).unwrap()
}

#[test]
fn swap1_sessions_are_exact() {
    let a = run("swap1");
    assert!(a.accepted(), "{:?}", a.diagnostics);
    assert_eq!(sessions(&a), ["swp : !int.?int.end", "~swp : ?int.!int.end"]);
    assert_eq!(label(&a, 3), "!int.?int.end");
    assert!(a.oracle(1_000_000).unwrap().unwrap().is_yes());
}

#[test]
fn swap2_delegates_the_partner_session() {
    let a = run("swap2");
    assert!(a.accepted(), "{:?}", a.diagnostics);
    assert_eq!(
        sessions(&a),
        [
            "swp : &{LEAD!: ?<?int.!int.end>.end, SWAP!: !int.?int.end}",
            "~swp : +{LEAD: !<?int.!int.end>.end, SWAP: ?int.!int.end}",
        ]
    );
    assert!(a.oracle(1_000_000).unwrap().unwrap().is_yes());
}

#[test]
fn deadlock_is_a_session_error_at_the_receive() {
    let a = run("deadlock_client");
    assert_eq!(a.category(), Some(Category::Session));
    let d = &a.diagnostics[0];
    assert!(d.message.contains("receive on endpoint l3"), "{d}");
    assert!(d.span.is_some());
}

#[test]
fn aliasing_through_a_conditional_is_ill_formed() {
    let a = run("aliasing_a");
    assert_eq!(a.category(), Some(Category::WellFormedness));
    assert!(a.diagnostics[0].message.contains("Region-Consistent"));
}

#[test]
fn reopening_a_live_endpoint_breaks_linearity() {
    let a = run("aliasing_b");
    assert_eq!(a.category(), Some(Category::Linearity));
    assert!(a.diagnostics[0].message.contains("opened twice"));
}

#[test]
fn empty_source_is_a_parse_error() {
    let a = analyze("", &Options::default());
    assert_eq!(a.category(), Some(Category::Parse));
    assert!(!a.accepted());
}

#[test]
fn type_errors_are_ml_type() {
    let a = analyze("1 + true", &Options::default());
    assert_eq!(a.category(), Some(Category::MlType));
    assert!(!a.diagnostics[0].message.starts_with("1:"));
}

#[test]
fn all_stages_continues_past_well_formedness() {
    let a = analyze(&program("aliasing_a"), &Options { all_stages: true, ..Options::default() });
    assert_eq!(a.category(), Some(Category::WellFormedness));
    assert!(a.sessions.is_some() || a.diagnostics.len() > 2);
}

#[test]
fn duality_seeds_give_the_same_sessions() {
    let base = sessions(&run("swap2"));
    for seed in 0..5 {
        let a = analyze(&program("swap2"), &Options { duality_seed: Some(seed), ..Options::default() });
        assert_eq!(sessions(&a), base);
    }
}

#[test]
fn canonical_renames_by_first_occurrence() {
    assert_eq!(canonical("!a9.?a3.s40 a9 l7 ba1"), "!a1.?a2.s1 a1 l7 ba1");
}

#[test]
fn category_names_round_trip() {
    for c in [Category::Parse, Category::MlType, Category::WellFormedness, Category::Linearity, Category::Session, Category::Duality, Category::Internal] {
        assert_eq!(Category::parse(c.as_str()), Some(c));
    }
}

/// Expected category of every program that must be rejected.
const REJECTED: &[(&str, Category)] = &[
    ("aliasing_a", Category::WellFormedness),
    ("aliasing_b", Category::Linearity),
    ("deadlock_client", Category::Session),
    ("reject_duality", Category::Duality),
    ("reject_out_of_order", Category::Session),
    ("reject_payload_type", Category::WellFormedness),
];

#[test]
fn corpus_outcomes() {
    let dir = format!("{}/../../programs", env!("CARGO_MANIFEST_DIR"));
    let mut accepted = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let a = analyze(&std::fs::read_to_string(&path).unwrap(), &Options::default());
        match REJECTED.iter().find(|(n, _)| *n == name) {
            Some((_, cat)) => assert_eq!(a.category(), Some(*cat), "{name}: {:?}", a.diagnostics),
            None => {
                assert!(a.accepted(), "{name}: {:?}", a.diagnostics);
                assert!(a.oracle(1_000_000).unwrap().unwrap().is_yes(), "{name}");
                accepted += 1;
            }
        }
    }
    assert!(accepted >= 30, "only {accepted} accepted programs");
}

#[test]
fn unrelated_payloads_stay_polymorphic() {
    // The server ignores what it receives, so both payload types are fine.
    let src = "let fun srv(_) = let val p = accept c () val x = recv p in srv ()
               in spawn srv;
               let val q = request c () in send q true;
               let val p = request c () in send p 1";
    let a = analyze(src, &Options::default());
    assert!(a.accepted(), "{:?}", a.diagnostics);
    assert_eq!(canonical(&sessions(&a).join("\n")), "c : !a1.end\n~c : ?a2.end");
}

#[test]
fn agreeing_payloads_resolve() {
    let src = "let fun srv(_) = let val p = accept c () val x = recv p in srv ()
               in spawn srv;
               let val q = request c () in send q 2;
               let val p = request c () in send p 1";
    let a = analyze(src, &Options::default());
    assert_eq!(sessions(&a), vec!["c : !int.end", "~c : ?int.end"]);
}
