use super::*;
use crate::infer::infer;
use crate::syntax::{annotate, parse_program};

fn program(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../programs/{name}.lml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn si(src: &str) -> Result<SessionInference, SessionError> {
    let (e, _) = annotate(&parse_program(src).unwrap());
    let mut r = infer(&e).unwrap();
    infer_sessions(&r.beh, &r.constraints, &mut r.supply, None)
}

fn channel(r: &SessionInference, end: &str) -> String {
    r.constraints.channels().iter().find(|(e, _)| e.to_string() == end).map(|(_, s)| s.to_string()).unwrap()
}

fn shape(s: &str) -> String {
    // Payload type variables are renamed away.
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == 'a' && chars.peek().is_some_and(|d| d.is_ascii_digit()) {
            while chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                chars.next();
            }
            out.push('T');
        } else {
            out.push(c);
        }
    }
    out
}

#[test]
fn swap1_has_send_receive_shapes() {
    let r = si(&program("swap1")).unwrap();
    assert_eq!(shape(&channel(&r, "swp")), "!T.?T.end");
    assert_eq!(shape(&channel(&r, "~swp")), "?T.!T.end");
}

#[test]
fn swap2_resolves_choices() {
    let r = si(&program("swap2")).unwrap();
    assert!(r.constraints.choices().is_empty());
    let req = channel(&r, "swp");
    assert!(req.starts_with("&{LEAD!: ?<"), "{req}");
    assert!(channel(&r, "~swp").starts_with("+{LEAD: !<"));
}

#[test]
fn out_of_order_receive_is_stuck() {
    let e = si(&program("deadlock_client")).unwrap_err();
    assert_eq!(e.kind, SessionErrorKind::Stuck);
    assert!(e.message.contains("receive"));
}

#[test]
fn reused_endpoint_function_is_not_linear() {
    let e = si(&program("aliasing_b")).unwrap_err();
    assert_eq!(e.kind, SessionErrorKind::Linearity);
    assert!(e.label.is_some());
}

#[test]
fn unused_endpoint_closes_to_end() {
    let r = si("let val p = request c () in ()").unwrap();
    assert_eq!(channel(&r, "c"), "end");
}

#[test]
fn conditional_selection_offers_both_labels() {
    let r = si("let val p = request c () in if true then select A p else select B p").unwrap();
    let s = channel(&r, "c");
    assert!(s.contains('A') && s.contains('B'), "{s}");
}

#[test]
fn offered_branches_must_agree_on_the_rest() {
    let r = si("let val p = accept c () in case p { A: send p 1, B: send p 2 }").unwrap();
    assert_eq!(shape(&channel(&r, "~c")), "&{A!: !T.end, B!: !T.end}");
}

#[test]
fn two_resumes_on_one_endpoint_receive_two_sessions() {
    let src = "let val p = accept c () in let val q = resume p in let val r = resume p in ()";
    let r = si(src).unwrap();
    assert_eq!(channel(&r, "~c"), "?<end>.?<end>.end");
}

#[test]
fn choice_resolution_closes_nested_variables() {
    let r = si(&program("swap2")).unwrap();
    let sigma = resolve_choices(&r.constraints).unwrap();
    let s = r.constraints.channels().values().next().unwrap();
    assert_eq!(&sigma.apply(s), s);
}
