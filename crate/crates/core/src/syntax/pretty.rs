//! Source printer whose output parses back to the same tree.

use super::ast::{Const, Expr, ExprKind, Prim};

pub fn pretty(e: &Expr) -> String {
    let mut s = String::new();
    go(e, &mut s);
    s
}

fn konst(c: &Const, out: &mut String) {
    match c {
        Const::Unit => out.push_str("()"),
        Const::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Const::Int(n) => out.push_str(&n.to_string()),
        Const::Prim(p) => match p.binop_symbol() {
            Some(op) => {
                out.push('(');
                out.push_str(op);
                out.push(')');
            }
            None => out.push_str(match p {
                Prim::Not => "not",
                Prim::Fst => "fst",
                _ => "snd",
            }),
        },
        Const::Request { chan, .. } => {
            out.push_str("(request ");
            out.push_str(chan.as_str());
            out.push(')');
        }
        Const::Accept { chan, .. } => {
            out.push_str("(accept ");
            out.push_str(chan.as_str());
            out.push(')');
        }
        Const::Send => out.push_str("send"),
        Const::Recv => out.push_str("recv"),
        Const::Select(l) => {
            out.push_str("(select ");
            out.push_str(l.as_str());
            out.push(')');
        }
        Const::Deleg => out.push_str("deleg"),
        Const::Resume(_) => out.push_str("resume"),
    }
}

fn binder(x: &Option<super::ast::Name>) -> &str {
    x.as_deref().unwrap_or("_")
}

fn go(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Const(c) => konst(c, out),
        ExprKind::Pair(a, b) => {
            out.push('(');
            go(a, out);
            out.push_str(", ");
            go(b, out);
            out.push(')');
        }
        ExprKind::App(f, x) => {
            if let (ExprKind::Const(c), ExprKind::Pair(a, b)) = (&f.kind, &x.kind) {
                let sym = match c {
                    Const::Prim(p) => p.binop_symbol(),
                    Const::Send => Some("send"),
                    Const::Deleg => Some("deleg"),
                    _ => None,
                };
                if let Some(sym) = sym {
                    out.push('(');
                    if matches!(c, Const::Prim(_)) {
                        go(a, out);
                        out.push(' ');
                        out.push_str(sym);
                        out.push(' ');
                        go(b, out);
                    } else {
                        out.push_str(sym);
                        out.push(' ');
                        go(a, out);
                        out.push(' ');
                        go(b, out);
                    }
                    out.push(')');
                    return;
                }
            }
            out.push('(');
            go(f, out);
            out.push(' ');
            go(x, out);
            out.push(')');
        }
        ExprKind::Lam(x, b) => {
            out.push_str("(fn ");
            out.push_str(binder(x));
            out.push_str(" => ");
            go(b, out);
            out.push(')');
        }
        ExprKind::Fix(f, x, b) => {
            out.push_str("(fix ");
            out.push_str(f);
            out.push(' ');
            out.push_str(binder(x));
            out.push_str(" => ");
            go(b, out);
            out.push(')');
        }
        ExprKind::Let(x, a, b) => {
            out.push_str("(let val ");
            out.push_str(binder(x));
            out.push_str(" = ");
            go(a, out);
            out.push_str(" in ");
            go(b, out);
            out.push(')');
        }
        ExprKind::If(c, a, b) => {
            out.push_str("(if ");
            go(c, out);
            out.push_str(" then ");
            go(a, out);
            out.push_str(" else ");
            go(b, out);
            out.push(')');
        }
        ExprKind::Spawn(a) => {
            out.push_str("(spawn ");
            go(a, out);
            out.push(')');
        }
        ExprKind::Match(s, bs) => {
            out.push_str("(case ");
            go(s, out);
            out.push_str(" { ");
            for (i, (l, b)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(l.as_str());
                out.push_str(": ");
                go(b, out);
            }
            out.push_str(" })");
        }
        ExprKind::Endpoint(p) => out.push_str(&format!("<{p}>")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn reparses_to_same_tree() {
        for src in [
            "let val p = request swp () in send p 1; recv p",
            "case p { SWAP: send p x; recv p, LEAD: 1 + 2 * 3 }",
            "let fun f(x) = if x < 1 then 0 else f (x - 1) in f 3",
            "spawn (fn _ => (select A q; deleg q r))",
            "(+) (fst (1, 2), snd (3, 4))",
        ] {
            let e = parse_program(src).unwrap();
            let printed = pretty(&e);
            assert_eq!(parse_program(&printed).unwrap(), e, "{printed}");
        }
    }
}
