//! Seeded generator of small client/server programs.
//!
//! Each channel carries a random protocol. Servers follow it, and clients
//! follow it with optional mutations that break duality, linearity or the
//! stack discipline. About half the output is expected to be rejected.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
}

/// Protocol from the client's side.
#[derive(Clone, Debug)]
enum Proto {
    End,
    Send(Ty, Box<Proto>),
    Recv(Ty, Box<Proto>),
    /// The client selects among these labels.
    Choose(Vec<(&'static str, Proto)>),
}

const LABELS: [&str; 3] = ["A", "B", "C"];

#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub max_channels: usize,
    pub max_depth: usize,
    /// Probability of one client-side mutation.
    pub mutate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { max_channels: 3, max_depth: 4, mutate: 0.3 }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: SynthConfig,
    fresh: usize,
    mutations: usize,
}

/// A program generated from `seed`.
pub fn program(seed: u64, cfg: SynthConfig) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), cfg, fresh: 0, mutations: 0 };
    let n = g.rng.gen_range(1..=cfg.max_channels.max(1));
    let protos: Vec<Proto> = (0..n).map(|_| g.proto(cfg.max_depth)).collect();
    let mut out = String::new();
    for (i, p) in protos.iter().enumerate() {
        let body = g.server(p, "p");
        out.push_str(&format!(
            "let fun srv{i}(_) =\n  let val p = accept ch{i} ()\n  in {body}; srv{i} ()\nin spawn srv{i};\n"
        ));
    }
    let order: Vec<usize> = {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(&mut g.rng);
        v
    };
    let client = g.client_chain(&protos, &order, None);
    if g.rng.gen_bool(0.3) {
        out.push_str(&format!("spawn (fn _ => {client});\n"));
        let again = g.client_chain(&protos, &order, None);
        out.push_str(&again);
    } else {
        out.push_str(&client);
    }
    out.push('\n');
    out
}

impl Gen {
    fn ty(&mut self) -> Ty {
        if self.rng.gen_bool(0.6) {
            Ty::Int
        } else {
            Ty::Bool
        }
    }

    fn proto(&mut self, depth: usize) -> Proto {
        if depth == 0 {
            return Proto::End;
        }
        match self.rng.gen_range(0..10) {
            0 | 1 => Proto::End,
            2..=4 => Proto::Send(self.ty(), Box::new(self.proto(depth - 1))),
            5..=7 => Proto::Recv(self.ty(), Box::new(self.proto(depth - 1))),
            _ => {
                let k = self.rng.gen_range(1..=LABELS.len());
                Proto::Choose(LABELS[..k].iter().map(|l| (*l, self.proto(depth - 1))).collect())
            }
        }
    }

    fn lit(&mut self, t: Ty) -> String {
        match t {
            Ty::Int => self.rng.gen_range(0..100).to_string(),
            Ty::Bool => if self.rng.gen_bool(0.5) { "true" } else { "false" }.to_string(),
        }
    }

    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn server(&mut self, p: &Proto, ep: &str) -> String {
        match p {
            Proto::End => "()".into(),
            Proto::Send(_, k) => {
                let x = self.var();
                let rest = self.server(k, ep);
                format!("let val {x} = recv {ep} in {rest}")
            }
            Proto::Recv(t, k) => {
                let v = self.lit(*t);
                let rest = self.server(k, ep);
                format!("(send {ep} {v}; {rest})")
            }
            Proto::Choose(bs) => {
                let arms: Vec<String> = bs.iter().map(|(l, k)| format!("{l}: {}", self.server(k, ep))).collect();
                format!("case {ep} {{ {} }}", arms.join(", "))
            }
        }
    }

    fn mutate(&mut self) -> bool {
        if self.mutations == 0 && self.rng.gen_bool(self.cfg.mutate / 4.0) {
            self.mutations += 1;
            true
        } else {
            false
        }
    }

    /// Client for `p` on `ep`, continuing with `tail` once the protocol ends.
    fn client(&mut self, p: &Proto, ep: &str, tail: &str) -> String {
        if self.mutate() {
            match self.rng.gen_range(0..3) {
                // Extra output past the protocol.
                0 => return format!("(send {ep} 0; {})", self.client(p, ep, tail)),
                // Wrong payload type.
                1 => {
                    if let Proto::Send(t, k) = p {
                        let flipped = if *t == Ty::Int { Ty::Bool } else { Ty::Int };
                        let v = self.lit(flipped);
                        let rest = self.client(k, ep, tail);
                        return format!("(send {ep} {v}; {rest})");
                    }
                }
                // Skip the protocol entirely.
                _ => return tail.to_string(),
            }
        }
        match p {
            Proto::End => tail.to_string(),
            Proto::Send(t, k) => {
                let v = self.lit(*t);
                let rest = self.client(k, ep, tail);
                format!("(send {ep} {v}; {rest})")
            }
            Proto::Recv(_, k) => {
                let x = self.var();
                let rest = self.client(k, ep, tail);
                format!("let val {x} = recv {ep} in {rest}")
            }
            Proto::Choose(bs) => {
                if bs.len() > 1 && self.rng.gen_bool(0.5) {
                    let (l1, k1) = &bs[0];
                    let (l2, k2) = &bs[1];
                    let c = self.lit(Ty::Bool);
                    let a = self.client(k1, ep, tail);
                    let b = self.client(k2, ep, tail);
                    format!("(if {c} then (select {l1} {ep}; {a}) else (select {l2} {ep}; {b}))")
                } else {
                    let (l, k) = bs.choose(&mut self.rng).expect("non-empty choice");
                    let rest = self.client(k, ep, tail);
                    format!("(select {l} {ep}; {rest})")
                }
            }
        }
    }

    /// Open the channels in `order`; each one is either used before the
    /// next opens, or nests the remaining ones inside its protocol.
    fn client_chain(&mut self, protos: &[Proto], order: &[usize], outer: Option<&str>) -> String {
        let Some((&i, rest)) = order.split_first() else {
            return "()".into();
        };
        let ep = self.var();
        let nested = self.rng.gen_bool(0.4);
        let inner = if nested { self.client_chain(protos, rest, Some(&ep)) } else { "()".into() };
        // Touching an endpoint that is buried under a live one.
        let inner = match outer {
            Some(o) if self.mutate() => format!("(send {o} 1; {inner})"),
            _ => inner,
        };
        let body = self.client(&protos[i], &ep, &inner);
        let after = if nested { "()".into() } else { self.client_chain(protos, rest, outer) };
        format!("let val {ep} = request ch{i} () in ({body}; {after})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{analyze, Options};

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(program(7, SynthConfig::default()), program(7, SynthConfig::default()));
    }

    #[test]
    fn output_parses_and_mixes_verdicts() {
        let (mut yes, mut no) = (0, 0);
        for seed in 0..200 {
            let src = program(seed, SynthConfig::default());
            let a = analyze(&src, &Options::default());
            assert_ne!(a.category(), Some(crate::pipeline::Category::Parse), "{src}\n{:?}", a.diagnostics);
            if a.accepted() {
                yes += 1
            } else {
                no += 1
            }
        }
        assert!(yes > 50 && no > 10, "accepted {yes}, rejected {no}");
    }
}
