//! Seeded generator of small correct methods, used to grow mutation
//! corpora without external data. Methods mix declarations, branches,
//! loops, calls, and arithmetic so that every mutation kind finds sites.

use crate::lang::{parse, render};
use crate::rng::Rng;
use std::collections::BTreeSet;

const NAME_PARTS: [&str; 24] = [
    "count", "value", "total", "limit", "index", "size", "item", "max", "min", "base", "offset",
    "span", "depth", "width", "scale", "left", "right", "acc", "step", "rate", "bound", "mark",
    "gap", "peak",
];

const VERBS: [&str; 12] = [
    "get", "compute", "update", "merge", "apply", "scan", "fold", "check", "clamp", "mix",
    "track", "probe",
];

const RECEIVERS: [&str; 6] = ["helper", "state", "util", "store", "ctx", "sink"];

const CALLEES: [&str; 8] = [
    "push", "reset", "emit", "record", "observe", "combine", "next", "advance",
];

const REL_OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];
const ARITH_OPS: [&str; 4] = ["+", "-", "*", "/"];

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn camel_ident(rng: &mut Rng) -> String {
    let first = *rng.choose(&NAME_PARTS);
    if rng.next_below(2) == 0 {
        let second = *rng.choose(&NAME_PARTS);
        format!("{}{}", first, capitalize(second))
    } else {
        first.to_string()
    }
}

fn distinct_idents(rng: &mut Rng, n: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    while out.len() < n {
        let cand = camel_ident(rng);
        if !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}

struct Draft {
    numeric_names: Vec<String>,
    statements: Vec<String>,
}

impl Draft {
    fn num(&self, rng: &mut Rng) -> String {
        self.numeric_names[rng.next_below(self.numeric_names.len())].clone()
    }
}

/// Generate `count` distinct methods. Every result parses; distinctness is
/// modulo canonical rendering.
pub fn synth_seed_methods(count: usize, seed: u64) -> Vec<String> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        assert!(
            attempts < count * 200 + 2000,
            "seed-method generator failed to reach {} distinct methods",
            count
        );
        let src = gen_method(&mut rng);
        let ast = match parse(&src) {
            Ok(a) => a,
            Err(e) => unreachable!("generated method failed to parse: {} in {}", e, src),
        };
        if seen.insert(render(&ast)) {
            out.push(src);
        }
    }
    out
}

fn gen_method(rng: &mut Rng) -> String {
    let modifier = *rng.choose(&["", "public ", "private ", "public static ", "static "]);
    let ret_ty = *rng.choose(&["int", "long", "double", "boolean"]);
    let name = format!("{}{}", rng.choose(&VERBS), capitalize(&camel_ident(rng)));

    let n_params = 1 + rng.next_below(3);
    let param_names = distinct_idents(rng, n_params + 2);
    let param_ty = *rng.choose(&["int", "int", "long", "double"]);
    let params: Vec<String> = param_names[..n_params]
        .iter()
        .map(|p| format!("{} {}", param_ty, p))
        .collect();

    let local = &param_names[n_params];
    let flag = format!("{}Flag", param_names[n_params + 1]);

    let mut draft = Draft {
        numeric_names: param_names[..n_params].to_vec(),
        statements: Vec::new(),
    };

    // A numeric local seeded from a parameter or literal.
    let init = match rng.next_below(3) {
        0 => format!("{}", rng.next_below(10)),
        1 => draft.num(rng),
        _ => {
            let a = draft.num(rng);
            let op = *rng.choose(&ARITH_OPS);
            format!("{} {} {}", a, op, 1 + rng.next_below(9))
        }
    };
    draft
        .statements
        .push(format!("{} {} = {};", param_ty, local, init));
    draft.numeric_names.push(local.clone());

    // Boolean locals; flips need literal sites, so most methods get one.
    let has_flag = rng.next_below(10) < 7;
    if has_flag {
        let lit = *rng.choose(&["true", "false"]);
        draft.statements.push(format!("boolean {} = {};", flag, lit));
    }
    if rng.next_below(10) < 4 {
        let lit = *rng.choose(&["true", "false"]);
        draft
            .statements
            .push(format!("boolean {}Seen = {};", local, lit));
    }

    // A branch with a relational (sometimes compound) condition.
    if rng.next_below(10) < 8 {
        let a = draft.num(rng);
        let rel = *rng.choose(&REL_OPS);
        let b = if rng.next_below(2) == 0 {
            draft.num(rng)
        } else {
            format!("{}", rng.next_below(100))
        };
        let cond = if rng.next_below(3) == 0 {
            let c = draft.num(rng);
            let rel2 = *rng.choose(&REL_OPS);
            let join = *rng.choose(&["&&", "||"]);
            format!("{} {} {} {} {} {} 0", a, rel, b, join, c, rel2)
        } else {
            format!("{} {} {}", a, rel, b)
        };
        let target = draft.num(rng);
        let src_n = draft.num(rng);
        let op = *rng.choose(&ARITH_OPS);
        let body = format!("{} = {} {} {};", target, src_n, op, 1 + rng.next_below(5));
        if rng.next_below(3) == 0 {
            let alt_t = draft.num(rng);
            draft.statements.push(format!(
                "if ({}) {{ {} }} else {{ {} = {}; }}",
                cond,
                body,
                alt_t,
                rng.next_below(10)
            ));
        } else {
            draft.statements.push(format!("if ({}) {{ {} }}", cond, body));
        }
    }

    // A loop.
    match rng.next_below(4) {
        0 => {
            let t = draft.num(rng);
            let bound = 2 + rng.next_below(30);
            draft.statements.push(format!(
                "while ({} < {}) {{ {} = {} + {}; }}",
                t,
                bound,
                t,
                t,
                1 + rng.next_below(3)
            ));
        }
        1 => {
            let t = draft.num(rng);
            let bound = draft.num(rng);
            draft.statements.push(format!(
                "for (int cursor = 0; cursor < {}; cursor = cursor + 1) {{ {} = {} + cursor; }}",
                bound, t, t
            ));
        }
        _ => {}
    }

    // A call, usually with simple arguments (insert/delete sites).
    if rng.next_below(10) < 8 {
        let recv = *rng.choose(&RECEIVERS);
        let callee = *rng.choose(&CALLEES);
        let n_args = 1 + rng.next_below(2);
        let args: Vec<String> = (0..n_args)
            .map(|_| match rng.next_below(6) {
                0 => format!("{}", rng.next_below(10)),
                1 => (*rng.choose(&["true", "false"])).to_string(),
                _ => draft.num(rng),
            })
            .collect();
        if rng.next_below(2) == 0 {
            draft
                .statements
                .push(format!("{}.{}({});", recv, callee, args.join(", ")));
        } else {
            let t = draft.num(rng);
            draft.statements.push(format!(
                "{} = {}.{}({});",
                t,
                recv,
                callee,
                args.join(", ")
            ));
        }
    }

    // The return value.
    let ret = match ret_ty {
        "boolean" => {
            if has_flag && rng.next_below(2) == 0 {
                format!("return {};", flag)
            } else {
                let a = draft.num(rng);
                let rel = *rng.choose(&REL_OPS);
                format!("return {} {} {};", a, rel, rng.next_below(50))
            }
        }
        _ => {
            if rng.next_below(3) == 0 {
                let a = draft.num(rng);
                let op = *rng.choose(&ARITH_OPS);
                let b = draft.num(rng);
                format!("return {} {} {};", a, op, b)
            } else {
                format!("return {};", draft.num(rng))
            }
        }
    };
    draft.statements.push(ret);

    format!(
        "{}{} {}({}) {{ {} }}",
        modifier,
        ret_ty,
        name,
        params.join(", "),
        draft.statements.join(" ")
    )
}
