use std::collections::HashSet;

use super::NameGen;
use crate::frontend::{Expr, LValue, Stmt};

/// If-conversion. Each `if` hoists its condition into a fresh `pkt._tN`;
/// assignments in the then-arm become `lhs = t ? rhs : lhs` and in the
/// else-arm `lhs = t ? lhs : rhs`. Inner ifs are converted first.
pub fn remove_branches(body: &[Stmt], names: &mut NameGen) -> Vec<Stmt> {
    let mut hoisted = HashSet::new();
    flatten(body, names, &mut hoisted)
}

fn flatten(body: &[Stmt], names: &mut NameGen, hoisted: &mut HashSet<String>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::Assign { .. } => out.push(s.clone()),
            Stmt::Block(b) => out.extend(flatten(b, names, hoisted)),
            Stmt::If { cond, then_branch, else_branch, span } => {
                let t = names.temp();
                hoisted.insert(t.clone());
                out.push(Stmt::Assign { target: LValue::Field(t.clone()), value: cond.clone(), span: *span });
                let then_flat = flatten(then_branch, names, hoisted);
                let else_flat = flatten(else_branch, names, hoisted);
                for (arm, taken) in [(then_flat, true), (else_flat, false)] {
                    for inner in arm {
                        out.push(guard(inner, &t, taken, hoisted));
                    }
                }
            }
        }
    }
    out
}

fn guard(s: Stmt, t: &str, taken: bool, hoisted: &HashSet<String>) -> Stmt {
    let Stmt::Assign { target, value, span } = s else { unreachable!("flattened bodies hold assignments only") };
    // Hoisted conditions are pure, so they need no predication.
    if let LValue::Field(f) = &target {
        if hoisted.contains(f) {
            return Stmt::Assign { target, value, span };
        }
    }
    let old = target.to_expr();
    let cond = Expr::field(t);
    let value = if taken { Expr::ternary(cond, value, old) } else { Expr::ternary(cond, old, value) };
    Stmt::Assign { target, value, span }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{load, print_body};
    use crate::interp::{initial_state, Env, Packet};

    fn convert(src: &str) -> (crate::frontend::ValidatedAst, Vec<Stmt>) {
        let ast = load(src).unwrap();
        let mut names = NameGen::new(ast.packet_fields.iter().map(String::as_str));
        let out = remove_branches(&ast.body, &mut names);
        (ast, out)
    }

    #[test]
    fn single_if_predicates_the_assignment() {
        let (_, out) = convert(
            "struct Packet { int arrival; int id; int new_hop; };\nint last_time[8];\nint saved_hop[8];\n\
             void f(struct Packet pkt) { if (pkt.arrival - last_time[pkt.id] > 5) { saved_hop[pkt.id] = pkt.new_hop; } }",
        );
        assert_eq!(
            print_body("pkt", &out, 0),
            "pkt._t0 = pkt.arrival - last_time[pkt.id] > 5;\nsaved_hop[pkt.id] = pkt._t0 ? pkt.new_hop : saved_hop[pkt.id];\n"
        );
    }

    #[test]
    fn constant_condition_is_not_folded() {
        let (_, out) = convert("struct Packet { int x; };\nvoid f(struct Packet pkt) { if (true) pkt.x = 1; else pkt.x = 2; }");
        assert_eq!(
            print_body("pkt", &out, 0),
            "pkt._t0 = 1;\npkt.x = pkt._t0 ? 1 : pkt.x;\npkt.x = pkt._t0 ? pkt.x : 2;\n"
        );
    }

    #[test]
    fn nested_ifs_match_on_all_two_bit_inputs() {
        let (ast, out) = convert(
            "struct Packet { int a; int b; int c; int d; };\nvoid f(struct Packet pkt) {\n\
             if (pkt.a > pkt.b) { if (pkt.c == 1) { pkt.d = pkt.a; pkt.a = 0; } else { pkt.d = pkt.b - pkt.c; } }\n\
             else { pkt.c = pkt.c + 1; if (pkt.c) pkt.b = -1; } }",
        );
        assert!(out.iter().all(|s| matches!(s, Stmt::Assign { .. })));
        let vals = [-2, -1, 0, 1];
        for a in vals {
            for b in vals {
                for c in vals {
                    for d in vals {
                        let pkt = Packet::from([("a".into(), a), ("b".into(), b), ("c".into(), c), ("d".into(), d)]);
                        let mut want = Env::new(pkt.clone(), initial_state(&ast.states));
                        want.exec(&ast.body);
                        let mut got = Env::new(pkt, initial_state(&ast.states));
                        got.exec(&out);
                        for f in &ast.packet_fields {
                            assert_eq!(want.field(f), got.field(f), "{f} at {a},{b},{c},{d}");
                        }
                    }
                }
            }
        }
    }
}
