use std::collections::BTreeMap;

use super::{Flank, Line, NameGen};
use crate::frontend::{Expr, LValue, StateDecl, Stmt};

/// Confine state access to one read flank (before first use) and one write
/// flank (at the end) per referenced variable. Interior references go
/// through a packet temporary named after the variable.
pub fn rewrite_state_flanks(body: &[Stmt], states: &[StateDecl], names: &mut NameGen) -> (Vec<Line>, BTreeMap<String, Flank>) {
    let mut temps: BTreeMap<String, String> = BTreeMap::new();
    let mut order: Vec<(String, Option<Expr>)> = Vec::new();
    let mut out = Vec::new();
    for s in body {
        let Stmt::Assign { target, value, .. } = s else { unreachable!("branch-free input") };
        let mut refs: Vec<(String, Option<Expr>)> = Vec::new();
        value.visit(&mut |e| match e {
            Expr::Var(n, _) => refs.push((n.clone(), None)),
            Expr::Index(n, i, _) => refs.push((n.clone(), Some((**i).clone()))),
            _ => {}
        });
        match target {
            LValue::Var(n) => refs.push((n.clone(), None)),
            LValue::Index(n, i) => refs.push((n.clone(), Some(i.clone()))),
            LValue::Field(_) => {}
        }
        for (state, index) in refs {
            if temps.contains_key(&state) {
                continue;
            }
            debug_assert!(states.iter().any(|d| d.name == state));
            let index = match index {
                Some(e @ (Expr::Field(..) | Expr::Int(_))) => Some(e),
                Some(e) => {
                    let t = names.temp();
                    out.push(Line::Assign { dst: t.clone(), value: e });
                    Some(Expr::field(t))
                }
                None => None,
            };
            let temp = names.fresh(&state);
            out.push(Line::Read { dst: temp.clone(), state: state.clone(), index: index.clone() });
            temps.insert(state.clone(), temp);
            order.push((state, index));
        }
        let value = value.clone().rewrite(&mut |e| match e {
            Expr::Var(n, _) | Expr::Index(n, _, _) => Expr::field(temps[&n].clone()),
            e => e,
        });
        let dst = match target {
            LValue::Field(f) => f.clone(),
            LValue::Var(n) | LValue::Index(n, _) => temps[n].clone(),
        };
        out.push(Line::Assign { dst, value });
    }
    let mut flanks = BTreeMap::new();
    for (state, index) in order {
        let temp = temps[&state].clone();
        out.push(Line::Write { state: state.clone(), index, value: Expr::field(temp.clone()) });
        flanks.insert(state, Flank { read: temp.clone(), write: temp });
    }
    (out, flanks)
}
