use std::collections::BTreeMap;

use super::{Flank, Line, NameGen};
use crate::frontend::Expr;

/// Give every assignment a fresh `name<k>` version and point each use at the
/// latest preceding version. Fields never assigned keep their input name.
///
/// Returns the renamed lines, the flank temporaries after renaming, and the
/// final version of each declared field.
pub fn to_ssa(
    lines: &[Line],
    flanks: &BTreeMap<String, Flank>,
    packet_fields: &[String],
    names: &mut NameGen,
) -> (Vec<Line>, BTreeMap<String, Flank>, BTreeMap<String, String>) {
    for l in lines {
        if let Some(d) = l.def() {
            names.reserve(d);
        }
        for e in l.exprs() {
            for f in e.fields() {
                names.reserve(f);
            }
        }
    }
    let mut current: BTreeMap<String, String> = BTreeMap::new();
    let rename = |e: &Expr, current: &BTreeMap<String, String>| {
        e.clone().rewrite(&mut |x| match x {
            Expr::Field(f, s) => Expr::Field(current.get(&f).cloned().unwrap_or(f), s),
            x => x,
        })
    };
    let mut out = Vec::with_capacity(lines.len());
    let mut new_flanks: BTreeMap<String, Flank> = BTreeMap::new();
    for l in lines {
        let line = match l {
            Line::Assign { dst, value } => {
                let value = rename(value, &current);
                let v = names.version(dst);
                current.insert(dst.clone(), v.clone());
                Line::Assign { dst: v, value }
            }
            Line::Read { dst, state, index } => {
                let index = index.as_ref().map(|i| rename(i, &current));
                let v = names.version(dst);
                current.insert(dst.clone(), v.clone());
                new_flanks.insert(state.clone(), Flank { read: v.clone(), write: String::new() });
                Line::Read { dst: v, state: state.clone(), index }
            }
            Line::Write { state, index, value } => {
                let index = index.as_ref().map(|i| rename(i, &current));
                let value = rename(value, &current);
                if let (Some(f), Expr::Field(w, _)) = (new_flanks.get_mut(state), &value) {
                    f.write = w.clone();
                }
                Line::Write { state: state.clone(), index, value }
            }
        };
        out.push(line);
    }
    debug_assert_eq!(new_flanks.len(), flanks.len());
    let outputs = packet_fields.iter().map(|f| (f.clone(), current.get(f).cloned().unwrap_or_else(|| f.clone()))).collect();
    (out, new_flanks, outputs)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::super::{exec_lines, print_lines, remove_branches, rewrite_state_flanks};
    use super::*;
    use crate::frontend::load;
    use crate::interp::{initial_state, Env, Packet};

    fn run(src: &str) -> (Vec<Line>, Vec<Line>, BTreeMap<String, Flank>, BTreeMap<String, String>) {
        let ast = load(src).unwrap();
        let mut names = NameGen::new(ast.packet_fields.iter().map(String::as_str));
        let b = remove_branches(&ast.body, &mut names);
        let (lines, flanks) = rewrite_state_flanks(&b, &ast.states, &mut names);
        let (ssa, fl, outs) = to_ssa(&lines, &flanks, &ast.packet_fields, &mut names);
        (lines, ssa, fl, outs)
    }

    #[test]
    fn flank_temporaries_are_versioned() {
        let (_, ssa, flanks, _) = run(
            "struct Packet { int id; int arrival; };\nint last_time[8];\nvoid f(struct Packet pkt) { last_time[pkt.id] = pkt.arrival; }",
        );
        assert_eq!(
            print_lines(&ssa),
            "pkt.last_time0 = last_time[pkt.id];\npkt.last_time1 = pkt.arrival;\nlast_time[pkt.id] = pkt.last_time1;\n"
        );
        assert_eq!(flanks["last_time"], Flank { read: "last_time0".into(), write: "last_time1".into() });
    }

    #[test]
    fn single_assignment_gets_version_zero() {
        let (_, ssa, _, outs) = run("struct Packet { int a; int b; };\nvoid f(struct Packet pkt) { pkt.a = pkt.b; }");
        assert_eq!(print_lines(&ssa), "pkt.a0 = pkt.b;\n");
        assert_eq!(outs["a"], "a0");
        assert_eq!(outs["b"], "b");
    }

    #[test]
    fn version_names_skip_existing_fields() {
        let (_, ssa, _, _) = run("struct Packet { int a; int a0; };\nvoid f(struct Packet pkt) { pkt.a = pkt.a0; }");
        assert_eq!(print_lines(&ssa), "pkt.a1 = pkt.a0;\n");
    }

    fn raw_edges(lines: &[Line]) -> HashSet<(usize, usize)> {
        // Brute force: j reads the value i wrote, with no intervening writer.
        let mut edges = HashSet::new();
        for (j, lj) in lines.iter().enumerate() {
            for e in lj.exprs() {
                for f in e.fields() {
                    if let Some(i) = (0..j).rev().find(|&i| lines[i].def() == Some(f)) {
                        edges.insert((i, j));
                    }
                }
            }
        }
        edges
    }

    #[test]
    fn three_assignments_keep_exactly_the_raw_dependencies() {
        let src = "struct Packet { int x; int y; int z; };\nvoid f(struct Packet pkt) {\n\
                   pkt.x = pkt.y + 1; pkt.z = pkt.x; pkt.x = pkt.x * 2; pkt.y = pkt.x - pkt.z; pkt.x = pkt.y; }";
        let (before, after, _, outs) = run(src);
        assert_eq!(raw_edges(&before), raw_edges(&after));
        let defs: Vec<_> = after.iter().filter_map(Line::def).collect();
        assert_eq!(defs, ["x0", "z0", "x1", "y0", "x2"]);
        // Every def distinct; no write-after-write left.
        assert_eq!(defs.iter().collect::<HashSet<_>>().len(), defs.len());
        for (a, b) in [(-2, 1), (0, 0), (7, -9)] {
            let pkt = Packet::from([("y".into(), a), ("z".into(), b)]);
            let mut want = Env::new(pkt.clone(), initial_state(&[]));
            exec_lines(&mut want, &before);
            let mut got = Env::new(pkt, initial_state(&[]));
            exec_lines(&mut got, &after);
            for (f, v) in &outs {
                assert_eq!(want.field(f), got.field(v));
            }
        }
    }
}
