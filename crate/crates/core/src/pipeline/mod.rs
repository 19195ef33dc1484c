//! Dependency analysis, SCC condensation into codelets, and stage scheduling.

mod graph;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use graph::{build_dep_graph, strongly_connected, DependencyGraph};

use crate::frontend::{Expr, StateDecl};
use crate::normalize::{NameGen, NormalizedProgram, Operand, Rhs, Tac};

/// A sequential block of three-address statements mapped to one atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codelet {
    pub id: usize,
    pub stmts: Vec<Tac>,
    /// Statement positions in the normalized program; rematerialized copies
    /// are numbered past its end.
    pub indices: Vec<usize>,
    pub states: Vec<String>,
    pub stage: usize,
    /// Fields this codelet hands to later codelets or to the egress packet.
    pub live_out: BTreeSet<String>,
}

impl Codelet {
    /// Sort key: the smallest statement position.
    pub fn order(&self) -> usize {
        self.indices[0]
    }

    pub fn is_stateful(&self) -> bool {
        !self.states.is_empty()
    }

    pub fn defs(&self) -> BTreeSet<&str> {
        self.stmts.iter().filter_map(Tac::def).collect()
    }

    /// Fields read but not defined here, in first-use order.
    pub fn inputs(&self) -> Vec<String> {
        let defs = self.defs();
        let mut out: Vec<String> = Vec::new();
        for s in &self.stmts {
            for u in s.uses() {
                if !defs.contains(u) && !out.iter().any(|x| x == u) {
                    out.push(u.to_string());
                }
            }
        }
        out
    }

    pub fn print(&self) -> String {
        self.stmts.iter().map(|s| format!("{s}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeletDag {
    pub codelets: Vec<Codelet>,
    /// Producer -> consumer, by position in `codelets`.
    pub edges: BTreeSet<(usize, usize)>,
    pub packet_fields: Vec<String>,
    pub states: Vec<StateDecl>,
    pub outputs: BTreeMap<String, String>,
    pub guard: Option<Expr>,
}

/// Collapse each strongly connected component into a codelet.
///
/// A stateful atom can only hand out the old or new value of its state, so
/// any other field a stateful codelet would export is recomputed by a
/// stateless copy of its backward slice placed downstream.
pub fn condense_sccs(p: &NormalizedProgram, g: &DependencyGraph) -> CodeletDag {
    let comps = strongly_connected(g.nodes, &g.edges);
    let mut stmts = p.stmts.clone();
    let mut outputs = p.outputs.clone();
    let mut names = NameGen::new(p.packet_fields.iter().map(String::as_str));
    for s in &stmts {
        s.def().into_iter().chain(s.uses()).for_each(|n| names.reserve(n));
    }
    let mut groups: Vec<Vec<usize>> = comps.clone();
    for comp in &comps {
        if !comp.iter().any(|&i| stmts[i].state().is_some()) {
            continue;
        }
        let defs: BTreeMap<String, usize> =
            comp.iter().filter_map(|&i| stmts[i].def().map(|d| (d.to_string(), i))).collect();
        let mut exported: BTreeSet<String> = BTreeSet::new();
        for &i in comp {
            match &stmts[i] {
                Tac::StateRead { dst, .. } => {
                    exported.insert(dst.clone());
                }
                Tac::StateWrite { rhs: Rhs::Move(Operand::Field(x)), .. } if defs.contains_key(x) => {
                    exported.insert(x.clone());
                }
                _ => {}
            }
        }
        let hidden = |f: &str| defs.contains_key(f) && !exported.contains(f);
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        let mut clones: HashMap<String, String> = HashMap::new();
        let outside: Vec<usize> = (0..stmts.len()).filter(|i| !members.contains(i)).collect();
        let mut wanted: Vec<String> = Vec::new();
        for &j in &outside {
            wanted.extend(stmts[j].uses().into_iter().filter(|u| hidden(u)).map(str::to_string));
        }
        wanted.extend(outputs.values().filter(|v| hidden(v)).cloned());
        for f in wanted {
            clone_slice(&f, &defs, &hidden, &mut stmts, &mut clones, &mut names, &mut groups);
        }
        if clones.is_empty() {
            continue;
        }
        let rename = |n: &str| clones.get(n).cloned();
        for j in outside {
            stmts[j].rename_uses(&rename);
        }
        for v in outputs.values_mut() {
            if let Some(c) = clones.get(v.as_str()) {
                *v = c.clone();
            }
        }
    }
    groups.sort();
    let mut codelets: Vec<Codelet> = groups
        .into_iter()
        .enumerate()
        .map(|(id, indices)| {
            let cs: Vec<Tac> = indices.iter().map(|&i| stmts[i].clone()).collect();
            let mut states: Vec<String> = Vec::new();
            for s in &cs {
                if let Some(st) = s.state() {
                    if !states.iter().any(|x| x == st) {
                        states.push(st.to_string());
                    }
                }
            }
            Codelet { id, stmts: cs, indices, states, stage: 0, live_out: BTreeSet::new() }
        })
        .collect();
    let mut def_owner: HashMap<String, usize> = HashMap::new();
    for (k, c) in codelets.iter().enumerate() {
        for d in c.defs() {
            def_owner.insert(d.to_string(), k);
        }
    }
    let mut edges = BTreeSet::new();
    let mut live: Vec<BTreeSet<String>> = vec![BTreeSet::new(); codelets.len()];
    for (k, c) in codelets.iter().enumerate() {
        for u in c.inputs() {
            if let Some(&o) = def_owner.get(&u) {
                edges.insert((o, k));
                live[o].insert(u);
            }
        }
    }
    for v in outputs.values() {
        if let Some(&o) = def_owner.get(v) {
            live[o].insert(v.clone());
        }
    }
    for (c, l) in codelets.iter_mut().zip(live) {
        c.live_out = l;
    }
    CodeletDag {
        codelets,
        edges,
        packet_fields: p.packet_fields.clone(),
        states: p.states.clone(),
        outputs,
        guard: p.guard.clone(),
    }
}

fn clone_slice(
    f: &str,
    defs: &BTreeMap<String, usize>,
    hidden: &impl Fn(&str) -> bool,
    stmts: &mut Vec<Tac>,
    clones: &mut HashMap<String, String>,
    names: &mut NameGen,
    groups: &mut Vec<Vec<usize>>,
) -> String {
    if let Some(c) = clones.get(f) {
        return c.clone();
    }
    let Tac::Assign { rhs, .. } = stmts[defs[f]].clone() else { unreachable!("hidden fields come from assignments") };
    let mut rhs = rhs;
    let mut renames: HashMap<String, String> = HashMap::new();
    for u in rhs.uses() {
        if hidden(u) && !renames.contains_key(u) {
            let c = clone_slice(u, defs, hidden, stmts, clones, names, groups);
            renames.insert(u.to_string(), c);
        }
    }
    rhs.rename(&|n| renames.get(n).cloned());
    let dst = names.temp();
    groups.push(vec![stmts.len()]);
    stmts.push(Tac::Assign { dst: dst.clone(), rhs });
    clones.insert(f.to_string(), dst.clone());
    dst
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeletPipeline {
    pub stages: Vec<Vec<Codelet>>,
    /// `live[k]`: fields carried into stage `k`; the last entry is the egress set.
    pub live: Vec<BTreeSet<String>>,
    pub packet_fields: Vec<String>,
    pub states: Vec<StateDecl>,
    pub outputs: BTreeMap<String, String>,
    pub guard: Option<Expr>,
}

impl CodeletPipeline {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn codelets(&self) -> impl Iterator<Item = &Codelet> {
        self.stages.iter().flatten()
    }

    pub fn stateful_in_stage(&self, k: usize) -> usize {
        self.stages[k].iter().filter(|c| c.is_stateful()).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let stages: Vec<_> = self
            .stages
            .iter()
            .enumerate()
            .map(|(k, cs)| {
                let codelets: Vec<_> = cs
                    .iter()
                    .map(|c| {
                        json!({
                            "id": c.id,
                            "stateful": c.is_stateful(),
                            "states": c.states,
                            "inputs": c.inputs(),
                            "outputs": c.live_out,
                            "stmts": c.stmts.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                json!({ "stage": k, "live_in": self.live[k], "codelets": codelets })
            })
            .collect();
        json!({ "depth": self.depth(), "stages": stages, "outputs": self.outputs })
    }
}

/// As-soon-as-possible placement: sources at stage 0, everything else one
/// past its latest predecessor.
pub fn schedule(dag: CodeletDag) -> CodeletPipeline {
    let n = dag.codelets.len();
    let mut preds = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in &dag.edges {
        preds[b].push(a);
        indeg[b] += 1;
    }
    let mut stage = vec![0usize; n];
    let mut ready: Vec<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    let mut done = 0;
    while let Some(k) = ready.pop() {
        done += 1;
        stage[k] = preds[k].iter().map(|&p| stage[p] + 1).max().unwrap_or(0);
        for &(a, b) in dag.edges.range((k, 0)..(k + 1, 0)) {
            debug_assert_eq!(a, k);
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(b);
            }
        }
    }
    assert_eq!(done, n, "condensed graph is acyclic");
    let depth = stage.iter().map(|s| s + 1).max().unwrap_or(0);
    let mut stages: Vec<Vec<Codelet>> = vec![Vec::new(); depth];
    for (mut c, s) in dag.codelets.into_iter().zip(&stage) {
        c.stage = *s;
        stages[*s].push(c);
    }
    for s in &mut stages {
        s.sort_by_key(Codelet::order);
    }
    let live = live_sets(&stages, &dag.outputs);
    CodeletPipeline {
        stages,
        live,
        packet_fields: dag.packet_fields,
        states: dag.states,
        outputs: dag.outputs,
        guard: dag.guard,
    }
}

fn live_sets(stages: &[Vec<Codelet>], outputs: &BTreeMap<String, String>) -> Vec<BTreeSet<String>> {
    let mut def_stage: HashMap<String, usize> = HashMap::new();
    let mut last_use: HashMap<String, usize> = HashMap::new();
    for (k, cs) in stages.iter().enumerate() {
        for c in cs {
            for d in c.defs() {
                def_stage.insert(d.to_string(), k);
            }
            for u in c.inputs() {
                let e = last_use.entry(u).or_insert(k);
                *e = (*e).max(k);
            }
        }
    }
    let depth = stages.len();
    for v in outputs.values() {
        last_use.insert(v.clone(), depth);
    }
    (0..=depth)
        .map(|k| {
            last_use
                .iter()
                .filter(|(f, &u)| u >= k && def_stage.get(*f).map_or(true, |&d| d < k))
                .map(|(f, _)| f.clone())
                .collect()
        })
        .collect()
}

/// Normalized program to scheduled codelet pipeline.
pub fn pipeline(p: &NormalizedProgram) -> CodeletPipeline {
    schedule(condense_sccs(p, &build_dep_graph(p)))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Statement graph and condensed codelet graph, as two DOT digraphs.
pub fn to_dot(p: &NormalizedProgram, g: &DependencyGraph, dag: &CodeletDag) -> String {
    let mut out = String::from("digraph dependencies {\n  node [shape=box];\n");
    for (i, s) in p.stmts.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", dot_escape(&s.to_string()));
    }
    for (a, b) in &g.edges {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\ndigraph codelets {\n  node [shape=box];\n");
    for (k, c) in dag.codelets.iter().enumerate() {
        let style = if c.is_stateful() { ", style=filled, fillcolor=grey" } else { "" };
        let label = c.stmts.iter().map(|s| dot_escape(&s.to_string())).collect::<Vec<_>>().join("\\l");
        let _ = writeln!(out, "  c{k} [label=\"{label}\\l\"{style}];");
    }
    for (a, b) in &dag.edges {
        let _ = writeln!(out, "  c{a} -> c{b};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests;
