use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::normalize::{NormalizedProgram, Tac};

/// Statement-level dependencies: read-after-write edges plus a two-way edge
/// between each state variable's read and write flank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyGraph {
    pub nodes: usize,
    pub edges: BTreeSet<(usize, usize)>,
    /// `(state, read flank, write flank)`.
    pub flank_pairs: Vec<(String, usize, usize)>,
}

impl DependencyGraph {
    pub fn successors(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((n, 0)..(n + 1, 0)).map(|&(_, b)| b)
    }
}

pub fn build_dep_graph(p: &NormalizedProgram) -> DependencyGraph {
    dep_graph_of(&p.stmts)
}

pub(crate) fn dep_graph_of(stmts: &[Tac]) -> DependencyGraph {
    let mut def_at: BTreeMap<&str, usize> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for (i, s) in stmts.iter().enumerate() {
        for u in s.uses() {
            if let Some(&d) = def_at.get(u) {
                edges.insert((d, i));
            }
        }
        if let Some(d) = s.def() {
            def_at.insert(d, i);
        }
    }
    let mut reads: BTreeMap<&str, usize> = BTreeMap::new();
    let mut flank_pairs = Vec::new();
    for (i, s) in stmts.iter().enumerate() {
        match s {
            Tac::StateRead { state, .. } => {
                reads.insert(state, i);
            }
            Tac::StateWrite { state, .. } => {
                if let Some(&r) = reads.get(state.as_str()) {
                    edges.insert((r, i));
                    edges.insert((i, r));
                    flank_pairs.push((state.clone(), r, i));
                }
            }
            Tac::Assign { .. } => {}
        }
    }
    DependencyGraph { nodes: stmts.len(), edges, flank_pairs }
}

/// Strongly connected components (iterative Tarjan). Each component is
/// sorted; components are ordered by their smallest member.
pub fn strongly_connected(nodes: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nodes];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; nodes];
    let mut low = vec![0; nodes];
    let mut on_stack = vec![false; nodes];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut comps = Vec::new();
    for root in 0..nodes {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next successor position)
        let mut work = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, pos)) = work.last() {
            if pos < adj[v].len() {
                let w = adj[v][pos];
                work.last_mut().expect("non-empty").1 += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps.sort();
    comps
}
