//! Lowering to branch-free, state-flanked, single-assignment three-address code.

mod branch;
mod flank;
mod ssa;
mod tac;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

pub use branch::remove_branches;
pub use flank::rewrite_state_flanks;
pub use ssa::to_ssa;
pub use tac::{fuse_write_flanks, run_tac, to_three_address, Operand, Rhs, StmtKind, Tac};

use crate::frontend::printer::expr_with;
use crate::frontend::{Expr, StateDecl, Stmt, ValidatedAst};
use crate::interp::Env;

/// A straight-line statement after flank insertion. Expressions reference
/// packet fields only; state is touched by `Read` and `Write` alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Line {
    Assign { dst: String, value: Expr },
    Read { dst: String, state: String, index: Option<Expr> },
    Write { state: String, index: Option<Expr>, value: Expr },
}

impl Line {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Line::Assign { value, .. } => vec![value],
            Line::Read { index, .. } => index.iter().collect(),
            Line::Write { index, value, .. } => index.iter().chain(std::iter::once(value)).collect(),
        }
    }

    pub fn def(&self) -> Option<&str> {
        match self {
            Line::Assign { dst, .. } | Line::Read { dst, .. } => Some(dst),
            Line::Write { .. } => None,
        }
    }
}

pub fn exec_lines(env: &mut Env, lines: &[Line]) {
    for l in lines {
        match l {
            Line::Assign { dst, value } => {
                let v = env.eval(value);
                env.set_field(dst, v);
            }
            Line::Read { dst, state, index } => {
                let i = index.as_ref().map_or(0, |e| env.eval(e));
                let v = env.read_state(state, i);
                env.set_field(dst, v);
            }
            Line::Write { state, index, value } => {
                let i = index.as_ref().map_or(0, |e| env.eval(e));
                let v = env.eval(value);
                env.write_state(state, i, v);
            }
        }
    }
}

pub fn print_lines(lines: &[Line]) -> String {
    let mut out = String::new();
    let loc = |state: &str, index: &Option<Expr>| match index {
        Some(i) => format!("{state}[{}]", expr_with("pkt", i)),
        None => state.to_string(),
    };
    for l in lines {
        let _ = match l {
            Line::Assign { dst, value } => writeln!(out, "pkt.{dst} = {};", expr_with("pkt", value)),
            Line::Read { dst, state, index } => writeln!(out, "pkt.{dst} = {};", loc(state, index)),
            Line::Write { state, index, value } => writeln!(out, "{} = {};", loc(state, index), expr_with("pkt", value)),
        };
    }
    out
}

/// Deterministic fresh-name source shared by all passes.
#[derive(Debug, Clone, Default)]
pub struct NameGen {
    used: HashSet<String>,
    next_temp: usize,
    versions: BTreeMap<String, usize>,
}

impl NameGen {
    pub fn new<'a>(taken: impl IntoIterator<Item = &'a str>) -> NameGen {
        NameGen { used: taken.into_iter().map(str::to_string).collect(), ..NameGen::default() }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// Next unused `_tN`.
    pub fn temp(&mut self) -> String {
        loop {
            let n = format!("_t{}", self.next_temp);
            self.next_temp += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }

    /// `base` if free, else `base_1`, `base_2`, ...
    pub fn fresh(&mut self, base: &str) -> String {
        if self.used.insert(base.to_string()) {
            return base.to_string();
        }
        (1..).map(|k| format!("{base}_{k}")).find(|n| self.used.insert(n.clone())).expect("unbounded")
    }

    /// Next unused `base<k>` with `k` counting up from 0 per base.
    pub fn version(&mut self, base: &str) -> String {
        let k = self.versions.entry(base.to_string()).or_insert(0);
        loop {
            let n = format!("{base}{k}");
            *k += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }
}

/// Temporaries holding a state variable between its read and write flank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flank {
    pub read: String,
    pub write: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedProgram {
    pub stmts: Vec<Tac>,
    /// Declared packet fields, in declaration order.
    pub packet_fields: Vec<String>,
    pub states: Vec<StateDecl>,
    pub flanks: BTreeMap<String, Flank>,
    /// Declared field -> name holding its final value.
    pub outputs: BTreeMap<String, String>,
    pub guard: Option<Expr>,
}

impl NormalizedProgram {
    /// Every SSA field version defined by some statement.
    pub fn versions(&self) -> Vec<&str> {
        self.stmts.iter().filter_map(Tac::def).collect()
    }

    pub fn print(&self) -> String {
        self.stmts.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Every intermediate form, for dumps and tests.
#[derive(Debug, Clone)]
pub struct Passes {
    pub branch: Vec<Stmt>,
    pub flank: Vec<Line>,
    pub ssa: Vec<Line>,
    pub tac: NormalizedProgram,
}

pub fn normalize(ast: &ValidatedAst) -> NormalizedProgram {
    normalize_passes(ast).tac
}

pub fn normalize_passes(ast: &ValidatedAst) -> Passes {
    let mut names = NameGen::new(ast.packet_fields.iter().map(String::as_str));
    let branch = remove_branches(&ast.body, &mut names);
    let (flank, flank_map) = rewrite_state_flanks(&branch, &ast.states, &mut names);
    let (ssa, ssa_flanks, outputs) = to_ssa(&flank, &flank_map, &ast.packet_fields, &mut names);
    let stmts = fuse_write_flanks(to_three_address(&ssa, &mut names), &ssa_flanks, &ast.packet_fields);
    let tac = NormalizedProgram {
        stmts,
        packet_fields: ast.packet_fields.clone(),
        states: ast.states.clone(),
        flanks: ssa_flanks,
        outputs,
        guard: ast.guard.clone(),
    };
    Passes { branch, flank, ssa, tac }
}
