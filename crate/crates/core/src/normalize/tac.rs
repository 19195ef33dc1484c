use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Flank, Line, NameGen};
use crate::frontend::Expr;
use crate::interp::Env;
use crate::ops::{BinOp, Intrinsic, UnOp, HASH_SEED};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Field(String),
    Const(i32),
}

impl Operand {
    pub fn field(&self) -> Option<&str> {
        match self {
            Operand::Field(f) => Some(f),
            Operand::Const(_) => None,
        }
    }

    pub fn eval(&self, get: &impl Fn(&str) -> i32) -> i32 {
        match self {
            Operand::Field(f) => get(f),
            Operand::Const(c) => *c,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Field(n) => write!(f, "pkt.{n}"),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Right-hand side of a three-address statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    Move(Operand),
    Binary(BinOp, Operand, Operand),
    Cond(Operand, Operand, Operand),
    /// `f(args)`, optionally followed by one operator whose left operand is the call.
    Intrinsic { func: Intrinsic, args: Vec<Operand>, post: Option<(BinOp, Operand)> },
}

impl Rhs {
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            Rhs::Move(a) => vec![a],
            Rhs::Binary(_, a, b) => vec![a, b],
            Rhs::Cond(c, a, b) => vec![c, a, b],
            Rhs::Intrinsic { args, post, .. } => args.iter().chain(post.as_ref().map(|(_, o)| o)).collect(),
        }
    }

    fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            Rhs::Move(a) => vec![a],
            Rhs::Binary(_, a, b) => vec![a, b],
            Rhs::Cond(c, a, b) => vec![c, a, b],
            Rhs::Intrinsic { args, post, .. } => args.iter_mut().chain(post.as_mut().map(|(_, o)| o)).collect(),
        }
    }

    pub fn uses(&self) -> Vec<&str> {
        self.operands().into_iter().filter_map(Operand::field).collect()
    }

    pub fn rename(&mut self, f: &impl Fn(&str) -> Option<String>) {
        for o in self.operands_mut() {
            if let Operand::Field(n) = o {
                if let Some(m) = f(n) {
                    *n = m;
                }
            }
        }
    }

    pub fn constants(&self) -> Vec<i32> {
        self.operands()
            .into_iter()
            .filter_map(|o| match o {
                Operand::Const(c) => Some(*c),
                Operand::Field(_) => None,
            })
            .collect()
    }

    pub fn eval(&self, get: &impl Fn(&str) -> i32) -> i32 {
        match self {
            Rhs::Move(a) => a.eval(get),
            Rhs::Binary(op, a, b) => op.apply(a.eval(get), b.eval(get)),
            Rhs::Cond(c, a, b) => {
                if c.eval(get) != 0 {
                    a.eval(get)
                } else {
                    b.eval(get)
                }
            }
            Rhs::Intrinsic { func, args, post } => {
                let vals: Vec<i32> = args.iter().map(|a| a.eval(get)).collect();
                let v = func.eval(HASH_SEED, &vals);
                match post {
                    Some((op, o)) => op.apply(v, o.eval(get)),
                    None => v,
                }
            }
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Move(a) => write!(f, "{a}"),
            Rhs::Binary(op, a, b) => write!(f, "{a} {op} {b}"),
            Rhs::Cond(c, a, b) => write!(f, "{c} ? {a} : {b}"),
            Rhs::Intrinsic { func, args, post } => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{func}({})", args.join(", "))?;
                if let Some((op, o)) = post {
                    write!(f, " {op} {o}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    StateRead,
    StateWrite,
    Compute,
    Conditional,
    Intrinsic,
    Move,
}

/// A three-address statement. Only `StateRead` and `StateWrite` touch state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tac {
    Assign { dst: String, rhs: Rhs },
    StateRead { dst: String, state: String, index: Option<Operand> },
    StateWrite { state: String, index: Option<Operand>, rhs: Rhs },
}

impl Tac {
    pub fn def(&self) -> Option<&str> {
        match self {
            Tac::Assign { dst, .. } | Tac::StateRead { dst, .. } => Some(dst),
            Tac::StateWrite { .. } => None,
        }
    }

    pub fn uses(&self) -> Vec<&str> {
        match self {
            Tac::Assign { rhs, .. } => rhs.uses(),
            Tac::StateRead { index, .. } => index.iter().filter_map(Operand::field).collect(),
            Tac::StateWrite { index, rhs, .. } => {
                index.iter().filter_map(Operand::field).chain(rhs.uses()).collect()
            }
        }
    }

    pub fn state(&self) -> Option<&str> {
        match self {
            Tac::StateRead { state, .. } | Tac::StateWrite { state, .. } => Some(state),
            Tac::Assign { .. } => None,
        }
    }

    pub fn index(&self) -> Option<&Operand> {
        match self {
            Tac::StateRead { index, .. } | Tac::StateWrite { index, .. } => index.as_ref(),
            Tac::Assign { .. } => None,
        }
    }

    pub fn rhs(&self) -> Option<&Rhs> {
        match self {
            Tac::Assign { rhs, .. } | Tac::StateWrite { rhs, .. } => Some(rhs),
            Tac::StateRead { .. } => None,
        }
    }

    pub fn kind(&self) -> StmtKind {
        match self {
            Tac::StateRead { .. } => StmtKind::StateRead,
            Tac::StateWrite { .. } => StmtKind::StateWrite,
            Tac::Assign { rhs, .. } => match rhs {
                Rhs::Move(_) => StmtKind::Move,
                Rhs::Binary(..) => StmtKind::Compute,
                Rhs::Cond(..) => StmtKind::Conditional,
                Rhs::Intrinsic { .. } => StmtKind::Intrinsic,
            },
        }
    }

    /// Rename used (not defined) fields.
    pub fn rename_uses(&mut self, f: &impl Fn(&str) -> Option<String>) {
        let fix = |o: &mut Operand| {
            if let Operand::Field(n) = o {
                if let Some(m) = f(n) {
                    *n = m;
                }
            }
        };
        match self {
            Tac::Assign { rhs, .. } => rhs.rename(f),
            Tac::StateRead { index, .. } => index.iter_mut().for_each(fix),
            Tac::StateWrite { index, rhs, .. } => {
                index.iter_mut().for_each(fix);
                rhs.rename(f);
            }
        }
    }
}

impl fmt::Display for Tac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = |state: &str, index: &Option<Operand>| match index {
            Some(i) => format!("{state}[{i}]"),
            None => state.to_string(),
        };
        match self {
            Tac::Assign { dst, rhs } => write!(f, "pkt.{dst} = {rhs};"),
            Tac::StateRead { dst, state, index } => write!(f, "pkt.{dst} = {};", loc(state, index)),
            Tac::StateWrite { state, index, rhs } => write!(f, "{} = {rhs};", loc(state, index)),
        }
    }
}

pub fn run_tac(env: &mut Env, stmts: &[Tac]) {
    for s in stmts {
        match s {
            Tac::Assign { dst, rhs } => {
                let v = rhs.eval(&|n| env.field(n));
                env.set_field(dst, v);
            }
            Tac::StateRead { dst, state, index } => {
                let i = index.as_ref().map_or(0, |o| o.eval(&|n| env.field(n)));
                let v = env.read_state(state, i);
                env.set_field(dst, v);
            }
            Tac::StateWrite { state, index, rhs } => {
                let i = index.as_ref().map_or(0, |o| o.eval(&|n| env.field(n)));
                let v = rhs.eval(&|n| env.field(n));
                env.write_state(state, i, v);
            }
        }
    }
}

struct Flattener<'a> {
    names: &'a mut NameGen,
    out: Vec<Tac>,
}

impl Flattener<'_> {
    fn operand(&mut self, e: &Expr) -> Operand {
        match e {
            Expr::Int(v) => Operand::Const(*v),
            Expr::Field(f, _) => Operand::Field(f.clone()),
            _ => {
                let rhs = self.rhs(e);
                let t = self.names.temp();
                self.out.push(Tac::Assign { dst: t.clone(), rhs });
                Operand::Field(t)
            }
        }
    }

    /// Operands are flattened left to right before the node itself.
    fn rhs(&mut self, e: &Expr) -> Rhs {
        match e {
            Expr::Int(_) | Expr::Field(..) => Rhs::Move(self.operand(e)),
            Expr::Unary(op, a) => {
                let a = self.operand(a);
                match op {
                    UnOp::Neg => Rhs::Binary(BinOp::Sub, Operand::Const(0), a),
                    UnOp::Not => Rhs::Binary(BinOp::Eq, a, Operand::Const(0)),
                    UnOp::BitNot => Rhs::Binary(BinOp::BitXor, a, Operand::Const(-1)),
                }
            }
            Expr::Binary(op, a, b) => {
                if let Expr::Call(name, args, _) = &**a {
                    let func = Intrinsic::from_name(name).expect("validated intrinsic");
                    let args = args.iter().map(|x| self.operand(x)).collect();
                    let b = self.operand(b);
                    return Rhs::Intrinsic { func, args, post: Some((*op, b)) };
                }
                let a = self.operand(a);
                let b = self.operand(b);
                Rhs::Binary(*op, a, b)
            }
            Expr::Ternary(c, a, b) => {
                let c = self.operand(c);
                let a = self.operand(a);
                let b = self.operand(b);
                Rhs::Cond(c, a, b)
            }
            Expr::Call(name, args, _) => {
                let func = Intrinsic::from_name(name).expect("validated intrinsic");
                let args = args.iter().map(|x| self.operand(x)).collect();
                Rhs::Intrinsic { func, args, post: None }
            }
            Expr::Var(..) | Expr::Index(..) => unreachable!("state access outside a flank"),
        }
    }
}

/// Flatten every expression into three-address statements with fresh `_tN`
/// temporaries.
pub fn to_three_address(lines: &[Line], names: &mut NameGen) -> Vec<Tac> {
    let mut fl = Flattener { names, out: Vec::new() };
    for l in lines {
        match l {
            Line::Assign { dst, value } => {
                let rhs = fl.rhs(value);
                fl.out.push(Tac::Assign { dst: dst.clone(), rhs });
            }
            Line::Read { dst, state, index } => {
                let index = index.as_ref().map(|i| fl.operand(i));
                fl.out.push(Tac::StateRead { dst: dst.clone(), state: state.clone(), index });
            }
            Line::Write { state, index, value } => {
                let index = index.as_ref().map(|i| fl.operand(i));
                let rhs = fl.rhs(value);
                fl.out.push(Tac::StateWrite { state: state.clone(), index, rhs });
            }
        }
    }
    fl.out
}

/// Fold the last update of a state temporary into its write flank.
///
/// Applies when the write flank copies a temporary defined by a move,
/// compute, or conditional statement whose other uses are all plain copies.
/// Those copies take the defining right-hand side too, and the definition is
/// dropped.
pub fn fuse_write_flanks(mut stmts: Vec<Tac>, flanks: &BTreeMap<String, Flank>, packet_fields: &[String]) -> Vec<Tac> {
    for (state, flank) in flanks {
        let v = &flank.write;
        if v == &flank.read || packet_fields.contains(v) {
            continue;
        }
        let Some(d) = stmts.iter().position(|s| matches!(s, Tac::Assign { dst, .. } if dst == v)) else { continue };
        let Tac::Assign { rhs: def_rhs, .. } = &stmts[d] else { unreachable!() };
        if matches!(def_rhs, Rhs::Intrinsic { .. }) {
            continue;
        }
        let def_rhs = def_rhs.clone();
        let copy = Rhs::Move(Operand::Field(v.clone()));
        let users: Vec<usize> = (0..stmts.len()).filter(|&i| stmts[i].uses().contains(&v.as_str())).collect();
        let fusable = users.iter().all(|&i| match &stmts[i] {
            Tac::Assign { rhs, .. } => *rhs == copy,
            Tac::StateWrite { state: s, index: _, rhs } => s == state && *rhs == copy,
            Tac::StateRead { .. } => false,
        });
        if !fusable {
            continue;
        }
        for &i in &users {
            match &mut stmts[i] {
                Tac::Assign { rhs, .. } | Tac::StateWrite { rhs, .. } => *rhs = def_rhs.clone(),
                Tac::StateRead { .. } => unreachable!(),
            }
        }
        stmts.remove(d);
    }
    stmts
}
