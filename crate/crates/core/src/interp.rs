//! Sequential execution over packet fields and switch state.

use std::collections::BTreeMap;

use crate::frontend::{Expr, LValue, StateDecl, Stmt};
use crate::ops::{wrap_index, Intrinsic, HASH_SEED};

/// Field values of one packet, including temporaries.
pub type Packet = BTreeMap<String, i32>;

/// Persistent switch state: one cell vector per variable (length 1 for scalars).
pub type StateStore = BTreeMap<String, Vec<i32>>;

pub fn initial_state(states: &[StateDecl]) -> StateStore {
    states.iter().map(|s| (s.name.clone(), vec![s.init; s.cells()])).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Env {
    pub packet: Packet,
    pub state: StateStore,
}

impl Env {
    pub fn new(packet: Packet, state: StateStore) -> Env {
        Env { packet, state }
    }

    /// Missing fields read as 0.
    pub fn field(&self, name: &str) -> i32 {
        self.packet.get(name).copied().unwrap_or(0)
    }

    pub fn set_field(&mut self, name: &str, v: i32) {
        self.packet.insert(name.to_string(), v);
    }

    fn cell(&self, name: &str, index: i32) -> (usize, usize) {
        let cells = &self.state[name];
        (cells.len(), wrap_index(index, cells.len() as u32))
    }

    pub fn read_state(&self, name: &str, index: i32) -> i32 {
        let (_, i) = self.cell(name, index);
        self.state[name][i]
    }

    pub fn write_state(&mut self, name: &str, index: i32, v: i32) {
        let (_, i) = self.cell(name, index);
        self.state.get_mut(name).expect("state variable exists")[i] = v;
    }

    pub fn eval(&self, e: &Expr) -> i32 {
        match e {
            Expr::Int(v) => *v,
            Expr::Field(f, _) => self.field(f),
            Expr::Var(n, _) => self.read_state(n, 0),
            Expr::Index(n, i, _) => self.read_state(n, self.eval(i)),
            Expr::Unary(op, a) => op.apply(self.eval(a)),
            Expr::Binary(op, a, b) => {
                let x = self.eval(a);
                op.apply(x, self.eval(b))
            }
            Expr::Ternary(c, a, b) => {
                if self.eval(c) != 0 {
                    self.eval(a)
                } else {
                    self.eval(b)
                }
            }
            Expr::Call(n, args, _) => {
                let f = Intrinsic::from_name(n).expect("validated intrinsic");
                let vals: Vec<i32> = args.iter().map(|a| self.eval(a)).collect();
                f.eval(HASH_SEED, &vals)
            }
        }
    }

    pub fn assign(&mut self, target: &LValue, v: i32) {
        match target {
            LValue::Field(f) => self.set_field(f, v),
            LValue::Var(n) => self.write_state(n, 0, v),
            LValue::Index(n, i) => {
                let idx = self.eval(i);
                self.write_state(n, idx, v);
            }
        }
    }

    pub fn exec(&mut self, body: &[Stmt]) {
        for s in body {
            match s {
                Stmt::Assign { target, value, .. } => {
                    let v = self.eval(value);
                    self.assign(target, v);
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    if self.eval(cond) != 0 {
                        self.exec(then_branch);
                    } else {
                        self.exec(else_branch);
                    }
                }
                Stmt::Block(b) => self.exec(b),
            }
        }
    }
}
