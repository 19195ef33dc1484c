//! A stateful codelet as a function from (old state, field slots) to new state.

use std::collections::HashMap;

use crate::normalize::{Operand, Rhs, Tac};
use crate::ops::BinOp;
use crate::pipeline::Codelet;

#[derive(Debug, Clone, Copy)]
enum Arg {
    Reg(usize),
    Const(i32),
}

#[derive(Debug, Clone)]
enum Inst {
    Move(usize, Arg),
    Bin(usize, BinOp, Arg, Arg),
    Cond(usize, Arg, Arg, Arg),
}

/// Register layout: `[old states.., field slots.., defined temps..]`.
#[derive(Debug, Clone)]
pub struct CodeletSpec {
    pub states: Vec<String>,
    /// State index operand per slot, captured from the read (or write) flank.
    pub indices: Vec<Option<Operand>>,
    /// Data inputs bound to field slots, in first-use order.
    pub fields: Vec<String>,
    insts: Vec<Inst>,
    /// Register holding each slot's new value.
    new_regs: Vec<usize>,
    regs: usize,
    pub constants: Vec<i32>,
}

impl CodeletSpec {
    /// Fails when the codelet holds something no stateful template can
    /// express whatever the holes (currently: intrinsic calls).
    pub fn build(c: &Codelet) -> Result<CodeletSpec, String> {
        let states = c.states.clone();
        let mut indices = vec![None; states.len()];
        let mut data_use: Vec<&str> = Vec::new();
        for s in &c.stmts {
            if let Some(i) = s.index() {
                let slot = states.iter().position(|x| Some(x.as_str()) == s.state()).expect("codelet lists its states");
                indices[slot].get_or_insert_with(|| i.clone());
            }
            if let Some(rhs) = s.rhs() {
                if let Rhs::Intrinsic { func, .. } = rhs {
                    return Err(format!("a stateful codelet cannot call `{func}`"));
                }
                data_use.extend(rhs.uses());
            }
        }
        let defs = c.defs();
        let mut fields: Vec<String> = Vec::new();
        for u in data_use {
            if !defs.contains(u) && !fields.iter().any(|f| f == u) {
                fields.push(u.to_string());
            }
        }
        let mut reg: HashMap<String, usize> = HashMap::new();
        for (i, f) in fields.iter().enumerate() {
            reg.insert(f.clone(), states.len() + i);
        }
        let mut regs = states.len() + fields.len();
        let mut new_regs: Vec<usize> = (0..states.len()).collect();
        let mut insts = Vec::new();
        let mut constants = Vec::new();
        for s in &c.stmts {
            let arg = |o: &Operand, reg: &HashMap<String, usize>| match o {
                Operand::Field(f) => Arg::Reg(reg[f.as_str()]),
                Operand::Const(v) => Arg::Const(*v),
            };
            match s {
                Tac::StateRead { dst, state, .. } => {
                    let slot = states.iter().position(|x| x == state).expect("state slot");
                    reg.insert(dst.clone(), slot);
                }
                Tac::Assign { dst, rhs } | Tac::StateWrite { rhs, state: dst, .. } => {
                    constants.extend(rhs.constants());
                    let out = regs;
                    regs += 1;
                    insts.push(match rhs {
                        Rhs::Move(a) => Inst::Move(out, arg(a, &reg)),
                        Rhs::Binary(op, a, b) => Inst::Bin(out, *op, arg(a, &reg), arg(b, &reg)),
                        Rhs::Cond(p, a, b) => Inst::Cond(out, arg(p, &reg), arg(a, &reg), arg(b, &reg)),
                        Rhs::Intrinsic { .. } => unreachable!("rejected above"),
                    });
                    if let Tac::StateWrite { state, .. } = s {
                        let slot = states.iter().position(|x| x == state).expect("state slot");
                        new_regs[slot] = out;
                    } else {
                        reg.insert(dst.clone(), out);
                    }
                }
            }
        }
        constants.sort_unstable();
        constants.dedup();
        Ok(CodeletSpec { states, indices, fields, insts, new_regs, regs, constants })
    }

    /// New state values for one cell per state variable.
    pub fn eval(&self, state: &[i32], fields: &[i32]) -> Vec<i32> {
        let mut r = vec![0i32; self.regs];
        r[..state.len()].copy_from_slice(state);
        r[state.len()..state.len() + fields.len()].copy_from_slice(fields);
        let get = |r: &[i32], a: Arg| match a {
            Arg::Reg(i) => r[i],
            Arg::Const(c) => c,
        };
        for inst in &self.insts {
            match *inst {
                Inst::Move(d, a) => r[d] = get(&r, a),
                Inst::Bin(d, op, a, b) => r[d] = op.apply(get(&r, a), get(&r, b)),
                Inst::Cond(d, p, a, b) => r[d] = if get(&r, p) != 0 { get(&r, a) } else { get(&r, b) },
            }
        }
        self.new_regs.iter().map(|&i| r[i]).collect()
    }
}
