use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::template::Config;
use crate::interp::{Packet, StateStore};
use crate::normalize::{Operand, Rhs};
use crate::ops::wrap_index;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("atom reads field `{0}`, which is not on the packet")]
    MissingField(String),
    #[error("atom touches state `{0}`, which is not in its stage's store")]
    MissingState(String),
}

/// A state variable bound to a slot, with the array index operand if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateBinding {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<Operand>,
}

/// What a stateful atom writes into a packet field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSource {
    Old(usize),
    New(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatefulInstance {
    pub template: String,
    pub config: Config,
    /// Hole assignment under the template's hole names, for display.
    #[serde(default)]
    pub holes: BTreeMap<String, Value>,
    pub states: Vec<StateBinding>,
    /// Packet fields feeding the field slots, in slot order.
    pub fields: Vec<String>,
    pub outputs: Vec<(String, OutputSource)>,
}

/// A configured atom in some pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomInstance {
    /// `dst = rhs` where rhs is a move, binary op or conditional.
    Stateless { dst: String, rhs: Rhs },
    /// `dst = hash(args) [op operand]`
    Intrinsic { dst: String, rhs: Rhs },
    Stateful(StatefulInstance),
}

fn read(packet: &Packet, f: &str) -> Result<i32, EvalError> {
    packet.get(f).copied().ok_or_else(|| EvalError::MissingField(f.to_string()))
}

fn eval_rhs(rhs: &Rhs, packet: &Packet) -> Result<i32, EvalError> {
    for u in rhs.uses() {
        read(packet, u)?;
    }
    Ok(rhs.eval(&|f| packet[f]))
}

impl AtomInstance {
    /// Packet fields read by this atom.
    pub fn reads(&self) -> Vec<&str> {
        match self {
            AtomInstance::Stateless { rhs, .. } | AtomInstance::Intrinsic { rhs, .. } => rhs.uses(),
            AtomInstance::Stateful(s) => s
                .states
                .iter()
                .filter_map(|b| b.index.as_ref().and_then(Operand::field))
                .chain(s.fields.iter().map(String::as_str))
                .collect(),
        }
    }

    /// Packet fields written by this atom.
    pub fn writes(&self) -> Vec<&str> {
        match self {
            AtomInstance::Stateless { dst, .. } | AtomInstance::Intrinsic { dst, .. } => vec![dst],
            AtomInstance::Stateful(s) => s.outputs.iter().map(|(d, _)| d.as_str()).collect(),
        }
    }

    /// State variables owned by this atom.
    pub fn states(&self) -> Vec<&str> {
        match self {
            AtomInstance::Stateful(s) => s.states.iter().map(|b| b.name.as_str()).collect(),
            _ => Vec::new(),
        }
    }

    /// Fire against a packet snapshot, updating owned state in place.
    /// Returns the field writes so a stage can apply them after every atom
    /// has read its inputs.
    pub fn fire(&self, packet: &Packet, state: &mut StateStore) -> Result<Vec<(String, i32)>, EvalError> {
        match self {
            AtomInstance::Stateless { dst, rhs } | AtomInstance::Intrinsic { dst, rhs } => {
                Ok(vec![(dst.clone(), eval_rhs(rhs, packet)?)])
            }
            AtomInstance::Stateful(s) => {
                let mut cells = Vec::with_capacity(s.states.len());
                let mut old = Vec::with_capacity(s.states.len());
                for b in &s.states {
                    let idx = match &b.index {
                        Some(Operand::Field(f)) => read(packet, f)?,
                        Some(Operand::Const(c)) => *c,
                        None => 0,
                    };
                    let store = state.get(&b.name).ok_or_else(|| EvalError::MissingState(b.name.clone()))?;
                    let cell = wrap_index(idx, store.len() as u32);
                    cells.push(cell);
                    old.push(store[cell]);
                }
                let fields = s.fields.iter().map(|f| read(packet, f)).collect::<Result<Vec<_>, _>>()?;
                let new = s.config.eval(&old, &fields);
                for (b, (&cell, &v)) in s.states.iter().zip(cells.iter().zip(&new)) {
                    state.get_mut(&b.name).expect("checked above")[cell] = v;
                }
                Ok(s
                    .outputs
                    .iter()
                    .map(|(d, src)| {
                        let v = match *src {
                            OutputSource::Old(i) => old[i],
                            OutputSource::New(i) => new[i],
                        };
                        (d.clone(), v)
                    })
                    .collect())
            }
        }
    }

    /// Pure evaluation: the packet and state after this atom alone.
    pub fn evaluate(&self, packet: &Packet, state: &StateStore) -> Result<(Packet, StateStore), EvalError> {
        let mut state = state.clone();
        let mut packet = packet.clone();
        for (f, v) in self.fire(&packet.clone(), &mut state)? {
            packet.insert(f, v);
        }
        Ok((packet, state))
    }

    pub fn describe(&self) -> String {
        match self {
            AtomInstance::Stateless { dst, rhs } | AtomInstance::Intrinsic { dst, rhs } => format!("pkt.{dst} = {rhs};"),
            AtomInstance::Stateful(s) => {
                let states: Vec<String> = s
                    .states
                    .iter()
                    .map(|b| match &b.index {
                        Some(i) => format!("{}[{i}]", b.name),
                        None => b.name.clone(),
                    })
                    .collect();
                let outs: Vec<String> = s
                    .outputs
                    .iter()
                    .map(|(d, src)| match src {
                        OutputSource::Old(i) => format!("pkt.{d} = old {}", states[*i]),
                        OutputSource::New(i) => format!("pkt.{d} = new {}", states[*i]),
                    })
                    .collect();
                let holes: Vec<String> = s.holes.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{}({}) fields[{}] {{{}}} -> [{}]", s.template, states.join(", "), s.fields.join(", "), holes.join(" "), outs.join("; "))
            }
        }
    }
}
