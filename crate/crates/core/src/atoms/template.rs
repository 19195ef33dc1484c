use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ops::RelOp;

/// Smallest and largest value of a stateful-atom constant hole (5-bit signed).
pub const CONST_MIN: i32 = -16;
pub const CONST_MAX: i32 = 15;

/// Constant hole values in search order: 0, 1, -1, 2, -2, ...
pub fn const_order() -> Vec<i32> {
    let mut out = vec![0];
    for k in 1..=CONST_MIN.unsigned_abs() as i32 {
        if k <= CONST_MAX {
            out.push(k);
        }
        out.push(-k);
    }
    out
}

/// Where an operand comes from once the holes are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Src {
    /// Value of a state slot before the update.
    State(usize),
    /// A packet-field operand slot.
    Field(usize),
    Const(i32),
}

impl Src {
    pub fn eval(self, state: &[i32], fields: &[i32]) -> i32 {
        match self {
            Src::State(i) => state[i],
            Src::Field(i) => fields[i],
            Src::Const(c) => c,
        }
    }
}

/// Which operand sources a hole may select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandDomain {
    pub states: bool,
    pub fields: bool,
    pub consts: bool,
}

impl OperandDomain {
    pub const FIELDS_CONSTS: OperandDomain = OperandDomain { states: false, fields: true, consts: true };
    pub const ANY: OperandDomain = OperandDomain { states: true, fields: true, consts: true };
    pub const CONSTS: OperandDomain = OperandDomain { states: false, fields: false, consts: true };

    /// Candidates in search order: states, fields, then constants.
    pub fn enumerate(&self, n_states: usize, n_fields: usize) -> Vec<Src> {
        let mut out = Vec::new();
        if self.states {
            out.extend((0..n_states).map(Src::State));
        }
        if self.fields {
            out.extend((0..n_fields).map(Src::Field));
        }
        if self.consts {
            out.extend(const_order().into_iter().map(Src::Const));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateForm {
    /// `s = s`
    Keep,
    /// `s = x`
    Write,
    /// `s = s + x`
    Add,
    /// `s = s - x`
    Sub,
}

impl UpdateForm {
    pub fn apply(self, s: i32, x: i32) -> i32 {
        match self {
            UpdateForm::Keep => s,
            UpdateForm::Write => x,
            UpdateForm::Add => s.wrapping_add(x),
            UpdateForm::Sub => s.wrapping_sub(x),
        }
    }

    pub fn uses_operand(self) -> bool {
        self != UpdateForm::Keep
    }
}

/// Update of one state slot: a form choice and an operand choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateHole {
    pub form_hole: String,
    pub operand_hole: String,
    pub forms: Vec<UpdateForm>,
    pub operand: OperandDomain,
}

impl UpdateHole {
    pub fn candidates(&self, n_states: usize, n_fields: usize) -> Vec<Update> {
        let srcs = self.operand.enumerate(n_states, n_fields);
        let mut out = Vec::new();
        for &form in &self.forms {
            if form.uses_operand() {
                out.extend(srcs.iter().map(|&src| Update { form, src }));
            } else {
                out.push(Update { form, src: Src::Const(0) });
            }
        }
        out
    }
}

/// `lhs rel rhs`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredHole {
    pub name: String,
    pub lhs: OperandDomain,
    pub rels: Vec<RelOp>,
    pub rhs: OperandDomain,
}

impl PredHole {
    pub fn candidates(&self, n_states: usize, n_fields: usize) -> Vec<Pred> {
        let lhs = self.lhs.enumerate(n_states, n_fields);
        let rhs = self.rhs.enumerate(n_states, n_fields);
        let mut out = Vec::with_capacity(lhs.len() * rhs.len() * self.rels.len());
        for &l in &lhs {
            for &rel in &self.rels {
                for &r in &rhs {
                    out.push(Pred { lhs: l, rel, rhs: r });
                }
            }
        }
        out
    }
}

/// Template body: a decision tree of predicates with per-slot updates at the leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Leaf(Vec<UpdateHole>),
    Branch { pred: PredHole, then: Box<Body>, otherwise: Box<Body> },
}

impl Body {
    fn count(&self, preds: &mut usize, updates: &mut usize) {
        match self {
            Body::Leaf(u) => *updates += u.len(),
            Body::Branch { then, otherwise, .. } => {
                *preds += 1;
                then.count(preds, updates);
                otherwise.count(preds, updates);
            }
        }
    }

    fn space(&self, n_states: usize, n_fields: usize) -> f64 {
        match self {
            Body::Leaf(u) => u.iter().take(n_states.max(1)).map(|h| h.candidates(n_states, n_fields).len() as f64).product(),
            Body::Branch { pred, then, otherwise } => {
                pred.candidates(n_states, n_fields).len() as f64
                    * then.space(n_states, n_fields)
                    * otherwise.space(n_states, n_fields)
            }
        }
    }
}

/// A stateful atom: a terminating program over `state_slots` state variables
/// and up to `field_slots` packet-field operands, with holes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomTemplate {
    pub name: String,
    pub description: String,
    pub state_slots: usize,
    pub field_slots: usize,
    pub body: Body,
}

impl AtomTemplate {
    /// Number of holes: three per predicate, two per slot update.
    pub fn hole_count(&self) -> usize {
        let (mut p, mut u) = (0, 0);
        self.body.count(&mut p, &mut u);
        3 * p + 2 * u
    }

    /// Size of the hole space once `n_states` state and `n_fields` field
    /// slots are bound.
    pub fn hole_space(&self, n_states: usize, n_fields: usize) -> f64 {
        self.body.space(n_states, n_fields)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("templates serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Update {
    pub form: UpdateForm,
    pub src: Src,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pred {
    pub lhs: Src,
    pub rel: RelOp,
    pub rhs: Src,
}

impl Pred {
    pub fn holds(&self, state: &[i32], fields: &[i32]) -> bool {
        self.rel.holds(self.lhs.eval(state, fields), self.rhs.eval(state, fields))
    }
}

/// A template body with every hole filled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Config {
    Leaf(Vec<Update>),
    Branch { pred: Pred, then: Box<Config>, otherwise: Box<Config> },
}

impl Config {
    /// New state values. Every predicate and operand sees the old state.
    pub fn eval(&self, state: &[i32], fields: &[i32]) -> Vec<i32> {
        let mut node = self;
        loop {
            match node {
                Config::Leaf(ups) => {
                    return state
                        .iter()
                        .enumerate()
                        .map(|(j, &s)| ups.get(j).map_or(s, |u| u.form.apply(s, u.src.eval(state, fields))))
                        .collect();
                }
                Config::Branch { pred, then, otherwise } => {
                    node = if pred.holds(state, fields) { then } else { otherwise };
                }
            }
        }
    }

    /// Hole name -> assigned value, following the template's naming.
    pub fn holes(&self, body: &Body) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        fill_holes(self, body, &mut out);
        out
    }
}

fn src_value(s: Src, domain: &OperandDomain) -> Value {
    match s {
        Src::Const(c) if *domain == OperandDomain::CONSTS => json!(c),
        other => serde_json::to_value(other).expect("serialize"),
    }
}

fn fill_holes(c: &Config, b: &Body, out: &mut BTreeMap<String, Value>) {
    match (c, b) {
        (Config::Leaf(ups), Body::Leaf(holes)) => {
            for (u, h) in ups.iter().zip(holes) {
                let form = h.forms.iter().position(|f| *f == u.form).expect("form in template");
                out.insert(h.form_hole.clone(), json!(form));
                if u.form.uses_operand() {
                    out.insert(h.operand_hole.clone(), src_value(u.src, &h.operand));
                }
            }
        }
        (Config::Branch { pred, then, otherwise }, Body::Branch { pred: ph, then: bt, otherwise: bo }) => {
            out.insert(format!("{}_lhs", ph.name), src_value(pred.lhs, &ph.lhs));
            out.insert(format!("{}_rel", ph.name), json!(pred.rel.to_string()));
            out.insert(format!("{}_rhs", ph.name), src_value(pred.rhs, &ph.rhs));
            fill_holes(then, bt, out);
            fill_holes(otherwise, bo, out);
        }
        _ => panic!("configuration does not match template shape"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_cover_five_bits_in_search_order() {
        let c = const_order();
        assert_eq!(&c[..5], &[0, 1, -1, 2, -2]);
        assert_eq!(c.len(), 32);
        assert_eq!(*c.iter().min().unwrap(), CONST_MIN);
        assert_eq!(*c.iter().max().unwrap(), CONST_MAX);
    }

    #[test]
    fn predicates_see_old_state() {
        let cfg = Config::Branch {
            pred: Pred { lhs: Src::State(0), rel: RelOp::Lt, rhs: Src::Field(0) },
            then: Box::new(Config::Leaf(vec![
                Update { form: UpdateForm::Write, src: Src::Field(0) },
                Update { form: UpdateForm::Write, src: Src::State(0) },
            ])),
            otherwise: Box::new(Config::Leaf(vec![
                Update { form: UpdateForm::Keep, src: Src::Const(0) },
                Update { form: UpdateForm::Sub, src: Src::Const(1) },
            ])),
        };
        assert_eq!(cfg.eval(&[3, 9], &[5]), vec![5, 3]);
        assert_eq!(cfg.eval(&[7, 9], &[5]), vec![7, 8]);
    }
}
