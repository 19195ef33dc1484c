use serde::{Deserialize, Serialize};

use super::template::{AtomTemplate, Body, OperandDomain, PredHole, UpdateForm, UpdateHole};
use crate::ops::{BinOp, Intrinsic, RelOp};

/// Stateful atom names, least expressive first.
pub const STATEFUL_ATOMS: [&str; 7] = ["Write", "RAW", "PRAW", "IfElseRAW", "Sub", "Nested", "Pairs"];

/// Packet-field operands available to every stateful template.
pub const FIELD_SLOTS: usize = 3;

/// The stateless ALU: one operation over at most three operands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatelessTemplate {
    pub name: String,
    pub ops: Vec<BinOp>,
    pub conditional: bool,
    pub max_operands: usize,
}

impl StatelessTemplate {
    pub fn supports(&self, op: BinOp) -> bool {
        self.ops.contains(&op)
    }
}

/// Hash unit with an optional trailing operation on its result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntrinsicTemplate {
    pub name: String,
    pub funcs: Vec<Intrinsic>,
    pub post_ops: Vec<BinOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomCatalog {
    pub stateful: Vec<AtomTemplate>,
    pub stateless: StatelessTemplate,
    pub intrinsic: IntrinsicTemplate,
}

impl AtomCatalog {
    pub fn get(&self, name: &str) -> Option<&AtomTemplate> {
        self.stateful.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn rank(&self, name: &str) -> Option<usize> {
        self.stateful.iter().position(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn names(&self) -> Vec<&str> {
        self.stateful.iter().map(|t| t.name.as_str()).collect()
    }
}

struct Builder {
    slots: usize,
    preds: usize,
    leaves: usize,
}

impl Builder {
    fn pred(&mut self) -> PredHole {
        let name = format!("p{}", self.preds);
        self.preds += 1;
        PredHole { name, lhs: OperandDomain::ANY, rels: RelOp::ALL.to_vec(), rhs: OperandDomain::FIELDS_CONSTS }
    }

    fn leaf(&mut self, forms: &[UpdateForm], operand: OperandDomain) -> Body {
        let l = self.leaves;
        self.leaves += 1;
        Body::Leaf(
            (0..self.slots)
                .map(|s| UpdateHole {
                    form_hole: format!("l{l}_s{s}_form"),
                    operand_hole: format!("l{l}_s{s}_operand"),
                    forms: forms.to_vec(),
                    operand,
                })
                .collect(),
        )
    }

    fn branch(&mut self, then: impl FnOnce(&mut Builder) -> Body, otherwise: impl FnOnce(&mut Builder) -> Body) -> Body {
        let pred = self.pred();
        let then = Box::new(then(self));
        let otherwise = Box::new(otherwise(self));
        Body::Branch { pred, then, otherwise }
    }
}

const RAW: [UpdateForm; 2] = [UpdateForm::Add, UpdateForm::Write];
const SUB: [UpdateForm; 3] = [UpdateForm::Add, UpdateForm::Sub, UpdateForm::Write];
const FC: OperandDomain = OperandDomain::FIELDS_CONSTS;

fn template(name: &str, description: &str, slots: usize, build: impl FnOnce(&mut Builder) -> Body) -> AtomTemplate {
    let mut b = Builder { slots, preds: 0, leaves: 0 };
    let body = build(&mut b);
    AtomTemplate { name: name.into(), description: description.into(), state_slots: slots, field_slots: FIELD_SLOTS, body }
}

fn nested_arm(b: &mut Builder) -> Body {
    b.branch(|b| b.leaf(&SUB, FC), |b| b.leaf(&SUB, FC))
}

/// The seven stateful atoms, the stateless ALU and the hash unit.
pub fn catalog() -> AtomCatalog {
    let stateful = vec![
        template("Write", "s = x for a field, constant, or s itself", 1, |b| {
            b.leaf(&[UpdateForm::Write], OperandDomain::ANY)
        }),
        template("RAW", "s = s + x or s = x", 1, |b| b.leaf(&RAW, FC)),
        template("PRAW", "if (pred) RAW, else leave s unchanged", 1, |b| {
            b.branch(|b| b.leaf(&RAW, FC), |b| b.leaf(&[UpdateForm::Keep], FC))
        }),
        template("IfElseRAW", "if (pred) RAW else RAW", 1, |b| b.branch(|b| b.leaf(&RAW, FC), |b| b.leaf(&RAW, FC))),
        template("Sub", "IfElseRAW whose arms may also subtract", 1, |b| {
            b.branch(|b| b.leaf(&SUB, FC), |b| b.leaf(&SUB, FC))
        }),
        template("Nested", "two levels of predication over Sub arms", 1, |b| b.branch(nested_arm, nested_arm)),
        template("Pairs", "Nested over two state variables; predicates and arms see both", 2, |b| {
            b.branch(nested_arm, nested_arm)
        }),
    ];
    let stateless = StatelessTemplate {
        name: "Stateless".into(),
        ops: vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Shl,
            BinOp::Shr,
            BinOp::BitAnd,
            BinOp::BitOr,
            BinOp::BitXor,
            BinOp::LAnd,
            BinOp::LOr,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Gt,
            BinOp::Le,
            BinOp::Ge,
        ],
        conditional: true,
        max_operands: 3,
    };
    let mut post_ops = stateless.ops.clone();
    post_ops.push(BinOp::Mod);
    let intrinsic = IntrinsicTemplate { name: "Intrinsic".into(), funcs: vec![Intrinsic::Hash2, Intrinsic::Hash3], post_ops };
    AtomCatalog { stateful, stateless, intrinsic }
}

/// The add-or-subtract-a-constant counter atom: `x = choice ? x - constant : x + constant`
/// with `choice = 0` selecting addition.
pub fn add_sub_template() -> AtomTemplate {
    AtomTemplate {
        name: "AddSub".into(),
        description: "x = x + constant or x = x - constant".into(),
        state_slots: 1,
        field_slots: 0,
        body: Body::Leaf(vec![UpdateHole {
            form_hole: "choice".into(),
            operand_hole: "constant".into(),
            forms: vec![UpdateForm::Add, UpdateForm::Sub],
            operand: OperandDomain::CONSTS,
        }]),
    }
}
