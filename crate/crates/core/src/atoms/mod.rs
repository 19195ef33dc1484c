//! Atom templates (the hardware instruction set) and configured instances.

mod catalog;
mod instance;
mod template;

pub use catalog::{add_sub_template, catalog, AtomCatalog, IntrinsicTemplate, StatelessTemplate, FIELD_SLOTS, STATEFUL_ATOMS};
pub use instance::{AtomInstance, EvalError, OutputSource, StateBinding, StatefulInstance};
pub use template::{
    const_order, AtomTemplate, Body, Config, OperandDomain, Pred, PredHole, Src, Update, UpdateForm, UpdateHole, CONST_MAX,
    CONST_MIN,
};
