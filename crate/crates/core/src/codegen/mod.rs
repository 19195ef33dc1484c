//! Codelet-to-atom mapping, resource limits and whole-pipeline compilation.

mod search;
mod spec;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{synthesize, Problem, SearchError, SpecFn, RANDOM_CHECKS};
pub use spec::CodeletSpec;

use crate::atoms::{
    catalog, AtomCatalog, AtomInstance, AtomTemplate, IntrinsicTemplate, OutputSource, StateBinding, StatefulInstance,
    StatelessTemplate, FIELD_SLOTS,
};
use crate::frontend::{Expr, StateDecl};
use crate::normalize::{Operand, Rhs, Tac};
use crate::ops::Intrinsic;
use crate::pipeline::{Codelet, CodeletPipeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub pipeline_depth: usize,
    pub stateless_per_stage: usize,
    pub stateful_per_stage: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits { pipeline_depth: 32, stateless_per_stage: 300, stateful_per_stage: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapOptions {
    /// Bit width of the exhaustive verification sweep (1..=4).
    pub verify_width: u32,
    /// Candidate checks allowed per codelet before giving up.
    pub max_steps: u64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions { verify_width: 2, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    pub limits: ResourceLimits,
    pub map: MapOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("no configuration of {template} implements this codelet: {reason}")]
    NoMapping { template: String, reason: String },
    #[error("search over {template} gave up after {steps} candidate checks")]
    SearchBudgetExceeded { template: String, steps: u64 },
}

fn no_mapping(template: &str, reason: impl Into<String>) -> MapError {
    MapError::NoMapping { template: template.to_string(), reason: reason.into() }
}

fn intrinsic_reason(func: Intrinsic) -> String {
    if func == Intrinsic::Sqrt {
        "requires a square root operation, which no atom provides".to_string()
    } else {
        format!("`{func}` needs the hash unit, which cannot sit inside a stateful atom")
    }
}

/// Map one codelet onto `template` (stateful codelets) or onto the stateless
/// ALU / hash unit (single-statement stateless codelets).
pub fn map_codelet(c: &Codelet, template: &AtomTemplate, opts: &MapOptions) -> Result<AtomInstance, MapError> {
    let cat = catalog();
    map_with(c, template, &cat.stateless, &cat.intrinsic, opts)
}

fn map_with(
    c: &Codelet,
    template: &AtomTemplate,
    stateless: &StatelessTemplate,
    intrinsic: &IntrinsicTemplate,
    opts: &MapOptions,
) -> Result<AtomInstance, MapError> {
    if !c.is_stateful() {
        return map_stateless(c, stateless, intrinsic);
    }
    map_stateful(c, template, opts)
}

fn map_stateless(c: &Codelet, stateless: &StatelessTemplate, intrinsic: &IntrinsicTemplate) -> Result<AtomInstance, MapError> {
    let [Tac::Assign { dst, rhs }] = c.stmts.as_slice() else {
        return Err(no_mapping(&stateless.name, "a stateless codelet must be a single assignment"));
    };
    let dst = dst.clone();
    match rhs {
        Rhs::Move(_) | Rhs::Cond(..) => Ok(AtomInstance::Stateless { dst, rhs: rhs.clone() }),
        Rhs::Binary(op, ..) if stateless.supports(*op) => Ok(AtomInstance::Stateless { dst, rhs: rhs.clone() }),
        Rhs::Binary(op, ..) => Err(no_mapping(&stateless.name, format!("no stateless operation `{op}`"))),
        Rhs::Intrinsic { func, post, .. } => {
            if !func.has_hardware_unit() || !intrinsic.funcs.contains(func) {
                return Err(no_mapping(&intrinsic.name, intrinsic_reason(*func)));
            }
            if let Some((op, _)) = post {
                if !intrinsic.post_ops.contains(op) {
                    return Err(no_mapping(&intrinsic.name, format!("the hash unit cannot apply `{op}` to its result")));
                }
            }
            Ok(AtomInstance::Intrinsic { dst, rhs: rhs.clone() })
        }
    }
}

fn map_stateful(c: &Codelet, template: &AtomTemplate, opts: &MapOptions) -> Result<AtomInstance, MapError> {
    let name = template.name.as_str();
    for s in &c.stmts {
        if let Some(Rhs::Intrinsic { func, .. }) = s.rhs() {
            return Err(no_mapping(name, intrinsic_reason(*func)));
        }
    }
    let spec = CodeletSpec::build(c).map_err(|r| no_mapping(name, r))?;
    if spec.states.len() > template.state_slots {
        return Err(no_mapping(
            name,
            format!("{} state variables, but the atom holds {}", spec.states.len(), template.state_slots),
        ));
    }
    if spec.fields.len() > template.field_slots.min(FIELD_SLOTS) {
        return Err(no_mapping(
            name,
            format!("{} packet-field operands, but the atom takes {}", spec.fields.len(), template.field_slots),
        ));
    }
    let outputs = assign_outputs(c, &spec.states).map_err(|r| no_mapping(name, r))?;
    let problem = Problem {
        template,
        n_states: spec.states.len(),
        n_fields: spec.fields.len(),
        width: opts.verify_width,
        extra_values: spec.constants.clone(),
        max_steps: opts.max_steps,
    };
    let config = synthesize(&problem, &|s, f| spec.eval(s, f)).map_err(|e| match e {
        SearchError::NoMapping => no_mapping(name, "no hole assignment matches the codelet"),
        SearchError::BudgetExceeded(steps) => MapError::SearchBudgetExceeded { template: name.to_string(), steps },
    })?;
    Ok(AtomInstance::Stateful(StatefulInstance {
        template: template.name.clone(),
        holes: config.holes(&template.body),
        config,
        states: spec
            .states
            .iter()
            .zip(&spec.indices)
            .map(|(s, i)| StateBinding { name: s.clone(), index: i.clone() })
            .collect(),
        fields: spec.fields,
        outputs,
    }))
}

/// A stateful atom hands out a state variable's value before or after the
/// update, nothing else.
fn assign_outputs(c: &Codelet, states: &[String]) -> Result<Vec<(String, OutputSource)>, String> {
    let slot = |s: &str| states.iter().position(|x| x == s).expect("state slot");
    c.live_out
        .iter()
        .map(|f| {
            for s in &c.stmts {
                match s {
                    Tac::StateRead { dst, state, .. } if dst == f => return Ok((f.clone(), OutputSource::Old(slot(state)))),
                    Tac::StateWrite { state, rhs: Rhs::Move(Operand::Field(x)), .. } if x == f => {
                        return Ok((f.clone(), OutputSource::New(slot(state))))
                    }
                    _ => {}
                }
            }
            Err(format!("`{f}` is neither the old nor the new value of a state variable"))
        })
        .collect()
}

/// Compiled program: a grid of configured atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub target: String,
    pub stages: Vec<Vec<AtomInstance>>,
    /// State variable -> stage holding its atom.
    pub placement: BTreeMap<String, usize>,
    /// `live[k]`: fields carried into stage `k`; the last entry is the egress set.
    pub live: Vec<BTreeSet<String>>,
    pub packet_fields: Vec<String>,
    pub states: Vec<StateDecl>,
    /// Declared packet field -> field holding its final value.
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub guard: Option<Expr>,
}

impl PipelineConfig {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn stateful_in_stage(&self, k: usize) -> usize {
        self.stages[k].iter().filter(|a| matches!(a, AtomInstance::Stateful(_))).count()
    }

    pub fn stateless_in_stage(&self, k: usize) -> usize {
        self.stages[k].len() - self.stateful_in_stage(k)
    }

    pub fn max_stateful_per_stage(&self) -> usize {
        (0..self.depth()).map(|k| self.stateful_in_stage(k)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configs serialize")
    }

    pub fn describe(&self) -> String {
        let mut out = format!("target {}: {} stages\n", self.target, self.depth());
        for (k, stage) in self.stages.iter().enumerate() {
            out.push_str(&format!("stage {k}:\n"));
            for a in stage {
                out.push_str(&format!("  {}\n", a.describe()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionKind {
    Unmappable,
    DepthExceeded,
    SearchBudgetExceeded,
}

/// Why a program cannot run at line rate on a target.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub struct RejectionReport {
    pub target: String,
    pub kind: RejectionKind,
    pub message: String,
    /// The offending codelet, pretty-printed.
    pub codelet: Option<String>,
}

impl fmt::Display for RejectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rejected for target {}: {}", self.target, self.message)?;
        if let Some(c) = &self.codelet {
            write!(f, "\noffending codelet:")?;
            for line in c.lines() {
                write!(f, "\n    {line}")?;
            }
        }
        Ok(())
    }
}

/// Split any stage over the per-stage limits into as many stages as needed,
/// spreading its codelets evenly. Codelets in one stage never depend on each
/// other, so any split preserves the schedule.
pub fn spread(p: &CodeletPipeline, limits: &ResourceLimits) -> CodeletPipeline {
    let mut stages = Vec::new();
    let mut live = Vec::new();
    for (k, stage) in p.stages.iter().enumerate() {
        let (sf, sl): (Vec<&Codelet>, Vec<&Codelet>) = stage.iter().partition(|c| c.is_stateful());
        let n = 1.max(sl.len().div_ceil(limits.stateless_per_stage)).max(sf.len().div_ceil(limits.stateful_per_stage));
        let mut carried = p.live[k].clone();
        for i in 0..n {
            let chunk: Vec<Codelet> = even_chunk(&sl, n, i).iter().chain(even_chunk(&sf, n, i)).map(|c| (*c).clone()).collect();
            live.push(carried.clone());
            for c in &chunk {
                carried.extend(c.defs().into_iter().map(str::to_string));
            }
            stages.push(chunk);
        }
    }
    live.push(p.live.last().cloned().unwrap_or_default());
    for (k, stage) in stages.iter_mut().enumerate() {
        for c in stage {
            c.stage = k;
        }
    }
    CodeletPipeline { stages, live, ..p.clone() }
}

/// The `i`th of `n` contiguous chunks whose sizes differ by at most one.
fn even_chunk<'a, T>(items: &'a [T], n: usize, i: usize) -> &'a [T] {
    let (base, extra) = (items.len() / n, items.len() % n);
    let start = i * base + i.min(extra);
    let len = base + usize::from(i < extra);
    &items[start..start + len]
}

/// Map every codelet of a scheduled pipeline onto `target` (plus the stateless
/// ALU and hash unit). All or nothing.
pub fn compile(p: &CodeletPipeline, target: &AtomTemplate, opts: &CompileOptions) -> Result<PipelineConfig, RejectionReport> {
    let cat = catalog();
    compile_with(p, target, &cat, opts)
}

pub fn compile_with(
    p: &CodeletPipeline,
    target: &AtomTemplate,
    cat: &AtomCatalog,
    opts: &CompileOptions,
) -> Result<PipelineConfig, RejectionReport> {
    let reject = |kind, message: String, codelet: Option<&Codelet>| RejectionReport {
        target: target.name.clone(),
        kind,
        message,
        codelet: codelet.map(Codelet::print),
    };
    let spread = spread(p, &opts.limits);
    if spread.depth() > opts.limits.pipeline_depth {
        return Err(reject(
            RejectionKind::DepthExceeded,
            format!("needs {} stages, but the pipeline has {}", spread.depth(), opts.limits.pipeline_depth),
            None,
        ));
    }
    let mut stages = Vec::with_capacity(spread.depth());
    let mut placement = BTreeMap::new();
    for (k, stage) in spread.stages.iter().enumerate() {
        let mut atoms = Vec::with_capacity(stage.len());
        for c in stage {
            let atom = map_with(c, target, &cat.stateless, &cat.intrinsic, &opts.map).map_err(|e| {
                let kind = match e {
                    MapError::NoMapping { .. } => RejectionKind::Unmappable,
                    MapError::SearchBudgetExceeded { .. } => RejectionKind::SearchBudgetExceeded,
                };
                reject(kind, e.to_string(), Some(c))
            })?;
            for s in &c.states {
                placement.insert(s.clone(), k);
            }
            atoms.push(atom);
        }
        stages.push(atoms);
    }
    Ok(PipelineConfig {
        target: target.name.clone(),
        stages,
        placement,
        live: spread.live,
        packet_fields: p.packet_fields.clone(),
        states: p.states.clone(),
        outputs: p.outputs.clone(),
        guard: p.guard.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// Least expressive stateful atom the program compiles to.
    Atom { rank: usize, name: String },
    /// Rejected even by the most expressive atom.
    DoesNotMap(RejectionReport),
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Atom { name, .. } => write!(f, "{name}"),
            Classification::DoesNotMap(_) => write!(f, "doesn't map"),
        }
    }
}

pub fn classify(p: &CodeletPipeline, opts: &CompileOptions) -> Classification {
    let cat = catalog();
    let mut last = None;
    for (rank, t) in cat.stateful.iter().enumerate() {
        match compile_with(p, t, &cat, opts) {
            Ok(_) => return Classification::Atom { rank, name: t.name.clone() },
            Err(r) => last = Some(r),
        }
    }
    Classification::DoesNotMap(last.expect("catalog is not empty"))
}
