use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{producer, random_trace, run_pipeline, run_reference, RunOptions, SimError};
use crate::codegen::PipelineConfig;
use crate::frontend::ProgramAst;
use crate::interp::Packet;

/// First point where the pipeline and the reference disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    /// Packet index in the trace (the last packet for a final-state mismatch).
    pub packet: usize,
    /// Tick at which that packet left the pipeline.
    pub tick: usize,
    /// Stage whose atom produced the first differing value, if known.
    pub stage: Option<usize>,
    /// Field -> (reference, pipeline).
    pub fields: BTreeMap<String, (i32, i32)>,
    /// State variable -> (reference, pipeline), only for final-state mismatches.
    pub state: BTreeMap<String, (Vec<i32>, Vec<i32>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub packets: usize,
    pub divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(d) = &self.divergence else {
            return write!(f, "equivalent over {} packets", self.packets);
        };
        write!(f, "diverged at packet {} (tick {}", d.packet, d.tick)?;
        if let Some(s) = d.stage {
            write!(f, ", stage {s}")?;
        }
        write!(f, ")")?;
        for (k, (want, got)) in &d.fields {
            write!(f, "\n  pkt.{k}: reference {want}, pipeline {got}")?;
        }
        for (k, (want, got)) in &d.state {
            write!(f, "\n  {k}: reference {want:?}, pipeline {got:?}")?;
        }
        Ok(())
    }
}

/// Compare per-packet outputs and the final state on a given trace.
pub fn check_trace(program: &ProgramAst, config: &PipelineConfig, trace: &[Packet]) -> Result<EquivalenceReport, SimError> {
    let want = run_reference(program, trace);
    let run = run_pipeline(config, trace, RunOptions::default())?;
    let got = &run.result;
    for (i, (w, g)) in want.packets.iter().zip(&got.packets).enumerate() {
        let fields: BTreeMap<String, (i32, i32)> =
            w.iter().filter(|(k, v)| g.get(*k) != Some(v)).map(|(k, &v)| (k.clone(), (v, g.get(k).copied().unwrap_or(0)))).collect();
        if fields.is_empty() {
            continue;
        }
        let stage = fields
            .keys()
            .filter_map(|f| config.outputs.get(f).and_then(|src| producer(config, src)).map(|(k, _)| k))
            .min();
        let divergence = Divergence { packet: i, tick: run.exit_ticks[i], stage, fields, state: BTreeMap::new() };
        return Ok(EquivalenceReport { packets: trace.len(), divergence: Some(divergence) });
    }
    let state: BTreeMap<String, (Vec<i32>, Vec<i32>)> = want
        .state
        .iter()
        .filter(|(k, v)| got.state.get(*k) != Some(v))
        .map(|(k, v)| (k.clone(), (v.clone(), got.state.get(k).cloned().unwrap_or_default())))
        .collect();
    let divergence = (!state.is_empty()).then(|| Divergence {
        packet: trace.len().saturating_sub(1),
        tick: run.exit_ticks.last().copied().unwrap_or(0),
        stage: state.keys().filter_map(|s| config.placement.get(s).copied()).min(),
        fields: BTreeMap::new(),
        state,
    });
    Ok(EquivalenceReport { packets: trace.len(), divergence })
}

/// [`check_trace`] on `n` seeded random packets.
pub fn check_equivalence(program: &ProgramAst, config: &PipelineConfig, n: usize, seed: u64) -> Result<EquivalenceReport, SimError> {
    let trace = random_trace(&program.packet_fields, n, seed, &BTreeMap::new());
    check_trace(program, config, &trace)
}
