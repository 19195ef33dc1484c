//! Sequential reference execution, tick-level pipeline execution, and the
//! equivalence check between them.

mod config;
mod equivalence;
#[cfg(test)]
mod tests;
mod trace;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{load_config, validate_config};
pub use equivalence::{check_equivalence, check_trace, Divergence, EquivalenceReport};
pub use trace::{random_trace, read_trace, write_result, FieldRange};

use crate::atoms::{AtomInstance, EvalError};
use crate::codegen::PipelineConfig;
use crate::frontend::{Expr, ProgramAst};
use crate::interp::{initial_state, Env, Packet, StateStore};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Eval { stage: usize, source: EvalError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Egress packets (declared fields only) and the final switch state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceResult {
    pub packets: Vec<Packet>,
    pub state: StateStore,
}

/// Ingress packet restricted to the declared fields; absent fields are 0.
fn ingress(fields: &[String], pkt: &Packet) -> Packet {
    fields.iter().map(|f| (f.clone(), pkt.get(f).copied().unwrap_or(0))).collect()
}

fn guard_holds(guard: &Option<Expr>, packet: &Packet) -> bool {
    match guard {
        Some(g) => Env::new(packet.clone(), StateStore::new()).eval(g) != 0,
        None => true,
    }
}

/// Run the transaction one packet at a time, to completion.
pub fn run_reference(program: &ProgramAst, trace: &[Packet]) -> TraceResult {
    let mut env = Env::new(Packet::new(), initial_state(&program.states));
    let mut packets = Vec::with_capacity(trace.len());
    for pkt in trace {
        let pkt = ingress(&program.packet_fields, pkt);
        if !guard_holds(&program.guard, &pkt) {
            packets.push(pkt);
            continue;
        }
        env.packet = pkt;
        env.exec(&program.body);
        packets.push(ingress(&program.packet_fields, &env.packet));
    }
    TraceResult { packets, state: env.state }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record which packet sits in which stage at every tick.
    pub occupancy: bool,
    /// Fire each stage's atoms in a seeded random order instead of slot order.
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineRun {
    pub result: TraceResult,
    /// Tick at which each packet left the last stage.
    pub exit_ticks: Vec<usize>,
    /// `occupancy[tick][stage]`: packet index in that stage, when requested.
    pub occupancy: Vec<Vec<Option<usize>>>,
    /// Every packet field after the last stage, temporaries included.
    pub egress: Vec<Packet>,
}

/// Tick-level execution: packet `i` enters stage 0 at tick `i` and occupies
/// stage `k` at tick `i + k`. Each atom sees only its own state variables.
pub fn run_pipeline(config: &PipelineConfig, trace: &[Packet], opts: RunOptions) -> Result<PipelineRun, SimError> {
    validate_config(config)?;
    let depth = config.depth();
    let init = initial_state(&config.states);
    // One private store per atom.
    let mut stores: Vec<Vec<StateStore>> = config
        .stages
        .iter()
        .map(|stage| {
            stage.iter().map(|a| a.states().into_iter().map(|s| (s.to_string(), init[s].clone())).collect()).collect()
        })
        .collect();
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut in_flight: Vec<Packet> = trace.iter().map(|p| ingress(&config.packet_fields, p)).collect();
    let active: Vec<bool> = in_flight.iter().map(|p| guard_holds(&config.guard, p)).collect();
    let ticks = if trace.is_empty() { 0 } else { trace.len() + depth.max(1) - 1 };
    let mut occupancy = Vec::new();
    for t in 0..ticks {
        let mut row = vec![None; depth];
        for (k, stage) in config.stages.iter().enumerate() {
            let Some(i) = t.checked_sub(k).filter(|&i| i < trace.len()) else { continue };
            row[k] = Some(i);
            if !active[i] {
                continue;
            }
            let mut order: Vec<usize> = (0..stage.len()).collect();
            if let Some(r) = rng.as_mut() {
                order.shuffle(r);
            }
            let snapshot = in_flight[i].clone();
            let mut writes = Vec::new();
            for j in order {
                let out = stage[j].fire(&snapshot, &mut stores[k][j]).map_err(|source| SimError::Eval { stage: k, source })?;
                writes.extend(out);
            }
            in_flight[i].extend(writes);
        }
        if opts.occupancy {
            occupancy.push(row);
        }
    }
    let mut state: StateStore = init;
    for store in stores.into_iter().flatten() {
        state.extend(store);
    }
    let packets = in_flight
        .iter()
        .zip(&active)
        .zip(trace)
        .map(|((p, &on), orig)| if on { egress(config, p) } else { ingress(&config.packet_fields, orig) })
        .collect();
    let exit_ticks = (0..trace.len()).map(|i| i + depth.max(1) - 1).collect();
    Ok(PipelineRun { result: TraceResult { packets, state }, exit_ticks, occupancy, egress: in_flight })
}

/// Declared fields read from the versions holding their final values.
fn egress(config: &PipelineConfig, p: &Packet) -> Packet {
    config
        .packet_fields
        .iter()
        .map(|f| {
            let src = config.outputs.get(f).unwrap_or(f);
            (f.clone(), p.get(src).copied().unwrap_or(0))
        })
        .collect()
}

/// Stage and atom writing `field`, if any.
pub fn producer<'a>(config: &'a PipelineConfig, field: &str) -> Option<(usize, &'a AtomInstance)> {
    config.stages.iter().enumerate().find_map(|(k, s)| s.iter().find(|a| a.writes().contains(&field)).map(|a| (k, a)))
}

