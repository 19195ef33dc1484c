use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{SimError, TraceResult};
use crate::interp::Packet;

/// Read a JSON-lines trace: one object of `field: integer` per packet.
/// Blank lines are skipped; declared fields missing from a line are 0.
pub fn read_trace(input: impl BufRead, fields: &[String]) -> Result<Vec<Packet>, SimError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| SimError::Trace { line: n + 1, message };
        let obj: BTreeMap<String, Value> = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let mut pkt: Packet = fields.iter().map(|f| (f.clone(), 0)).collect();
        for (k, v) in obj {
            let v = v
                .as_i64()
                .and_then(|v| i32::try_from(v).ok())
                .ok_or_else(|| err(format!("field `{k}` is not a 32-bit integer")))?;
            pkt.insert(k, v);
        }
        out.push(pkt);
    }
    Ok(out)
}

/// Egress packets as JSON lines, then one line holding the final state.
pub fn write_result(mut out: impl Write, result: &TraceResult) -> std::io::Result<()> {
    for p in &result.packets {
        writeln!(out, "{}", serde_json::to_string(p).expect("packets serialize"))?;
    }
    writeln!(out, "{}", json!({ "state": result.state }))
}

/// Inclusive range a generated field is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRange {
    pub min: i32,
    pub max: i32,
}

/// Seeded random packets. Fields without a range mostly take small values
/// (so comparisons and array slots collide often) and occasionally any value.
pub fn random_trace(fields: &[String], n: usize, seed: u64, ranges: &BTreeMap<String, FieldRange>) -> Vec<Packet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            fields
                .iter()
                .map(|f| {
                    let v = match ranges.get(f) {
                        Some(r) => rng.gen_range(r.min..=r.max),
                        None => match rng.gen_range(0..10) {
                            0..=6 => rng.gen_range(0..=15),
                            7..=8 => rng.gen_range(-40..=40),
                            _ => rng.gen(),
                        },
                    };
                    (f.clone(), v)
                })
                .collect()
        })
        .collect()
}
