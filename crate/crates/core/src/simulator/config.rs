use std::collections::{BTreeMap, BTreeSet};

use super::SimError;
use crate::atoms::{AtomInstance, OutputSource};
use crate::codegen::PipelineConfig;

/// Parse a pipeline config and reject anything the hardware could not run.
pub fn load_config(text: &str) -> Result<PipelineConfig, SimError> {
    let config: PipelineConfig = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
    validate_config(&config)?;
    Ok(config)
}

/// Every field an atom reads must arrive with the packet or come from an
/// earlier stage; every state variable must belong to exactly one atom.
pub fn validate_config(config: &PipelineConfig) -> Result<(), SimError> {
    let bad = |m: String| Err(SimError::Config(m));
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    let mut available: BTreeSet<&str> = config.packet_fields.iter().map(String::as_str).collect();
    for (k, stage) in config.stages.iter().enumerate() {
        let mut written: BTreeSet<&str> = BTreeSet::new();
        for atom in stage {
            for f in atom.reads() {
                if !available.contains(f) {
                    return bad(format!("stage {k} reads `{f}`, which no earlier stage produces"));
                }
            }
            for f in atom.writes() {
                if !written.insert(f) {
                    return bad(format!("stage {k} writes `{f}` twice"));
                }
            }
            for s in atom.states() {
                if config.states.iter().all(|d| d.name != s) {
                    return bad(format!("stage {k} uses undeclared state `{s}`"));
                }
                if owner.insert(s, k).is_some() {
                    return bad(format!("state `{s}` is owned by more than one atom"));
                }
            }
            if let AtomInstance::Stateful(s) = atom {
                for (d, src) in &s.outputs {
                    let (OutputSource::Old(i) | OutputSource::New(i)) = *src;
                    if i >= s.states.len() {
                        return bad(format!("stage {k}: `{d}` comes from state slot {i}, which is unbound"));
                    }
                }
            }
        }
        available.extend(written);
    }
    for d in &config.states {
        match owner.get(d.name.as_str()) {
            None => return bad(format!("state `{}` is not placed in any atom", d.name)),
            Some(&k) if config.placement.get(&d.name) != Some(&k) => {
                return bad(format!("placement of `{}` disagrees with the atom in stage {k}", d.name))
            }
            _ => {}
        }
    }
    for (f, v) in &config.outputs {
        if !available.contains(v.as_str()) {
            return bad(format!("output `{f}` reads `{v}`, which is never produced"));
        }
    }
    Ok(())
}
