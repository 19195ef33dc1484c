//! The bundled data-plane algorithms and their expected classifications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::simulator::FieldRange;

const MANIFEST: &str = include_str!("../../corpus/manifest.json");

const SOURCES: [(&str, &str); 11] = [
    ("bloom_filter.domino", include_str!("../../corpus/bloom_filter.domino")),
    ("heavy_hitters.domino", include_str!("../../corpus/heavy_hitters.domino")),
    ("flowlet.domino", include_str!("../../corpus/flowlet.domino")),
    ("rcp.domino", include_str!("../../corpus/rcp.domino")),
    ("sampled_netflow.domino", include_str!("../../corpus/sampled_netflow.domino")),
    ("hull.domino", include_str!("../../corpus/hull.domino")),
    ("avq.domino", include_str!("../../corpus/avq.domino")),
    ("wfq_priorities.domino", include_str!("../../corpus/wfq_priorities.domino")),
    ("dns_ttl_change.domino", include_str!("../../corpus/dns_ttl_change.domino")),
    ("conga.domino", include_str!("../../corpus/conga.domino")),
    ("codel.domino", include_str!("../../corpus/codel.domino")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub file: String,
    /// Least expressive stateful atom, or `None` when nothing maps.
    pub expected: Option<String>,
    /// Published stage count and widest stage (advisory).
    pub paper_stages: usize,
    pub paper_max_atoms: usize,
    pub description: String,
    /// Value ranges for random traces; other fields use the default mix.
    #[serde(default)]
    pub trace: BTreeMap<String, FieldRange>,
    #[serde(skip)]
    pub source: &'static str,
}

impl CorpusEntry {
    /// Expected classification as printed by `classify`.
    pub fn expected_label(&self) -> &str {
        self.expected.as_deref().unwrap_or("doesn't map")
    }
}

pub fn load_corpus() -> Vec<CorpusEntry> {
    let mut entries: Vec<CorpusEntry> = serde_json::from_str(MANIFEST).expect("bundled manifest parses");
    for e in &mut entries {
        e.source = SOURCES.iter().find(|(f, _)| *f == e.file).map(|(_, s)| *s).expect("manifest names a bundled file");
    }
    entries
}

pub fn find(name: &str) -> Option<CorpusEntry> {
    load_corpus().into_iter().find(|e| e.name.eq_ignore_ascii_case(name) || e.file.trim_end_matches(".domino") == name)
}
