use std::collections::BTreeMap;

use super::*;
use crate::atoms::{Src, UpdateForm};
use crate::codegen::{compile, CompileOptions};
use crate::corpus::find;
use crate::frontend::{load, ValidatedAst};
use crate::normalize::normalize;
use crate::ops::{wrap_index, Intrinsic, HASH_SEED};
use crate::pipeline::pipeline;

fn compiled(src: &str, target: &str) -> (ValidatedAst, PipelineConfig) {
    let ast = load(src).unwrap();
    let p = pipeline(&normalize(&ast));
    let cfg = compile(&p, crate::atoms::catalog().get(target).unwrap(), &CompileOptions::default()).unwrap();
    (ast, cfg)
}

fn pkt(pairs: &[(&str, i32)]) -> Packet {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn flowlet() -> ValidatedAst {
    load(find("Flowlets").unwrap().source).unwrap()
}

#[test]
fn flowlet_gap_over_threshold_takes_fresh_hop() {
    let ast = flowlet();
    let trace = [pkt(&[("sport", 1), ("dport", 2), ("arrival", 3)]), pkt(&[("sport", 1), ("dport", 2), ("arrival", 10)])];
    let out = run_reference(&ast, &trace);
    assert_eq!(out.packets[1]["next_hop"], out.packets[1]["new_hop"]);
    // A gap of exactly the threshold keeps the saved hop.
    let trace = [pkt(&[("sport", 1), ("dport", 2), ("arrival", 6)]), pkt(&[("sport", 1), ("dport", 2), ("arrival", 11)])];
    let out = run_reference(&ast, &trace);
    assert_eq!(out.packets[1]["next_hop"], out.packets[0]["next_hop"]);
}

#[test]
fn empty_trace_leaves_state_alone() {
    let ast = flowlet();
    let out = run_reference(&ast, &[]);
    assert!(out.packets.is_empty());
    assert_eq!(out.state, crate::interp::initial_state(&ast.states));
    let (_, cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    let run = run_pipeline(&cfg, &[], RunOptions::default()).unwrap();
    assert_eq!(run.result, out);
}

/// Flowlet switching written directly against the hash functions.
fn flowlet_oracle(trace: &[Packet]) -> (Vec<i32>, Vec<i32>, Vec<i32>) {
    let (mut last_time, mut saved_hop) = (vec![0i32; 8000], vec![0i32; 8000]);
    let mut hops = Vec::new();
    for p in trace {
        let (s, d, a) = (p["sport"], p["dport"], p["arrival"]);
        let new_hop = Intrinsic::Hash3.eval(HASH_SEED, &[s, d, a]) % 10;
        let id = wrap_index(Intrinsic::Hash2.eval(HASH_SEED, &[s, d]) % 8000, 8000);
        if a.wrapping_sub(last_time[id]) > 5 {
            saved_hop[id] = new_hop;
        }
        last_time[id] = a;
        hops.push(saved_hop[id]);
    }
    (last_time, saved_hop, hops)
}

#[test]
fn flowlet_reference_and_pipeline_match_oracle() {
    let entry = find("Flowlets").unwrap();
    let ast = flowlet();
    let trace = random_trace(&ast.packet_fields, 1000, 5, &entry.trace);
    let (last_time, saved_hop, hops) = flowlet_oracle(&trace);
    let (_, cfg) = compiled(entry.source, "PRAW");
    for out in [run_reference(&ast, &trace), run_pipeline(&cfg, &trace, RunOptions::default()).unwrap().result] {
        assert_eq!(out.state["last_time"], last_time);
        assert_eq!(out.state["saved_hop"], saved_hop);
        let got: Vec<i32> = out.packets.iter().map(|p| p["next_hop"]).collect();
        assert_eq!(got, hops);
    }
}

#[test]
fn one_packet_leaves_at_depth_minus_one() {
    let (_, cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    let d = cfg.depth();
    let run = run_pipeline(&cfg, &[pkt(&[("sport", 1)])], RunOptions { occupancy: true, ..Default::default() }).unwrap();
    assert_eq!(run.exit_ticks, vec![d - 1]);
    assert_eq!(run.occupancy.len(), d);
    for (t, row) in run.occupancy.iter().enumerate() {
        assert_eq!(row.iter().position(Option::is_some), Some(t));
    }
}

#[test]
fn one_packet_enters_per_tick() {
    let (_, cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    let n = 20;
    let trace: Vec<Packet> = (0..n).map(|i| pkt(&[("arrival", i)])).collect();
    let run = run_pipeline(&cfg, &trace, RunOptions { occupancy: true, ..Default::default() }).unwrap();
    assert_eq!(run.exit_ticks, (0..n as usize).map(|i| i + cfg.depth() - 1).collect::<Vec<_>>());
    for (t, row) in run.occupancy.iter().enumerate() {
        for (k, slot) in row.iter().enumerate() {
            let want = t.checked_sub(k).filter(|&i| i < n as usize);
            assert_eq!(*slot, want, "tick {t} stage {k}");
        }
    }
}

#[test]
fn back_to_back_increments_are_atomic() {
    let src = "struct Packet { int a; };\nint counter = 0;\nvoid f(struct Packet pkt) { counter = counter + 1; }";
    let (_, cfg) = compiled(src, "RAW");
    let trace = vec![Packet::new(); 2];
    let run = run_pipeline(&cfg, &trace, RunOptions::default()).unwrap();
    assert_eq!(run.result.state["counter"], vec![2]);
}

#[test]
fn flowlet_pipeline_is_equivalent() {
    let (ast, cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    let report = check_equivalence(&ast, &cfg, 1000, 7).unwrap();
    assert!(report.is_equivalent(), "{report}");
}

#[test]
fn corrupted_constant_is_caught() {
    let entry = find("Heavy Hitters").unwrap();
    let (ast, mut cfg) = compiled(entry.source, "RAW");
    let (stage, slot) = cfg
        .stages
        .iter()
        .enumerate()
        .find_map(|(k, s)| s.iter().position(|a| matches!(a, AtomInstance::Stateful(_))).map(|j| (k, j)))
        .unwrap();
    let AtomInstance::Stateful(s) = &mut cfg.stages[stage][slot] else { unreachable!() };
    let crate::atoms::Config::Leaf(ups) = &mut s.config else { panic!("RAW has no predicate") };
    assert_eq!((ups[0].form, ups[0].src), (UpdateForm::Add, Src::Const(1)));
    ups[0].src = Src::Const(2);
    let trace = random_trace(&ast.packet_fields, 200, 1, &entry.trace);
    let report = check_trace(&ast, &cfg, &trace).unwrap();
    let d = report.divergence.expect("mutation must be detected");
    assert_eq!(d.packet, 0);
    assert_eq!(d.tick, cfg.depth() - 1);
    assert!(d.stage.is_some());
}

#[test]
fn heavy_hitters_update_every_row() {
    let entry = find("Heavy Hitters").unwrap();
    let (ast, cfg) = compiled(entry.source, "RAW");
    let trace = random_trace(&ast.packet_fields, 1000, 2, &entry.trace);
    assert!(check_trace(&ast, &cfg, &trace).unwrap().is_equivalent());
    let out = run_pipeline(&cfg, &trace, RunOptions::default()).unwrap().result;
    for row in ["sketch1", "sketch2", "sketch3"] {
        assert_eq!(out.state[row].iter().sum::<i32>(), 1000, "{row}");
    }
}

#[test]
fn within_stage_order_does_not_matter() {
    for name in ["Bloom filter", "Heavy Hitters", "CONGA"] {
        let entry = find(name).unwrap();
        let ast = load(entry.source).unwrap();
        let p = pipeline(&normalize(&ast));
        let cfg = compile(&p, crate::atoms::catalog().get("Pairs").unwrap(), &CompileOptions::default()).unwrap();
        let trace = random_trace(&ast.packet_fields, 300, 4, &entry.trace);
        let base = run_pipeline(&cfg, &trace, RunOptions::default()).unwrap();
        for seed in 0..5 {
            let shuffled = run_pipeline(&cfg, &trace, RunOptions { shuffle_seed: Some(seed), ..Default::default() }).unwrap();
            assert_eq!(shuffled.result, base.result, "{name}");
        }
    }
}

#[test]
fn atoms_only_reach_their_own_state() {
    let (_, mut cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    // Point one stateful atom at the other's state variable.
    let mut owners = cfg.stages.iter_mut().flatten().filter_map(|a| match a {
        AtomInstance::Stateful(s) => Some(s),
        _ => None,
    });
    let first = owners.next().unwrap();
    let other = owners.next().unwrap().states[0].name.clone();
    first.states[0].name = other;
    assert!(matches!(validate_config(&cfg), Err(SimError::Config(m)) if m.contains("more than one atom")));
    assert!(run_pipeline(&cfg, &[pkt(&[("sport", 1)])], RunOptions::default()).is_err());
    // Each atom fires against a private store holding only what it owns.
    let atom = cfg.stages.iter().flatten().find(|a| !a.states().is_empty()).unwrap();
    let err = atom.fire(&pkt(&[("id0", 1), ("arrival", 1), ("_t00", 1), ("new_hop0", 1)]), &mut StateStore::new()).unwrap_err();
    assert!(matches!(err, crate::atoms::EvalError::MissingState(_)));
}

#[test]
fn configs_round_trip_and_reject_unproduced_fields() {
    let (_, cfg) = compiled(find("Flowlets").unwrap().source, "PRAW");
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(load_config(&text).unwrap(), cfg);
    let mut broken = cfg.clone();
    broken.stages.swap(0, 1);
    let err = validate_config(&broken).unwrap_err();
    assert!(err.to_string().contains("which no earlier stage produces"), "{err}");
    assert!(load_config("{").is_err());
}

#[test]
fn trace_lines_default_missing_fields() {
    let fields = vec!["a".to_string(), "b".to_string()];
    let input = "{\"a\": 3}\n\n{\"b\": -2, \"extra\": 1}\n";
    let trace = read_trace(input.as_bytes(), &fields).unwrap();
    assert_eq!(trace, vec![pkt(&[("a", 3), ("b", 0)]), pkt(&[("a", 0), ("b", -2), ("extra", 1)])]);
    let err = read_trace("{\"a\": 1.5}".as_bytes(), &fields).unwrap_err();
    assert!(err.to_string().starts_with("trace line 1"), "{err}");
    assert!(read_trace("{\"a\": 4294967296}".as_bytes(), &fields).is_err());

    let result = TraceResult { packets: trace, state: BTreeMap::from([("s".to_string(), vec![1, 2])]) };
    let mut out = Vec::new();
    write_result(&mut out, &result).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, vec!["{\"a\":3,\"b\":0}", "{\"a\":0,\"b\":-2,\"extra\":1}", "{\"state\":{\"s\":[1,2]}}"]);
}

#[test]
fn guard_misses_pass_through() {
    let src = "struct Packet { int port; int n; };\nguard (pkt.port == 80);\nint hits = 0;\n\
               void f(struct Packet pkt) { hits = hits + 1; pkt.n = hits; }";
    let (ast, cfg) = compiled(src, "RAW");
    let trace = [pkt(&[("port", 80)]), pkt(&[("port", 22), ("n", 9)]), pkt(&[("port", 80)])];
    let want = run_reference(&ast, &trace);
    assert_eq!(want.packets[1], pkt(&[("port", 22), ("n", 9)]));
    assert_eq!(want.packets[2]["n"], 2);
    assert_eq!(want.state["hits"], vec![2]);
    assert_eq!(run_pipeline(&cfg, &trace, RunOptions::default()).unwrap().result, want);
}

#[test]
fn random_traces_are_seeded() {
    let fields = vec!["a".to_string(), "b".to_string()];
    let ranges = BTreeMap::from([("a".to_string(), FieldRange { min: 3, max: 4 })]);
    let t1 = random_trace(&fields, 50, 9, &ranges);
    assert_eq!(t1, random_trace(&fields, 50, 9, &ranges));
    assert_ne!(t1, random_trace(&fields, 50, 10, &ranges));
    assert!(t1.iter().all(|p| (3..=4).contains(&p["a"])));
}
