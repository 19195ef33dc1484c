use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::*;
use crate::atoms::{add_sub_template, Body, Config};
use crate::frontend::load;
use crate::interp::{Env, Packet, StateStore};
use crate::normalize::{normalize, run_tac};
use crate::pipeline::pipeline;

const FLOWLET: &str = include_str!("../../corpus/flowlet.domino");

fn pipe(src: &str) -> CodeletPipeline {
    pipeline(&normalize(&load(src).unwrap()))
}

fn stateful_codelet(src: &str) -> Codelet {
    pipe(src).codelets().find(|c| c.is_stateful()).unwrap().clone()
}

fn scalar(body: &str) -> String {
    format!("struct Packet {{ int a; int b; }};\nint x = 0;\nvoid f(struct Packet pkt) {{ {body} }}")
}

#[test]
fn add_sub_counter_picks_add_and_one() {
    let c = stateful_codelet(&scalar("x = x + 1;"));
    let AtomInstance::Stateful(s) = map_codelet(&c, &add_sub_template(), &MapOptions::default()).unwrap() else {
        panic!()
    };
    assert_eq!(s.holes.get("choice"), Some(&json!(0)));
    assert_eq!(s.holes.get("constant"), Some(&json!(1)));
}

#[test]
fn add_sub_has_no_squaring() {
    let c = stateful_codelet(&scalar("x = x * x;"));
    let err = map_codelet(&c, &add_sub_template(), &MapOptions::default()).unwrap_err();
    assert!(matches!(err, MapError::NoMapping { .. }), "{err}");
}

#[test]
fn write_maps_a_plain_state_touch() {
    let c = stateful_codelet(&scalar("x = x;"));
    let cat = catalog();
    let AtomInstance::Stateful(s) = map_codelet(&c, cat.get("Write").unwrap(), &MapOptions::default()).unwrap() else {
        panic!()
    };
    // Write-back of the old value: the first operand candidate is the state itself.
    assert_eq!(s.holes.get("l0_s0_operand"), Some(&json!({"state": 0})));
}

#[test]
fn stateless_mapping_is_direct() {
    let cat = catalog();
    let p = pipe(&scalar("pkt.a = pkt.b + 3;"));
    let c = p.codelets().next().unwrap();
    let atom = map_codelet(c, cat.get("Write").unwrap(), &MapOptions::default()).unwrap();
    assert!(matches!(atom, AtomInstance::Stateless { .. }));
    let p = pipe(&scalar("pkt.a = pkt.b * 3;"));
    let err = map_codelet(p.codelets().next().unwrap(), cat.get("Pairs").unwrap(), &MapOptions::default()).unwrap_err();
    assert!(err.to_string().contains("no stateless operation `*`"), "{err}");
}

#[test]
fn square_root_is_rejected_by_name() {
    let p = pipe(&scalar("pkt.a = sqrt(pkt.b);"));
    let err = map_codelet(p.codelets().next().unwrap(), catalog().get("Pairs").unwrap(), &MapOptions::default()).unwrap_err();
    assert!(err.to_string().contains("requires a square root operation"), "{err}");
    let p = pipe(&scalar("x = sqrt(x);"));
    let c = p.codelets().find(|c| c.is_stateful()).unwrap();
    let err = map_codelet(c, catalog().get("Pairs").unwrap(), &MapOptions::default()).unwrap_err();
    assert!(err.to_string().contains("requires a square root operation"), "{err}");
}

#[test]
fn too_many_states_or_fields_do_not_map() {
    let cat = catalog();
    let two = "struct Packet { int a; };\nint x;\nint y;\nvoid f(struct Packet pkt) { if (x < pkt.a && y > 0) { x = pkt.a; y = y - 1; } }";
    let c = stateful_codelet(two);
    assert_eq!(c.states.len(), 2);
    assert!(map_codelet(&c, cat.get("Nested").unwrap(), &MapOptions::default()).is_err());
    assert!(map_codelet(&c, cat.get("Pairs").unwrap(), &MapOptions::default()).is_ok());
    let four = "struct Packet { int a; int b; int c; int d; };\nint x;\n\
        void f(struct Packet pkt) { x = x + pkt.a + pkt.b + pkt.c + pkt.d; }";
    let err = map_codelet(&stateful_codelet(four), cat.get("Pairs").unwrap(), &MapOptions::default()).unwrap_err();
    assert!(err.to_string().contains("4 packet-field operands"), "{err}");
}

#[test]
fn flowlet_compiles_on_praw_only() {
    let p = pipe(FLOWLET);
    let cat = catalog();
    let opts = CompileOptions::default();
    let cfg = compile(&p, cat.get("PRAW").unwrap(), &opts).unwrap();
    assert_eq!(cfg.depth(), 6);
    assert!(cfg.max_stateful_per_stage() <= 2);
    assert_eq!(cfg.placement.len(), 2);
    let err = compile(&p, cat.get("RAW").unwrap(), &opts).unwrap_err();
    assert_eq!(err.kind, RejectionKind::Unmappable);
    assert!(err.codelet.as_deref().unwrap().contains("saved_hop"), "{err}");
    assert_eq!(classify(&p, &opts), Classification::Atom { rank: 2, name: "PRAW".into() });
}

#[test]
fn even_chunks_cover_items_once() {
    let items: Vec<usize> = (0..301).collect();
    let sizes: Vec<usize> = (0..2).map(|i| even_chunk(&items, 2, i).len()).collect();
    assert_eq!(sizes, vec![151, 150]);
    let joined: Vec<usize> = (0..7).flat_map(|i| even_chunk(&items, 7, i).to_vec()).collect();
    assert_eq!(joined, items);
}

#[test]
fn depth_overflow_is_rejected_before_mapping() {
    let p = pipe(FLOWLET);
    let opts = CompileOptions { limits: ResourceLimits { pipeline_depth: 5, ..Default::default() }, ..Default::default() };
    let err = compile(&p, catalog().get("Pairs").unwrap(), &opts).unwrap_err();
    assert_eq!(err.kind, RejectionKind::DepthExceeded);
    assert!(err.codelet.is_none());
}

/// Independent check: every mapped atom, fired on a packet, matches running
/// its codelet's statements through the three-address interpreter.
fn recheck(src: &str, target: &str) {
    let ast = load(src).unwrap();
    let p = pipeline(&normalize(&ast));
    let cfg = compile(&p, catalog().get(target).unwrap(), &CompileOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (stage, atoms) in spread(&p, &ResourceLimits::default()).stages.iter().zip(&cfg.stages) {
        for (c, atom) in stage.iter().zip(atoms) {
            for _ in 0..2000 {
                let mut packet = Packet::new();
                for s in &c.stmts {
                    for u in s.uses().into_iter().chain(s.index().and_then(Operand::field)) {
                        let small = rng.gen_bool(0.7);
                        packet.insert(u.to_string(), if small { rng.gen_range(-3..=3) } else { rng.gen() });
                    }
                }
                let state: StateStore =
                    ast.states.iter().map(|d| (d.name.clone(), (0..d.cells()).map(|_| rng.gen_range(-4..=4)).collect())).collect();
                let mut want = Env::new(packet.clone(), state.clone());
                run_tac(&mut want, &c.stmts);
                let (got_pkt, got_state) = atom.evaluate(&packet, &state).unwrap();
                assert_eq!(got_state, want.state, "{}", c.print());
                for f in atom.writes() {
                    assert_eq!(got_pkt[f], want.field(f), "{f} in\n{}", c.print());
                }
            }
        }
    }
}

#[test]
fn mapped_atoms_agree_with_their_codelets() {
    recheck(FLOWLET, "PRAW");
    recheck(&scalar("if (pkt.a > 3) { x = x - pkt.b; } else { x = 7; } pkt.b = x;"), "Sub");
    recheck(
        "struct Packet { int u; int p; int d; };\nint best[4];\nint path[4];\nvoid f(struct Packet pkt) {\n\
         if (pkt.u < best[pkt.d]) { best[pkt.d] = pkt.u; path[pkt.d] = pkt.p; }\n\
         else if (pkt.p == path[pkt.d]) { best[pkt.d] = pkt.u; } }",
        "Pairs",
    );
}

fn sample_config(body: &Body, ns: usize, nf: usize, rng: &mut ChaCha8Rng) -> Config {
    match body {
        Body::Leaf(holes) => {
            Config::Leaf(holes.iter().take(ns).map(|h| *h.candidates(ns, nf).choose(rng).unwrap()).collect())
        }
        Body::Branch { pred, then, otherwise } => Config::Branch {
            pred: *pred.candidates(ns, nf).choose(rng).unwrap(),
            then: Box::new(sample_config(then, ns, nf, rng)),
            otherwise: Box::new(sample_config(otherwise, ns, nf, rng)),
        },
    }
}

fn constants(c: &Config) -> Vec<i32> {
    use crate::atoms::Src;
    let k = |s: Src| match s {
        Src::Const(v) => vec![v],
        _ => vec![],
    };
    match c {
        Config::Leaf(u) => u.iter().flat_map(|u| k(u.src)).collect(),
        Config::Branch { pred, then, otherwise } => {
            let mut v = k(pred.lhs);
            v.extend(k(pred.rhs));
            v.extend(constants(then));
            v.extend(constants(otherwise));
            v
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every behaviour of an atom is available from the next one up.
    #[test]
    fn each_atom_is_subsumed_by_the_next(rank in 0usize..6, seed in any::<u64>()) {
        let cat = catalog();
        let (lo, hi) = (&cat.stateful[rank], &cat.stateful[rank + 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nf = 2;
        let cfg = sample_config(&lo.body, lo.state_slots, nf, &mut rng);
        let problem = Problem {
            template: hi,
            n_states: lo.state_slots,
            n_fields: nf,
            width: 2,
            extra_values: constants(&cfg),
            max_steps: 50_000_000,
        };
        let found = synthesize(&problem, &|s, f| cfg.eval(s, f));
        prop_assert!(found.is_ok(), "{} config {:?} has no {} equivalent", lo.name, cfg, hi.name);
    }
}
