//! Hole search: counterexample-guided, with a structured solver that finds
//! the lexicographically smallest assignment consistent with an example set.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atoms::{AtomTemplate, Body, Config, Pred, Update};

/// Random full-width points checked after the exhaustive sweep.
pub const RANDOM_CHECKS: usize = 10_000;
const RANDOM_SEED: u64 = 0x5eed;
/// Counterexamples added per refinement round.
const CEX_PER_ROUND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchError {
    /// No assignment agrees with the specification.
    NoMapping,
    /// The solver gave up after this many candidate checks.
    BudgetExceeded(u64),
}

/// The specification as a function `(old state, field slots) -> new state`.
pub type SpecFn<'a> = &'a dyn Fn(&[i32], &[i32]) -> Vec<i32>;

#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub template: &'a AtomTemplate,
    pub n_states: usize,
    pub n_fields: usize,
    /// Exhaustively checked input values at `verify_width` bits.
    pub width: u32,
    /// Extra values for the exhaustive sweep (codelet constants and neighbours).
    pub extra_values: Vec<i32>,
    pub max_steps: u64,
}

impl Problem<'_> {
    fn arity(&self) -> usize {
        self.n_states + self.n_fields
    }

    /// Values each input ranges over in the exhaustive sweep.
    pub fn sweep_values(&self) -> Vec<i32> {
        let half = 1i32 << (self.width - 1);
        let mut v: Vec<i32> = (-half..half).collect();
        for &c in &self.extra_values {
            for d in [c.wrapping_sub(1), c, c.wrapping_add(1)] {
                if !v.contains(&d) {
                    v.push(d);
                }
            }
        }
        v
    }

    /// Every point of the sweep followed by seeded random full-width points.
    pub fn verification_points(&self) -> impl Iterator<Item = Vec<i32>> + '_ {
        let vals = self.sweep_values();
        let k = self.arity();
        let total = vals.len().pow(k as u32);
        let exhaustive = (0..total).map(move |mut n| {
            let mut p = vec![0; k];
            for slot in p.iter_mut().rev() {
                *slot = vals[n % vals.len()];
                n /= vals.len();
            }
            p
        });
        let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
        let random = (0..RANDOM_CHECKS).map(move |_| (0..k).map(|_| rng.gen::<i32>()).collect());
        exhaustive.chain(random)
    }
}

/// First assignment (in hole order) matching `spec` on every verification point.
pub fn synthesize(problem: &Problem, spec: SpecFn) -> Result<Config, SearchError> {
    let ns = problem.n_states;
    let mut examples = Examples::default();
    examples.push(vec![0; problem.arity()], ns, spec);
    let mut steps = 0u64;
    loop {
        let mut solver = Solver::new(problem, &examples, steps);
        let root = solver.build(&problem.template.body);
        let found = solver.solve(root, &examples.full());
        steps = solver.steps;
        if steps > problem.max_steps {
            return Err(SearchError::BudgetExceeded(steps));
        }
        let config = found.ok_or(SearchError::NoMapping)?;
        let mut cex = Vec::new();
        for p in problem.verification_points() {
            let (s, f) = p.split_at(ns);
            if config.eval(s, f) != spec(s, f) {
                cex.push(p);
                if cex.len() == CEX_PER_ROUND {
                    break;
                }
            }
        }
        if cex.is_empty() {
            return Ok(config);
        }
        for p in cex {
            examples.push(p, ns, spec);
        }
    }
}

#[derive(Debug, Default)]
struct Examples {
    states: Vec<Vec<i32>>,
    fields: Vec<Vec<i32>>,
    expected: Vec<Vec<i32>>,
}

type Bits = Vec<u64>;

impl Examples {
    fn push(&mut self, p: Vec<i32>, ns: usize, spec: SpecFn) {
        let (s, f) = p.split_at(ns);
        self.expected.push(spec(s, f));
        self.states.push(s.to_vec());
        self.fields.push(f.to_vec());
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    fn bits(&self, mut keep: impl FnMut(usize) -> bool) -> Bits {
        let mut b = vec![0u64; self.len().div_ceil(64)];
        for i in 0..self.len() {
            if keep(i) {
                b[i / 64] |= 1 << (i % 64);
            }
        }
        b
    }

    fn full(&self) -> Bits {
        self.bits(|_| true)
    }
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

enum Node {
    Leaf(Vec<Vec<(Update, Bits)>>),
    Branch { preds: Vec<(Pred, Bits)>, then: usize, otherwise: usize },
}

struct Solver<'a> {
    problem: &'a Problem<'a>,
    ex: &'a Examples,
    nodes: Vec<Node>,
    memo: HashMap<(usize, Bits), Option<Config>>,
    steps: u64,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a Problem<'a>, ex: &'a Examples, steps: u64) -> Self {
        Solver { problem, ex, nodes: Vec::new(), memo: HashMap::new(), steps }
    }

    fn build(&mut self, body: &Body) -> usize {
        let (ns, nf) = (self.problem.n_states, self.problem.n_fields);
        let ex = self.ex;
        let node = match body {
            Body::Leaf(holes) => Node::Leaf(
                holes
                    .iter()
                    .take(ns)
                    .enumerate()
                    .map(|(j, h)| {
                        h.candidates(ns, nf)
                            .into_iter()
                            .map(|u| {
                                let bits = ex.bits(|i| {
                                    let x = u.src.eval(&ex.states[i], &ex.fields[i]);
                                    u.form.apply(ex.states[i][j], x) == ex.expected[i][j]
                                });
                                (u, bits)
                            })
                            .collect()
                    })
                    .collect(),
            ),
            Body::Branch { pred, then, otherwise } => {
                // Predicates with the same truth pattern on the examples are
                // interchangeable here; keep the first of each.
                let mut seen = HashSet::new();
                let mut preds = Vec::new();
                for p in pred.candidates(ns, nf) {
                    let bits = ex.bits(|i| p.holds(&ex.states[i], &ex.fields[i]));
                    if seen.insert(bits.clone()) {
                        preds.push((p, bits));
                    }
                }
                let then = self.build(then);
                let otherwise = self.build(otherwise);
                Node::Branch { preds, then, otherwise }
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn solve(&mut self, node: usize, region: &Bits) -> Option<Config> {
        if self.steps > self.problem.max_steps {
            return None;
        }
        let key = (node, region.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let out = match &self.nodes[node] {
            Node::Leaf(slots) => {
                let mut ups = Vec::with_capacity(slots.len());
                for cands in slots {
                    let pos = cands.iter().position(|(_, b)| subset(region, b));
                    self.steps += pos.map_or(cands.len(), |p| p + 1) as u64;
                    match pos {
                        Some(p) => ups.push(cands[p].0),
                        None => break,
                    }
                }
                (ups.len() == slots.len()).then_some(Config::Leaf(ups))
            }
            Node::Branch { preds, then, otherwise } => {
                let (then, otherwise) = (*then, *otherwise);
                let preds: Vec<(Pred, Bits, Bits)> = preds
                    .iter()
                    .map(|(p, b)| {
                        let t: Bits = region.iter().zip(b).map(|(r, x)| r & x).collect();
                        let e: Bits = region.iter().zip(b).map(|(r, x)| r & !x).collect();
                        (*p, t, e)
                    })
                    .collect();
                let mut tried = HashSet::new();
                let mut result = None;
                for (p, t, e) in preds {
                    self.steps += 1;
                    if !tried.insert(t.clone()) {
                        continue;
                    }
                    let Some(tc) = self.solve(then, &t) else { continue };
                    let Some(ec) = self.solve(otherwise, &e) else { continue };
                    result = Some(Config::Branch { pred: p, then: Box::new(tc), otherwise: Box::new(ec) });
                    break;
                }
                result
            }
        };
        self.memo.insert(key, out.clone());
        out
    }
}
