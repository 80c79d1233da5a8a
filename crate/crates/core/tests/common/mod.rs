//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod stub;

use std::collections::BTreeSet;

use kgqa_core::sparql::{BgpGraph, Literal, NodeLabel, Term, XSD};
use kgqa_core::store::Triple;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> BgpGraph {
    let n = rng.gen_range(1..=max_nodes);
    let mut nodes: Vec<NodeLabel> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                NodeLabel::Entity
            } else {
                NodeLabel::OtherVar
            }
        })
        .collect();
    if rng.gen_bool(0.8) {
        let a = rng.gen_range(0..n);
        nodes[a] = NodeLabel::AnswerVar;
    }
    let m = rng.gen_range(1..=max_edges);
    let edges = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    BgpGraph::new(nodes, edges)
}

/// The same graph with nodes renumbered and edges reordered.
pub fn shuffled_copy<R: Rng>(rng: &mut R, g: &BgpGraph) -> BgpGraph {
    let n = g.nodes.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut nodes = vec![NodeLabel::Entity; n];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes[old];
    }
    let mut edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (perm[e.from], perm[e.to])).collect();
    edges.shuffle(rng);
    BgpGraph::new(nodes, edges)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Tries every node bijection.
pub fn brute_force_isomorphic(a: &BgpGraph, b: &BgpGraph) -> bool {
    if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut target: Vec<(usize, usize)> = b.edges.iter().map(|e| (e.from, e.to)).collect();
    target.sort();
    permutations(a.nodes.len()).into_iter().any(|p| {
        if (0..a.nodes.len()).any(|i| a.nodes[i] != b.nodes[p[i]]) {
            return false;
        }
        let mut mapped: Vec<(usize, usize)> = a.edges.iter().map(|e| (p[e.from], p[e.to])).collect();
        mapped.sort();
        mapped == target
    })
}

/// A small closed vocabulary: entities, predicates and two integers.
pub struct Vocab {
    pub entities: usize,
    pub predicates: usize,
    pub literals: usize,
}

pub const VOCAB: Vocab = Vocab {
    entities: 10,
    predicates: 3,
    literals: 2,
};

impl Vocab {
    pub fn size(&self) -> usize {
        self.entities + self.predicates + self.literals
    }

    /// Ids `0..entities` are entities, then predicates, then literals.
    pub fn term(&self, id: usize) -> Term {
        if id < self.entities {
            Term::iri(format!("http://ex.org/e{id}"))
        } else if id < self.entities + self.predicates {
            Term::iri(format!("http://ex.org/p{}", id - self.entities))
        } else {
            Term::Literal(Literal::integer((id - self.entities - self.predicates) as i64 + 1))
        }
    }

    pub fn text(&self, id: usize) -> String {
        match self.term(id) {
            Term::Iri(i) => format!("<{i}>"),
            Term::Literal(l) => format!("\"{}\"^^<{XSD}integer>", l.lexical),
            Term::Variable(v) => format!("?{v}"),
        }
    }

    pub fn random_entity<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.entities)
    }

    pub fn random_predicate<R: Rng>(&self, rng: &mut R) -> usize {
        self.entities + rng.gen_range(0..self.predicates)
    }

    pub fn random_object<R: Rng>(&self, rng: &mut R) -> usize {
        if rng.gen_bool(0.2) {
            self.entities + self.predicates + rng.gen_range(0..self.literals)
        } else {
            self.random_entity(rng)
        }
    }
}

pub type IdTriple = (usize, usize, usize);

pub fn random_store<R: Rng>(rng: &mut R, max_triples: usize) -> Vec<IdTriple> {
    let n = rng.gen_range(0..=max_triples);
    (0..n)
        .map(|_| {
            (
                VOCAB.random_entity(rng),
                VOCAB.random_predicate(rng),
                VOCAB.random_object(rng),
            )
        })
        .collect()
}

pub fn to_triples(ids: &[IdTriple]) -> Vec<Triple> {
    ids.iter()
        .map(|&(s, p, o)| (VOCAB.term(s), VOCAB.term(p), VOCAB.term(o)))
        .collect()
}

/// A pattern slot: a variable index or a vocabulary id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Var(usize),
    Const(usize),
}

pub type IdPattern = [Slot; 3];

pub const MAX_VARS: usize = 4;

pub fn random_bgp<R: Rng>(rng: &mut R, max_patterns: usize) -> Vec<IdPattern> {
    let n = rng.gen_range(1..=max_patterns);
    (0..n)
        .map(|_| {
            let var = |rng: &mut R, p: f64| rng.gen_bool(p).then(|| Slot::Var(rng.gen_range(0..MAX_VARS)));
            let s = var(rng, 0.6).unwrap_or(Slot::Const(VOCAB.random_entity(rng)));
            let p = var(rng, 0.15).unwrap_or(Slot::Const(VOCAB.random_predicate(rng)));
            let o = var(rng, 0.6).unwrap_or(Slot::Const(VOCAB.random_object(rng)));
            [s, p, o]
        })
        .collect()
}

pub fn bgp_vars(bgp: &[IdPattern]) -> Vec<usize> {
    let set: BTreeSet<usize> = bgp
        .iter()
        .flatten()
        .filter_map(|s| match s {
            Slot::Var(v) => Some(*v),
            Slot::Const(_) => None,
        })
        .collect();
    set.into_iter().collect()
}

pub fn bgp_text(bgp: &[IdPattern]) -> String {
    let slot = |s: &Slot| match s {
        Slot::Var(v) => format!("?v{v}"),
        Slot::Const(c) => VOCAB.text(*c),
    };
    bgp.iter()
        .map(|p| format!("{} {} {} .", slot(&p[0]), slot(&p[1]), slot(&p[2])))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Values of `answer` over every assignment of every variable to every
/// vocabulary term that satisfies all patterns.
pub fn oracle_answers(store: &[IdTriple], bgp: &[IdPattern], answer: Option<usize>) -> BTreeSet<usize> {
    let size = VOCAB.size();
    let mut present = vec![false; size * size * size];
    for &(s, p, o) in store {
        present[(s * size + p) * size + o] = true;
    }
    let vars = bgp_vars(bgp);
    let mut assignment = [0usize; MAX_VARS];
    let mut out = BTreeSet::new();
    let total = size.pow(vars.len() as u32);
    for mut code in 0..total {
        for &v in &vars {
            assignment[v] = code % size;
            code /= size;
        }
        let value = |s: &Slot| match s {
            Slot::Var(v) => assignment[*v],
            Slot::Const(c) => *c,
        };
        if bgp
            .iter()
            .all(|p| present[(value(&p[0]) * size + value(&p[1])) * size + value(&p[2])])
        {
            out.insert(answer.map_or(0, |a| assignment[a]));
        }
    }
    out
}
