//! Query execution: an in-memory triple store for small graphs and a client
//! for remote SPARQL endpoints.

mod answer;
mod ntriples;
pub mod remote;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub(crate) use answer::{is_date_literal, numeric_value};
pub use answer::{AnswerKind, AnswerSet, Value};
pub use ntriples::{load_ntriples, parse_ntriples, LoadReport, Triple};

use crate::sparql::{CmpOp, Modifier, ParsedQuery, QueryForm, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unsupported query feature: {0}")]
    UnsupportedFeature(String),
}

type Id = u32;

/// An immutable set of triples with subject, predicate and object indexes.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    terms: Vec<Term>,
    ids: HashMap<Term, Id>,
    triples: Vec<[Id; 3]>,
    by_subject: HashMap<Id, Vec<usize>>,
    by_predicate: HashMap<Id, Vec<usize>>,
    by_object: HashMap<Id, Vec<usize>>,
}

impl TripleStore {
    pub fn new(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut store = TripleStore::default();
        let mut seen = HashSet::new();
        let mut encoded = Vec::new();
        for (s, p, o) in triples {
            let t = [store.intern(s), store.intern(p), store.intern(o)];
            if seen.insert(t) {
                encoded.push(t);
            }
        }
        // a stable order keeps evaluation deterministic regardless of input order
        encoded.sort_by(|a, b| {
            (0..3)
                .map(|k| store.terms[a[k] as usize].cmp(&store.terms[b[k] as usize]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        for (i, t) in encoded.iter().enumerate() {
            store.by_subject.entry(t[0]).or_default().push(i);
            store.by_predicate.entry(t[1]).or_default().push(i);
            store.by_object.entry(t[2]).or_default().push(i);
        }
        store.triples = encoded;
        store
    }

    fn intern(&mut self, t: Term) -> Id {
        if let Some(&id) = self.ids.get(&t) {
            return id;
        }
        let id = self.terms.len() as Id;
        self.terms.push(t.clone());
        self.ids.insert(t, id);
        id
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term, &Term)> {
        self.triples.iter().map(|t| {
            (
                &self.terms[t[0] as usize],
                &self.terms[t[1] as usize],
                &self.terms[t[2] as usize],
            )
        })
    }

    pub fn contains(&self, s: &Term, p: &Term, o: &Term) -> bool {
        let (Some(&s), Some(&p), Some(&o)) = (self.ids.get(s), self.ids.get(p), self.ids.get(o)) else {
            return false;
        };
        self.by_subject
            .get(&s)
            .is_some_and(|list| list.iter().any(|&i| self.triples[i] == [s, p, o]))
    }

    /// Evaluates a parsed query. Solutions are always distinct; without
    /// `ORDER BY` they come back sorted by value.
    pub fn evaluate(&self, q: &ParsedQuery) -> Result<AnswerSet, StoreError> {
        if q.form == QueryForm::Select && q.projection.len() != 1 {
            return Err(StoreError::UnsupportedFeature(format!(
                "projection of {} variables",
                q.projection.len()
            )));
        }
        let mut vars: Vec<String> = Vec::new();
        let var_index = |name: &str, vars: &mut Vec<String>| match vars.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                vars.push(name.to_string());
                vars.len() - 1
            }
        };
        let mut patterns = Vec::with_capacity(q.patterns.len());
        let mut unsatisfiable = false;
        for p in &q.patterns {
            let mut slots = [Slot::Var(0); 3];
            for (slot, term) in slots.iter_mut().zip([&p.subject, &p.predicate, &p.object]) {
                *slot = match term {
                    Term::Variable(v) => Slot::Var(var_index(v, &mut vars)),
                    t => match self.ids.get(t) {
                        Some(&id) => Slot::Const(id),
                        None => {
                            unsatisfiable = true;
                            Slot::Const(Id::MAX)
                        }
                    },
                };
            }
            patterns.push(slots);
        }
        for m in &q.modifiers {
            match m {
                Modifier::Count { variable } | Modifier::OrderBy { variable, .. } => {
                    var_index(variable, &mut vars);
                }
                Modifier::Filter { left, right, .. } => {
                    for t in [left, right] {
                        if let Term::Variable(v) = t {
                            var_index(v, &mut vars);
                        }
                    }
                }
                Modifier::Limit(_) => {}
            }
        }

        let mut solutions = Vec::new();
        if !unsatisfiable {
            let mut bound = vec![None; vars.len()];
            let mut remaining: Vec<usize> = (0..patterns.len()).collect();
            self.join(&patterns, &mut bound, &mut remaining, &mut solutions);
        }
        let lookup = |sol: &[Option<Id>], t: &Term| -> Option<Term> {
            match t {
                Term::Variable(v) => {
                    let i = vars.iter().position(|x| x == v)?;
                    sol[i].map(|id| self.terms[id as usize].clone())
                }
                t => Some(t.clone()),
            }
        };
        solutions.retain(|sol| {
            q.modifiers.iter().all(|m| match m {
                Modifier::Filter { left, op, right } => match (lookup(sol, left), lookup(sol, right)) {
                    (Some(a), Some(b)) => filter_holds(&a, *op, &b),
                    _ => false,
                },
                _ => true,
            })
        });

        if q.form == QueryForm::Ask {
            return Ok(AnswerSet::boolean(!solutions.is_empty()));
        }
        let answer = &q.projection[0];
        let answer_at = vars
            .iter()
            .position(|v| v == answer)
            .expect("projected variable occurs in pattern");

        if let Some(Modifier::Count { variable }) = q.modifiers.iter().find(|m| matches!(m, Modifier::Count { .. })) {
            let at = vars.iter().position(|v| v == variable).expect("registered above");
            let distinct: HashSet<Id> = solutions.iter().filter_map(|s| s[at]).collect();
            return Ok(AnswerSet::count(distinct.len() as u64));
        }

        let order = q.modifiers.iter().find_map(|m| match m {
            Modifier::OrderBy { variable, descending } => Some((variable.as_str(), *descending)),
            _ => None,
        });
        let term_of = |id: Option<Id>| id.map(|id| &self.terms[id as usize]);
        match order {
            Some((var, descending)) => {
                let at = vars.iter().position(|v| v == var).expect("registered above");
                solutions.sort_by(|a, b| {
                    let key = match (term_of(a[at]), term_of(b[at])) {
                        (Some(x), Some(y)) => match compare_terms(x, y) {
                            Some(o) if descending => o.reverse(),
                            Some(o) => o,
                            None => Ordering::Equal,
                        },
                        (Some(_), None) => Ordering::Less,
                        (None, Some(_)) => Ordering::Greater,
                        (None, None) => Ordering::Equal,
                    };
                    key.then_with(|| term_of(a[answer_at]).cmp(&term_of(b[answer_at])))
                });
            }
            None => solutions.sort_by(|a, b| term_of(a[answer_at]).cmp(&term_of(b[answer_at]))),
        }
        let mut seen = HashSet::new();
        let mut values: Vec<Term> = solutions
            .iter()
            .filter_map(|s| s[answer_at])
            .filter(|id| seen.insert(*id))
            .map(|id| self.terms[id as usize].clone())
            .collect();
        if let Some(n) = q.limit() {
            values.truncate(n);
        }
        Ok(AnswerSet::from_terms(values))
    }

    fn candidates(&self, p: &[Slot; 3], bound: &[Option<Id>]) -> Option<&[usize]> {
        let value = |s: Slot| match s {
            Slot::Const(id) => Some(id),
            Slot::Var(v) => bound[v],
        };
        let lists = [&self.by_subject, &self.by_predicate, &self.by_object];
        let mut best: Option<&[usize]> = None;
        let mut constrained = false;
        for (k, map) in lists.iter().enumerate() {
            if let Some(id) = value(p[k]) {
                constrained = true;
                let list = map.get(&id).map_or(&[][..], Vec::as_slice);
                if best.is_none_or(|b| list.len() < b.len()) {
                    best = Some(list);
                }
            }
        }
        if constrained {
            best
        } else {
            None
        }
    }

    fn join(
        &self,
        patterns: &[[Slot; 3]],
        bound: &mut Vec<Option<Id>>,
        remaining: &mut Vec<usize>,
        out: &mut Vec<Vec<Option<Id>>>,
    ) {
        if remaining.is_empty() {
            out.push(bound.clone());
            return;
        }
        // most selective pattern first
        let (pick, list) = remaining
            .iter()
            .enumerate()
            .map(|(k, &pi)| (k, self.candidates(&patterns[pi], bound)))
            .min_by_key(|(_, l)| l.map_or(usize::MAX, <[usize]>::len))
            .expect("remaining is non-empty");
        let list: Vec<usize> = match list {
            Some(l) => l.to_vec(),
            None => (0..self.triples.len()).collect(),
        };
        let pi = remaining.swap_remove(pick);
        let p = patterns[pi];
        for ti in list {
            let t = self.triples[ti];
            let mut newly = Vec::new();
            let mut ok = true;
            for k in 0..3 {
                match p[k] {
                    Slot::Const(id) => ok &= id == t[k],
                    Slot::Var(v) => match bound[v] {
                        Some(id) => ok &= id == t[k],
                        None => {
                            bound[v] = Some(t[k]);
                            newly.push(v);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.join(patterns, bound, remaining, out);
            }
            for v in newly {
                bound[v] = None;
            }
        }
        remaining.push(pi);
        let last = remaining.len() - 1;
        remaining.swap(pick, last);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Const(Id),
    Var(usize),
}

/// Orders two terms when they are comparable: numbers numerically, dates
/// chronologically, plain strings lexically.
pub fn compare_terms(a: &Term, b: &Term) -> Option<Ordering> {
    let (Term::Literal(x), Term::Literal(y)) = (a, b) else {
        return None;
    };
    if let (Some(p), Some(q)) = (numeric_value(x), numeric_value(y)) {
        // exact comparison when both sides are integers
        if let (Ok(i), Ok(j)) = (x.lexical.trim().parse::<i128>(), y.lexical.trim().parse::<i128>()) {
            return Some(i.cmp(&j));
        }
        return p.partial_cmp(&q);
    }
    if is_date_literal(x) && is_date_literal(y) {
        return Some(x.lexical.cmp(&y.lexical));
    }
    if x.datatype.is_none() && y.datatype.is_none() && x.language == y.language {
        return Some(x.lexical.cmp(&y.lexical));
    }
    None
}

fn filter_holds(a: &Term, op: CmpOp, b: &Term) -> bool {
    match compare_terms(a, b) {
        Some(o) => op.holds(o),
        None => match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            _ => false,
        },
    }
}
