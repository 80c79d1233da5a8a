//! Template filling, modifier detection and candidate query generation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedQuestion, NGram};
use crate::index::{IndexBundle, LinkCandidate};
use crate::lexicon::KeywordTable;
use crate::ranking::binding_rating;
use crate::sparql::{
    instantiate, CmpOp, Literal, Modifier, NodeLabel, Placeholder, QueryForm, QueryTemplate, Term, RDF_TYPE, XSD,
};

pub const DEFAULT_MAX_BINDINGS: usize = 64;

const COUNT_OPENERS: &[&str] = &["many", "much"];
const ASK_OPENERS: &[&str] = &["is", "are", "was", "were", "did", "does", "do", "has", "have"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Superlative {
    Asc,
    Desc,
    /// A superlative whose direction is not in the keyword table.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparativeSpec {
    pub op: CmpOp,
    pub value: Literal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifierSet {
    pub count: bool,
    pub comparative: Option<ComparativeSpec>,
    pub superlative: Option<Superlative>,
    pub ask: bool,
}

fn number_literal(text: &str) -> Option<Literal> {
    let cleaned: String = text.chars().filter(|c| *c != ',').collect();
    if let Ok(n) = cleaned.parse::<i64>() {
        return Some(Literal::integer(n));
    }
    cleaned
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(|_| Literal::typed(cleaned, format!("{XSD}decimal")))
}

/// Reads COUNT, comparison, ordering and ASK cues off the tagged question.
/// `directions` maps comparative and superlative words to `>`, `<`, `DESC`
/// or `ASC`.
pub fn detect_modifiers(q: &AnnotatedQuestion, directions: &KeywordTable) -> ModifierSet {
    let mut m = ModifierSet::default();
    if q.tokens.is_empty() {
        return m;
    }
    let first = q.lower(0);
    m.ask = ASK_OPENERS.contains(&first.as_str());
    m.count = first == "how" && q.tokens.len() > 1 && COUNT_OPENERS.contains(&q.lower(1).as_str());

    for i in 0..q.tokens.len() {
        let tag = q.pos(i);
        let word = q.lower(i);
        if (tag == "JJR" || tag == "RBR") && m.comparative.is_none() {
            let op = match directions.get(&word) {
                Some(">") => Some(CmpOp::Gt),
                Some("<") => Some(CmpOp::Lt),
                _ => None,
            };
            let value = (i + 1..q.tokens.len())
                .find(|&j| q.pos(j) == "CD")
                .and_then(|j| number_literal(q.surface(j)));
            match (op, value) {
                (Some(op), Some(value)) => m.comparative = Some(ComparativeSpec { op, value }),
                (None, _) => log::debug!("comparative {word:?} has no known direction"),
                (_, None) => log::debug!("comparative {word:?} has no numeric operand"),
            }
        }
        if (tag == "JJS" || tag == "RBS") && m.superlative.is_none() {
            m.superlative = Some(match directions.get(&word) {
                Some("DESC") => Superlative::Desc,
                Some("ASC") => Superlative::Asc,
                _ => Superlative::Both,
            });
        }
    }
    if m.ask {
        m.count = false;
        m.superlative = None;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotFill {
    pub placeholder: Placeholder,
    pub iri: String,
    pub source: LinkCandidate,
}

/// One complete assignment of a template's placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateBinding {
    /// Sorted by placeholder.
    pub slots: Vec<SlotFill>,
}

impl TemplateBinding {
    pub fn to_binding(&self) -> crate::sparql::Binding {
        self.slots
            .iter()
            .map(|s| (s.placeholder, Term::Iri(s.iri.clone())))
            .collect()
    }

    pub fn get(&self, p: Placeholder) -> Option<&SlotFill> {
        self.slots.iter().find(|s| s.placeholder == p)
    }

    /// Sum of the per-binding scores, without any result-size penalty.
    /// Summed in ascending order so the total does not depend on slot order.
    pub fn base_rating(&self) -> f64 {
        let mut scores: Vec<f64> = self
            .slots
            .iter()
            .map(|s| binding_rating(&s.source.matched_label, &s.source.source))
            .collect();
        scores.sort_by(f64::total_cmp);
        scores.into_iter().sum()
    }

    fn key(&self) -> Vec<(Placeholder, String)> {
        self.slots.iter().map(|s| (s.placeholder, s.iri.clone())).collect()
    }
}

struct Filler<'a> {
    t: &'a QueryTemplate,
    ents: &'a [LinkCandidate],
    rels: &'a [LinkCandidate],
    bundle: &'a IndexBundle,
    max: usize,
    ent: Vec<Option<usize>>,
    pred: Vec<Option<usize>>,
    values: BTreeMap<usize, BTreeSet<String>>,
    spans: Vec<NGram>,
    found: BTreeMap<Vec<(Placeholder, String)>, (f64, usize, TemplateBinding)>,
    emitted: usize,
}

impl Filler<'_> {
    fn free(&self, span: &NGram) -> bool {
        !self.spans.iter().any(|s| s.overlaps(span))
    }

    fn entity_iri(&self, node: usize) -> Option<&str> {
        self.ent[node].map(|i| self.ents[i].iri.as_str())
    }

    fn is_class(&self, node: usize) -> bool {
        self.entity_iri(node)
            .is_some_and(|iri| self.bundle.class(iri).is_some())
    }

    /// Stands in for the implicit `rdf:type` of a class mention. It covers
    /// no tokens, so it never conflicts and adds nothing to the rating.
    fn synthetic(cand: &LinkCandidate) -> bool {
        cand.source.start == cand.source.end
    }

    fn full(&self) -> bool {
        self.found.len() >= self.max
    }

    /// Declared domain (entity is subject) or range (entity is object) must
    /// be among the entity's types when it has any.
    fn ontology_ok(&self, rel: &str, entity: &str, entity_is_subject: bool) -> bool {
        let Some(r) = self.bundle.relation(rel) else {
            return true;
        };
        let declared = if entity_is_subject { &r.domain } else { &r.range };
        match (declared, self.bundle.entity(entity)) {
            (Some(class), Some(e)) if !e.connected_types.is_empty() => e.connected_types.contains(class),
            _ => true,
        }
    }

    fn emit(&mut self) {
        let mut slots = Vec::new();
        for (node, choice) in self.ent.iter().enumerate() {
            if let Some(i) = choice {
                let idx = self.t.entity_index(node).expect("entity node");
                slots.push(SlotFill {
                    placeholder: Placeholder::Entity(idx),
                    iri: self.ents[*i].iri.clone(),
                    source: self.ents[*i].clone(),
                });
            }
        }
        for (edge, choice) in self.pred.iter().enumerate() {
            let i = choice.expect("complete binding");
            slots.push(SlotFill {
                placeholder: Placeholder::Predicate(edge),
                iri: self.rels[i].iri.clone(),
                source: self.rels[i].clone(),
            });
        }
        slots.sort_by_key(|s| s.placeholder);
        let binding = TemplateBinding { slots };
        let score = binding.base_rating();
        let order = self.emitted;
        self.emitted += 1;
        let entry = self
            .found
            .entry(binding.key())
            .or_insert((score, order, binding.clone()));
        if score > entry.0 {
            *entry = (score, entry.1, binding);
        }
    }

    fn search(&mut self) {
        if self.full() {
            return;
        }
        let edges = &self.t.graph.edges;
        let nodes = &self.t.graph.nodes;
        let is_entity = |n: usize| nodes[n] == NodeLabel::Entity;

        // Case 1: an open edge touching an entity node.
        if let Some(e) =
            (0..edges.len()).find(|&e| self.pred[e].is_none() && (is_entity(edges[e].from) || is_entity(edges[e].to)))
        {
            let (from, to) = (edges[e].from, edges[e].to);
            if let Some(node) = [from, to].into_iter().find(|&n| is_entity(n) && self.ent[n].is_none()) {
                self.branch_entity(node);
                return;
            }
            for r in 0..self.rels.len() {
                let cand = &self.rels[r];
                if !self.free(&cand.source) {
                    continue;
                }
                // A class only sits in object position of its synthetic rdf:type.
                let typed = Self::synthetic(cand) && is_entity(to) && self.is_class(to);
                let connected = [(from, true), (to, false)]
                    .into_iter()
                    .filter(|(n, _)| is_entity(*n))
                    .all(|(n, subj)| {
                        let iri = self.entity_iri(n).expect("bound entity");
                        if self.is_class(n) {
                            return typed && !subj;
                        }
                        !Self::synthetic(cand)
                            && self
                                .bundle
                                .connected_relations(iri)
                                .is_some_and(|s| s.contains(&cand.iri))
                            && self.ontology_ok(&cand.iri, iri, subj)
                    });
                if !connected || (Self::synthetic(cand) && !typed) {
                    continue;
                }
                let saved = self.values.clone();
                let mut ok = true;
                for (anchor, var, outgoing) in [(from, to, true), (to, from, false)] {
                    if is_entity(anchor) && !is_entity(var) {
                        let iri = self.entity_iri(anchor).expect("bound entity").to_string();
                        let reach = self.bundle.neighbours(&iri, &cand.iri, outgoing);
                        ok &= self.narrow(var, reach, e);
                    }
                }
                if ok {
                    self.bind_edge(e, r);
                }
                self.values = saved;
                if self.full() {
                    return;
                }
            }
            return;
        }

        // Case 2: an open edge leaving a variable whose values are known.
        let anchored = (0..edges.len()).find(|&e| {
            self.pred[e].is_none()
                && (self.values.contains_key(&edges[e].from) || self.values.contains_key(&edges[e].to))
        });
        if let Some(e) = anchored {
            let (from, to) = (edges[e].from, edges[e].to);
            let (known, other, outgoing) = if self.values.contains_key(&from) {
                (from, to, true)
            } else {
                (to, from, false)
            };
            let members = self.values[&known].clone();
            for r in 0..self.rels.len() {
                let cand = &self.rels[r];
                if Self::synthetic(cand) || !self.free(&cand.source) {
                    continue;
                }
                let kept: BTreeSet<String> = members
                    .iter()
                    .filter(|m| {
                        self.bundle
                            .connected_relations(m)
                            .is_some_and(|s| s.contains(&cand.iri))
                    })
                    .cloned()
                    .collect();
                if kept.is_empty() {
                    continue;
                }
                let reach: BTreeSet<String> = kept
                    .iter()
                    .flat_map(|m| self.bundle.neighbours(m, &cand.iri, outgoing))
                    .collect();
                let saved = self.values.clone();
                self.values.insert(known, kept);
                if self.narrow(other, reach, e) {
                    self.bind_edge(e, r);
                }
                self.values = saved;
                if self.full() {
                    return;
                }
            }
            return;
        }

        // No anchor: any relation candidate may fill the edge.
        if let Some(e) = (0..edges.len()).find(|&e| self.pred[e].is_none()) {
            for r in 0..self.rels.len() {
                if !Self::synthetic(&self.rels[r]) && self.free(&self.rels[r].source) {
                    self.bind_edge(e, r);
                }
                if self.full() {
                    return;
                }
            }
            return;
        }

        if let Some(node) = (0..nodes.len()).find(|&n| is_entity(n) && self.ent[n].is_none()) {
            self.branch_entity(node);
            return;
        }
        self.emit();
    }

    /// Intersects the value set of a variable node. An empty set fails the
    /// branch only when another open edge still has to read it.
    fn narrow(&mut self, var: usize, reach: BTreeSet<String>, edge: usize) -> bool {
        let next: BTreeSet<String> = match self.values.get(&var) {
            Some(old) => old.intersection(&reach).cloned().collect(),
            None => reach,
        };
        let needed = self
            .t
            .graph
            .edges
            .iter()
            .enumerate()
            .any(|(e, other)| e != edge && self.pred[e].is_none() && (other.from == var || other.to == var));
        let empty = next.is_empty();
        self.values.insert(var, next);
        !(empty && needed)
    }

    fn bind_edge(&mut self, e: usize, r: usize) {
        self.pred[e] = Some(r);
        self.spans.push(self.rels[r].source.clone());
        self.search();
        self.spans.pop();
        self.pred[e] = None;
    }

    fn branch_entity(&mut self, node: usize) {
        for i in 0..self.ents.len() {
            if !self.free(&self.ents[i].source) {
                continue;
            }
            let iri = &self.ents[i].iri;
            if self.bundle.entity(iri).is_none() && self.bundle.class(iri).is_none() {
                continue;
            }
            self.ent[node] = Some(i);
            self.spans.push(self.ents[i].source.clone());
            self.search();
            self.spans.pop();
            self.ent[node] = None;
            if self.full() {
                return;
            }
        }
    }
}

/// Enumerates consistent complete bindings of `t`, best base rating first.
///
/// An edge at an entity takes a relation from that entity's connected
/// relations. An edge between variables takes a relation connected to the
/// values reached so far. Source spans of all bound candidates are
/// pairwise disjoint. A class among `ents` may fill an entity node only
/// as the object of an edge, whose predicate is then `rdf:type`.
pub fn fill_template(
    t: &QueryTemplate,
    ents: &[LinkCandidate],
    rels: &[LinkCandidate],
    bundle: &IndexBundle,
    max_bindings: usize,
) -> Vec<TemplateBinding> {
    let mut rels = rels.to_vec();
    if ents.iter().any(|c| bundle.class(&c.iri).is_some()) {
        rels.push(LinkCandidate {
            iri: RDF_TYPE.to_string(),
            matched_label: String::new(),
            source: NGram {
                start: 0,
                end: 0,
                surface: String::new(),
            },
            similarity: 1.0,
        });
    }
    let mut f = Filler {
        t,
        ents,
        rels: &rels,
        bundle,
        max: max_bindings,
        ent: vec![None; t.graph.nodes.len()],
        pred: vec![None; t.graph.edges.len()],
        values: BTreeMap::new(),
        spans: Vec::new(),
        found: BTreeMap::new(),
        emitted: 0,
    };
    if max_bindings > 0 && !t.graph.edges.is_empty() {
        f.search();
    }
    let mut out: Vec<(f64, usize, TemplateBinding)> = f.found.into_values().collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    out.into_iter().map(|(_, _, b)| b).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Plain,
    Count,
    OrderBy { descending: bool },
    Filter,
    Ask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuery {
    pub template: QueryTemplate,
    /// Classifier score of the template.
    pub class_score: f64,
    pub binding: TemplateBinding,
    pub variant: Variant,
    pub form: QueryForm,
    pub modifiers: Vec<Modifier>,
    pub sparql: String,
}

impl CandidateQuery {
    pub fn is_count(&self) -> bool {
        self.variant == Variant::Count
    }
}

/// The variable ordered or compared by modifiers: the first non-answer
/// variable, else the answer.
fn value_variable(t: &QueryTemplate) -> String {
    let node = (0..t.graph.nodes.len())
        .find(|&n| t.graph.nodes[n] == NodeLabel::OtherVar)
        .or_else(|| t.graph.answer_node());
    node.and_then(|n| t.variable_name(n))
        .unwrap_or_else(|| "uri".to_string())
}

fn has_other_var(t: &QueryTemplate) -> bool {
    t.graph.nodes.contains(&NodeLabel::OtherVar)
}

/// The query variants for one template under `mods`, in output order.
pub fn variants(t: &QueryTemplate, mods: &ModifierSet) -> Vec<(Variant, QueryForm, Vec<Modifier>)> {
    let mut out = vec![(Variant::Plain, QueryForm::Select, vec![])];
    if t.graph.answer_node().is_none() {
        return vec![(Variant::Ask, QueryForm::Ask, vec![])];
    }
    if mods.count {
        out.push((
            Variant::Count,
            QueryForm::Select,
            vec![Modifier::Count {
                variable: "uri".to_string(),
            }],
        ));
    }
    if let Some(s) = mods.superlative {
        let var = value_variable(t);
        let directions: &[bool] = match s {
            Superlative::Desc => &[true],
            Superlative::Asc => &[false],
            Superlative::Both => &[true, false],
        };
        for &descending in directions {
            out.push((
                Variant::OrderBy { descending },
                QueryForm::Select,
                vec![
                    Modifier::OrderBy {
                        variable: var.clone(),
                        descending,
                    },
                    Modifier::Limit(1),
                ],
            ));
        }
    }
    if let Some(c) = &mods.comparative {
        if has_other_var(t) {
            out.push((
                Variant::Filter,
                QueryForm::Select,
                vec![Modifier::Filter {
                    left: Term::var(value_variable(t)),
                    op: c.op,
                    right: Term::Literal(c.value.clone()),
                }],
            ));
        } else {
            log::debug!(
                "template {} has no value variable; comparative dropped",
                t.canonical_key
            );
        }
    }
    if mods.ask {
        out.push((Variant::Ask, QueryForm::Ask, vec![]));
    }
    out
}

/// Renders every binding under every applicable variant, in binding order
/// then variant order. Exact duplicate query strings are dropped.
pub fn generate_queries(
    t: &QueryTemplate,
    bindings: &[TemplateBinding],
    mods: &ModifierSet,
    class_score: f64,
) -> Vec<CandidateQuery> {
    let variants = variants(t, mods);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for b in bindings {
        let binding = b.to_binding();
        for (variant, form, modifiers) in &variants {
            match instantiate(t, &binding, *form, modifiers) {
                Ok(sparql) => {
                    if seen.insert(sparql.clone()) {
                        out.push(CandidateQuery {
                            template: t.clone(),
                            class_score,
                            binding: b.clone(),
                            variant: *variant,
                            form: *form,
                            modifiers: modifiers.clone(),
                            sparql,
                        });
                    }
                }
                Err(e) => log::warn!("cannot render {}: {e}", t.canonical_key),
            }
        }
    }
    out
}
