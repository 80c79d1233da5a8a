use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ParsedQuery, SparqlError, Term};

/// Node labels, ordered so that the answer variable sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    AnswerVar,
    OtherVar,
    Entity,
}

impl NodeLabel {
    pub(crate) fn code(self) -> char {
        match self {
            NodeLabel::AnswerVar => 'A',
            NodeLabel::OtherVar => 'O',
            NodeLabel::Entity => 'E',
        }
    }
}

/// A directed `PRED` edge between two node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BgpEdge {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BgpGraph {
    pub nodes: Vec<NodeLabel>,
    pub edges: Vec<BgpEdge>,
}

impl BgpGraph {
    pub fn new(nodes: Vec<NodeLabel>, edges: Vec<(usize, usize)>) -> Self {
        Self {
            nodes,
            edges: edges.into_iter().map(|(from, to)| BgpEdge { from, to }).collect(),
        }
    }

    pub fn answer_node(&self) -> Option<usize> {
        self.nodes.iter().position(|l| *l == NodeLabel::AnswerVar)
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.from == node) + usize::from(e.to == node))
            .sum()
    }

    /// The same graph with the answer variable relabelled as an ordinary
    /// variable, as happens when a query is asked in `ASK` form.
    pub fn without_answer(&self) -> Self {
        Self {
            nodes: self
                .nodes
                .iter()
                .map(|l| match l {
                    NodeLabel::AnswerVar => NodeLabel::OtherVar,
                    l => *l,
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }
}

/// The concrete terms behind each node and edge of a [`BgpGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTerms {
    pub nodes: Vec<Term>,
    pub predicates: Vec<Term>,
}

/// Builds the labelled graph of a query's basic graph pattern. Modifiers and
/// the query form are not encoded.
pub fn to_bgp_graph(q: &ParsedQuery) -> Result<BgpGraph, SparqlError> {
    to_bgp_graph_with_terms(q).map(|(g, _)| g)
}

pub fn to_bgp_graph_with_terms(q: &ParsedQuery) -> Result<(BgpGraph, GraphTerms), SparqlError> {
    if q.patterns.is_empty() {
        return Err(SparqlError::EmptyPattern);
    }
    let answer = q.answer_variable();
    let mut index: HashMap<&Term, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut node_terms = Vec::new();
    let mut edges = Vec::with_capacity(q.patterns.len());
    let mut predicates = Vec::with_capacity(q.patterns.len());
    for p in &q.patterns {
        let mut ends = [0usize; 2];
        for (slot, t) in ends.iter_mut().zip([&p.subject, &p.object]) {
            // identical concrete terms share a node, just like variables
            *slot = *index.entry(t).or_insert_with(|| {
                let label = match t {
                    Term::Variable(v) if Some(v.as_str()) == answer => NodeLabel::AnswerVar,
                    Term::Variable(_) => NodeLabel::OtherVar,
                    _ => NodeLabel::Entity,
                };
                nodes.push(label);
                node_terms.push(t.clone());
                nodes.len() - 1
            });
        }
        edges.push(BgpEdge {
            from: ends[0],
            to: ends[1],
        });
        predicates.push(p.predicate.clone());
    }
    Ok((
        BgpGraph { nodes, edges },
        GraphTerms {
            nodes: node_terms,
            predicates,
        },
    ))
}
