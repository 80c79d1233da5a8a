use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::graph::{BgpEdge, BgpGraph, NodeLabel};
use super::{SparqlError, DEFAULT_NODE_LIMIT};

/// Version tag leading every canonical key.
pub const KEY_VERSION: &str = "bgp1";

/// An isomorphism class of basic graph patterns.
///
/// The key has the form `bgp1|<labels>|<edges>` where `<labels>` lists one
/// character per node (`A` answer variable, `O` other variable, `E` entity)
/// in canonical order and `<edges>` lists `from>to` position pairs, sorted.
/// For example the pattern `<ent> <pred> ?uri` becomes `bgp1|AE|1>0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub canonical_key: String,
    /// The graph in canonical node and edge order.
    pub graph: BgpGraph,
    pub class_id: Option<usize>,
}

impl QueryTemplate {
    /// Rebuilds a template from its canonical key.
    pub fn from_key(key: &str) -> Result<Self, SparqlError> {
        let bad = || SparqlError::MalformedKey(key.to_string());
        let mut parts = key.split('|');
        if parts.next() != Some(KEY_VERSION) {
            return Err(bad());
        }
        let labels = parts.next().ok_or_else(bad)?;
        let edges = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let nodes = labels
            .chars()
            .map(|c| match c {
                'A' => Ok(NodeLabel::AnswerVar),
                'O' => Ok(NodeLabel::OtherVar),
                'E' => Ok(NodeLabel::Entity),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut parsed = Vec::new();
        if !edges.is_empty() {
            for e in edges.split(',') {
                let (from, to) = e.split_once('>').ok_or_else(bad)?;
                let from: usize = from.parse().map_err(|_| bad())?;
                let to: usize = to.parse().map_err(|_| bad())?;
                if from >= nodes.len() || to >= nodes.len() {
                    return Err(bad());
                }
                parsed.push(BgpEdge { from, to });
            }
        }
        Ok(Self {
            canonical_key: key.to_string(),
            graph: BgpGraph { nodes, edges: parsed },
            class_id: None,
        })
    }

    pub fn with_class(mut self, class_id: usize) -> Self {
        self.class_id = Some(class_id);
        self
    }

    /// Entity placeholders in canonical order, as node positions.
    pub fn entity_nodes(&self) -> Vec<usize> {
        (0..self.graph.nodes.len())
            .filter(|&i| self.graph.nodes[i] == NodeLabel::Entity)
            .collect()
    }

    /// Index of `node` among the entity placeholders (`ent_<i>`).
    pub fn entity_index(&self, node: usize) -> Option<usize> {
        if self.graph.nodes.get(node) != Some(&NodeLabel::Entity) {
            return None;
        }
        Some(
            self.graph.nodes[..node]
                .iter()
                .filter(|l| **l == NodeLabel::Entity)
                .count(),
        )
    }

    /// SPARQL variable name used when rendering a variable node.
    pub fn variable_name(&self, node: usize) -> Option<String> {
        match self.graph.nodes.get(node)? {
            NodeLabel::AnswerVar => Some("uri".to_string()),
            NodeLabel::OtherVar => {
                let k = self.graph.nodes[..node]
                    .iter()
                    .filter(|l| **l == NodeLabel::OtherVar)
                    .count();
                Some(format!("x{k}"))
            }
            NodeLabel::Entity => None,
        }
    }

    /// The template reached when the answer variable is demoted, which is
    /// what an `ASK` rendering of this template parses back to.
    pub fn ask_projection(&self) -> Result<QueryTemplate, SparqlError> {
        if self.graph.answer_node().is_none() {
            return Ok(self.clone());
        }
        canonicalize(&self.graph.without_answer())
    }
}

type EdgeList = Vec<(usize, usize)>;

/// How the nodes and edges of an input graph map onto its canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalMapping {
    /// `node_position[i]` is the canonical position of input node `i`.
    pub node_position: Vec<usize>,
    /// `edge_index[j]` is the canonical index of input edge `j`.
    pub edge_index: Vec<usize>,
}

fn validate(g: &BgpGraph, limit: usize) -> Result<(), SparqlError> {
    if g.nodes.len() > limit {
        return Err(SparqlError::SizeLimit {
            nodes: g.nodes.len(),
            limit,
        });
    }
    if g.nodes.is_empty() || g.edges.is_empty() {
        return Err(SparqlError::EmptyPattern);
    }
    if let Some(j) = g
        .edges
        .iter()
        .position(|e| e.from >= g.nodes.len() || e.to >= g.nodes.len())
    {
        return Err(SparqlError::DanglingEdge(j));
    }
    Ok(())
}

pub fn canonicalize(g: &BgpGraph) -> Result<QueryTemplate, SparqlError> {
    canonicalize_with_limit(g, DEFAULT_NODE_LIMIT).map(|(t, _)| t)
}

/// Exact canonical form: the lexicographically smallest sorted edge list over
/// every node ordering that keeps the labels in sorted order.
pub fn canonicalize_with_limit(g: &BgpGraph, limit: usize) -> Result<(QueryTemplate, CanonicalMapping), SparqlError> {
    validate(g, limit)?;
    let n = g.nodes.len();
    let mut labels = g.nodes.clone();
    labels.sort();

    struct Search<'a> {
        g: &'a BgpGraph,
        labels: &'a [NodeLabel],
        used: Vec<bool>,
        // position -> node
        order: Vec<usize>,
        /// Smallest edge list seen and the node order producing it.
        best: Option<(EdgeList, Vec<usize>)>,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize) {
            if k == self.labels.len() {
                let mut pos = vec![0; self.order.len()];
                for (p, &node) in self.order.iter().enumerate() {
                    pos[node] = p;
                }
                let mut edges: Vec<(usize, usize)> = self.g.edges.iter().map(|e| (pos[e.from], pos[e.to])).collect();
                edges.sort_unstable();
                if self.best.as_ref().is_none_or(|(b, _)| edges < *b) {
                    self.best = Some((edges, pos));
                }
                return;
            }
            for node in 0..self.g.nodes.len() {
                if !self.used[node] && self.g.nodes[node] == self.labels[k] {
                    self.used[node] = true;
                    self.order.push(node);
                    self.run(k + 1);
                    self.order.pop();
                    self.used[node] = false;
                }
            }
        }
    }

    let mut search = Search {
        g,
        labels: &labels,
        used: vec![false; n],
        order: Vec::with_capacity(n),
        best: None,
    };
    search.run(0);
    let (edges, node_position) = search.best.expect("at least one label-consistent ordering exists");

    let mut edge_order: Vec<usize> = (0..g.edges.len()).collect();
    edge_order.sort_by_key(|&j| (node_position[g.edges[j].from], node_position[g.edges[j].to], j));
    let mut edge_index = vec![0; g.edges.len()];
    for (canonical, &j) in edge_order.iter().enumerate() {
        edge_index[j] = canonical;
    }

    let key = serialize_key(&labels, &edges);
    let graph = BgpGraph {
        nodes: labels,
        edges: edges.into_iter().map(|(from, to)| BgpEdge { from, to }).collect(),
    };
    Ok((
        QueryTemplate {
            canonical_key: key,
            graph,
            class_id: None,
        },
        CanonicalMapping {
            node_position,
            edge_index,
        },
    ))
}

fn serialize_key(labels: &[NodeLabel], edges: &[(usize, usize)]) -> String {
    let labels: String = labels.iter().map(|l| l.code()).collect();
    let edges: Vec<String> = edges.iter().map(|(a, b)| format!("{a}>{b}")).collect();
    format!("{KEY_VERSION}|{labels}|{}", edges.join(","))
}

/// Brute-force isomorphism test: tries every label-preserving bijection and
/// checks that it maps the edge multiset of `g1` onto that of `g2`.
pub fn is_isomorphic(g1: &BgpGraph, g2: &BgpGraph) -> Result<bool, SparqlError> {
    is_isomorphic_with_limit(g1, g2, DEFAULT_NODE_LIMIT)
}

pub fn is_isomorphic_with_limit(g1: &BgpGraph, g2: &BgpGraph, limit: usize) -> Result<bool, SparqlError> {
    for g in [g1, g2] {
        if g.nodes.len() > limit {
            return Err(SparqlError::SizeLimit {
                nodes: g.nodes.len(),
                limit,
            });
        }
    }
    for g in [g1, g2] {
        if let Some(j) = g
            .edges
            .iter()
            .position(|e| e.from >= g.nodes.len() || e.to >= g.nodes.len())
        {
            return Err(SparqlError::DanglingEdge(j));
        }
    }
    if g1.nodes.len() != g2.nodes.len() || g1.edges.len() != g2.edges.len() {
        return Ok(false);
    }
    let mut target: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &g2.edges {
        *target.entry((e.from, e.to)).or_default() += 1;
    }

    fn extend(
        g1: &BgpGraph,
        g2: &BgpGraph,
        target: &HashMap<(usize, usize), usize>,
        mapping: &mut Vec<usize>,
        taken: &mut [bool],
    ) -> bool {
        let k = mapping.len();
        if k == g1.nodes.len() {
            let mut mapped: HashMap<(usize, usize), usize> = HashMap::new();
            for e in &g1.edges {
                *mapped.entry((mapping[e.from], mapping[e.to])).or_default() += 1;
            }
            return mapped == *target;
        }
        for cand in 0..g2.nodes.len() {
            if !taken[cand] && g2.nodes[cand] == g1.nodes[k] {
                taken[cand] = true;
                mapping.push(cand);
                if extend(g1, g2, target, mapping, taken) {
                    return true;
                }
                mapping.pop();
                taken[cand] = false;
            }
        }
        false
    }

    Ok(extend(
        g1,
        g2,
        &target,
        &mut Vec::new(),
        &mut vec![false; g2.nodes.len()],
    ))
}
