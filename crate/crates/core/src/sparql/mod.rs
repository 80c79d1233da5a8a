//! A small SPARQL subset: parsing, basic graph pattern extraction, canonical
//! template forms and template instantiation.
//!
//! The supported grammar covers `SELECT` and `ASK` queries over a single
//! basic graph pattern, with `PREFIX` declarations, `COUNT`, comparison
//! `FILTER`s, `ORDER BY` and `LIMIT`. Anything else is rejected with a
//! [`ParseError`] that carries the byte offset of the offending construct.

mod canon;
mod graph;
mod parser;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonicalize, canonicalize_with_limit, is_isomorphic, CanonicalMapping, QueryTemplate};
pub use graph::{to_bgp_graph, to_bgp_graph_with_terms, BgpEdge, BgpGraph, GraphTerms, NodeLabel};
pub use parser::parse_query;
pub use render::{instantiate, Binding, Placeholder};

/// Default cap on the number of BGP nodes accepted by the exhaustive
/// canonicalization.
pub const DEFAULT_NODE_LIMIT: usize = 10;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("graph has {nodes} nodes, above the limit of {limit}")]
    SizeLimit { nodes: usize, limit: usize },
    #[error("query has no triple patterns")]
    EmptyPattern,
    #[error("no binding for placeholder {0}")]
    MissingBinding(Placeholder),
    #[error("placeholder {0} must be bound to an IRI")]
    InvalidBinding(Placeholder),
    #[error("template has no answer variable to project")]
    NoAnswerVariable,
    #[error("edge {0} refers to a node that does not exist")]
    DanglingEdge(usize),
    #[error("malformed canonical key: {0}")]
    MalformedKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub language: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: Some(datatype.into()),
            language: None,
        }
    }

    pub fn integer(value: i64) -> Self {
        Self::typed(value.to_string(), format!("{XSD}integer"))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"")?;
        for c in self.lexical.chars() {
            match c {
                '"' => write!(f, "\\\"")?,
                '\\' => write!(f, "\\\\")?,
                '\n' => write!(f, "\\n")?,
                '\r' => write!(f, "\\r")?,
                '\t' => write!(f, "\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        write!(f, "\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^<{dt}>")
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Iri(String),
    Literal(Literal),
    Variable(String),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal(lit) => write!(f, "{lit}"),
            Term::Variable(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(Term::as_variable)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryForm {
    Select,
    Ask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
        }
    }
}

/// Everything outside the basic graph pattern that shapes the result.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modifier {
    /// `SELECT (COUNT(DISTINCT ?v) AS ?c)`
    Count {
        variable: String,
    },
    Filter {
        left: Term,
        op: CmpOp,
        right: Term,
    },
    OrderBy {
        variable: String,
        descending: bool,
    },
    Limit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedQuery {
    pub form: QueryForm,
    /// Projected variables. For a `COUNT` query this is the counted variable.
    pub projection: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub modifiers: Vec<Modifier>,
}

impl ParsedQuery {
    /// The variable whose bindings answer the question, if any.
    pub fn answer_variable(&self) -> Option<&str> {
        match self.form {
            QueryForm::Select => self.projection.first().map(String::as_str),
            QueryForm::Ask => None,
        }
    }

    pub fn is_count(&self) -> bool {
        self.modifiers.iter().any(|m| matches!(m, Modifier::Count { .. }))
    }

    pub fn limit(&self) -> Option<usize> {
        self.modifiers.iter().find_map(|m| match m {
            Modifier::Limit(n) => Some(*n),
            _ => None,
        })
    }
}
