use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sparql::{Literal, Term, XSD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnswerKind {
    Resources,
    Literals,
    /// Both IRIs and literals in one result.
    Mixed,
    Boolean,
    Count,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Iri(String),
    Literal(Literal),
    Boolean(bool),
    Count(u64),
}

impl Value {
    /// The plain string used when comparing against gold answers.
    pub fn as_answer_string(&self) -> String {
        match self {
            Value::Iri(iri) => iri.clone(),
            Value::Literal(l) => l.lexical.clone(),
            Value::Boolean(b) => b.to_string(),
            Value::Count(n) => n.to_string(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        match self {
            Value::Count(_) => true,
            Value::Literal(l) => numeric_value(l).is_some(),
            _ => false,
        }
    }

    pub fn is_date(&self) -> bool {
        matches!(self, Value::Literal(l) if is_date_literal(l))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Iri(iri) => write!(f, "<{iri}>"),
            Value::Literal(l) => write!(f, "{l}"),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Count(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub kind: AnswerKind,
    pub values: Vec<Value>,
}

impl AnswerSet {
    /// Builds a resource or literal set from result terms, keeping their
    /// order. Variables are not valid answers and are dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let values: Vec<Value> = terms
            .into_iter()
            .filter_map(|t| match t {
                Term::Iri(i) => Some(Value::Iri(i)),
                Term::Literal(l) => Some(Value::Literal(l)),
                Term::Variable(_) => None,
            })
            .collect();
        let iris = values.iter().filter(|v| matches!(v, Value::Iri(_))).count();
        let kind = if iris == values.len() {
            AnswerKind::Resources
        } else if iris == 0 {
            AnswerKind::Literals
        } else {
            AnswerKind::Mixed
        };
        Self { kind, values }
    }

    pub fn boolean(b: bool) -> Self {
        Self {
            kind: AnswerKind::Boolean,
            values: vec![Value::Boolean(b)],
        }
    }

    pub fn count(n: u64) -> Self {
        Self {
            kind: AnswerKind::Count,
            values: vec![Value::Count(n)],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// No supporting solutions: an empty list or a count of zero. A false
    /// boolean is still an answer.
    pub fn is_empty(&self) -> bool {
        match self.kind {
            AnswerKind::Count => self.values.first() == Some(&Value::Count(0)),
            AnswerKind::Boolean => false,
            _ => self.values.is_empty(),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.values.as_slice() {
            [Value::Boolean(b)] => Some(*b),
            _ => None,
        }
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.values.iter().map(Value::as_answer_string).collect()
    }
}

pub(crate) fn numeric_value(l: &Literal) -> Option<f64> {
    if l.language.is_some() {
        return None;
    }
    let numeric_type = match &l.datatype {
        None => true,
        Some(dt) => dt.strip_prefix(XSD).is_some_and(|local| {
            matches!(
                local,
                "integer"
                    | "decimal"
                    | "double"
                    | "float"
                    | "int"
                    | "long"
                    | "short"
                    | "byte"
                    | "nonNegativeInteger"
                    | "positiveInteger"
                    | "negativeInteger"
                    | "nonPositiveInteger"
                    | "unsignedInt"
                    | "unsignedLong"
            )
        }),
    };
    if !numeric_type {
        return None;
    }
    l.lexical.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn is_date_literal(l: &Literal) -> bool {
    l.datatype
        .as_deref()
        .and_then(|dt| dt.strip_prefix(XSD))
        .is_some_and(|local| matches!(local, "date" | "dateTime" | "gYear" | "gYearMonth"))
}
