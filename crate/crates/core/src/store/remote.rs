//! SPARQL protocol client reading the standard JSON results format.

use std::time::Duration;

use serde_json::Value as Json;
use thiserror::Error;

use super::AnswerSet;
use crate::sparql::{Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemoteError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, RemoteError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(Self {
            url: url.into(),
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Sends `sparql` as a form-encoded POST. `count` tells the parser to
    /// read the single result binding as a count.
    pub fn execute(&self, sparql: &str, count: bool) -> Result<AnswerSet, RemoteError> {
        let response = self
            .client
            .post(&self.url)
            .header(reqwest::header::ACCEPT, "application/sparql-results+json")
            .form(&[("query", sparql)])
            .send()
            .map_err(classify)?;
        let status = response.status();
        if !status.is_success() {
            return Err(RemoteError::Transport(format!("endpoint returned {status}")));
        }
        let body = response.text().map_err(classify)?;
        parse_results(&body, count)
    }
}

fn classify(e: reqwest::Error) -> RemoteError {
    if e.is_timeout() {
        RemoteError::Timeout
    } else {
        RemoteError::Transport(e.to_string())
    }
}

fn malformed(msg: impl Into<String>) -> RemoteError {
    RemoteError::MalformedResponse(msg.into())
}

fn binding_term(v: &Json) -> Result<Term, RemoteError> {
    let kind = v
        .get("type")
        .and_then(Json::as_str)
        .ok_or_else(|| malformed("binding without type"))?;
    let value = v
        .get("value")
        .and_then(Json::as_str)
        .ok_or_else(|| malformed("binding without value"))?
        .to_string();
    Ok(match kind {
        "uri" => Term::Iri(value),
        "bnode" => Term::Iri(format!("_:{value}")),
        "literal" | "typed-literal" => Term::Literal(Literal {
            lexical: value,
            datatype: v.get("datatype").and_then(Json::as_str).map(str::to_string),
            language: v.get("xml:lang").and_then(Json::as_str).map(str::to_string),
        }),
        other => return Err(malformed(format!("unknown binding type {other}"))),
    })
}

/// Parses a SPARQL JSON results document. Only the first projected
/// variable is read.
pub fn parse_results(body: &str, count: bool) -> Result<AnswerSet, RemoteError> {
    let doc: Json = serde_json::from_str(body).map_err(|e| malformed(e.to_string()))?;
    if let Some(b) = doc.get("boolean") {
        return b
            .as_bool()
            .map(AnswerSet::boolean)
            .ok_or_else(|| malformed("boolean is not a bool"));
    }
    let var = doc
        .pointer("/head/vars/0")
        .and_then(Json::as_str)
        .ok_or_else(|| malformed("missing head.vars"))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| malformed("missing results.bindings"))?;
    let mut terms = Vec::new();
    for b in bindings {
        if let Some(v) = b.get(var) {
            let t = binding_term(v)?;
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
    }
    if count {
        let n = match terms.as_slice() {
            [Term::Literal(l)] => l.lexical.trim().parse::<u64>().map_err(|e| malformed(e.to_string()))?,
            [] => 0,
            _ => return Err(malformed("count query returned several rows")),
        };
        return Ok(AnswerSet::count(n));
    }
    Ok(AnswerSet::from_terms(terms))
}
