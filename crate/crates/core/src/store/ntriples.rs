use std::fs;
use std::io;
use std::path::Path;

use oxttl::NTriplesParser;
use serde::{Deserialize, Serialize};

use crate::sparql::{Literal, Term};

pub type Triple = (Term, Term, Term);

/// Outcome of reading an N-Triples document line by line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub triples: usize,
    /// `(line number, message)` for every line that failed to parse.
    pub skipped: Vec<(usize, String)>,
}

fn convert(t: oxrdf::Triple) -> Triple {
    let subject = match t.subject {
        oxrdf::NamedOrBlankNode::NamedNode(n) => Term::Iri(n.into_string()),
        oxrdf::NamedOrBlankNode::BlankNode(b) => Term::Iri(format!("_:{}", b.as_str())),
    };
    let object = match t.object {
        oxrdf::Term::NamedNode(n) => Term::Iri(n.into_string()),
        oxrdf::Term::BlankNode(b) => Term::Iri(format!("_:{}", b.as_str())),
        oxrdf::Term::Literal(l) => {
            let (lexical, datatype, language) = l.destruct();
            Term::Literal(Literal {
                lexical,
                datatype: datatype
                    .map(|d| d.into_string())
                    .filter(|d| d != "http://www.w3.org/2001/XMLSchema#string"),
                language,
            })
        }
    };
    (subject, Term::Iri(t.predicate.into_string()), object)
}

/// Parses N-Triples text. Malformed lines are skipped and reported; the
/// rest of the document is still read.
pub fn parse_ntriples(text: &str) -> (Vec<Triple>, LoadReport) {
    let mut triples = Vec::new();
    let mut report = LoadReport::default();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parsed = Vec::new();
        let mut failed = None;
        for r in NTriplesParser::new().for_slice(trimmed) {
            match r {
                Ok(t) => parsed.push(t),
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        match failed {
            Some(msg) => {
                log::warn!("skipping line {}: {msg}", i + 1);
                report.skipped.push((i + 1, msg));
            }
            None => {
                report.triples += parsed.len();
                triples.extend(parsed.into_iter().map(convert));
            }
        }
    }
    (triples, report)
}

pub fn load_ntriples(path: &Path) -> io::Result<(Vec<Triple>, LoadReport)> {
    Ok(parse_ntriples(&fs::read_to_string(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_lines_are_counted() {
        let text = "<http://a> <http://p> <http://b> .\n\
                    this is not a triple\n\
                    <http://a> <http://p> \"x\"@en .\n\
                    <http://a> <http://p> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n";
        let (triples, report) = parse_ntriples(text);
        assert_eq!(triples.len(), 3);
        assert_eq!(report.triples, 3);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].0, 2);
        assert_eq!(triples[2].2, Term::Literal(Literal::integer(5)));
    }

    #[test]
    fn empty_input() {
        let (triples, report) = parse_ntriples("");
        assert!(triples.is_empty());
        assert_eq!(report, LoadReport::default());
    }
}
