//! Expected answer types, type and cardinality filtering, and rating.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{AnnotatedQuestion, NGram};
use crate::builder::CandidateQuery;
use crate::features::question_word;
use crate::similarity::distance;
use crate::store::{AnswerKind, AnswerSet};

/// Result sets larger than this are penalized.
pub const LARGE_RESULT: usize = 50;
pub const LARGE_RESULT_FACTOR: f64 = 0.7;

const BE_DO_HAVE: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "do", "does", "did", "has", "have", "had",
];
/// Nouns whose plural equals the singular.
const INVARIANT_PLURALS: &[&str] = &[
    "news",
    "series",
    "species",
    "sheep",
    "deer",
    "fish",
    "aircraft",
    "offspring",
    "means",
    "headquarters",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpectedAnswer {
    Date,
    Boolean,
    Number,
    SingleResource,
    MultiResource,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("no candidate answer survived filtering")]
    NoAnswer,
}

pub fn expected_answer(q: &AnnotatedQuestion) -> ExpectedAnswer {
    if q.tokens.is_empty() {
        return ExpectedAnswer::Unknown;
    }
    let first = q.lower(0);
    if first == "when" {
        return ExpectedAnswer::Date;
    }
    if BE_DO_HAVE.contains(&first.as_str()) {
        return ExpectedAnswer::Boolean;
    }
    let qw = question_word(q);
    if let Some((i, "How")) = qw {
        if let Some(next) = q.tokens.get(i + 1) {
            let word = next.surface.to_lowercase();
            if word == "many" || word == "much" || next.pos.starts_with("JJ") {
                return ExpectedAnswer::Number;
            }
        }
    }
    let from = qw.map_or(0, |(i, _)| i + 1);
    let n = q.tokens.len();
    let Some(start) = (from..n).find(|&i| q.pos(i).starts_with("NN")) else {
        return ExpectedAnswer::Unknown;
    };
    let mut head = start;
    while head + 1 < n && q.pos(head + 1).starts_with("NN") {
        head += 1;
    }
    if INVARIANT_PLURALS.contains(&q.lower(head).as_str()) {
        return ExpectedAnswer::Unknown;
    }
    match q.pos(head) {
        "NNS" | "NNPS" => ExpectedAnswer::MultiResource,
        _ => ExpectedAnswer::SingleResource,
    }
}

/// Whether an answer set has the type and cardinality the question asks for.
/// Empty sets never match.
pub fn type_matches(expected: ExpectedAnswer, answers: &AnswerSet) -> bool {
    if answers.is_empty() {
        return false;
    }
    match expected {
        ExpectedAnswer::Date => answers.kind == AnswerKind::Literals && answers.values.iter().all(|v| v.is_date()),
        ExpectedAnswer::Boolean => answers.kind == AnswerKind::Boolean,
        ExpectedAnswer::Number => match answers.kind {
            AnswerKind::Count => true,
            AnswerKind::Literals => answers.values.iter().all(|v| v.is_numeric()),
            _ => false,
        },
        ExpectedAnswer::SingleResource => answers.kind == AnswerKind::Resources && answers.len() == 1,
        ExpectedAnswer::MultiResource => answers.kind == AnswerKind::Resources && answers.len() > 1,
        ExpectedAnswer::Unknown => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAnswer {
    pub query: CandidateQuery,
    pub answers: AnswerSet,
    pub rating: f64,
}

/// Keeps matching candidates in their original order.
pub fn type_filter(cands: Vec<RankedAnswer>, expected: ExpectedAnswer) -> Vec<RankedAnswer> {
    cands
        .into_iter()
        .filter(|c| type_matches(expected, &c.answers))
        .collect()
}

/// Score of one bound placeholder: the number of question words its span
/// covers, less the normalized edit distance between label and span.
pub fn binding_rating(label: &str, span: &NGram) -> f64 {
    span.len() as f64 - distance(label, &span.surface)
}

/// Applies the large-result penalty to a base rating.
pub fn penalize(base: f64, result_count: usize) -> f64 {
    if result_count > LARGE_RESULT {
        base * LARGE_RESULT_FACTOR
    } else {
        base
    }
}

pub fn rate(c: &CandidateQuery, result_count: usize) -> f64 {
    penalize(c.binding.base_rating(), result_count)
}

fn result_count(a: &AnswerSet) -> usize {
    a.len()
}

/// Strict preference order: rating, classifier score, fewer results, query
/// text.
pub fn compare(a: &RankedAnswer, b: &RankedAnswer) -> Ordering {
    b.rating
        .total_cmp(&a.rating)
        .then(b.query.class_score.total_cmp(&a.query.class_score))
        .then(result_count(&a.answers).cmp(&result_count(&b.answers)))
        .then_with(|| a.query.sparql.cmp(&b.query.sparql))
}

/// The best candidate. For boolean questions a true answer is preferred
/// over a false one before ratings are compared, since a false ASK only
/// says that one reading of the question failed.
pub fn select_best(cands: &[RankedAnswer], expected: ExpectedAnswer) -> Result<&RankedAnswer, RankingError> {
    if expected == ExpectedAnswer::Boolean {
        let truthy: Vec<&RankedAnswer> = cands.iter().filter(|c| c.answers.as_bool() == Some(true)).collect();
        if let Some(b) = truthy.into_iter().min_by(|a, b| compare(a, b)) {
            return Ok(b);
        }
    }
    cands.iter().min_by(|a, b| compare(a, b)).ok_or(RankingError::NoAnswer)
}
