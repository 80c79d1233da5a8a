//! Benchmark datasets: the QALD JSON layout and a flat fixture layout.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::store::remote::parse_results;

pub const BUNDLED_TOY_TRAIN: &str = include_str!("../data/toy_train.json");
pub const BUNDLED_TOY_TEST: &str = include_str!("../data/toy_test.json");
pub const BUNDLED_TOY_KG: &str = include_str!("../data/toy.nt");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("invalid dataset: {0}")]
    Format(String),
    #[error("duplicate question id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuestion {
    pub id: String,
    pub text: String,
    pub gold_sparql: Option<String>,
    pub gold_answers: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkDataset {
    pub questions: Vec<BenchmarkQuestion>,
}

fn bad(msg: impl Into<String>) -> DatasetError {
    DatasetError::Format(msg.into())
}

fn id_of(v: &Json, position: usize) -> String {
    match v.get("id") {
        Some(Json::String(s)) => s.clone(),
        Some(Json::Number(n)) => n.to_string(),
        _ => (position + 1).to_string(),
    }
}

/// English text of a QALD `question` array, or the string itself in the
/// flat layout.
fn question_text(v: &Json) -> Option<String> {
    match v.get("question")? {
        Json::String(s) => Some(s.clone()),
        Json::Array(items) => {
            let pick = items
                .iter()
                .find(|i| i.get("language").and_then(Json::as_str) == Some("en"))
                .or_else(|| items.first())?;
            pick.get("string").and_then(Json::as_str).map(str::to_string)
        }
        _ => None,
    }
}

fn gold_sparql(v: &Json) -> Option<String> {
    v.pointer("/query/sparql")
        .or_else(|| v.get("sparql"))
        .and_then(Json::as_str)
        .map(str::to_string)
}

fn gold_answers(v: &Json) -> Result<BTreeSet<String>, DatasetError> {
    let mut out = BTreeSet::new();
    let Some(answers) = v.get("answers") else {
        return Ok(out);
    };
    let items = answers.as_array().ok_or_else(|| bad("answers is not an array"))?;
    for item in items {
        match item {
            Json::String(s) => {
                out.insert(s.clone());
            }
            Json::Bool(b) => {
                out.insert(b.to_string());
            }
            Json::Number(n) => {
                out.insert(n.to_string());
            }
            Json::Object(_) => {
                let set = parse_results(&item.to_string(), false).map_err(|e| bad(e.to_string()))?;
                out.extend(set.to_strings());
            }
            _ => return Err(bad("unsupported answer entry")),
        }
    }
    Ok(out)
}

impl BenchmarkDataset {
    /// Reads either layout. Question ids must be unique.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let list = match &doc {
            Json::Array(items) => items,
            Json::Object(_) => doc
                .get("questions")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("missing questions array"))?,
            _ => return Err(bad("expected an object or an array")),
        };
        let mut seen = HashSet::new();
        let mut questions = Vec::with_capacity(list.len());
        for (i, v) in list.iter().enumerate() {
            let id = id_of(v, i);
            if !seen.insert(id.clone()) {
                return Err(DatasetError::DuplicateId(id));
            }
            let text = question_text(v).ok_or_else(|| bad(format!("question {id} has no text")))?;
            questions.push(BenchmarkQuestion {
                id,
                text,
                gold_sparql: gold_sparql(v),
                gold_answers: gold_answers(v)?,
            });
        }
        Ok(Self { questions })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// `(question, query)` pairs for training.
    pub fn training_pairs(&self) -> Vec<(String, String)> {
        self.questions
            .iter()
            .filter_map(|q| q.gold_sparql.as_ref().map(|s| (q.text.clone(), s.clone())))
            .collect()
    }

    pub fn toy_train() -> Self {
        Self::parse(BUNDLED_TOY_TRAIN).expect("bundled training set")
    }

    pub fn toy_test() -> Self {
        Self::parse(BUNDLED_TOY_TEST).expect("bundled test set")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qald_layout() {
        let text = r#"{"questions":[{"id":"7","question":[{"language":"de","string":"Wer?"},{"language":"en","string":"Who?"}],
            "query":{"sparql":"SELECT ?uri WHERE { ?uri <http://p> <http://o> }"},
            "answers":[{"head":{"vars":["uri"]},"results":{"bindings":[{"uri":{"type":"uri","value":"http://a"}}]}}]},
            {"id":8,"question":[{"language":"en","string":"Is it?"}],"answers":[{"head":{},"boolean":false}]}]}"#;
        let d = BenchmarkDataset::parse(text).unwrap();
        assert_eq!(d.questions[0].text, "Who?");
        assert_eq!(d.questions[0].gold_answers, BTreeSet::from(["http://a".to_string()]));
        assert_eq!(d.questions[1].id, "8");
        assert_eq!(d.questions[1].gold_answers, BTreeSet::from(["false".to_string()]));
        assert_eq!(d.training_pairs().len(), 1);
    }

    #[test]
    fn flat_layout_and_duplicates() {
        let d = BenchmarkDataset::parse(r#"[{"question":"a?","answers":["x", 3, true]}]"#).unwrap();
        assert_eq!(d.questions[0].id, "1");
        assert_eq!(d.questions[0].gold_answers.len(), 3);
        assert!(matches!(
            BenchmarkDataset::parse(r#"[{"id":"1","question":"a"},{"id":"1","question":"b"}]"#),
            Err(DatasetError::DuplicateId(_))
        ));
        assert!(BenchmarkDataset::parse("{}").is_err());
    }

    #[test]
    fn bundled_sets() {
        assert_eq!(BenchmarkDataset::toy_train().questions.len(), 30);
        assert_eq!(BenchmarkDataset::toy_test().questions.len(), 20);
    }
}
