//! The ten question features used for template classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedQuestion, NerTag};
use crate::lexicon::KeywordTable;

pub const PERSON_CLASS: &str = "http://dbpedia.org/ontology/Person";
const DBO: &str = "http://dbpedia.org/ontology/";

/// Interrogative and imperative openers, in their printed form.
pub const QUESTION_WORDS: &[&str] = &[
    "Who", "What", "Where", "When", "Which", "How", "Give", "List", "Is", "Are", "Did", "Does", "Do", "Was", "Were",
    "Has", "Have", "Show", "Name",
];

pub const NONE: &str = "NONE";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub question_word: String,
    pub entity_person: bool,
    pub number_of_token: usize,
    /// Class IRI, or `NONE`.
    pub query_resource_type: String,
    pub noun: usize,
    pub number: usize,
    pub verb: usize,
    pub adjective: usize,
    pub comparative: bool,
    pub triple_candidates: usize,
}

impl FeatureVector {
    pub const NOMINAL: [&'static str; 4] = ["question_word", "entity_person", "query_resource_type", "comparative"];
    pub const NUMERIC: [&'static str; 6] = [
        "number_of_token",
        "noun",
        "number",
        "verb",
        "adjective",
        "triple_candidates",
    ];

    pub fn nominal(&self) -> [String; 4] {
        [
            self.question_word.clone(),
            if self.entity_person { "Person" } else { "NoPerson" }.to_string(),
            self.query_resource_type.clone(),
            if self.comparative {
                "Comparative"
            } else {
                "NoComparative"
            }
            .to_string(),
        ]
    }

    pub fn numeric(&self) -> [f64; 6] {
        [
            self.number_of_token as f64,
            self.noun as f64,
            self.number as f64,
            self.verb as f64,
            self.adjective as f64,
            self.triple_candidates as f64,
        ]
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rt = match self.query_resource_type.strip_prefix(DBO) {
            Some(local) => format!("dbo:{local}"),
            None => self.query_resource_type.clone(),
        };
        let [qw, person, _, comp] = self.nominal();
        write!(
            f,
            "<{qw},{person},{},{rt},{},{},{},{},{comp},{}>",
            self.number_of_token, self.noun, self.number, self.verb, self.adjective, self.triple_candidates
        )
    }
}

pub fn question_word(q: &AnnotatedQuestion) -> Option<(usize, &'static str)> {
    q.tokens.iter().enumerate().find_map(|(i, t)| {
        QUESTION_WORDS
            .iter()
            .find(|w| w.eq_ignore_ascii_case(&t.surface))
            .map(|w| (i, *w))
    })
}

fn is_adj(tag: &str) -> bool {
    tag.starts_with("JJ")
}

fn is_common_noun(tag: &str) -> bool {
    tag == "NN" || tag == "NNS"
}

/// Counts maximal common-noun chunks (`JJ* NN+`) and the adjectives left
/// outside them.
fn noun_chunks(tags: &[&str]) -> (usize, usize) {
    let mut nouns = 0;
    let mut adjectives = 0;
    let mut i = 0;
    while i < tags.len() {
        if is_adj(tags[i]) || is_common_noun(tags[i]) {
            let start = i;
            while i < tags.len() && is_adj(tags[i]) {
                i += 1;
            }
            if i < tags.len() && is_common_noun(tags[i]) {
                while i < tags.len() && is_common_noun(tags[i]) {
                    i += 1;
                }
                nouns += 1;
            } else {
                adjectives += i - start;
            }
        } else {
            i += 1;
        }
    }
    (nouns, adjectives)
}

pub fn extract_features(q: &AnnotatedQuestion, topics: &KeywordTable) -> FeatureVector {
    let tags: Vec<&str> = q.tokens.iter().map(|t| t.pos.as_str()).collect();
    let entity_person = q.tokens.iter().any(|t| t.ner == NerTag::Person);
    let (noun, adjective) = noun_chunks(&tags);
    let verb = tags.iter().filter(|t| t.starts_with("VB")).count();
    let number = tags.iter().filter(|t| **t == "CD").count();
    let comparative_adjectives = tags.iter().filter(|t| **t == "JJR").count();
    let comparative = tags.iter().any(|t| *t == "JJR" || *t == "RBR");
    let query_resource_type = q
        .tokens
        .iter()
        .find_map(|t| topics.get(&t.surface))
        .map(str::to_string)
        .or_else(|| entity_person.then(|| PERSON_CLASS.to_string()))
        .unwrap_or_else(|| NONE.to_string());
    FeatureVector {
        question_word: question_word(q).map_or(NONE, |(_, w)| w).to_string(),
        entity_person,
        number_of_token: q.tokens.len(),
        query_resource_type,
        noun,
        number,
        verb,
        adjective,
        comparative,
        triple_candidates: (verb + comparative_adjectives).clamp(1, 3),
    }
}
