//! Question tokenization, part-of-speech and person tagging, and n-gram
//! extraction.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon;

/// Longest n-gram considered for linking.
pub const MAX_NGRAM: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error("question is empty")]
    EmptyQuestion,
}

/// A whitespace-delimited word with surrounding punctuation removed.
/// `start..end` is its byte range in the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NerTag {
    Person,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub surface: String,
    pub pos: String,
    pub ner: NerTag,
}

/// Tokens `start..end` of a question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl NGram {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn overlaps(&self, other: &NGram) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedQuestion {
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
    pub ngrams: Vec<NGram>,
}

impl AnnotatedQuestion {
    pub fn surface(&self, i: usize) -> &str {
        &self.tokens[i].surface
    }

    pub fn pos(&self, i: usize) -> &str {
        &self.tokens[i].pos
    }

    pub fn lower(&self, i: usize) -> String {
        self.tokens[i].surface.to_lowercase()
    }
}

fn is_strippable(c: char) -> bool {
    !c.is_alphanumeric()
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, AnnotateError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in text.split_whitespace() {
        let start = offset + text[offset..].find(piece).expect("piece comes from text");
        offset = start + piece.len();
        let trimmed = piece.trim_start_matches(is_strippable);
        let lead = piece.len() - trimmed.len();
        let trimmed = trimmed.trim_end_matches(is_strippable);
        if trimmed.is_empty() {
            continue;
        }
        out.push(Token {
            surface: trimmed.to_string(),
            start: start + lead,
            end: start + lead + trimmed.len(),
        });
    }
    if out.is_empty() {
        return Err(AnnotateError::EmptyQuestion);
    }
    Ok(out)
}

/// A part-of-speech and named-entity tagger. Outputs are aligned with the
/// input tokens.
pub trait Annotator: Send + Sync {
    fn pos(&self, tokens: &[String]) -> Vec<String>;
    fn ner(&self, tokens: &[String]) -> Vec<NerTag>;
}

fn capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

/// Word-list tagger: a lexicon of most-frequent Penn tags, suffix rules for
/// unknown words, and capitalized runs as proper nouns. A capitalized run
/// starting with a known first name is tagged `PERSON`.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    lexicon: HashMap<String, String>,
    first_names: HashSet<String>,
}

impl LexiconTagger {
    pub fn from_sources(tagger_tsv: &str, first_names: &str) -> Self {
        let lexicon = lexicon::parse_pairs(tagger_tsv)
            .into_iter()
            .map(|(w, t)| (w.to_lowercase(), t))
            .collect::<HashMap<_, _>>();
        Self {
            lexicon,
            first_names: lexicon::parse_word_list(first_names).into_iter().collect(),
        }
    }

    pub fn bundled() -> Self {
        Self::from_sources(lexicon::BUNDLED_TAGGER, lexicon::BUNDLED_FIRST_NAMES)
    }

    /// Token ranges of capitalized runs, ignoring the first token of the
    /// question. A run of one word only counts when the word is not in the
    /// lexicon.
    fn proper_runs(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut i = 1;
        while i < tokens.len() {
            if !capitalized(&tokens[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i < tokens.len() && capitalized(&tokens[i]) {
                i += 1;
            }
            if i - start > 1 || !self.lexicon.contains_key(&tokens[start].to_lowercase()) {
                runs.push((start, i));
            }
        }
        // a leading capitalized unknown word followed by a run joins it
        if let Some(first) = tokens.first() {
            let known = self.lexicon.contains_key(&first.to_lowercase());
            if capitalized(first) && !known {
                match runs.first_mut() {
                    Some(r) if r.0 == 1 => r.0 = 0,
                    _ => runs.insert(0, (0, 1)),
                }
            }
        }
        runs
    }

    fn guess(word: &str) -> &'static str {
        let lower = word.to_lowercase();
        if word.chars().any(|c| c.is_ascii_digit()) && word.chars().all(|c| c.is_ascii_digit() || ",.".contains(c)) {
            "CD"
        } else if lower.ends_with("ly") {
            "RB"
        } else if lower.ends_with("ing") {
            "VBG"
        } else if lower.ends_with("ed") {
            "VBD"
        } else if lower.ends_with("est") {
            "JJS"
        } else if lower.ends_with('s') && !lower.ends_with("ss") {
            "NNS"
        } else {
            "NN"
        }
    }
}

impl Annotator for LexiconTagger {
    fn pos(&self, tokens: &[String]) -> Vec<String> {
        let mut tags: Vec<String> = tokens
            .iter()
            .map(|t| match self.lexicon.get(&t.to_lowercase()) {
                Some(tag) => tag.clone(),
                None => Self::guess(t).to_string(),
            })
            .collect();
        for (start, end) in self.proper_runs(tokens) {
            for tag in &mut tags[start..end] {
                if tag != "CD" {
                    *tag = "NNP".to_string();
                }
            }
        }
        tags
    }

    fn ner(&self, tokens: &[String]) -> Vec<NerTag> {
        let mut out = vec![NerTag::None; tokens.len()];
        let mut runs = self.proper_runs(tokens);
        // a question may open with a name ("Albert Einstein was ...")
        if tokens.len() > 1 && capitalized(&tokens[0]) && self.first_names.contains(&tokens[0].to_lowercase()) {
            match runs.first_mut() {
                Some(r) if r.0 <= 1 => r.0 = 0,
                _ => runs.insert(0, (0, 1)),
            }
        }
        for (start, end) in runs {
            if self.first_names.contains(&tokens[start].to_lowercase()) {
                out[start..end].fill(NerTag::Person);
            }
        }
        out
    }
}

/// Annotation context shared by training and answering: a tagger and the
/// stopword list.
#[derive(Clone)]
pub struct Analyzer {
    annotator: Arc<dyn Annotator>,
    stopwords: BTreeSet<String>,
}

impl std::fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analyzer")
            .field("stopwords", &self.stopwords.len())
            .finish()
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::new(Arc::new(LexiconTagger::bundled()), lexicon::bundled_stopwords())
    }
}

impl Analyzer {
    pub fn new(annotator: Arc<dyn Annotator>, stopwords: BTreeSet<String>) -> Self {
        Self { annotator, stopwords }
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn annotate(&self, text: &str) -> Result<AnnotatedQuestion, AnnotateError> {
        let tokens = tokenize(text)?;
        let surfaces: Vec<String> = tokens.into_iter().map(|t| t.surface).collect();
        let pos = self.annotator.pos(&surfaces);
        let ner = self.annotator.ner(&surfaces);
        debug_assert_eq!(pos.len(), surfaces.len());
        debug_assert_eq!(ner.len(), surfaces.len());
        let mut q = AnnotatedQuestion {
            text: text.to_string(),
            tokens: surfaces
                .into_iter()
                .zip(pos)
                .zip(ner)
                .map(|((surface, pos), ner)| AnnotatedToken { surface, pos, ner })
                .collect(),
            ngrams: Vec::new(),
        };
        q.ngrams = relevant_ngrams(&q, &self.stopwords);
        Ok(q)
    }
}

/// All 1..=6-grams except those made only of stopwords and those whose
/// first tag is not adjectival, nominal or verbal.
pub fn relevant_ngrams(q: &AnnotatedQuestion, stopwords: &BTreeSet<String>) -> Vec<NGram> {
    let n = q.tokens.len();
    let mut out = Vec::new();
    for start in 0..n {
        let tag = q.pos(start);
        if !(tag.starts_with("JJ") || tag.starts_with("NN") || tag.starts_with("VB")) {
            continue;
        }
        for end in start + 1..=(start + MAX_NGRAM).min(n) {
            if (start..end).all(|i| stopwords.contains(&q.lower(i))) {
                continue;
            }
            let surface = q.tokens[start..end]
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.push(NGram { start, end, surface });
        }
    }
    out
}
