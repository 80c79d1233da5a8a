//! Word lists and keyword tables. Each has a bundled default and can be
//! replaced from a file at runtime.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

pub const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const BUNDLED_TOPICS: &str = include_str!("../data/topics.tsv");
pub const BUNDLED_TAGGER: &str = include_str!("../data/tagger.tsv");
pub const BUNDLED_FIRST_NAMES: &str = include_str!("../data/firstnames.txt");
pub const BUNDLED_SYNONYMS: &str = include_str!("../data/lexicon.tsv");
pub const BUNDLED_DIRECTIONS: &str = include_str!("../data/modifiers.tsv");

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

/// One entry per line; returned lowercased.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    content_lines(text).map(|l| l.trim().to_lowercase()).collect()
}

/// `key<TAB>value` pairs in file order. Lines without a tab are ignored.
pub fn parse_pairs(text: &str) -> Vec<(String, String)> {
    content_lines(text)
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .collect()
}

/// Ordered keyword table mapping lowercased keywords to a value. The first
/// occurrence of a keyword wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordTable {
    entries: BTreeMap<String, String>,
}

impl KeywordTable {
    pub fn parse(text: &str) -> Self {
        let mut entries = BTreeMap::new();
        for (k, v) in parse_pairs(text) {
            entries.entry(k.to_lowercase()).or_insert(v);
        }
        Self { entries }
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.entries.get(&word.to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Synonym and hypernym expansions, `canonical<TAB>synonym`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    pub pairs: Vec<(String, String)>,
}

impl SynonymLexicon {
    pub fn parse(text: &str) -> Self {
        Self {
            pairs: parse_pairs(text)
                .into_iter()
                .map(|(c, s)| (c.to_lowercase(), s.to_lowercase()))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SYNONYMS)
    }
}

pub fn load_word_list(path: &Path) -> io::Result<BTreeSet<String>> {
    Ok(parse_word_list(&fs::read_to_string(path)?))
}

pub fn bundled_stopwords() -> BTreeSet<String> {
    parse_word_list(BUNDLED_STOPWORDS)
}
