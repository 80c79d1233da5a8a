//! Entity, relation and class indexes built from an RDF dump, searched by
//! label tokens and filtered by normalized edit-distance similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::NGram;
use crate::lexicon::SynonymLexicon;
use crate::similarity::{ratio, words};
use crate::sparql::{Term, RDF_TYPE};
use crate::store::Triple;

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL: &str = "http://www.w3.org/2002/07/owl#";
const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

pub const FORMAT_NAME: &str = "kgqa-index";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("invalid index directory: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub label_predicates: Vec<String>,
    /// IRIs under these prefixes are schema terms, never entities.
    pub ontology_namespaces: Vec<String>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            label_predicates: vec![RDFS_LABEL.to_string()],
            ontology_namespaces: vec![
                "http://dbpedia.org/ontology/".to_string(),
                RDF.to_string(),
                RDFS.to_string(),
                OWL.to_string(),
                "http://www.w3.org/2001/XMLSchema#".to_string(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub iri: String,
    pub labels: Vec<String>,
    /// Every predicate of a triple that has this entity as subject or object.
    pub connected_relations: BTreeSet<String>,
    pub connected_types: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub iri: String,
    pub labels: Vec<String>,
    pub expansions: Vec<String>,
    pub domain: Option<String>,
    pub range: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub iri: String,
    pub labels: Vec<String>,
    pub expansions: Vec<String>,
}

/// An IRI-valued neighbour of an entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub predicate: String,
    pub other: String,
    /// True when the entity is the subject of the triple.
    pub outgoing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCandidate {
    pub iri: String,
    pub matched_label: String,
    pub source: NGram,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Entity,
    Relation,
    Class,
}

/// Inverted token index over one record list: normalized word -> ids of
/// records that have the word in a label or expansion.
#[derive(Debug, Clone, Default)]
struct TokenIndex {
    postings: HashMap<String, Vec<u32>>,
}

impl TokenIndex {
    fn build<'a>(names: impl Iterator<Item = (usize, &'a String)>) -> Self {
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, name) in names {
            for w in words(name) {
                let list = postings.entry(w).or_default();
                if list.last() != Some(&(id as u32)) {
                    list.push(id as u32);
                }
            }
        }
        Self { postings }
    }

    fn lookup(&self, tokens: &[String]) -> Vec<u32> {
        let mut lists: Vec<&Vec<u32>> = Vec::with_capacity(tokens.len());
        for t in tokens {
            match self.postings.get(t) {
                Some(l) => lists.push(l),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let Some((first, rest)) = lists.split_first() else {
            return Vec::new();
        };
        first
            .iter()
            .copied()
            .filter(|id| rest.iter().all(|l| l.binary_search(id).is_ok()))
            .collect()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IndexBundle {
    pub entities: Vec<EntityRecord>,
    pub relations: Vec<RelationRecord>,
    pub classes: Vec<ClassRecord>,
    links: BTreeMap<String, Vec<Link>>,
    #[serde(skip)]
    entity_pos: HashMap<String, usize>,
    #[serde(skip)]
    relation_pos: HashMap<String, usize>,
    #[serde(skip)]
    class_pos: HashMap<String, usize>,
    #[serde(skip)]
    entity_tokens: TokenIndex,
    #[serde(skip)]
    relation_tokens: TokenIndex,
    #[serde(skip)]
    class_tokens: TokenIndex,
}

impl PartialEq for IndexBundle {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relations == other.relations
            && self.classes == other.classes
            && self.links == other.links
    }
}

/// Label fallback from an IRI: the local name with underscores as spaces,
/// camel case split when there are no underscores.
pub fn local_name_label(iri: &str) -> String {
    let local = iri.rsplit(['/', '#']).next().unwrap_or(iri);
    if local.contains('_') {
        return local.replace('_', " ").trim().to_string();
    }
    let mut out = String::new();
    let mut prev_lower = false;
    for c in local.chars() {
        if c.is_uppercase() && prev_lower {
            out.push(' ');
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
    }
    out
}

fn contains_words(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn expansions_for(labels: &[String], lexicon: &SynonymLexicon) -> Vec<String> {
    let label_words: Vec<Vec<String>> = labels.iter().map(|l| words(l)).collect();
    let mut out: Vec<String> = Vec::new();
    for (canonical, synonym) in &lexicon.pairs {
        let c = words(canonical);
        if label_words.iter().any(|lw| contains_words(lw, &c)) && !out.contains(synonym) {
            out.push(synonym.clone());
        }
    }
    out
}

impl IndexBundle {
    /// Builds all three indexes in one pass over the triples.
    pub fn build(triples: impl IntoIterator<Item = Triple>, config: &IndexConfig, lexicon: &SynonymLexicon) -> Self {
        let is_schema = |iri: &str| config.ontology_namespaces.iter().any(|ns| iri.starts_with(ns.as_str()));
        let mut labels: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut relations: BTreeSet<String> = BTreeSet::new();
        let mut classes: BTreeSet<String> = BTreeSet::new();
        let mut resources: BTreeSet<String> = BTreeSet::new();
        let mut connected: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut domain: BTreeMap<String, String> = BTreeMap::new();
        let mut range: BTreeMap<String, String> = BTreeMap::new();
        let mut links: BTreeMap<String, Vec<Link>> = BTreeMap::new();

        for (s, p, o) in triples {
            let (Term::Iri(s), Term::Iri(p)) = (s, p) else { continue };
            relations.insert(p.clone());
            connected.entry(s.clone()).or_default().insert(p.clone());
            resources.insert(s.clone());
            match &o {
                Term::Literal(l) => {
                    let english = l.language.as_deref().is_none_or(|lang| lang.starts_with("en"));
                    if english && config.label_predicates.contains(&p) {
                        let list = labels.entry(s.clone()).or_default();
                        if !list.contains(&l.lexical) {
                            list.push(l.lexical.clone());
                        }
                    }
                }
                Term::Iri(o) => {
                    connected.entry(o.clone()).or_default().insert(p.clone());
                    resources.insert(o.clone());
                    links.entry(s.clone()).or_default().push(Link {
                        predicate: p.clone(),
                        other: o.clone(),
                        outgoing: true,
                    });
                    links.entry(o.clone()).or_default().push(Link {
                        predicate: p.clone(),
                        other: s.clone(),
                        outgoing: false,
                    });
                    if p == RDF_TYPE {
                        types.entry(s.clone()).or_default().insert(o.clone());
                        match o.as_str() {
                            x if x == format!("{OWL}Class") || x == format!("{RDFS}Class") => {
                                classes.insert(s.clone());
                            }
                            x if x == format!("{RDF}Property")
                                || x == format!("{OWL}ObjectProperty")
                                || x == format!("{OWL}DatatypeProperty") =>
                            {
                                relations.insert(s.clone());
                            }
                            _ => {
                                classes.insert(o.clone());
                            }
                        }
                    } else if p == format!("{RDFS}domain") {
                        relations.insert(s.clone());
                        classes.insert(o.clone());
                        domain.insert(s.clone(), o.clone());
                    } else if p == format!("{RDFS}range") {
                        relations.insert(s.clone());
                        classes.insert(o.clone());
                        range.insert(s.clone(), o.clone());
                    }
                }
                Term::Variable(_) => {}
            }
        }

        let label_of = |iri: &str| -> Vec<String> {
            match labels.get(iri) {
                Some(l) if !l.is_empty() => l.clone(),
                _ => vec![local_name_label(iri)],
            }
        };
        let entities: Vec<EntityRecord> = resources
            .iter()
            .filter(|r| !is_schema(r) && !relations.contains(*r) && !classes.contains(*r))
            .map(|iri| EntityRecord {
                iri: iri.clone(),
                labels: label_of(iri),
                connected_relations: connected.get(iri).cloned().unwrap_or_default(),
                connected_types: types.get(iri).cloned().unwrap_or_default(),
            })
            .collect();
        let relations: Vec<RelationRecord> = relations
            .iter()
            .map(|iri| {
                let labels = label_of(iri);
                RelationRecord {
                    iri: iri.clone(),
                    expansions: expansions_for(&labels, lexicon),
                    labels,
                    domain: domain.get(iri).cloned(),
                    range: range.get(iri).cloned(),
                }
            })
            .collect();
        let classes: Vec<ClassRecord> = classes
            .iter()
            .map(|iri| {
                let labels = label_of(iri);
                ClassRecord {
                    iri: iri.clone(),
                    expansions: expansions_for(&labels, lexicon),
                    labels,
                }
            })
            .collect();
        let entity_set: BTreeSet<&String> = entities.iter().map(|e| &e.iri).collect();
        let class_set: BTreeSet<&String> = classes.iter().map(|c| &c.iri).collect();
        // entities keep every link, classes only their instances
        let mut links: BTreeMap<String, Vec<Link>> = links
            .into_iter()
            .filter_map(|(k, list)| {
                if entity_set.contains(&k) {
                    Some((k, list))
                } else if class_set.contains(&k) {
                    let list: Vec<Link> = list
                        .into_iter()
                        .filter(|l| l.predicate == RDF_TYPE && !l.outgoing)
                        .collect();
                    (!list.is_empty()).then_some((k, list))
                } else {
                    None
                }
            })
            .collect();
        for list in links.values_mut() {
            list.sort();
            list.dedup();
        }
        let mut bundle = Self {
            entities,
            relations,
            classes,
            links,
            ..Default::default()
        };
        bundle.reindex();
        bundle
    }

    fn reindex(&mut self) {
        self.entity_pos = self
            .entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.iri.clone(), i))
            .collect();
        self.relation_pos = self
            .relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iri.clone(), i))
            .collect();
        self.class_pos = self
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.iri.clone(), i))
            .collect();
        self.entity_tokens = TokenIndex::build(
            self.entities
                .iter()
                .enumerate()
                .flat_map(|(i, e)| e.labels.iter().map(move |l| (i, l))),
        );
        self.relation_tokens = TokenIndex::build(
            self.relations
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.labels.iter().chain(&r.expansions).map(move |l| (i, l))),
        );
        self.class_tokens = TokenIndex::build(
            self.classes
                .iter()
                .enumerate()
                .flat_map(|(i, c)| c.labels.iter().chain(&c.expansions).map(move |l| (i, l))),
        );
    }

    pub fn entity(&self, iri: &str) -> Option<&EntityRecord> {
        self.entity_pos.get(iri).map(|&i| &self.entities[i])
    }

    pub fn relation(&self, iri: &str) -> Option<&RelationRecord> {
        self.relation_pos.get(iri).map(|&i| &self.relations[i])
    }

    pub fn class(&self, iri: &str) -> Option<&ClassRecord> {
        self.class_pos.get(iri).map(|&i| &self.classes[i])
    }

    fn names(&self, kind: Kind, i: usize) -> (&str, Vec<&String>) {
        match kind {
            Kind::Entity => (self.entities[i].iri.as_str(), self.entities[i].labels.iter().collect()),
            Kind::Relation => {
                let r = &self.relations[i];
                (r.iri.as_str(), r.labels.iter().chain(&r.expansions).collect())
            }
            Kind::Class => {
                let c = &self.classes[i];
                (c.iri.as_str(), c.labels.iter().chain(&c.expansions).collect())
            }
        }
    }

    fn search(&self, kind: Kind, ngram: &NGram, threshold: f64) -> Vec<LinkCandidate> {
        let tokens = words(&ngram.surface);
        if tokens.is_empty() {
            return Vec::new();
        }
        let index = match kind {
            Kind::Entity => &self.entity_tokens,
            Kind::Relation => &self.relation_tokens,
            Kind::Class => &self.class_tokens,
        };
        let mut out = Vec::new();
        for id in index.lookup(&tokens) {
            let (iri, candidates) = self.names(kind, id as usize);
            let best = candidates
                .into_iter()
                .filter(|name| {
                    let w = words(name);
                    tokens.iter().all(|t| w.contains(t))
                })
                .map(|name| (ratio(&ngram.surface, name), name))
                .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(a.1)));
            if let Some((similarity, name)) = best {
                if similarity >= threshold {
                    out.push(LinkCandidate {
                        iri: iri.to_string(),
                        matched_label: name.clone(),
                        source: ngram.clone(),
                        similarity,
                    });
                }
            }
        }
        out.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.iri.cmp(&b.iri)));
        out
    }

    pub fn search_entities(&self, ngram: &NGram, threshold: f64) -> Vec<LinkCandidate> {
        self.search(Kind::Entity, ngram, threshold)
    }

    pub fn search_relations(&self, ngram: &NGram, threshold: f64) -> Vec<LinkCandidate> {
        self.search(Kind::Relation, ngram, threshold)
    }

    pub fn search_classes(&self, ngram: &NGram, threshold: f64) -> Vec<LinkCandidate> {
        self.search(Kind::Class, ngram, threshold)
    }

    /// S(e): the relations attached to `iri`. Empty for IRIs that are not
    /// entities.
    pub fn connected_relations(&self, iri: &str) -> Option<&BTreeSet<String>> {
        self.entity(iri).map(|e| &e.connected_relations)
    }

    /// All `o` with `(e, p, o)` or `(o, p, e)`.
    pub fn connected_objects(&self, e: &str, p: &str) -> Result<BTreeSet<String>, IndexError> {
        if self.entity(e).is_none() {
            return Err(IndexError::UnknownEntity(e.to_string()));
        }
        Ok(self
            .links
            .get(e)
            .into_iter()
            .flatten()
            .filter(|l| l.predicate == p)
            .map(|l| l.other.clone())
            .collect())
    }

    /// Neighbours of `e` over `p` in one direction: objects when `outgoing`,
    /// subjects otherwise. Unknown IRIs have none. For a class only the
    /// incoming `rdf:type` links, its instances, are kept.
    pub fn neighbours(&self, e: &str, p: &str, outgoing: bool) -> BTreeSet<String> {
        self.links
            .get(e)
            .into_iter()
            .flatten()
            .filter(|l| l.predicate == p && l.outgoing == outgoing)
            .map(|l| l.other.clone())
            .collect()
    }

    /// Writes the bundle as a directory: `manifest.json` plus one JSON file
    /// per record list.
    pub fn save(&self, dir: &Path) -> Result<(), IndexError> {
        fs::create_dir_all(dir)?;
        let write = |name: &str, value: &serde_json::Value| -> Result<(), IndexError> {
            fs::write(
                dir.join(name),
                serde_json::to_vec(value).map_err(|e| IndexError::Format(e.to_string()))?,
            )?;
            Ok(())
        };
        let json = |v: &dyn erased::Ser| v.to_json();
        write("entities.json", &json(&self.entities))?;
        write("relations.json", &json(&self.relations))?;
        write("classes.json", &json(&self.classes))?;
        write("links.json", &json(&self.links))?;
        let manifest = serde_json::json!({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "entities": self.entities.len(),
            "relations": self.relations.len(),
            "classes": self.classes.len(),
            "files": ["entities.json", "relations.json", "classes.json", "links.json"],
        });
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_vec_pretty(&manifest).map_err(|e| IndexError::Format(e.to_string()))?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let manifest: serde_json::Value = read_json(&dir.join("manifest.json"))?;
        if manifest.get("format").and_then(|v| v.as_str()) != Some(FORMAT_NAME) {
            return Err(IndexError::Format("manifest format is not kgqa-index".into()));
        }
        match manifest.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            other => return Err(IndexError::Format(format!("unsupported version {other:?}"))),
        }
        let mut bundle = Self {
            entities: read_json(&dir.join("entities.json"))?,
            relations: read_json(&dir.join("relations.json"))?,
            classes: read_json(&dir.join("classes.json"))?,
            links: read_json(&dir.join("links.json"))?,
            ..Default::default()
        };
        bundle.reindex();
        Ok(bundle)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IndexError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| IndexError::Format(format!("{}: {e}", path.display())))
}

mod erased {
    pub trait Ser {
        fn to_json(&self) -> serde_json::Value;
    }

    impl<T: serde::Serialize> Ser for T {
        fn to_json(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("index records serialize")
        }
    }
}
