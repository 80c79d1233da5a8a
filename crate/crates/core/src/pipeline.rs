//! The end-to-end engine: annotate, classify, link, fill, execute, filter,
//! rate and select. Also batch evaluation against a benchmark.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Analyzer;
use crate::builder::{
    detect_modifiers, fill_template, generate_queries, CandidateQuery, ModifierSet, DEFAULT_MAX_BINDINGS,
};
use crate::classifier::{
    build_training_set, train, Algorithm, BuildReport, ClassifierError, ClassifierModel, DEFAULT_MIN_SUPPORT,
};
use crate::dataset::{BenchmarkDataset, BUNDLED_TOY_KG};
use crate::features::extract_features;
use crate::index::{IndexBundle, IndexConfig, LinkCandidate, DEFAULT_THRESHOLD};
use crate::lexicon::{KeywordTable, SynonymLexicon, BUNDLED_DIRECTIONS, BUNDLED_TOPICS};
use crate::metrics::{macro_scores, prf, Prf};
use crate::ranking::{expected_answer, rate, select_best, type_matches, ExpectedAnswer, RankedAnswer};
use crate::sparql::parse_query;
use crate::store::remote::RemoteEndpoint;
use crate::store::{parse_ntriples, AnswerSet, TripleStore};

pub const DEFAULT_TOP_K: usize = 2;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub top_k_templates: usize,
    pub threshold: f64,
    pub max_bindings: usize,
    /// Concurrent remote requests per question.
    pub max_in_flight: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            top_k_templates: DEFAULT_TOP_K,
            threshold: DEFAULT_THRESHOLD,
            max_bindings: DEFAULT_MAX_BINDINGS,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

pub enum Backend {
    Local(TripleStore),
    Remote(RemoteEndpoint),
}

impl Backend {
    fn execute(&self, c: &CandidateQuery) -> Result<AnswerSet, String> {
        match self {
            Backend::Local(store) => {
                let q = parse_query(&c.sparql).map_err(|e| e.to_string())?;
                store.evaluate(&q).map_err(|e| e.to_string())
            }
            Backend::Remote(endpoint) => endpoint.execute(&c.sparql, c.is_count()).map_err(|e| e.to_string()),
        }
    }
}

pub struct Engine {
    pub analyzer: Analyzer,
    pub topics: KeywordTable,
    pub directions: KeywordTable,
    pub bundle: IndexBundle,
    pub model: ClassifierModel,
    pub backend: Backend,
    pub config: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub sparql: String,
    pub class_score: f64,
    pub rating: Option<f64>,
    pub results: Option<usize>,
    pub kept: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub features: Option<String>,
    pub templates: Vec<(String, f64)>,
    pub entities: Vec<LinkCandidate>,
    pub relations: Vec<LinkCandidate>,
    #[serde(default)]
    pub classes: Vec<LinkCandidate>,
    pub modifiers: Option<ModifierSet>,
    pub expected: Option<ExpectedAnswer>,
    pub candidates: Vec<CandidateTrace>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub question: String,
    /// `None` when the question is unanswered.
    pub answers: Option<AnswerSet>,
    pub sparql: Option<String>,
    /// Rating of the chosen query.
    pub confidence: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl AnswerOutcome {
    pub fn answered(&self) -> bool {
        self.answers.is_some()
    }

    pub fn answer_strings(&self) -> BTreeSet<String> {
        self.answers.iter().flat_map(|a| a.to_strings()).collect()
    }
}

fn dedup_links(mut links: Vec<LinkCandidate>) -> Vec<LinkCandidate> {
    links.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(b.source.len().cmp(&a.source.len()))
            .then(a.source.start.cmp(&b.source.start))
            .then(a.iri.cmp(&b.iri))
    });
    let mut seen = BTreeSet::new();
    links.retain(|l| seen.insert((l.iri.clone(), l.source.start, l.source.end)));
    links
}

impl Engine {
    /// Assembles an engine with the bundled topic and direction tables.
    pub fn new(
        analyzer: Analyzer,
        bundle: IndexBundle,
        model: ClassifierModel,
        backend: Backend,
        config: EngineConfig,
    ) -> Self {
        Self {
            analyzer,
            topics: KeywordTable::parse(BUNDLED_TOPICS),
            directions: KeywordTable::parse(BUNDLED_DIRECTIONS),
            bundle,
            model,
            backend,
            config,
        }
    }

    /// Trains a model on `train` and answers over the given N-Triples
    /// document with an in-memory store.
    pub fn build_local(
        kg: &str,
        train_set: &BenchmarkDataset,
        lexicon: &SynonymLexicon,
        analyzer: Analyzer,
        algorithm: Algorithm,
        seed: u64,
        config: EngineConfig,
    ) -> Result<(Self, BuildReport), EngineError> {
        let topics = KeywordTable::parse(BUNDLED_TOPICS);
        let (triples, _) = parse_ntriples(kg);
        let bundle = IndexBundle::build(triples.iter().cloned(), &IndexConfig::default(), lexicon);
        let (ts, report) = build_training_set(&train_set.training_pairs(), &analyzer, &topics, DEFAULT_MIN_SUPPORT);
        let model = train(&ts, algorithm, seed)?;
        let engine = Self::new(
            analyzer,
            bundle,
            model,
            Backend::Local(TripleStore::new(triples)),
            config,
        );
        Ok((engine, report))
    }

    /// The bundled toy knowledge graph with a model trained on the bundled
    /// toy training set.
    pub fn toy(seed: u64) -> Self {
        Self::build_local(
            BUNDLED_TOY_KG,
            &BenchmarkDataset::toy_train(),
            &SynonymLexicon::bundled(),
            Analyzer::default(),
            Algorithm::NaiveBayes,
            seed,
            EngineConfig::default(),
        )
        .expect("bundled toy data trains")
        .0
    }

    fn execute_all(&self, cands: &[CandidateQuery]) -> Vec<Result<AnswerSet, String>> {
        match &self.backend {
            Backend::Local(_) => cands.iter().map(|c| self.backend.execute(c)).collect(),
            Backend::Remote(_) => {
                let width = self.config.max_in_flight.max(1);
                let mut out = Vec::with_capacity(cands.len());
                for chunk in cands.chunks(width) {
                    let results: Vec<Result<AnswerSet, String>> = std::thread::scope(|s| {
                        let handles: Vec<_> = chunk.iter().map(|c| s.spawn(|| self.backend.execute(c))).collect();
                        handles
                            .into_iter()
                            .map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".to_string())))
                            .collect()
                    });
                    out.extend(results);
                }
                out
            }
        }
    }

    /// Answers one question. Failures at any stage end up in the
    /// diagnostics and leave the question unanswered.
    pub fn answer_question(&self, text: &str) -> AnswerOutcome {
        let mut d = Diagnostics::default();
        let unanswered = |d: Diagnostics| AnswerOutcome {
            question: text.to_string(),
            answers: None,
            sparql: None,
            confidence: None,
            diagnostics: d,
        };
        let q = match self.analyzer.annotate(text) {
            Ok(q) => q,
            Err(e) => {
                d.errors.push(e.to_string());
                return unanswered(d);
            }
        };
        let features = extract_features(&q, &self.topics);
        d.features = Some(features.to_string());
        let ranked = self.model.predict_ranked(&features);
        let mods = detect_modifiers(&q, &self.directions);
        let expected = expected_answer(&q);
        d.modifiers = Some(mods.clone());
        d.expected = Some(expected);

        let threshold = self.config.threshold;
        d.entities = dedup_links(
            q.ngrams
                .iter()
                .flat_map(|g| self.bundle.search_entities(g, threshold))
                .collect(),
        );
        d.relations = dedup_links(
            q.ngrams
                .iter()
                .flat_map(|g| self.bundle.search_relations(g, threshold))
                .collect(),
        );
        d.classes = dedup_links(
            q.ngrams
                .iter()
                .flat_map(|g| self.bundle.search_classes(g, threshold))
                .collect(),
        );
        let slot_fillers: Vec<LinkCandidate> = d.entities.iter().chain(&d.classes).cloned().collect();

        let mut cands = Vec::new();
        for &(class_id, score) in ranked.iter().take(self.config.top_k_templates) {
            let Some(t) = self.model.template(class_id) else {
                d.errors.push(format!("class {class_id} has no template"));
                continue;
            };
            d.templates.push((t.canonical_key.clone(), score));
            let bindings = fill_template(&t, &slot_fillers, &d.relations, &self.bundle, self.config.max_bindings);
            cands.extend(generate_queries(&t, &bindings, &mods, score));
        }

        let results = self.execute_all(&cands);
        let mut kept = Vec::new();
        for (c, result) in cands.into_iter().zip(results) {
            match result {
                Ok(answers) => {
                    let rating = rate(&c, answers.len());
                    let ok = type_matches(expected, &answers);
                    d.candidates.push(CandidateTrace {
                        sparql: c.sparql.clone(),
                        class_score: c.class_score,
                        rating: Some(rating),
                        results: Some(answers.len()),
                        kept: ok,
                        error: None,
                    });
                    if ok {
                        kept.push(RankedAnswer {
                            query: c,
                            answers,
                            rating,
                        });
                    }
                }
                Err(e) => d.candidates.push(CandidateTrace {
                    sparql: c.sparql,
                    class_score: c.class_score,
                    rating: None,
                    results: None,
                    kept: false,
                    error: Some(e),
                }),
            }
        }
        match select_best(&kept, expected) {
            Ok(best) => AnswerOutcome {
                question: text.to_string(),
                answers: Some(best.answers.clone()),
                sparql: Some(best.query.sparql.clone()),
                confidence: Some(best.rating),
                diagnostics: d,
            },
            Err(e) => {
                d.errors.push(e.to_string());
                unanswered(d)
            }
        }
    }

    /// Answers every question and scores it against gold. Questions are
    /// processed and reported in id order, so the input order does not
    /// matter.
    pub fn evaluate(&self, ds: &BenchmarkDataset) -> EvaluationReport {
        let started = Instant::now();
        let mut ordered: Vec<_> = ds.questions.iter().collect();
        ordered.sort_by(|a, b| id_order(&a.id, &b.id));
        let mut per_question = Vec::with_capacity(ordered.len());
        let mut timings = BTreeMap::new();
        for q in ordered {
            let t0 = Instant::now();
            let outcome = self.answer_question(&q.text);
            timings.insert(q.id.clone(), t0.elapsed().as_secs_f64() * 1000.0);
            let system = outcome.answer_strings();
            let score = prf(&system, &q.gold_answers);
            let exact = outcome.answered() && system == q.gold_answers;
            per_question.push(QuestionResult {
                id: q.id.clone(),
                question: q.text.clone(),
                answered: outcome.answered(),
                sparql: outcome.sparql,
                system: system.into_iter().collect(),
                gold: q.gold_answers.iter().cloned().collect(),
                exact,
                score,
            });
        }
        let scores: Vec<Prf> = per_question.iter().map(|r| r.score).collect();
        let m = macro_scores(&scores);
        let total = per_question.len();
        let total_ms = started.elapsed().as_secs_f64() * 1000.0;
        EvaluationReport {
            questions: total,
            answered: per_question.iter().filter(|r| r.answered).count(),
            exact_matches: per_question.iter().filter(|r| r.exact).count(),
            macro_precision: m.precision,
            macro_recall: m.recall,
            macro_f: m.f,
            qald_f: m.qald_f,
            per_question,
            timing: Timing {
                total_ms,
                average_ms: if total == 0 { 0.0 } else { total_ms / total as f64 },
                per_question_ms: timings,
            },
        }
    }
}

/// Numeric ids sort numerically and before other ids.
fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub question: String,
    pub answered: bool,
    pub sparql: Option<String>,
    pub system: Vec<String>,
    pub gold: Vec<String>,
    pub exact: bool,
    pub score: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub average_ms: f64,
    pub per_question_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub questions: usize,
    pub answered: usize,
    pub exact_matches: usize,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
    pub qald_f: f64,
    pub per_question: Vec<QuestionResult>,
    pub timing: Timing,
}

impl EvaluationReport {
    /// The report as JSON without the timing block.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.per_question {
            let _ = writeln!(
                s,
                "{:>4} {} P={:.3} R={:.3} F={:.3}  {}",
                r.id,
                if r.exact {
                    "ok  "
                } else if r.answered {
                    "part"
                } else {
                    "none"
                },
                r.score.precision,
                r.score.recall,
                r.score.f,
                r.question
            );
        }
        let _ = writeln!(s, "questions      {}", self.questions);
        let _ = writeln!(s, "answered       {}", self.answered);
        let _ = writeln!(s, "exact matches  {}", self.exact_matches);
        let _ = writeln!(s, "macro P        {:.4}", self.macro_precision);
        let _ = writeln!(s, "macro R        {:.4}", self.macro_recall);
        let _ = writeln!(s, "macro F        {:.4}", self.macro_f);
        let _ = writeln!(s, "QALD F         {:.4}", self.qald_f);
        let _ = writeln!(s, "avg time (ms)  {:.2}", self.timing.average_ms);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DBR: &str = "http://dbpedia.org/resource/";

    #[test]
    fn running_example() {
        let e = Engine::toy(DEFAULT_SEED);
        let out = e.answer_question("Who was the doctoral advisor of Albert Einstein?");
        assert_eq!(out.answer_strings(), BTreeSet::from([format!("{DBR}Alfred_Kleiner")]));
        assert_eq!(
            out.sparql.as_deref(),
            Some(
                "SELECT DISTINCT ?uri WHERE { <http://dbpedia.org/resource/Albert_Einstein> \
                 <http://dbpedia.org/ontology/doctoralAdvisor> ?uri . }"
            )
        );
    }

    #[test]
    fn gibberish_is_unanswered() {
        let e = Engine::toy(DEFAULT_SEED);
        assert!(!e.answer_question("Flibber wozzle quantangle?").answered());
        assert!(!e.answer_question("?!").answered());
    }

    #[test]
    fn ids_sort_numerically() {
        let mut ids = vec!["10", "2", "b", "1", "a"];
        ids.sort_by(|a, b| id_order(a, b));
        assert_eq!(ids, ["1", "2", "10", "a", "b"]);
    }
}
