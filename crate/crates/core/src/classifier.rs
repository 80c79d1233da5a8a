//! Template classification: training sets built from question/query pairs,
//! two learners behind one model type, and stratified cross-validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Analyzer;
use crate::features::{extract_features, FeatureVector};
use crate::lexicon::KeywordTable;
use crate::sparql::{canonicalize, parse_query, to_bgp_graph, QueryTemplate};

pub const DEFAULT_MIN_SUPPORT: usize = 5;
pub const DEFAULT_FOLDS: usize = 10;
pub const MODEL_FORMAT: &str = "kgqa-model";
pub const MODEL_VERSION: u32 = 1;

/// Placeholder value for nominal values never seen in training.
const OTHER: &str = "<OTHER>";
/// Floor on per-class variance of numeric features. Counts are integers,
/// so a class that never varies still tolerates neighbouring values.
const MIN_VARIANCE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("too few classes: training needs at least two retained classes, found {0}")]
    TooFewClasses(usize),
    #[error("cross-validation needs at least two folds")]
    TooFewFolds,
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("invalid model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub question: String,
    pub features: FeatureVector,
    pub class_id: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub examples: Vec<Example>,
    pub class_catalog: BTreeMap<usize, QueryTemplate>,
    pub pruned_classes: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub duplicates: Vec<String>,
    /// `(question, reason)` for pairs whose query or question was rejected.
    pub rejected: Vec<(String, String)>,
    /// `(canonical key, examples)` for every pruned class.
    pub pruned: Vec<(String, usize)>,
}

impl TrainingSet {
    pub fn retained_classes(&self) -> Vec<usize> {
        self.class_catalog
            .keys()
            .copied()
            .filter(|c| !self.pruned_classes.contains(c))
            .collect()
    }

    pub fn support(&self) -> BTreeMap<usize, usize> {
        let mut s = BTreeMap::new();
        for e in &self.examples {
            *s.entry(e.class_id).or_insert(0) += 1;
        }
        s
    }
}

fn question_key(q: &str) -> String {
    q.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Canonicalizes every query, groups pairs by canonical key and drops
/// duplicates, unparsable entries and classes under `min_support`.
///
/// Class ids are positions in the sorted list of canonical keys, so they do
/// not depend on the order of `pairs`.
pub fn build_training_set(
    pairs: &[(String, String)],
    analyzer: &Analyzer,
    topics: &KeywordTable,
    min_support: usize,
) -> (TrainingSet, BuildReport) {
    let mut report = BuildReport::default();
    let mut seen = BTreeSet::new();
    let mut accepted: Vec<(String, FeatureVector, QueryTemplate)> = Vec::new();
    for (question, sparql) in pairs {
        if !seen.insert(question_key(question)) {
            log::info!("dropping duplicate question {question:?}");
            report.duplicates.push(question.clone());
            continue;
        }
        let template = parse_query(sparql)
            .map_err(|e| e.to_string())
            .and_then(|q| to_bgp_graph(&q).map_err(|e| e.to_string()))
            .and_then(|g| canonicalize(&g).map_err(|e| e.to_string()));
        let template = match template {
            Ok(t) => t,
            Err(reason) => {
                log::warn!("dropping {question:?}: {reason}");
                report.rejected.push((question.clone(), reason));
                continue;
            }
        };
        let annotated = match analyzer.annotate(question) {
            Ok(a) => a,
            Err(e) => {
                report.rejected.push((question.clone(), e.to_string()));
                continue;
            }
        };
        accepted.push((question.clone(), extract_features(&annotated, topics), template));
    }

    let mut by_key: BTreeMap<String, QueryTemplate> = BTreeMap::new();
    for (_, _, t) in &accepted {
        by_key.entry(t.canonical_key.clone()).or_insert_with(|| t.clone());
    }
    let ids: HashMap<String, usize> = by_key.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    let mut ts = TrainingSet::default();
    for (key, t) in by_key {
        let id = ids[&key];
        ts.class_catalog.insert(id, t.with_class(id));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, _, t) in &accepted {
        *counts.entry(ids[&t.canonical_key]).or_insert(0) += 1;
    }
    for (&id, &n) in &counts {
        if n < min_support {
            ts.pruned_classes.insert(id);
            report.pruned.push((ts.class_catalog[&id].canonical_key.clone(), n));
        }
    }
    ts.examples = accepted
        .into_iter()
        .map(|(question, features, t)| Example {
            question,
            features,
            class_id: ids[&t.canonical_key],
        })
        .filter(|e| !ts.pruned_classes.contains(&e.class_id))
        .collect();
    (ts, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    NaiveBayes,
    Mlp,
}

impl FromStr for Algorithm {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nb" | "naive-bayes" | "naivebayes" => Ok(Algorithm::NaiveBayes),
            "mlp" | "perceptron" => Ok(Algorithm::Mlp),
            _ => Err(ClassifierError::UnknownAlgorithm(s.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::NaiveBayes => "naive-bayes",
            Algorithm::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate_milli: u32,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 200,
            learning_rate_milli: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub class_id: usize,
    pub canonical_key: String,
    pub support: usize,
}

/// Per-feature nominal vocabularies. Index 0 of every vocabulary is the
/// OTHER bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Vocab {
    values: Vec<Vec<String>>,
}

impl Vocab {
    fn fit(examples: &[&Example]) -> Self {
        let mut sets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); FeatureVector::NOMINAL.len()];
        for e in examples {
            for (set, v) in sets.iter_mut().zip(e.features.nominal()) {
                set.insert(v);
            }
        }
        Self {
            values: sets
                .into_iter()
                .map(|s| std::iter::once(OTHER.to_string()).chain(s).collect())
                .collect(),
        }
    }

    fn encode(&self, v: &FeatureVector) -> Vec<usize> {
        self.values
            .iter()
            .zip(v.nominal())
            .map(|(vals, x)| vals[1..].binary_search(&x).map(|i| i + 1).unwrap_or(0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NbParams {
    vocab: Vocab,
    log_prior: Vec<f64>,
    /// `[class][feature][value]` log likelihoods.
    log_nominal: Vec<Vec<Vec<f64>>>,
    /// `[class][feature]` mean and variance.
    gaussian: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MlpParams {
    vocab: Vocab,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `[hidden][input + 1]`, bias last.
    w1: Vec<Vec<f64>>,
    /// `[class][hidden + 1]`, bias last.
    w2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Params {
    NaiveBayes(NbParams),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Retained classes in the model's output order.
    pub classes: Vec<ClassInfo>,
    params: Params,
}

fn fit_nb(examples: &[&Example], classes: &[ClassInfo]) -> NbParams {
    let vocab = Vocab::fit(examples);
    let pos: HashMap<usize, usize> = classes.iter().enumerate().map(|(i, c)| (c.class_id, i)).collect();
    let n = examples.len() as f64;
    let k = classes.len() as f64;
    let log_prior = classes
        .iter()
        .map(|c| ((c.support as f64 + 1.0) / (n + k)).ln())
        .collect();
    let mut counts: Vec<Vec<Vec<f64>>> = classes
        .iter()
        .map(|_| vocab.values.iter().map(|v| vec![0.0; v.len()]).collect())
        .collect();
    let mut sums = vec![vec![(0.0f64, 0.0f64); FeatureVector::NUMERIC.len()]; classes.len()];
    for e in examples {
        let c = pos[&e.class_id];
        for (f, v) in vocab.encode(&e.features).into_iter().enumerate() {
            counts[c][f][v] += 1.0;
        }
        for (f, x) in e.features.numeric().into_iter().enumerate() {
            sums[c][f].0 += x;
            sums[c][f].1 += x * x;
        }
    }
    let log_nominal = counts
        .into_iter()
        .enumerate()
        .map(|(c, per_feature)| {
            let total = classes[c].support as f64;
            per_feature
                .into_iter()
                .map(|vals| {
                    let width = vals.len() as f64;
                    vals.into_iter().map(|x| ((x + 1.0) / (total + width)).ln()).collect()
                })
                .collect()
        })
        .collect();
    let gaussian = sums
        .into_iter()
        .enumerate()
        .map(|(c, per_feature)| {
            let m = classes[c].support.max(1) as f64;
            per_feature
                .into_iter()
                .map(|(s, sq)| {
                    let mean = s / m;
                    let var = (sq / m - mean * mean).max(MIN_VARIANCE);
                    (mean, var)
                })
                .collect()
        })
        .collect();
    NbParams {
        vocab,
        log_prior,
        log_nominal,
        gaussian,
    }
}

fn nb_scores(p: &NbParams, v: &FeatureVector) -> Vec<f64> {
    let nominal = p.vocab.encode(v);
    let numeric = v.numeric();
    (0..p.log_prior.len())
        .map(|c| {
            let mut s = p.log_prior[c];
            for (f, &idx) in nominal.iter().enumerate() {
                s += p.log_nominal[c][f][idx];
            }
            for (f, &x) in numeric.iter().enumerate() {
                let (mean, var) = p.gaussian[c][f];
                s += -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var);
            }
            s
        })
        .collect()
}

fn mlp_input(p: &MlpParams, v: &FeatureVector) -> Vec<f64> {
    let mut x = Vec::new();
    for (vals, idx) in p.vocab.values.iter().zip(p.vocab.encode(v)) {
        let mut one_hot = vec![0.0; vals.len()];
        one_hot[idx] = 1.0;
        x.extend(one_hot);
    }
    for (f, raw) in v.numeric().into_iter().enumerate() {
        x.push((raw - p.mean[f]) / p.scale[f]);
    }
    x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn affine(w: &[f64], x: &[f64]) -> f64 {
    let (bias, weights) = w.split_last().expect("bias");
    weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias
}

fn mlp_forward(p: &MlpParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hidden: Vec<f64> = p.w1.iter().map(|w| sigmoid(affine(w, x))).collect();
    let logits = p.w2.iter().map(|w| affine(w, &hidden)).collect();
    (hidden, logits)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn fit_mlp(examples: &[&Example], classes: &[ClassInfo], config: MlpConfig, rng: &mut ChaCha8Rng) -> MlpParams {
    let vocab = Vocab::fit(examples);
    let dims = FeatureVector::NUMERIC.len();
    let n = examples.len().max(1) as f64;
    let mut mean = vec![0.0; dims];
    let mut scale = vec![0.0; dims];
    for e in examples {
        for (f, x) in e.features.numeric().into_iter().enumerate() {
            mean[f] += x / n;
        }
    }
    for e in examples {
        for (f, x) in e.features.numeric().into_iter().enumerate() {
            scale[f] += (x - mean[f]).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let inputs = vocab.values.iter().map(Vec::len).sum::<usize>() + dims;
    let init = |fan_in: usize, rng: &mut ChaCha8Rng| {
        let r = 1.0 / (fan_in as f64).sqrt();
        (0..=fan_in).map(|_| rng.gen_range(-r..r)).collect::<Vec<f64>>()
    };
    let mut p = MlpParams {
        vocab,
        mean,
        scale,
        w1: (0..config.hidden).map(|_| init(inputs, rng)).collect(),
        w2: (0..classes.len()).map(|_| init(config.hidden, rng)).collect(),
    };
    let pos: HashMap<usize, usize> = classes.iter().enumerate().map(|(i, c)| (c.class_id, i)).collect();
    let data: Vec<(Vec<f64>, usize)> = examples
        .iter()
        .map(|e| (mlp_input(&p, &e.features), pos[&e.class_id]))
        .collect();
    let lr = f64::from(config.learning_rate_milli) / 1000.0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &i in &order {
            let (x, y) = &data[i];
            let (hidden, logits) = mlp_forward(&p, x);
            let probs = softmax(&logits);
            let delta_out: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(c, pr)| pr - if c == *y { 1.0 } else { 0.0 })
                .collect();
            let delta_hidden: Vec<f64> = (0..hidden.len())
                .map(|h| {
                    let back: f64 = delta_out.iter().zip(&p.w2).map(|(d, w)| d * w[h]).sum();
                    back * hidden[h] * (1.0 - hidden[h])
                })
                .collect();
            for (w, d) in p.w2.iter_mut().zip(&delta_out) {
                for (wi, h) in w.iter_mut().zip(hidden.iter().chain(std::iter::once(&1.0))) {
                    *wi -= lr * d * h;
                }
            }
            for (w, d) in p.w1.iter_mut().zip(&delta_hidden) {
                for (wi, xi) in w.iter_mut().zip(x.iter().chain(std::iter::once(&1.0))) {
                    *wi -= lr * d * xi;
                }
            }
        }
    }
    p
}

fn class_infos(examples: &[&Example], catalog: &BTreeMap<usize, QueryTemplate>) -> Vec<ClassInfo> {
    let mut support: BTreeMap<usize, usize> = BTreeMap::new();
    for e in examples {
        *support.entry(e.class_id).or_insert(0) += 1;
    }
    support
        .into_iter()
        .map(|(class_id, support)| ClassInfo {
            class_id,
            canonical_key: catalog
                .get(&class_id)
                .map(|t| t.canonical_key.clone())
                .unwrap_or_default(),
            support,
        })
        .collect()
}

fn fit(
    examples: &[&Example],
    catalog: &BTreeMap<usize, QueryTemplate>,
    algorithm: Algorithm,
    seed: u64,
    mlp: MlpConfig,
) -> Result<ClassifierModel, ClassifierError> {
    let classes = class_infos(examples, catalog);
    if classes.len() < 2 {
        return Err(ClassifierError::TooFewClasses(classes.len()));
    }
    let params = match algorithm {
        Algorithm::NaiveBayes => Params::NaiveBayes(fit_nb(examples, &classes)),
        Algorithm::Mlp => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Params::Mlp(fit_mlp(examples, &classes, mlp, &mut rng))
        }
    };
    Ok(ClassifierModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        algorithm,
        seed,
        classes,
        params,
    })
}

/// Trains on the retained classes of `ts`.
pub fn train(ts: &TrainingSet, algorithm: Algorithm, seed: u64) -> Result<ClassifierModel, ClassifierError> {
    train_with(ts, algorithm, seed, MlpConfig::default())
}

pub fn train_with(
    ts: &TrainingSet,
    algorithm: Algorithm,
    seed: u64,
    mlp: MlpConfig,
) -> Result<ClassifierModel, ClassifierError> {
    let examples: Vec<&Example> = ts
        .examples
        .iter()
        .filter(|e| !ts.pruned_classes.contains(&e.class_id))
        .collect();
    fit(&examples, &ts.class_catalog, algorithm, seed, mlp)
}

impl ClassifierModel {
    /// Every retained class once, best first. Scores are posterior
    /// probabilities; ties go to the larger class, then the smaller id.
    pub fn predict_ranked(&self, v: &FeatureVector) -> Vec<(usize, f64)> {
        let raw = match &self.params {
            Params::NaiveBayes(p) => nb_scores(p, v),
            Params::Mlp(p) => mlp_forward(p, &mlp_input(p, v)).1,
        };
        let probs = softmax(&raw);
        let mut ranked: Vec<(usize, f64, usize)> = self
            .classes
            .iter()
            .zip(probs)
            .map(|(c, p)| (c.class_id, p, c.support))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
        ranked.into_iter().map(|(c, p, _)| (c, p)).collect()
    }

    pub fn predict(&self, v: &FeatureVector) -> usize {
        self.predict_ranked(v)[0].0
    }

    pub fn template(&self, class_id: usize) -> Option<QueryTemplate> {
        let info = self.classes.iter().find(|c| c.class_id == class_id)?;
        QueryTemplate::from_key(&info.canonical_key)
            .ok()
            .map(|t| t.with_class(class_id))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let m: Self = serde_json::from_str(text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(ClassifierError::Format(format!(
                "unsupported model {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Assigns each example to a fold. Examples of one class are shuffled and
/// dealt round-robin, continuing the dealing position across classes so
/// fold sizes stay balanced.
pub fn stratified_folds(ts: &TrainingSet, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in ts.examples.iter().enumerate() {
        by_class.entry(e.class_id).or_default().push(i);
    }
    let mut assignment = vec![0; ts.examples.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Weighted F1 of one test fold: per-class F1 weighted by the class's share
/// of the fold.
pub fn weighted_f1(gold: &[usize], predicted: &[usize]) -> f64 {
    let mut classes: BTreeSet<usize> = gold.iter().copied().collect();
    classes.extend(predicted.iter().copied());
    let total = gold.len() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let mut score = 0.0;
    for c in classes {
        let tp = gold.iter().zip(predicted).filter(|(g, p)| **g == c && **p == c).count() as f64;
        let support = gold.iter().filter(|g| **g == c).count() as f64;
        let predicted_c = predicted.iter().filter(|p| **p == c).count() as f64;
        if support == 0.0 {
            continue;
        }
        let precision = if predicted_c > 0.0 { tp / predicted_c } else { 0.0 };
        let recall = tp / support;
        let f = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        score += f * support / total;
    }
    score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub algorithm: Algorithm,
    pub folds: usize,
    pub fold_scores: Vec<f64>,
    /// Mean of the per-fold weighted F1 scores.
    pub macro_weighted_f: f64,
}

pub fn cross_validate(
    ts: &TrainingSet,
    folds: usize,
    seed: u64,
    algorithm: Algorithm,
) -> Result<CvReport, ClassifierError> {
    if folds < 2 {
        return Err(ClassifierError::TooFewFolds);
    }
    let assignment = stratified_folds(ts, folds, seed);
    let mut fold_scores = Vec::with_capacity(folds);
    for k in 0..folds {
        let train: Vec<&Example> = ts
            .examples
            .iter()
            .zip(&assignment)
            .filter(|(_, f)| **f != k)
            .map(|(e, _)| e)
            .collect();
        let test: Vec<&Example> = ts
            .examples
            .iter()
            .zip(&assignment)
            .filter(|(_, f)| **f == k)
            .map(|(e, _)| e)
            .collect();
        if test.is_empty() {
            continue;
        }
        let model = fit(
            &train,
            &ts.class_catalog,
            algorithm,
            seed.wrapping_add(k as u64),
            MlpConfig::default(),
        )?;
        let gold: Vec<usize> = test.iter().map(|e| e.class_id).collect();
        let predicted: Vec<usize> = test.iter().map(|e| model.predict(&e.features)).collect();
        fold_scores.push(weighted_f1(&gold, &predicted));
    }
    let macro_weighted_f = if fold_scores.is_empty() {
        0.0
    } else {
        fold_scores.iter().sum::<f64>() / fold_scores.len() as f64
    };
    Ok(CvReport {
        algorithm,
        folds,
        fold_scores,
        macro_weighted_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(qw: &str, tokens: usize, verb: usize) -> FeatureVector {
        FeatureVector {
            question_word: qw.to_string(),
            entity_person: false,
            number_of_token: tokens,
            query_resource_type: "NONE".to_string(),
            noun: 1,
            number: 0,
            verb,
            adjective: 0,
            comparative: false,
            triple_candidates: 1,
        }
    }

    fn fixture(per_class: usize) -> TrainingSet {
        let keys = ["bgp1|AE|1>0", "bgp1|AE|0>1", "bgp1|AOE|1>0,2>1"];
        let mut ts = TrainingSet::default();
        for (c, key) in keys.iter().enumerate() {
            ts.class_catalog
                .insert(c, QueryTemplate::from_key(key).unwrap().with_class(c));
            for i in 0..per_class {
                ts.examples.push(Example {
                    question: format!("q{c}-{i}"),
                    features: fv(["Who", "Where", "When"][c], 5 + c * 3 + i % 2, c),
                    class_id: c,
                });
            }
        }
        ts
    }

    #[test]
    fn f1_arithmetic() {
        assert_eq!(weighted_f1(&[0, 0, 1, 1], &[0, 0, 1, 1]), 1.0);
        // class 0: p=1/2 r=1/2, class 1: p=1/2 r=1/2
        assert_eq!(weighted_f1(&[0, 0, 1, 1], &[0, 1, 0, 1]), 0.5);
        assert_eq!(weighted_f1(&[0, 0, 0, 1], &[1, 1, 1, 1]), 0.25 * (2.0 * 0.25 / 1.25));
    }

    #[test]
    fn too_few_classes() {
        let mut ts = fixture(6);
        ts.examples.retain(|e| e.class_id == 0);
        assert!(matches!(
            train(&ts, Algorithm::NaiveBayes, 1),
            Err(ClassifierError::TooFewClasses(1))
        ));
    }

    #[test]
    fn both_algorithms_separate_the_fixture() {
        let ts = fixture(8);
        for algo in [Algorithm::NaiveBayes, Algorithm::Mlp] {
            let m = train(&ts, algo, 7).unwrap();
            for e in &ts.examples {
                assert_eq!(m.predict(&e.features), e.class_id, "{algo}");
            }
            let cv = cross_validate(&ts, 4, 7, algo).unwrap();
            assert!(cv.macro_weighted_f >= 0.95, "{algo}: {cv:?}");
        }
    }

    #[test]
    fn ranking_is_a_permutation_with_tie_breaks() {
        let ts = fixture(5);
        let m = train(&ts, Algorithm::NaiveBayes, 0).unwrap();
        let ranked = m.predict_ranked(&fv("Zzz", 100, 9));
        let mut ids: Vec<usize> = ranked.iter().map(|r| r.0).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2]);
        assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn unseen_nominal_goes_to_other() {
        let ts = fixture(5);
        let m = train(&ts, Algorithm::Mlp, 0).unwrap();
        assert_eq!(m.predict_ranked(&fv("Whence", 6, 0)).len(), 3);
    }

    #[test]
    fn serialization_is_deterministic() {
        let ts = fixture(6);
        for algo in [Algorithm::NaiveBayes, Algorithm::Mlp] {
            let a = train(&ts, algo, 42).unwrap().to_json();
            let b = train(&ts, algo, 42).unwrap().to_json();
            assert_eq!(a, b);
            let back = ClassifierModel::from_json(&a).unwrap();
            assert_eq!(back.to_json(), a);
        }
    }

    #[test]
    fn folds_partition_and_stratify() {
        let ts = fixture(10);
        let a = stratified_folds(&ts, 10, 3);
        assert_eq!(a.len(), 30);
        for k in 0..10 {
            assert_eq!(a.iter().filter(|f| **f == k).count(), 3);
        }
    }

    #[test]
    fn pruning_and_duplicates() {
        let analyzer = Analyzer::default();
        let topics = KeywordTable::parse(crate::lexicon::BUNDLED_TOPICS);
        let mut pairs: Vec<(String, String)> = (0..5)
            .map(|i| {
                (
                    format!("Who is the mayor of City{i}?"),
                    format!("SELECT ?uri WHERE {{ <http://x/City{i}> <http://x/mayor> ?uri }}"),
                )
            })
            .collect();
        pairs.extend((0..4).map(|i| {
            (
                format!("Which river flows through Town{i}?"),
                format!("SELECT ?uri WHERE {{ ?uri <http://x/flows> <http://x/Town{i}> }}"),
            )
        }));
        pairs.push((
            "who is the mayor of  city0?".into(),
            "SELECT ?uri WHERE { <http://x/a> <http://x/b> ?uri }".into(),
        ));
        pairs.push(("Broken?".into(), "SELECT WHERE {".into()));
        let (ts, report) = build_training_set(&pairs, &analyzer, &topics, DEFAULT_MIN_SUPPORT);
        assert_eq!(report.duplicates.len(), 1);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.pruned, vec![("bgp1|AE|0>1".to_string(), 4)]);
        assert_eq!(ts.retained_classes().len(), 1);
        assert_eq!(ts.examples.len(), 5);
        let (ts4, _) = build_training_set(&pairs, &analyzer, &topics, 4);
        assert_eq!(ts4.retained_classes().len(), 2);
    }
}
