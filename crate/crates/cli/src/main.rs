//! `kgqa`: build indexes, train template classifiers, answer questions,
//! evaluate on benchmarks and serve answers over HTTP.

mod server;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use kgqa_core::annotate::{Analyzer, LexiconTagger};
use kgqa_core::classifier::{
    build_training_set, cross_validate, train, Algorithm, ClassifierModel, DEFAULT_FOLDS, DEFAULT_MIN_SUPPORT,
};
use kgqa_core::dataset::{BenchmarkDataset, BUNDLED_TOY_KG};
use kgqa_core::index::{IndexBundle, IndexConfig, DEFAULT_THRESHOLD};
use kgqa_core::lexicon::{bundled_stopwords, load_word_list, KeywordTable, SynonymLexicon, BUNDLED_TOPICS};
use kgqa_core::pipeline::{AnswerOutcome, Backend, Engine, EngineConfig, DEFAULT_SEED, DEFAULT_TOP_K};
use kgqa_core::store::remote::RemoteEndpoint;
use kgqa_core::store::{load_ntriples, parse_ntriples, Triple, TripleStore};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "kgqa",
    version,
    about = "Template-based question answering over knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the entity, relation and class indexes from an N-Triples file.
    IndexBuild {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        index_dir: PathBuf,
        /// Tab-separated `phrase<TAB>expansion` synonym lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Learn template classes from a benchmark and train a classifier.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
        min_support: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// `nb` or `mlp`.
        #[arg(long, default_value = "nb")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Answer one question, or one question per line from stdin.
    Answer {
        question: Option<String>,
        /// Print one JSON object per question.
        #[arg(long)]
        json: bool,
        /// Print the stage diagnostics to stderr.
        #[arg(long, short)]
        verbose: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Answer every question of a benchmark and score against gold.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Serve `POST /question` and `GET /health`.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

/// Where the engine's parts come from. Anything left out falls back to the
/// bundled toy data.
#[derive(Args)]
struct EngineArgs {
    /// N-Triples knowledge graph answered from memory.
    #[arg(long, conflicts_with = "endpoint")]
    kg: Option<PathBuf>,
    /// SPARQL endpoint URL. Requires --index-dir.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    index_dir: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k_templates: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Endpoint timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Seed for the fallback model trained on the bundled toy set.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Synonym lexicon used when the index is built in memory.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Training(String),
    Artifact(String),
    Endpoint(String),
    Server(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 3,
            CliError::Training(_) => 4,
            CliError::Artifact(_) => 5,
            CliError::Endpoint(_) => 6,
            CliError::Server(_) => 7,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m)
            | CliError::Training(m)
            | CliError::Artifact(m)
            | CliError::Endpoint(m)
            | CliError::Server(m) => m,
        }
    }
}

const UNANSWERED: u8 = 1;

fn input(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// The answer payload shared by `answer --json` and the HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub question: String,
    pub answered: bool,
    pub answers: Vec<String>,
    pub sparql: Option<String>,
    pub confidence: Option<f64>,
}

impl From<&AnswerOutcome> for AnswerResponse {
    fn from(o: &AnswerOutcome) -> Self {
        Self {
            question: o.question.clone(),
            answered: o.answered(),
            answers: o.answer_strings().into_iter().collect(),
            sparql: o.sparql.clone(),
            confidence: o.confidence,
        }
    }
}

fn analyzer(stopwords: Option<&Path>) -> Result<Analyzer, CliError> {
    let words = match stopwords {
        Some(p) => load_word_list(p).map_err(|e| input(p, e))?,
        None => bundled_stopwords(),
    };
    Ok(Analyzer::new(Arc::new(LexiconTagger::bundled()), words))
}

fn lexicon(path: Option<&Path>) -> Result<SynonymLexicon, CliError> {
    match path {
        Some(p) => SynonymLexicon::load(p).map_err(|e| input(p, e)),
        None => Ok(SynonymLexicon::bundled()),
    }
}

fn read_kg(path: &Path) -> Result<Vec<Triple>, CliError> {
    let (triples, report) = load_ntriples(path).map_err(|e| input(path, e))?;
    if !report.skipped.is_empty() {
        log::warn!("{}: skipped {} malformed lines", path.display(), report.skipped.len());
    }
    Ok(triples)
}

fn load_dataset(path: &Path) -> Result<BenchmarkDataset, CliError> {
    BenchmarkDataset::load(path).map_err(|e| input(path, e))
}

fn load_engine(a: &EngineArgs) -> Result<Engine, CliError> {
    let analyzer = analyzer(a.stopwords.as_deref())?;
    let config = EngineConfig {
        top_k_templates: a.top_k_templates,
        threshold: a.threshold,
        ..EngineConfig::default()
    };
    let (backend, triples) = match (&a.endpoint, &a.kg) {
        (Some(url), _) => {
            let timeout = Duration::try_from_secs_f64(a.timeout)
                .map_err(|e| CliError::Input(format!("--timeout {}: {e}", a.timeout)))?;
            let endpoint = RemoteEndpoint::new(url.clone(), timeout).map_err(|e| CliError::Endpoint(e.to_string()))?;
            (Backend::Remote(endpoint), None)
        }
        (None, Some(path)) => {
            let triples = read_kg(path)?;
            (Backend::Local(TripleStore::new(triples.clone())), Some(triples))
        }
        (None, None) => {
            let (triples, _) = parse_ntriples(BUNDLED_TOY_KG);
            (Backend::Local(TripleStore::new(triples.clone())), Some(triples))
        }
    };
    let bundle = match (&a.index_dir, triples) {
        (Some(dir), _) => IndexBundle::load(dir).map_err(|e| CliError::Artifact(format!("{}: {e}", dir.display())))?,
        (None, Some(triples)) => IndexBundle::build(triples, &IndexConfig::default(), &lexicon(a.lexicon.as_deref())?),
        (None, None) => return Err(CliError::Input("--endpoint requires --index-dir".into())),
    };
    let model = match &a.model {
        Some(p) => ClassifierModel::load(p).map_err(|e| CliError::Artifact(format!("{}: {e}", p.display())))?,
        None => {
            let (ts, _) = build_training_set(
                &BenchmarkDataset::toy_train().training_pairs(),
                &analyzer,
                &KeywordTable::parse(BUNDLED_TOPICS),
                DEFAULT_MIN_SUPPORT,
            );
            train(&ts, Algorithm::NaiveBayes, a.seed).map_err(|e| CliError::Training(e.to_string()))?
        }
    };
    Ok(Engine::new(analyzer, bundle, model, backend, config))
}

fn index_build(kg: &Path, dir: &Path, lexicon_path: Option<&Path>) -> Result<u8, CliError> {
    let triples = read_kg(kg)?;
    let bundle = IndexBundle::build(triples, &IndexConfig::default(), &lexicon(lexicon_path)?);
    bundle
        .save(dir)
        .map_err(|e| CliError::Artifact(format!("{}: {e}", dir.display())))?;
    println!(
        "indexed {} entities, {} relations, {} classes into {}",
        bundle.entities.len(),
        bundle.relations.len(),
        bundle.classes.len(),
        dir.display()
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn train_command(
    dataset: &Path,
    model_path: &Path,
    min_support: usize,
    seed: u64,
    algorithm: Algorithm,
    folds: usize,
    stopwords: Option<&Path>,
) -> Result<u8, CliError> {
    let ds = load_dataset(dataset)?;
    let analyzer = analyzer(stopwords)?;
    let (ts, report) = build_training_set(
        &ds.training_pairs(),
        &analyzer,
        &KeywordTable::parse(BUNDLED_TOPICS),
        min_support,
    );
    println!(
        "{} training pairs: {} duplicates, {} rejected, {} classes kept, {} pruned below support {min_support}",
        ds.training_pairs().len(),
        report.duplicates.len(),
        report.rejected.len(),
        ts.retained_classes().len(),
        report.pruned.len()
    );
    let model = train(&ts, algorithm, seed).map_err(|e| CliError::Training(e.to_string()))?;
    let cv = cross_validate(&ts, folds, seed, algorithm).map_err(|e| CliError::Training(e.to_string()))?;
    println!(
        "cross-validation ({} folds, {algorithm}): macro weighted F {:.6}",
        cv.folds, cv.macro_weighted_f
    );
    model
        .save(model_path)
        .map_err(|e| CliError::Artifact(format!("{}: {e}", model_path.display())))?;
    println!("model written to {}", model_path.display());
    Ok(0)
}

fn print_outcome(out: &mut impl Write, o: &AnswerOutcome, json: bool) -> io::Result<()> {
    let response = AnswerResponse::from(o);
    if json {
        return writeln!(out, "{}", serde_json::to_string(&response).expect("serializable"));
    }
    writeln!(out, "question: {}", response.question)?;
    if !response.answered {
        return writeln!(out, "unanswered");
    }
    if let Some(sparql) = &response.sparql {
        writeln!(out, "sparql: {sparql}")?;
    }
    if let Some(c) = response.confidence {
        writeln!(out, "confidence: {c}")?;
    }
    for a in &response.answers {
        writeln!(out, "answer: {a}")?;
    }
    Ok(())
}

/// True when every candidate query failed to execute, which for a remote
/// backend means the endpoint is unusable.
fn endpoint_failed(o: &AnswerOutcome) -> bool {
    let c = &o.diagnostics.candidates;
    !c.is_empty() && c.iter().all(|t| t.error.is_some())
}

fn answer_command(question: Option<String>, json: bool, verbose: bool, a: &EngineArgs) -> Result<u8, CliError> {
    let questions: Vec<String> = match question {
        Some(q) => vec![q],
        None => io::stdin()
            .lock()
            .lines()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Input(format!("stdin: {e}")))?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect(),
    };
    if questions.is_empty() {
        return Err(CliError::Input("no question given".into()));
    }
    let engine = load_engine(a)?;
    let mut stdout = io::stdout().lock();
    let mut code = 0;
    for q in &questions {
        let outcome = engine.answer_question(q);
        if verbose {
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&outcome.diagnostics).expect("serializable")
            );
        }
        print_outcome(&mut stdout, &outcome, json).map_err(|e| CliError::Input(format!("stdout: {e}")))?;
        if !outcome.answered() {
            if a.endpoint.is_some() && endpoint_failed(&outcome) {
                let first = outcome.diagnostics.candidates[0].error.clone().unwrap_or_default();
                return Err(CliError::Endpoint(first));
            }
            code = UNANSWERED;
        }
    }
    Ok(code)
}

fn evaluate_command(dataset: &Path, report_path: Option<&Path>, json: bool, a: &EngineArgs) -> Result<u8, CliError> {
    let ds = load_dataset(dataset)?;
    let engine = load_engine(a)?;
    let report = engine.evaluate(&ds);
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if let Some(p) = report_path {
        fs::write(p, report.to_json()).map_err(|e| CliError::Artifact(format!("{}: {e}", p.display())))?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::IndexBuild { kg, index_dir, lexicon } => index_build(&kg, &index_dir, lexicon.as_deref()),
        Command::Train {
            dataset,
            model,
            min_support,
            seed,
            algorithm,
            folds,
            stopwords,
        } => train_command(
            &dataset,
            &model,
            min_support,
            seed,
            algorithm,
            folds,
            stopwords.as_deref(),
        ),
        Command::Answer {
            question,
            json,
            verbose,
            engine,
        } => answer_command(question, json, verbose, &engine),
        Command::Evaluate {
            dataset,
            report,
            json,
            engine,
        } => evaluate_command(&dataset, report.as_deref(), json, &engine),
        Command::Serve { port, host, engine } => {
            let engine = load_engine(&engine)?;
            server::run(engine, &host, port).map(|()| 0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
