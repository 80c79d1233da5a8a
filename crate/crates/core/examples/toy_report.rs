//! Evaluates the bundled toy engine on the bundled test questions.
//! Pass `-v` to also dump each question's diagnostics.

use kgqa_core::dataset::BenchmarkDataset;
use kgqa_core::pipeline::{Engine, DEFAULT_SEED};

fn main() {
    let engine = Engine::toy(DEFAULT_SEED);
    let ds = BenchmarkDataset::toy_test();
    print!("{}", engine.evaluate(&ds).to_text());
    if std::env::args().any(|a| a == "-v") {
        for q in ds.questions {
            let out = engine.answer_question(&q.text);
            let diagnostics = serde_json::to_string_pretty(&out.diagnostics).unwrap_or_default();
            println!("== {}\n{diagnostics}", q.text);
        }
    }
}
