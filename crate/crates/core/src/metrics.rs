//! Per-question precision, recall and F, and their macro averages.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Scores one answer set against gold. Both empty counts as a perfect
/// answer; any other empty side scores zero on the measure it divides.
pub fn prf(system: &BTreeSet<String>, gold: &BTreeSet<String>) -> Prf {
    if system.is_empty() && gold.is_empty() {
        return Prf {
            precision: 1.0,
            recall: 1.0,
            f: 1.0,
        };
    }
    let hit = system.intersection(gold).count() as f64;
    let precision = if system.is_empty() {
        0.0
    } else {
        hit / system.len() as f64
    };
    let recall = if gold.is_empty() { 0.0 } else { hit / gold.len() as f64 };
    Prf {
        precision,
        recall,
        f: harmonic(precision, recall),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// F computed from macro precision and macro recall.
    pub qald_f: f64,
}

/// Arithmetic means over questions, summed in the given order. Callers
/// pass scores in a fixed order so results do not depend on input order.
pub fn macro_scores(scores: &[Prf]) -> MacroScores {
    if scores.is_empty() {
        return MacroScores {
            precision: 0.0,
            recall: 0.0,
            f: 0.0,
            qald_f: 0.0,
        };
    }
    let n = scores.len() as f64;
    let precision = scores.iter().map(|s| s.precision).sum::<f64>() / n;
    let recall = scores.iter().map(|s| s.recall).sum::<f64>() / n;
    let f = scores.iter().map(|s| s.f).sum::<f64>() / n;
    MacroScores {
        precision,
        recall,
        f,
        qald_f: harmonic(precision, recall),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overlap() {
        let s = prf(&set(&["a", "b"]), &set(&["b", "c"]));
        assert_eq!((s.precision, s.recall, s.f), (0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_cases() {
        assert_eq!(prf(&set(&[]), &set(&[])).f, 1.0);
        let unanswered = prf(&set(&[]), &set(&["a"]));
        assert_eq!((unanswered.precision, unanswered.recall, unanswered.f), (0.0, 0.0, 0.0));
        let spurious = prf(&set(&["a"]), &set(&[]));
        assert_eq!((spurious.precision, spurious.recall, spurious.f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn averages() {
        let m = macro_scores(&[prf(&set(&["a"]), &set(&["a"])), prf(&set(&[]), &set(&["a"]))]);
        assert_eq!(m.f, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.qald_f, 0.5);
        assert_eq!(macro_scores(&[]).f, 0.0);
    }
}
