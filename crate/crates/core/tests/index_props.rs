use std::collections::BTreeSet;
use std::sync::OnceLock;

use kgqa_core::annotate::NGram;
use kgqa_core::dataset::BUNDLED_TOY_KG;
use kgqa_core::index::{IndexBundle, IndexConfig, LinkCandidate};
use kgqa_core::lexicon::SynonymLexicon;
use kgqa_core::similarity::words;
use kgqa_core::store::{parse_ntriples, Triple};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triples() -> Vec<Triple> {
    parse_ntriples(BUNDLED_TOY_KG).0
}

fn bundle() -> &'static IndexBundle {
    static BUNDLE: OnceLock<IndexBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| IndexBundle::build(triples(), &IndexConfig::default(), &SynonymLexicon::bundled()))
}

/// Words drawn from the indexed labels plus a few that match nothing.
fn vocabulary() -> Vec<String> {
    let b = bundle();
    let mut out: BTreeSet<String> = ["zebra", "quantum", "the", "of"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let labels = b
        .entities
        .iter()
        .flat_map(|e| &e.labels)
        .chain(b.relations.iter().flat_map(|r| &r.labels))
        .chain(b.classes.iter().flat_map(|c| &c.labels));
    for l in labels {
        out.extend(l.split_whitespace().map(str::to_string));
    }
    out.into_iter().collect()
}

fn ngram() -> impl Strategy<Value = NGram> {
    prop::collection::vec(prop::sample::select(vocabulary()), 1..=3).prop_map(|w| NGram {
        start: 0,
        end: w.len(),
        surface: w.join(" "),
    })
}

type Search = fn(&IndexBundle, &NGram, f64) -> Vec<LinkCandidate>;

const SEARCHES: [Search; 3] = [
    IndexBundle::search_entities,
    IndexBundle::search_relations,
    IndexBundle::search_classes,
];

proptest! {
    #[test]
    fn higher_threshold_never_adds_candidates(g in ngram(), low in 0..=100u32, step in 0..=100u32) {
        let (low, high) = (f64::from(low) / 100.0, f64::from(low + step).min(100.0) / 100.0);
        for search in SEARCHES {
            let loose: BTreeSet<String> = search(bundle(), &g, low).into_iter().map(|c| c.iri).collect();
            let strict: BTreeSet<String> = search(bundle(), &g, high).into_iter().map(|c| c.iri).collect();
            prop_assert!(strict.is_subset(&loose));
        }
    }

    #[test]
    fn matched_labels_contain_every_ngram_token(g in ngram(), t in 0..=100u32) {
        let tokens = words(&g.surface);
        for search in SEARCHES {
            for c in search(bundle(), &g, f64::from(t) / 100.0) {
                let label = words(&c.matched_label);
                prop_assert!(tokens.iter().all(|w| label.contains(w)), "{:?} vs {:?}", c.matched_label, g.surface);
                prop_assert!(c.similarity >= f64::from(t) / 100.0);
                prop_assert_eq!(&c.source, &g);
            }
        }
    }
}

#[test]
fn rebuilding_is_idempotent() {
    let again = IndexBundle::build(triples(), &IndexConfig::default(), &SynonymLexicon::bundled());
    assert_eq!(&again, bundle());
    let mut shuffled = triples();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(11));
    let reordered = IndexBundle::build(shuffled, &IndexConfig::default(), &SynonymLexicon::bundled());
    assert_eq!(reordered.entities, bundle().entities);
    assert_eq!(reordered.relations, bundle().relations);
    assert_eq!(reordered.classes, bundle().classes);
}

#[test]
fn persistence_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    bundle().save(dir.path()).unwrap();
    let loaded = IndexBundle::load(dir.path()).unwrap();
    assert_eq!(&loaded, bundle());
    let e = &bundle().entities[0].iri;
    for p in bundle().connected_relations(e).unwrap() {
        assert_eq!(
            loaded.connected_objects(e, p).unwrap(),
            bundle().connected_objects(e, p).unwrap()
        );
    }
}
