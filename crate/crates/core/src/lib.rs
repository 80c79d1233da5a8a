//! Template-based question answering over RDF knowledge graphs.
//!
//! A question is tagged, classified into a ranked list of query templates,
//! linked to knowledge-graph resources, turned into candidate SPARQL queries,
//! executed, filtered by expected answer type and rated.

pub mod annotate;
pub mod builder;
pub mod classifier;
pub mod dataset;
pub mod features;
pub mod index;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod ranking;
pub mod similarity;
pub mod sparql;
pub mod store;
