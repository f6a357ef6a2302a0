//! Corpus auditing toolkit that surfaces implicit gender bias associated with
//! a story's protagonist.
//!
//! The pipeline runs in stages:
//!
//! 1. [`corpus`] loads and tokenizes story collections.
//! 2. [`protagonist`] finds each story's protagonist from coreference
//!    clusters, resolves a conceptual gender from pronouns, anonymizes
//!    character mentions, and assigns per-sentence agent roles.
//! 3. [`inference`] maps five social axes onto commonsense dimensions and
//!    collects inference phrases from a pluggable backend, with caching.
//! 4. [`lexicons`] serves word embeddings, stereotype word lists, a
//!    valence/arousal lexicon, and wildcard category dictionaries.
//! 5. [`metrics`] scores inferences against lexicons and semantic axes,
//!    aggregates pooled z-score medians per gender, fits per-category
//!    logistic GLMs over motivations, and runs gender-leakage probes.
//!
//! Interchangeable coreference, inference, and classifier strategies live in
//! [`backends`], registered by name and selected at runtime.

pub mod backends;
pub mod corpus;
pub mod inference;
pub mod lexicons;
pub mod metrics;
pub mod protagonist;

mod util;

pub use util::sha256_hex;
