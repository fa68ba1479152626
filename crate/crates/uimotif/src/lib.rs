//! Deterministic compiler pipeline from hierarchical UI blueprints to
//! modular, multi-framework frontend code bundles.
//!
//! The pipeline has three stages plus an evaluation suite:
//!
//! 1. [`ingest`] reconstructs a hierarchical tree from a flat list of typed
//!    bounding boxes by recursive axis-projection grouping.
//! 2. [`mine`] discovers repeated subtree motifs by bottom-up structural
//!    hashing, merges near-duplicates under a normalized edit-distance
//!    threshold, and packs a non-overlapping set of template instances into a
//!    [`model::Blueprint`].
//! 3. [`emit`] lowers a blueprint to HTML, React, Vue, or Angular sources
//!    through a constraint engine that masks every emission event for
//!    syntactic, binding, and type admissibility.
//!
//! [`metrics`] provides the structural evaluation: exact tree edit distance,
//! component reuse rate, loop preservation accuracy, prop coverage, and an
//! HTML round-trip parser. [`pipeline`] glues the stages together behind
//! reproducible run manifests; [`demo`] builds deterministic showcase
//! documents and the synthetic evaluation corpus.
//!
//! Every stage is a pure function of its inputs: equal inputs and
//! configuration produce byte-identical artifacts across runs and platforms.

pub mod demo;
pub mod emit;
pub mod ingest;
pub mod metrics;
pub mod mine;
pub mod model;
pub mod pipeline;
