//! Data augmentation toolkit for code-switched task-oriented semantic parsing.
//!
//! The pipeline converts an English corpus with hierarchical intent/slot
//! parses into span-marked generation inputs, routes them through a
//! pluggable code-switch generation backend, filters structurally broken
//! outputs, and projects the English parses onto the surviving
//! code-switched utterances. Alongside the augmented corpus it produces
//! throughput, corpus-statistics, and exact-match evaluation reports.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`top`] — the bracketed intent/slot tree model: parser, serializer,
//!   exact-match comparison, node spans.
//! - [`marker`] — span-ID marking of utterances and seed-pair export.
//! - [`genclient`] — HTTP / replay / mock generation backends.
//! - [`filter`] — syntactic validation of generated marked text.
//! - [`aligner`] — parse reconstruction over validated marked text.
//! - [`stats`] — lexicon-based corpus statistics.
//! - [`corpus`] — TSV ingestion and emission.
//! - [`eval`] — exact-match evaluation with per-domain breakdown.
//! - [`splits`] — nested stratified seed-set sampling.
//! - [`pipeline`] — end-to-end augmentation orchestration.
//! - [`synth`] — random corpus generation for tests and benchmarks.

pub mod aligner;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod filter;
pub mod genclient;
pub mod marker;
pub mod pipeline;
pub mod report;
pub mod sample;
pub mod splits;
pub mod stats;
pub mod synth;
pub mod top;
