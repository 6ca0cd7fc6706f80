//! Verifiable reasoning-graph instructions.
//!
//! `ergkit` builds constraint-type instructions whose true parameters are
//! hidden behind small reasoning graphs (knowledge lookups, arithmetic,
//! conditional checks), verifies candidate responses deterministically, and
//! computes the associated reward and metric stack for RL-style training
//! loops.
//!
//! The main pieces, in pipeline order:
//!
//! - [`banks`] — preset node banks (knowledge facts, condition kinds,
//!   arithmetic operations, measurable dimensions) with seeded sampling.
//! - [`graph`] — the reasoning-graph data model: DAG validation, evaluation
//!   into concrete predicate parameters, and mermaid edge-list round-trips.
//! - [`analysis`] — deterministic structural measurement of response text
//!   (paragraphs, sentences, punctuation, bold spans, list blocks, ...).
//! - [`verifier`] — compiles evaluated constraints into executable predicates
//!   over measurements and produces per-constraint verification reports.
//! - [`synthesis`] — assembles constraints into single-turn instructions and
//!   multi-turn dialogues, injects adversarial final turns, and expands
//!   graphs into chain-of-thought traces.
//! - [`scoring`] — the reward formulas (constraint / rubric / multi-turn /
//!   thinking / partial / total), CSR/ISR metrics, and group-relative
//!   advantage and clipped-surrogate math as pure numerics.
//! - [`gateway`] — chat-completion access in live, mock, and record/replay
//!   modes, with request digests for cassette storage.
//! - [`storage`] — line-delimited dataset, bank, and cassette files.
//! - [`config`] — layered configuration (flags > environment > file >
//!   defaults).
//! - [`cli`] — the `ergkit` command-line entry points.
//!
//! Every operation that does not talk to a gateway is a pure function of its
//! inputs; everything seeded is bitwise reproducible across runs and
//! platforms. See the crate examples for one runnable program per major
//! capability.

pub mod analysis;
pub mod banks;
pub mod cli;
pub mod config;
pub mod gateway;
pub mod graph;
pub mod numeric;
pub mod samples;
pub mod scoring;
pub mod storage;
pub mod synthesis;
pub mod verifier;

/// Version of the measurement rule set used by [`analysis`] and exported in
/// verifier-spec documents. Bumped whenever a counting or segmentation rule
/// changes meaning.
pub const RULES_VERSION: u32 = 1;

/// Version of the built-in prompt and rendering templates.
pub const TEMPLATE_VERSION: u32 = 1;
