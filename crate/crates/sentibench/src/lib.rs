//! Sentibench: a toolkit for running and evaluating LLM-based sentiment
//! classification strategies over tweet corpora.
//!
//! Three strategies are provided, mirroring a common experimental setup:
//!
//! * **Prompt** — chat-completion classification with a fixed instruction
//!   prompt and best-of-3 majority voting ([`gateway`]).
//! * **Finetuned** — evaluation of a fine-tuned completion model under a
//!   strict 3-class output restriction ([`finetune`]).
//! * **Embedding** — text embeddings reduced with PCA and classified by
//!   native tree ensembles ([`embedding`]).
//!
//! Supporting infrastructure: a SemEval-style corpus loader ([`corpus`]),
//! an evaluation metrics engine with baseline comparison tables
//! ([`metrics`]), a linguistic-nuance tagging suite ([`nuance`]), and a
//! command-line front end ([`cli`]).
//!
//! Everything runs offline against a deterministic mock backend (base URL
//! scheme `mock://`), so the full pipeline is testable without network
//! access or API keys.

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod finetune;
pub mod gateway;
pub mod metrics;
pub mod nuance;
