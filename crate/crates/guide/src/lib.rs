//! The chapters of `book/` as modules, so `cargo test` runs their snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/action-language.md")]
pub mod action_language {}
#[doc = include_str!("../../../book/src/workbooks.md")]
pub mod workbooks {}
#[doc = include_str!("../../../book/src/transpiling.md")]
pub mod transpiling {}
#[doc = include_str!("../../../book/src/corpus-and-prompts.md")]
pub mod corpus_and_prompts {}
#[doc = include_str!("../../../book/src/metrics-and-stats.md")]
pub mod metrics_and_stats {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/retrieval.md")]
pub mod retrieval {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
