//! Reasoning-guided feature discovery for tabular prediction.
//!
//! A text generator proposes candidate features as expressions in a small
//! language ([`fexpr`]). Each candidate is fitted on the training split and
//! scored by the validation gain it brings to a fixed learner ([`learners`]).
//! An epsilon-greedy bandit over reasoning styles ([`bandit`]) steers which
//! prompt ([`promptkit`]) is sent to the generator ([`llm`]), and the
//! [`engine`] ranks the ledger of all proposals to pick the final features.
//! [`diagnostics`] compares runs and probes generators.
//!
//! The guide in `book/` walks through each stage; its code blocks are
//! compiled and run as doctests of this crate.

pub mod bandit;
pub mod diagnostics;
pub mod engine;
pub mod fexpr;
pub mod learners;
pub mod ledger;
pub mod llm;
pub mod promptkit;
pub mod stats;
pub mod tabular;

// Guide chapters, so `cargo test --doc` runs their code blocks.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod guide_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/feature-language.md")]
mod guide_feature_language {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/discovery-loop.md")]
mod guide_discovery_loop {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/diagnostics.md")]
mod guide_diagnostics {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide_cli {}
