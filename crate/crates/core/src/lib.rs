//! Speculative decoding for a multimodal target and a text-only draft.
//!
//! The draft proposes blocks of tokens from the text alone; the target, which
//! also conditions on an image-context segment, verifies each block in a
//! single run. Verification is lossless: greedy mode reproduces the target's
//! greedy output token for token, and stochastic mode reproduces the target's
//! sampling distribution exactly.

pub mod dist;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod prompt;
pub mod rng;
pub mod token;

pub use dist::ProbDist;
pub use engine::{autoregressive_generate, spd_generate, BlockTrace, DecodeMode, DraftBlock, SpdConfig, VerifyOutcome};
pub use error::{Error, Result};
pub use metrics::CostModel;
pub use models::{LanguageModel, MultimodalTargetLm, NgramLm, PromptConditioned, TextOnlyDraftLm};
pub use prompt::MultimodalPrompt;
pub use rng::{RngState, SpdStreams, Stream};
pub use token::{TokenId, Vocab};
