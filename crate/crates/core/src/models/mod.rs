//! Language-model abstraction and desk-scale implementations.

mod conditioned;
mod ngram;

use std::sync::Arc;

pub use conditioned::{MultimodalTargetLm, PromptConditioned, TextOnlyDraftLm};
pub use ngram::{train_ngram, NgramLm, NGRAM_FORMAT};

use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::token::{TokenId, Vocab};

/// Next-token distributions over a fixed vocabulary.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> Vocab;

    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist;

    /// Distributions after `prefix ++ block[..j]` for every `j` in `0..=block.len()`.
    ///
    /// Implementations may share work across positions but must agree with
    /// `next_dist` at every position.
    fn score_positions(&self, prefix: &[TokenId], block: &[TokenId]) -> Vec<ProbDist> {
        let mut ctx = Vec::with_capacity(prefix.len() + block.len());
        ctx.extend_from_slice(prefix);
        let mut out = Vec::with_capacity(block.len() + 1);
        out.push(self.next_dist(&ctx));
        for &t in block {
            ctx.push(t);
            out.push(self.next_dist(&ctx));
        }
        out
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocab(&self) -> Vocab {
        (**self).vocab()
    }
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        (**self).next_dist(prefix)
    }
    fn score_positions(&self, prefix: &[TokenId], block: &[TokenId]) -> Vec<ProbDist> {
        (**self).score_positions(prefix, block)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for Arc<M> {
    fn vocab(&self) -> Vocab {
        (**self).vocab()
    }
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        (**self).next_dist(prefix)
    }
    fn score_positions(&self, prefix: &[TokenId], block: &[TokenId]) -> Vec<ProbDist> {
        (**self).score_positions(prefix, block)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for Box<M> {
    fn vocab(&self) -> Vocab {
        (**self).vocab()
    }
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        (**self).next_dist(prefix)
    }
    fn score_positions(&self, prefix: &[TokenId], block: &[TokenId]) -> Vec<ProbDist> {
        (**self).score_positions(prefix, block)
    }
}

/// Counts model runs. One `score_block` call is one run, whatever the block length.
///
/// A scorer is owned by a single generation; share the underlying model, not the scorer.
pub struct BlockScorer<'a> {
    model: &'a dyn LanguageModel,
    max_block: usize,
    calls: u64,
}

impl<'a> BlockScorer<'a> {
    pub fn new(model: &'a dyn LanguageModel, max_block: usize) -> Self {
        BlockScorer { model, max_block, calls: 0 }
    }

    pub fn score_block(&mut self, prefix: &[TokenId], block: &[TokenId]) -> Result<Vec<ProbDist>> {
        if block.len() > self.max_block {
            return Err(Error::BlockTooLong { len: block.len(), max: self.max_block });
        }
        self.calls += 1;
        Ok(self.model.score_positions(prefix, block))
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn max_block(&self) -> usize {
        self.max_block
    }
}
