use super::{verify_greedy, verify_stochastic, BlockRecord, BlockTrace, DecodeMode, DraftBlock, SpdConfig};
use crate::error::{Error, Result};
use crate::models::{BlockScorer, PromptConditioned};
use crate::prompt::MultimodalPrompt;
use crate::rng::{RngState, SpdStreams};
use crate::token::TokenId;

#[derive(Clone, Debug, PartialEq)]
pub struct SpdOutput {
    pub tokens: Vec<TokenId>,
    pub trace: BlockTrace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArOutput {
    pub tokens: Vec<TokenId>,
    /// Target runs; one per emitted token.
    pub calls: u64,
}

/// Drafts exactly `gamma` tokens. A drafted EOS does not end the block.
pub fn draft_block(
    draft: &dyn PromptConditioned,
    prompt: &MultimodalPrompt,
    generated: &[TokenId],
    gamma: usize,
    mode: DecodeMode,
    rng: &mut RngState,
) -> DraftBlock {
    let mut prefix = draft.effective_prefix(prompt, generated);
    let base = draft.base();
    let mut block = DraftBlock { tokens: Vec::with_capacity(gamma), dists: Vec::with_capacity(gamma) };
    for _ in 0..gamma {
        let dist = base.next_dist(&prefix);
        let token = match mode {
            DecodeMode::Greedy => dist.argmax(),
            DecodeMode::Stochastic => dist.sample(rng),
        };
        prefix.push(token);
        block.tokens.push(token);
        block.dists.push(dist);
    }
    block
}

fn check_pair(target: &dyn PromptConditioned, draft: &dyn PromptConditioned, prompt: &MultimodalPrompt) -> Result<()> {
    let (tv, dv) = (target.vocab(), draft.vocab());
    if tv != dv {
        return Err(Error::ShapeMismatch(format!(
            "target vocabulary ({}, eos {}) differs from draft vocabulary ({}, eos {})",
            tv.size(),
            tv.eos(),
            dv.size(),
            dv.eos()
        )));
    }
    prompt.validate(&tv)
}

/// Speculative generation. Greedy mode never touches `streams`.
pub fn spd_generate(
    target: &dyn PromptConditioned,
    draft: &dyn PromptConditioned,
    prompt: &MultimodalPrompt,
    cfg: &SpdConfig,
    streams: &mut SpdStreams,
) -> Result<SpdOutput> {
    cfg.validate()?;
    check_pair(target, draft, prompt)?;
    let eos = target.vocab().eos();
    let mut scorer = BlockScorer::new(target.base(), cfg.gamma);
    let mut tokens = Vec::with_capacity(cfg.max_new_tokens + cfg.gamma);
    let mut trace = BlockTrace::default();

    while tokens.len() < cfg.max_new_tokens {
        let block = draft_block(draft, prompt, &tokens, cfg.gamma, cfg.mode, &mut streams.draft);
        trace.draft_calls += block.tokens.len() as u64;

        let prefix = target.effective_prefix(prompt, &tokens);
        let target_dists = scorer.score_block(&prefix, &block.tokens)?;
        let outcome = match cfg.mode {
            DecodeMode::Greedy => verify_greedy(&target_dists, &block)?,
            DecodeMode::Stochastic => {
                verify_stochastic(&target_dists, &block, &mut streams.verify, &mut streams.resample)?
            }
        };

        let mut emitted = outcome.emitted;
        let mut stop = false;
        if cfg.stop_on_eos {
            if let Some(pos) = emitted.iter().position(|&t| t == eos) {
                emitted.truncate(pos + 1);
                stop = true;
            }
        }
        emitted.truncate(cfg.max_new_tokens - tokens.len());
        tokens.extend_from_slice(&emitted);
        trace.blocks.push(BlockRecord {
            draft_tokens: block.tokens,
            accepted: outcome.accepted,
            correction: outcome.correction,
            emitted,
        });
        if stop {
            break;
        }
    }
    trace.target_calls = scorer.calls();
    Ok(SpdOutput { tokens, trace })
}

/// Target-only baseline: one target run per token.
pub fn autoregressive_generate(
    target: &dyn PromptConditioned,
    prompt: &MultimodalPrompt,
    max_new_tokens: usize,
    mode: DecodeMode,
    stop_on_eos: bool,
    rng: &mut RngState,
) -> Result<ArOutput> {
    if max_new_tokens == 0 {
        return Err(Error::InvalidConfig("max_new_tokens must be at least 1".into()));
    }
    prompt.validate(&target.vocab())?;
    let eos = target.vocab().eos();
    let mut scorer = BlockScorer::new(target.base(), 0);
    let mut prefix = target.effective_prefix(prompt, &[]);
    let mut tokens = Vec::with_capacity(max_new_tokens);
    while tokens.len() < max_new_tokens {
        let dist = scorer.score_block(&prefix, &[])?.pop().expect("one distribution per run");
        let token = match mode {
            DecodeMode::Greedy => dist.argmax(),
            DecodeMode::Stochastic => dist.sample(rng),
        };
        tokens.push(token);
        prefix.push(token);
        if stop_on_eos && token == eos {
            break;
        }
    }
    Ok(ArOutput { tokens, calls: scorer.calls() })
}
