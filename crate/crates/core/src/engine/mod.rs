//! Draft-then-verify decoding.
//!
//! Each block: the draft proposes `gamma` tokens autoregressively, the target
//! scores all of them in one run, and verification keeps the longest accepted
//! prefix plus one extra token (a correction at the first rejection, or a
//! bonus token from the target's last distribution when nothing was rejected).

mod generate;
mod verify;

use serde::{Deserialize, Serialize};

pub use generate::{autoregressive_generate, draft_block, spd_generate, ArOutput, SpdOutput};
pub use verify::{accept_prob, residual_dist, verify_greedy, verify_stochastic};

use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::token::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// Sample from the model distributions; verify by rejection sampling.
    Stochastic,
    /// Take the argmax everywhere; verify by exact match.
    Greedy,
}

impl DecodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::Stochastic => "stochastic",
            DecodeMode::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(DecodeMode::Stochastic),
            "greedy" => Ok(DecodeMode::Greedy),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpdConfig {
    pub gamma: usize,
    pub mode: DecodeMode,
    pub max_new_tokens: usize,
    pub stop_on_eos: bool,
}

impl SpdConfig {
    pub fn new(gamma: usize, mode: DecodeMode, max_new_tokens: usize, stop_on_eos: bool) -> Result<Self> {
        let cfg = SpdConfig { gamma, mode, max_new_tokens, stop_on_eos };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma == 0 {
            return Err(Error::InvalidConfig("gamma must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::InvalidConfig("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

/// Tokens proposed by the draft and the distributions they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DraftBlock {
    pub tokens: Vec<TokenId>,
    pub dists: Vec<ProbDist>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionKind {
    ResidualResample,
    GreedyCorrection,
    Bonus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOutcome {
    /// Number of draft tokens accepted, in `[0, gamma]`.
    pub accepted: usize,
    /// Accepted prefix followed by one correction or bonus token.
    pub emitted: Vec<TokenId>,
    pub correction: CorrectionKind,
}

/// Where an emitted token came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenOrigin {
    Accepted,
    Correction,
    Bonus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockRecord {
    pub draft_tokens: Vec<TokenId>,
    pub accepted: usize,
    pub correction: CorrectionKind,
    /// Tokens appended to the output, after EOS and length truncation.
    pub emitted: Vec<TokenId>,
}

impl BlockRecord {
    /// One flag per drafted position; positions after the first rejection were never examined.
    pub fn acceptance_flags(&self) -> Vec<bool> {
        (0..self.draft_tokens.len()).map(|j| j < self.accepted).collect()
    }

    pub fn origins(&self) -> impl Iterator<Item = (TokenId, TokenOrigin)> + '_ {
        self.emitted.iter().enumerate().map(move |(j, &t)| {
            let origin = if j < self.accepted {
                TokenOrigin::Accepted
            } else if self.correction == CorrectionKind::Bonus {
                TokenOrigin::Bonus
            } else {
                TokenOrigin::Correction
            };
            (t, origin)
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockTrace {
    pub blocks: Vec<BlockRecord>,
    pub target_calls: u64,
    pub draft_calls: u64,
}

impl BlockTrace {
    pub fn emitted_tokens(&self) -> usize {
        self.blocks.iter().map(|b| b.emitted.len()).sum()
    }

    pub fn accepted_tokens(&self) -> usize {
        self.blocks.iter().map(|b| b.accepted.min(b.emitted.len())).sum()
    }

    /// Every emitted token with its origin, in output order.
    pub fn origins(&self) -> Vec<(TokenId, TokenOrigin)> {
        self.blocks.iter().flat_map(BlockRecord::origins).collect()
    }
}
