use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a token in a finite vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

impl std::fmt::Display for TokenId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Converts a slice of raw ids into tokens.
pub fn tokens(ids: &[u32]) -> Vec<TokenId> {
    ids.iter().copied().map(TokenId).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Vocab {
    size: usize,
    eos: TokenId,
}

impl Vocab {
    pub fn new(size: usize, eos: TokenId) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidVocab(format!("size must be at least 2, got {size}")));
        }
        if size > u32::MAX as usize {
            return Err(Error::InvalidVocab(format!("size {size} does not fit a token id")));
        }
        if eos.index() >= size {
            return Err(Error::InvalidVocab(format!("eos {eos} is outside [0, {size})")));
        }
        Ok(Vocab { size, eos })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token.index() < self.size
    }

    pub fn check(&self, token: TokenId) -> Result<()> {
        if self.contains(token) {
            Ok(())
        } else {
            Err(Error::TokenOutOfRange { token: token.0, size: self.size })
        }
    }
}
