use crate::error::{Error, Result};
use crate::token::{TokenId, Vocab};

/// A prompt made of an image-context segment and a text segment.
///
/// `image_ctx` stands in for the projected image embeddings. Targets condition
/// on `image_ctx ++ text`; text-only drafts see `text` alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultimodalPrompt {
    image_ctx: Vec<TokenId>,
    text: Vec<TokenId>,
}

impl MultimodalPrompt {
    pub fn new(image_ctx: Vec<TokenId>, text: Vec<TokenId>) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::InvalidPrompt("text segment is empty".into()));
        }
        Ok(MultimodalPrompt { image_ctx, text })
    }

    pub fn text_only(text: Vec<TokenId>) -> Result<Self> {
        Self::new(Vec::new(), text)
    }

    pub fn image_ctx(&self) -> &[TokenId] {
        &self.image_ctx
    }

    pub fn text(&self) -> &[TokenId] {
        &self.text
    }

    pub fn with_image_ctx(&self, image_ctx: Vec<TokenId>) -> Self {
        MultimodalPrompt { image_ctx, text: self.text.clone() }
    }

    pub fn validate(&self, vocab: &Vocab) -> Result<()> {
        self.image_ctx.iter().chain(&self.text).try_for_each(|&t| vocab.check(t))
    }
}
