use super::LanguageModel;
use crate::dist::ProbDist;
use crate::prompt::MultimodalPrompt;
use crate::token::{TokenId, Vocab};

/// A language model viewed through a prompt: decides which parts of a
/// `MultimodalPrompt` the model conditions on.
pub trait PromptConditioned: Send + Sync {
    fn base(&self) -> &dyn LanguageModel;

    /// Whether the image-context segment is part of the conditioning prefix.
    fn sees_image(&self) -> bool;

    fn vocab(&self) -> Vocab {
        self.base().vocab()
    }

    fn effective_prefix(&self, prompt: &MultimodalPrompt, generated: &[TokenId]) -> Vec<TokenId> {
        let image = if self.sees_image() { prompt.image_ctx() } else { &[] };
        let mut prefix = Vec::with_capacity(image.len() + prompt.text().len() + generated.len());
        prefix.extend_from_slice(image);
        prefix.extend_from_slice(prompt.text());
        prefix.extend_from_slice(generated);
        prefix
    }

    fn dist(&self, prompt: &MultimodalPrompt, generated: &[TokenId]) -> ProbDist {
        self.base().next_dist(&self.effective_prefix(prompt, generated))
    }
}

/// Target model: conditions on `image_ctx ++ text ++ generated`.
///
/// Also serves as an image-aware draft when a draft should see the image.
pub struct MultimodalTargetLm<M> {
    base: M,
}

impl<M: LanguageModel> MultimodalTargetLm<M> {
    pub fn new(base: M) -> Self {
        MultimodalTargetLm { base }
    }

    pub fn target_dist(&self, prompt: &MultimodalPrompt, generated: &[TokenId]) -> ProbDist {
        self.dist(prompt, generated)
    }

    pub fn inner(&self) -> &M {
        &self.base
    }
}

impl<M: LanguageModel> PromptConditioned for MultimodalTargetLm<M> {
    fn base(&self) -> &dyn LanguageModel {
        &self.base
    }

    fn sees_image(&self) -> bool {
        true
    }
}

/// Text-only draft: conditions on `text ++ generated` and never reads `image_ctx`.
pub struct TextOnlyDraftLm<M> {
    base: M,
}

impl<M: LanguageModel> TextOnlyDraftLm<M> {
    pub fn new(base: M) -> Self {
        TextOnlyDraftLm { base }
    }

    pub fn draft_dist(&self, prompt: &MultimodalPrompt, generated: &[TokenId]) -> ProbDist {
        self.dist(prompt, generated)
    }

    pub fn inner(&self) -> &M {
        &self.base
    }
}

impl<M: LanguageModel> PromptConditioned for TextOnlyDraftLm<M> {
    fn base(&self) -> &dyn LanguageModel {
        &self.base
    }

    fn sees_image(&self) -> bool {
        false
    }
}
