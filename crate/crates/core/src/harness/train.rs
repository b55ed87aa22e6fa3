use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::load_corpus;
use super::tokenizer::CharTokenizer;
use crate::error::{Error, Result};
use crate::models::train_ngram;

pub const TARGET_FILE: &str = "target.json";
pub const DRAFT_FILE: &str = "draft.json";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub target_order: usize,
    pub draft_order: usize,
    pub target_alpha: f64,
    pub draft_alpha: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { target_order: 3, draft_order: 2, target_alpha: 0.01, draft_alpha: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainedModels {
    pub target: PathBuf,
    pub draft: PathBuf,
}

/// Trains target and draft n-gram models on the same corpus and writes them
/// as `target.json` and `draft.json` under `out_dir`.
///
/// A realistic acceptance gap needs a weaker draft (lower order or heavier
/// smoothing); equal settings produce identical files.
pub fn train_models(corpus: &Path, opts: &TrainOptions, out_dir: &Path) -> Result<TrainedModels> {
    let tokenizer = CharTokenizer::default();
    let seqs = load_corpus(corpus, &tokenizer)?;
    let vocab = tokenizer.vocab();
    let target = train_ngram(&seqs, vocab, opts.target_order, opts.target_alpha)?;
    let draft = train_ngram(&seqs, vocab, opts.draft_order, opts.draft_alpha)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths = TrainedModels { target: out_dir.join(TARGET_FILE), draft: out_dir.join(DRAFT_FILE) };
    target.save(&paths.target)?;
    draft.save(&paths.draft)?;
    Ok(paths)
}
