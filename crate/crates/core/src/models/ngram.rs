use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LanguageModel;
use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::token::{TokenId, Vocab};

pub const NGRAM_FORMAT: &str = "ngram-v1";

/// Additively smoothed n-gram model.
///
/// Contexts are the last `order - 1` tokens of the prefix, left-padded with a
/// begin marker whose id is `vocab.size()`. The marker only ever appears in
/// contexts and is never a predicted token.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramLm {
    order: usize,
    alpha: f64,
    vocab: Vocab,
    counts: BTreeMap<Vec<u32>, Vec<u64>>,
}

/// Counts every (context, next token) pair in `corpus`.
pub fn train_ngram(corpus: &[Vec<TokenId>], vocab: Vocab, order: usize, alpha: f64) -> Result<NgramLm> {
    let mut lm = NgramLm::empty(vocab, order, alpha)?;
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let bos = lm.begin_marker();
    let width = order - 1;
    for seq in corpus {
        seq.iter().try_for_each(|&t| vocab.check(t))?;
        let mut padded = vec![bos; width];
        padded.extend(seq.iter().map(|t| t.0));
        for (i, &next) in seq.iter().enumerate() {
            let ctx = padded[i..i + width].to_vec();
            lm.counts.entry(ctx).or_insert_with(|| vec![0; vocab.size()])[next.index()] += 1;
        }
    }
    Ok(lm)
}

impl NgramLm {
    fn empty(vocab: Vocab, order: usize, alpha: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidModel("order must be at least 1".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidModel(format!("alpha must be positive, got {alpha}")));
        }
        Ok(NgramLm { order, alpha, vocab, counts: BTreeMap::new() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of distinct contexts observed in training.
    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    pub fn begin_marker(&self) -> u32 {
        self.vocab.size() as u32
    }

    fn context_key(&self, prefix: &[TokenId]) -> Vec<u32> {
        let width = self.order - 1;
        let take = prefix.len().min(width);
        let mut key = vec![self.begin_marker(); width - take];
        key.extend(prefix[prefix.len() - take..].iter().map(|t| t.0));
        key
    }

    /// Raw counts following `prefix`'s context, if the context was seen.
    pub fn counts_for(&self, prefix: &[TokenId]) -> Option<&[u64]> {
        self.counts.get(&self.context_key(prefix)).map(Vec::as_slice)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: NGRAM_FORMAT.to_string(),
            order: self.order,
            alpha: self.alpha,
            vocab_size: self.vocab.size(),
            eos: self.vocab.eos().0,
            counts: self.counts.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::json("serializing n-gram model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::json("parsing n-gram model", e))?;
        if file.format != NGRAM_FORMAT {
            return Err(Error::UnsupportedFormat(file.format));
        }
        let vocab = Vocab::new(file.vocab_size, TokenId(file.eos))?;
        let mut lm = NgramLm::empty(vocab, file.order, file.alpha)?;
        let width = file.order - 1;
        for (ctx, counts) in file.counts {
            if ctx.len() != width {
                return Err(Error::InvalidModel(format!("context {ctx:?} has length {}, expected {width}", ctx.len())));
            }
            if ctx.iter().any(|&t| t > lm.begin_marker()) {
                return Err(Error::InvalidModel(format!("context {ctx:?} has an out-of-range token")));
            }
            if counts.len() != vocab.size() {
                return Err(Error::InvalidModel(format!(
                    "count vector for {ctx:?} has length {}, expected {}",
                    counts.len(),
                    vocab.size()
                )));
            }
            if lm.counts.insert(ctx.clone(), counts).is_some() {
                return Err(Error::InvalidModel(format!("duplicate context {ctx:?}")));
            }
        }
        Ok(lm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl LanguageModel for NgramLm {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        let v = self.vocab.size();
        let denom_smooth = self.alpha * v as f64;
        match self.counts.get(&self.context_key(prefix)) {
            None => ProbDist::uniform(v),
            Some(counts) => {
                let total: u64 = counts.iter().sum();
                let denom = total as f64 + denom_smooth;
                ProbDist::from_normalized(counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect())
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    order: usize,
    alpha: f64,
    vocab_size: usize,
    eos: u32,
    counts: Vec<(Vec<u32>, Vec<u64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::tokens;
    use proptest::prelude::*;

    fn v(n: usize) -> Vocab {
        Vocab::new(n, TokenId(n as u32 - 1)).unwrap()
    }

    #[test]
    fn bigram_hand_count() {
        let lm = train_ngram(&[tokens(&[0, 1, 0, 1])], v(2), 2, 1.0).unwrap();
        assert_eq!(lm.next_dist(&tokens(&[0])).probs(), &[0.25, 0.75]);
    }

    #[test]
    fn unseen_context_is_uniform() {
        let lm = train_ngram(&[tokens(&[0, 0, 0])], v(4), 3, 0.5).unwrap();
        let d = lm.next_dist(&tokens(&[3, 2]));
        assert_eq!(d, ProbDist::uniform(4));
    }

    #[test]
    fn unigram_ignores_prefix() {
        let lm = train_ngram(&[tokens(&[0, 1, 1, 2, 1])], v(3), 1, 1.0).unwrap();
        let a = lm.next_dist(&[]);
        assert_eq!(a, lm.next_dist(&tokens(&[2, 2, 0])));
        assert!((a.probs()[1] - 4.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn begin_marker_defines_first_position() {
        // Every sequence starts with 2, so the empty-prefix context predicts 2.
        let lm = train_ngram(&[tokens(&[2, 0]), tokens(&[2, 1])], v(3), 2, 0.1).unwrap();
        assert_eq!(lm.next_dist(&[]).argmax(), TokenId(2));
    }

    #[test]
    fn train_errors() {
        assert!(matches!(train_ngram(&[], v(2), 2, 1.0), Err(Error::EmptyCorpus)));
        assert!(matches!(train_ngram(&[vec![]], v(2), 2, 1.0), Err(Error::EmptyCorpus)));
        assert!(matches!(train_ngram(&[tokens(&[0])], v(2), 0, 1.0), Err(Error::InvalidModel(_))));
        assert!(matches!(train_ngram(&[tokens(&[0])], v(2), 2, 0.0), Err(Error::InvalidModel(_))));
        assert!(matches!(train_ngram(&[tokens(&[0, 5])], v(2), 2, 1.0), Err(Error::TokenOutOfRange { .. })));
    }

    #[test]
    fn json_rejects_bad_documents() {
        let lm = train_ngram(&[tokens(&[0, 1, 0])], v(2), 2, 1.0).unwrap();
        let good = lm.to_json().unwrap();
        assert!(good.contains("\"format\":\"ngram-v1\""));
        let wrong_format = good.replace("ngram-v1", "ngram-v9");
        assert!(matches!(NgramLm::from_json(&wrong_format), Err(Error::UnsupportedFormat(_))));
        let bad = r#"{"format":"ngram-v1","order":2,"alpha":1.0,"vocab_size":2,"eos":1,"counts":[[[0],[1,2,3]]]}"#;
        assert!(matches!(NgramLm::from_json(bad), Err(Error::InvalidModel(_))));
        let bad_ctx = r#"{"format":"ngram-v1","order":2,"alpha":1.0,"vocab_size":2,"eos":1,"counts":[[[0,1],[1,2]]]}"#;
        assert!(matches!(NgramLm::from_json(bad_ctx), Err(Error::InvalidModel(_))));
    }

    fn corpus_strategy(vocab: u32) -> impl Strategy<Value = Vec<Vec<TokenId>>> {
        prop::collection::vec(prop::collection::vec((0..vocab).prop_map(TokenId), 1..20), 1..6)
    }

    proptest! {
        #[test]
        fn round_trip_preserves_distributions(
            corpus in corpus_strategy(5),
            order in 1usize..4,
            alpha in 0.01f64..3.0,
            probe in prop::collection::vec((0u32..5).prop_map(TokenId), 0..6),
        ) {
            let lm = train_ngram(&corpus, v(5), order, alpha).unwrap();
            let back = NgramLm::from_json(&lm.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &lm);
            prop_assert_eq!(back.next_dist(&probe), lm.next_dist(&probe));
        }

        #[test]
        fn outputs_are_valid_distributions(
            corpus in corpus_strategy(4),
            order in 1usize..5,
            alpha in 0.001f64..5.0,
            probe in prop::collection::vec((0u32..4).prop_map(TokenId), 0..8),
        ) {
            let lm = train_ngram(&corpus, v(4), order, alpha).unwrap();
            let d = lm.next_dist(&probe);
            prop_assert!(ProbDist::new(d.probs().to_vec()).is_ok());
            prop_assert!(d.probs().iter().all(|&p| p > 0.0));
        }
    }
}
