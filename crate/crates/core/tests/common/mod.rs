#![allow(dead_code)]

use mmspd::models::train_ngram;
use mmspd::{MultimodalPrompt, NgramLm, RngState, TokenId, Vocab};

pub struct Instance {
    pub vocab: Vocab,
    pub target: NgramLm,
    pub draft: NgramLm,
    pub prompt: MultimodalPrompt,
}

pub fn below(rng: &mut RngState, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

pub fn range(rng: &mut RngState, lo: usize, hi_inclusive: usize) -> usize {
    lo + below(rng, hi_inclusive - lo + 1)
}

pub fn unit(rng: &mut RngState) -> f64 {
    rng.uniform()
}

pub fn random_tokens(rng: &mut RngState, vocab: usize, len: usize) -> Vec<TokenId> {
    (0..len).map(|_| TokenId(below(rng, vocab) as u32)).collect()
}

/// Corpus from a noisy affine chain so the trained models have real structure.
pub fn structured_corpus(rng: &mut RngState, vocab: usize, seqs: usize, len: usize) -> Vec<Vec<TokenId>> {
    let a = 1 + below(rng, vocab.max(2) - 1);
    let b = below(rng, vocab);
    let noise = 0.1 + 0.5 * unit(rng);
    (0..seqs)
        .map(|_| {
            let mut prev = below(rng, vocab);
            (0..len)
                .map(|_| {
                    prev = if unit(rng) < noise { below(rng, vocab) } else { (prev * a + b) % vocab };
                    TokenId(prev as u32)
                })
                .collect()
        })
        .collect()
}

/// Random target/draft pair over a shared vocabulary, trained on overlapping
/// but different corpora, plus a prompt with a random image context.
pub fn random_instance(rng: &mut RngState, max_vocab: usize, max_order: usize) -> Instance {
    let v = range(rng, 2, max_vocab);
    let vocab = Vocab::new(v, TokenId(below(rng, v) as u32)).unwrap();
    let mut corpus = structured_corpus(rng, v, 6, 24);
    let target = train_ngram(&corpus, vocab, range(rng, 1, max_order), 0.02 + unit(rng)).unwrap();
    corpus.truncate(3);
    corpus.extend(structured_corpus(rng, v, 3, 24));
    let draft = train_ngram(&corpus, vocab, range(rng, 1, max_order), 0.02 + 2.0 * unit(rng)).unwrap();
    let image_len = below(rng, 4);
    let text_len = range(rng, 1, 5);
    let prompt = MultimodalPrompt::new(random_tokens(rng, v, image_len), random_tokens(rng, v, text_len)).unwrap();
    Instance { vocab, target, draft, prompt }
}
