//! C ABI over `mmspd`.
//!
//! Every fallible function returns an [`MmspdStatus`]. On failure the message
//! is kept per thread and can be read with [`mmspd_last_error`]. Models are
//! opaque [`MmspdModel`] handles released with [`mmspd_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use mmspd::metrics::{mbsu, CostModel};
use mmspd::models::{train_ngram, LanguageModel};
use mmspd::{
    autoregressive_generate, spd_generate, DecodeMode, Error, MultimodalPrompt, MultimodalTargetLm, NgramLm, RngState,
    SpdConfig, SpdStreams, Stream, TextOnlyDraftLm, TokenId, Vocab,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmspdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmspdMode {
    Stochastic = 0,
    Greedy = 1,
}

/// Speculative decoding settings. `lane` selects an independent random
/// substream for the same seed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MmspdSpdConfig {
    pub gamma: usize,
    pub mode: MmspdMode,
    pub max_new_tokens: usize,
    pub stop_on_eos: bool,
    pub seed: u64,
    pub lane: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MmspdStats {
    pub emitted: usize,
    pub accepted: usize,
    pub target_calls: u64,
    pub draft_calls: u64,
    /// Emitted tokens per target call.
    pub tau: f64,
}

/// Image context and text of a prompt. `image_ctx` may be null when
/// `image_len` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MmspdPrompt {
    pub image_ctx: *const u32,
    pub image_len: usize,
    pub text: *const u32,
    pub text_len: usize,
}

/// Opaque n-gram model handle.
pub struct MmspdModel {
    lm: NgramLm,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(MmspdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => MmspdStatus::Io,
            Error::Json { .. } | Error::UnsupportedFormat(_) | Error::InvalidModel(_) => MmspdStatus::Parse,
            _ => MmspdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MmspdStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(MmspdStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MmspdStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (MmspdStatus::Ok, String::new()),
        Ok(Err(Failure(status, msg))) => (status, msg),
        Err(_) => (MmspdStatus::Internal, "panic inside mmspd".to_string()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn tokens_from<'a>(data: *const u32, len: usize, name: &str) -> Result<&'a [u32], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(data, len))
}

fn to_ids(raw: &[u32]) -> Vec<TokenId> {
    raw.iter().copied().map(TokenId).collect()
}

unsafe fn model_ref<'a>(model: *const MmspdModel, name: &str) -> Result<&'a NgramLm, Failure> {
    model.as_ref().map(|m| &m.lm).ok_or_else(|| null(name))
}

unsafe fn path_from(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn prompt_from(prompt: *const MmspdPrompt, vocab: &Vocab) -> Result<MultimodalPrompt, Failure> {
    let p = prompt.as_ref().ok_or_else(|| null("prompt"))?;
    let image = tokens_from(p.image_ctx, p.image_len, "prompt.image_ctx")?;
    let text = tokens_from(p.text, p.text_len, "prompt.text")?;
    let prompt = MultimodalPrompt::new(to_ids(image), to_ids(text))?;
    prompt.validate(vocab)?;
    Ok(prompt)
}

unsafe fn write_tokens(tokens: &[TokenId], out: *mut u32, capacity: usize, out_len: *mut usize) -> Result<(), Failure> {
    if out_len.is_null() {
        return Err(null("out_len"));
    }
    *out_len = tokens.len();
    if tokens.len() > capacity {
        return Err(Failure(
            MmspdStatus::BufferTooSmall,
            format!("{} tokens do not fit in a buffer of {capacity}", tokens.len()),
        ));
    }
    if !tokens.is_empty() {
        if out.is_null() {
            return Err(null("out_tokens"));
        }
        let dst = slice::from_raw_parts_mut(out, tokens.len());
        for (d, t) in dst.iter_mut().zip(tokens) {
            *d = t.0;
        }
    }
    Ok(())
}

fn decode_mode(mode: MmspdMode) -> DecodeMode {
    match mode {
        MmspdMode::Stochastic => DecodeMode::Stochastic,
        MmspdMode::Greedy => DecodeMode::Greedy,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mmspd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of the calling thread into `buf`, truncated
/// and NUL-terminated. Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mmspd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads an ngram-v1 model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_load(path: *const c_char, out: *mut *mut MmspdModel) -> MmspdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lm = NgramLm::load(&path_from(path)?)?;
        *out = Box::into_raw(Box::new(MmspdModel { lm }));
        Ok(())
    })
}

/// Trains an additive-smoothed n-gram model. The corpus is `tokens`, split
/// into `n_seqs` sequences whose lengths are given by `seq_lens`.
///
/// # Safety
/// `tokens` must hold the sum of `seq_lens` entries, `seq_lens` must hold
/// `n_seqs` entries, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_train(
    tokens: *const u32,
    seq_lens: *const usize,
    n_seqs: usize,
    vocab_size: usize,
    eos: u32,
    order: usize,
    alpha: f64,
    out: *mut *mut MmspdModel,
) -> MmspdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lens = if n_seqs == 0 {
            Vec::new()
        } else if seq_lens.is_null() {
            return Err(null("seq_lens"));
        } else {
            slice::from_raw_parts(seq_lens, n_seqs).to_vec()
        };
        let total = lens.iter().try_fold(0usize, |a, &b| a.checked_add(b)).ok_or_else(|| invalid("overflow"))?;
        let flat = tokens_from(tokens, total, "tokens")?;
        let mut corpus = Vec::with_capacity(n_seqs);
        let mut start = 0;
        for len in lens {
            corpus.push(to_ids(&flat[start..start + len]));
            start += len;
        }
        let vocab = Vocab::new(vocab_size, TokenId(eos))?;
        let lm = train_ngram(&corpus, vocab, order, alpha)?;
        *out = Box::into_raw(Box::new(MmspdModel { lm }));
        Ok(())
    })
}

/// Writes the model as an ngram-v1 file.
///
/// # Safety
/// `model` must come from this library and `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_save(model: *const MmspdModel, path: *const c_char) -> MmspdStatus {
    guard(|| {
        let lm = model_ref(model, "model")?;
        lm.save(&path_from(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_free(model: *mut MmspdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out_size`, `out_eos` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_vocab(
    model: *const MmspdModel,
    out_size: *mut usize,
    out_eos: *mut u32,
) -> MmspdStatus {
    guard(|| {
        let vocab = model_ref(model, "model")?.vocab();
        if out_size.is_null() || out_eos.is_null() {
            return Err(null("output pointer"));
        }
        *out_size = vocab.size();
        *out_eos = vocab.eos().0;
        Ok(())
    })
}

/// Next-token distribution after `prefix`, written to `out_probs` which must
/// hold exactly the vocabulary size.
///
/// # Safety
/// `prefix` must hold `prefix_len` entries and `out_probs` `out_len` entries.
#[no_mangle]
pub unsafe extern "C" fn mmspd_model_next_dist(
    model: *const MmspdModel,
    prefix: *const u32,
    prefix_len: usize,
    out_probs: *mut f64,
    out_len: usize,
) -> MmspdStatus {
    guard(|| {
        let lm = model_ref(model, "model")?;
        let prefix = to_ids(tokens_from(prefix, prefix_len, "prefix")?);
        let vocab = lm.vocab();
        for &t in &prefix {
            vocab.check(t)?;
        }
        if out_len != vocab.size() {
            return Err(invalid(format!("out_len {out_len} != vocabulary size {}", vocab.size())));
        }
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        slice::from_raw_parts_mut(out_probs, out_len).copy_from_slice(lm.next_dist(&prefix).probs());
        Ok(())
    })
}

/// Speculative decoding with a multimodal target and a text-only draft.
///
/// On `MMSPD_STATUS_BUFFER_TOO_SMALL` the required length is stored in
/// `out_len`; generation is deterministic, so retrying with a larger buffer
/// yields the same tokens.
///
/// # Safety
/// Handles must be live, `prompt` and `config` valid, `out_tokens` must hold
/// `capacity` entries, and `out_len` must be valid. `stats` may be null.
#[no_mangle]
pub unsafe extern "C" fn mmspd_spd_generate(
    target: *const MmspdModel,
    draft: *const MmspdModel,
    prompt: *const MmspdPrompt,
    config: *const MmspdSpdConfig,
    out_tokens: *mut u32,
    capacity: usize,
    out_len: *mut usize,
    stats: *mut MmspdStats,
) -> MmspdStatus {
    guard(|| {
        let target = model_ref(target, "target")?;
        let draft = model_ref(draft, "draft")?;
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        if target.vocab() != draft.vocab() {
            return Err(invalid("target and draft vocabularies differ"));
        }
        let prompt = prompt_from(prompt, &target.vocab())?;
        let cfg = SpdConfig::new(c.gamma, decode_mode(c.mode), c.max_new_tokens, c.stop_on_eos)?;
        let out = spd_generate(
            &MultimodalTargetLm::new(target),
            &TextOnlyDraftLm::new(draft),
            &prompt,
            &cfg,
            &mut SpdStreams::new(c.seed, c.lane),
        )?;
        if let Some(s) = stats.as_mut() {
            let t = &out.trace;
            *s = MmspdStats {
                emitted: t.emitted_tokens(),
                accepted: t.accepted_tokens(),
                target_calls: t.target_calls,
                draft_calls: t.draft_calls,
                tau: if t.target_calls == 0 { 0.0 } else { t.emitted_tokens() as f64 / t.target_calls as f64 },
            };
        }
        write_tokens(&out.tokens, out_tokens, capacity, out_len)
    })
}

/// Target-only decoding. `out_calls` may be null.
///
/// # Safety
/// Same buffer rules as [`mmspd_spd_generate`].
#[no_mangle]
pub unsafe extern "C" fn mmspd_autoregressive_generate(
    target: *const MmspdModel,
    prompt: *const MmspdPrompt,
    max_new_tokens: usize,
    mode: MmspdMode,
    stop_on_eos: bool,
    seed: u64,
    out_tokens: *mut u32,
    capacity: usize,
    out_len: *mut usize,
    out_calls: *mut u64,
) -> MmspdStatus {
    guard(|| {
        let target = model_ref(target, "target")?;
        let prompt = prompt_from(prompt, &target.vocab())?;
        let mut rng = RngState::substream(seed, 0, Stream::Baseline);
        let out = autoregressive_generate(
            &MultimodalTargetLm::new(target),
            &prompt,
            max_new_tokens,
            decode_mode(mode),
            stop_on_eos,
            &mut rng,
        )?;
        if let Some(calls) = out_calls.as_mut() {
            *calls = out.calls;
        }
        write_tokens(&out.tokens, out_tokens, capacity, out_len)
    })
}

/// Memory-bound speedup `tau / (c * gamma + 1)` for a draft costing `c`
/// target runs.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mmspd_mbsu(tau: f64, gamma: usize, c: f64, out: *mut f64) -> MmspdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = mbsu(tau, gamma, CostModel::new(c)?);
        Ok(())
    })
}
