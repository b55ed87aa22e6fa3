//! Reproducible randomness.
//!
//! Every random draw comes from a ChaCha8 block function keyed by the seed
//! and addressed by a 64-bit stream id, so separate consumers (drafting,
//! acceptance tests, residual and bonus resampling, the baseline) never
//! share state and each one can be replayed on its own. The output depends
//! only on `(seed, stream, number of prior draws)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Named substreams. The numeric value is the low byte of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Stream {
    Draft = 1,
    Verify = 2,
    Resample = 3,
    Baseline = 4,
}

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    draws: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngState { seed, stream, draws: 0, inner }
    }

    /// Substream `kind` of the `lane`-th independent consumer (e.g. a prompt index).
    pub fn substream(seed: u64, lane: u64, kind: Stream) -> Self {
        Self::new(seed, (lane << 8) | kind as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform double in `[0, 1)` with 53 bits of precision. One draw.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl PartialEq for RngState {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream == other.stream && self.draws == other.draws
    }
}

/// The three substreams one speculative generation consumes.
#[derive(Clone, Debug)]
pub struct SpdStreams {
    pub draft: RngState,
    pub verify: RngState,
    pub resample: RngState,
}

impl SpdStreams {
    pub fn new(seed: u64, lane: u64) -> Self {
        SpdStreams {
            draft: RngState::substream(seed, lane, Stream::Draft),
            verify: RngState::substream(seed, lane, Stream::Verify),
            resample: RngState::substream(seed, lane, Stream::Resample),
        }
    }
}
