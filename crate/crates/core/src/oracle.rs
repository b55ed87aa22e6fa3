//! Exact reference distributions for tiny instances.
//!
//! Nothing here calls into the engine. Acceptance ratios and residuals are
//! recomputed inline from the model distributions so that agreement with the
//! engine is evidence rather than tautology.

use std::collections::BTreeMap;

use crate::dist::ProbDist;
use crate::engine::{DecodeMode, SpdConfig};
use crate::error::{Error, Result};
use crate::models::PromptConditioned;
use crate::prompt::MultimodalPrompt;
use crate::token::TokenId;

/// Largest number of candidate sequences an enumeration may cover.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Probability mass over output sequences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeqDist {
    masses: BTreeMap<Vec<TokenId>, f64>,
}

impl SeqDist {
    fn add(&mut self, seq: Vec<TokenId>, mass: f64) {
        *self.masses.entry(seq).or_insert(0.0) += mass;
    }

    pub fn get(&self, seq: &[TokenId]) -> f64 {
        self.masses.get(seq).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<TokenId>, f64)> {
        self.masses.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.values().sum()
    }

    /// L-infinity distance over the union of supports.
    pub fn max_abs_diff(&self, other: &SeqDist) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &v) in &self.masses {
            worst = worst.max((v - other.get(k)).abs());
        }
        for (k, &v) in &other.masses {
            if !self.masses.contains_key(k) {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    /// Marginal of the token at `position` among sequences long enough to have one.
    pub fn marginal(&self, position: usize, vocab_size: usize) -> Vec<f64> {
        let mut out = vec![0.0; vocab_size];
        for (seq, &m) in &self.masses {
            if let Some(t) = seq.get(position) {
                out[t.index()] += m;
            }
        }
        out
    }
}

/// Exact marginal of the first emitted token when one token drafted from `p`
/// is verified against `q`:
/// `p(x) min(1, q(x)/p(x)) + (sum_y p(y) (1 - min(1, q(y)/p(y)))) p_res(x)`.
pub fn induced_step_dist(p: &ProbDist, q: &ProbDist) -> Result<ProbDist> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch("p and q differ in length".into()));
    }
    let (p, q) = (p.probs(), q.probs());
    let ratio = |x: usize| if p[x] > 0.0 { (q[x] / p[x]).min(1.0) } else { 0.0 };
    let reject_mass: f64 = (0..p.len()).map(|y| p[y] * (1.0 - ratio(y))).sum();
    let residual: Vec<f64> = q.iter().zip(p).map(|(a, b)| (a - b).max(0.0)).collect();
    let residual_total: f64 = residual.iter().sum();
    let out: Vec<f64> = (0..p.len())
        .map(|x| {
            let accept = p[x] * ratio(x);
            let resample = if residual_total > 0.0 { reject_mass * residual[x] / residual_total } else { 0.0 };
            accept + resample
        })
        .collect();
    ProbDist::new(out)
}

fn guard(vocab_size: usize, exponent: usize) -> Result<()> {
    let paths = (vocab_size as u128).checked_pow(exponent as u32).unwrap_or(u128::MAX);
    if paths > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { paths, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

struct Stop {
    length: usize,
    eos: Option<TokenId>,
}

impl Stop {
    fn finished(&self, generated: &[TokenId]) -> bool {
        generated.len() >= self.length || matches!((self.eos, generated.last()), (Some(e), Some(&t)) if e == t)
    }

    /// Applies EOS and budget truncation to a block emission.
    fn clip(&self, generated: &[TokenId], emitted: &[TokenId]) -> Vec<TokenId> {
        let mut out = emitted.to_vec();
        if let Some(e) = self.eos {
            if let Some(pos) = out.iter().position(|&t| t == e) {
                out.truncate(pos + 1);
            }
        }
        out.truncate(self.length - generated.len());
        out
    }
}

/// Exact distribution of target-only sampling over sequences of up to `length` tokens.
pub fn enumerate_autoregressive(
    target: &dyn PromptConditioned,
    prompt: &MultimodalPrompt,
    length: usize,
    stop_on_eos: bool,
) -> Result<SeqDist> {
    let vocab = target.vocab();
    guard(vocab.size(), length)?;
    let stop = Stop { length, eos: stop_on_eos.then(|| vocab.eos()) };
    let mut out = SeqDist::default();
    let mut stack = vec![(Vec::new(), 1.0)];
    while let Some((generated, mass)) = stack.pop() {
        if stop.finished(&generated) {
            out.add(generated, mass);
            continue;
        }
        let q = target.dist(prompt, &generated);
        for (x, &qx) in q.probs().iter().enumerate() {
            if qx > 0.0 {
                let mut next = generated.clone();
                next.push(TokenId(x as u32));
                stack.push((next, mass * qx));
            }
        }
    }
    Ok(out)
}

/// Exact distribution of speculative sampling over sequences of up to `length` tokens.
///
/// Each block is expanded over every draft choice, every accept/reject outcome
/// and every correction or bonus token; block emissions are merged before
/// recursing into the next block.
pub fn enumerate_spd(
    target: &dyn PromptConditioned,
    draft: &dyn PromptConditioned,
    prompt: &MultimodalPrompt,
    cfg: &SpdConfig,
    length: usize,
) -> Result<SeqDist> {
    cfg.validate()?;
    if cfg.mode != DecodeMode::Stochastic {
        return Err(Error::InvalidConfig("enumeration covers stochastic mode only".into()));
    }
    if length == 0 {
        return Err(Error::InvalidConfig("length must be at least 1".into()));
    }
    let vocab = target.vocab();
    if draft.vocab() != vocab {
        return Err(Error::ShapeMismatch("target and draft vocabularies differ".into()));
    }
    guard(vocab.size(), length)?;
    guard(vocab.size(), cfg.gamma)?;

    let stop = Stop { length, eos: cfg.stop_on_eos.then(|| vocab.eos()) };
    let mut out = SeqDist::default();
    let mut frontier: BTreeMap<Vec<TokenId>, f64> = BTreeMap::new();
    frontier.insert(Vec::new(), 1.0);
    while !frontier.is_empty() {
        let mut next: BTreeMap<Vec<TokenId>, f64> = BTreeMap::new();
        for (generated, mass) in frontier {
            if stop.finished(&generated) {
                out.add(generated, mass);
                continue;
            }
            let mut emissions = BTreeMap::new();
            let mut walker = BlockWalker {
                target,
                draft,
                prompt,
                cfg,
                stop: &stop,
                generated: &generated,
                emissions: &mut emissions,
            };
            walker.draft(&mut Vec::new(), &mut Vec::new(), 1.0);
            for (emitted, m) in emissions {
                let mut seq = generated.clone();
                seq.extend(emitted);
                *next.entry(seq).or_insert(0.0) += mass * m;
            }
        }
        frontier = next;
    }
    Ok(out)
}

struct BlockWalker<'a> {
    target: &'a dyn PromptConditioned,
    draft: &'a dyn PromptConditioned,
    prompt: &'a MultimodalPrompt,
    cfg: &'a SpdConfig,
    stop: &'a Stop,
    generated: &'a [TokenId],
    emissions: &'a mut BTreeMap<Vec<TokenId>, f64>,
}

impl BlockWalker<'_> {
    fn context(&self, drafted: &[TokenId]) -> Vec<TokenId> {
        let mut ctx = self.generated.to_vec();
        ctx.extend_from_slice(drafted);
        ctx
    }

    fn draft(&mut self, drafted: &mut Vec<TokenId>, p_dists: &mut Vec<ProbDist>, mass: f64) {
        if drafted.len() == self.cfg.gamma {
            let q_dists: Vec<ProbDist> =
                (0..=drafted.len()).map(|k| self.target.dist(self.prompt, &self.context(&drafted[..k]))).collect();
            self.verify(drafted, p_dists, &q_dists, 0, mass);
            return;
        }
        let p = self.draft.dist(self.prompt, &self.context(drafted));
        for (x, &px) in p.probs().iter().enumerate() {
            if px > 0.0 {
                drafted.push(TokenId(x as u32));
                p_dists.push(p.clone());
                self.draft(drafted, p_dists, mass * px);
                p_dists.pop();
                drafted.pop();
            }
        }
    }

    fn emit(&mut self, emitted: &[TokenId], mass: f64) {
        let clipped = self.stop.clip(self.generated, emitted);
        *self.emissions.entry(clipped).or_insert(0.0) += mass;
    }

    fn verify(&mut self, drafted: &[TokenId], p_dists: &[ProbDist], q_dists: &[ProbDist], k: usize, mass: f64) {
        if k == drafted.len() {
            for (x, &qx) in q_dists[k].probs().iter().enumerate() {
                if qx > 0.0 {
                    let mut e = drafted.to_vec();
                    e.push(TokenId(x as u32));
                    self.emit(&e, mass * qx);
                }
            }
            return;
        }
        let (p, q) = (p_dists[k].probs(), q_dists[k].probs());
        let x = drafted[k].index();
        let keep = (q[x] / p[x]).min(1.0);
        if keep > 0.0 {
            self.verify(drafted, p_dists, q_dists, k + 1, mass * keep);
        }
        if keep < 1.0 {
            let residual: Vec<f64> = q.iter().zip(p).map(|(a, b)| (a - b).max(0.0)).collect();
            let z: f64 = residual.iter().sum();
            for (y, &r) in residual.iter().enumerate() {
                if r > 0.0 {
                    let mut e = drafted[..k].to_vec();
                    e.push(TokenId(y as u32));
                    self.emit(&e, mass * (1.0 - keep) * r / z);
                }
            }
        }
    }
}
