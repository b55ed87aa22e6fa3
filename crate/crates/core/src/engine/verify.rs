use super::{CorrectionKind, DraftBlock, VerifyOutcome};
use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::rng::RngState;

/// Probability of keeping a drafted token: `min(1, q / p)`.
pub fn accept_prob(p_val: f64, q_val: f64) -> Result<f64> {
    if p_val == 0.0 {
        return Err(Error::DraftZeroProb);
    }
    Ok((q_val / p_val).min(1.0))
}

/// `normalize(max(0, q - p))`, the distribution a rejected position is resampled from.
pub fn residual_dist(q: &ProbDist, p: &ProbDist) -> Result<ProbDist> {
    if q.len() != p.len() {
        return Err(Error::ShapeMismatch(format!("target has {} entries, draft has {}", q.len(), p.len())));
    }
    let raw: Vec<f64> = q.probs().iter().zip(p.probs()).map(|(a, b)| (a - b).max(0.0)).collect();
    ProbDist::normalize(&raw)
}

fn check_shape(target_dists: &[ProbDist], block: &DraftBlock) -> Result<()> {
    if block.tokens.len() != block.dists.len() {
        return Err(Error::ShapeMismatch(format!(
            "block has {} tokens but {} draft distributions",
            block.tokens.len(),
            block.dists.len()
        )));
    }
    if target_dists.len() != block.tokens.len() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} target distributions, got {}",
            block.tokens.len() + 1,
            target_dists.len()
        )));
    }
    let width = target_dists[0].len();
    if target_dists.iter().chain(&block.dists).any(|d| d.len() != width) {
        return Err(Error::ShapeMismatch("distributions differ in vocabulary size".into()));
    }
    if block.tokens.iter().any(|t| t.index() >= width) {
        return Err(Error::ShapeMismatch("drafted token outside the vocabulary".into()));
    }
    Ok(())
}

/// Rejection-sampling verification.
///
/// Position `j` consumes exactly one draw from `accept_rng`; the correction or
/// bonus token consumes one draw from `resample_rng`.
pub fn verify_stochastic(
    target_dists: &[ProbDist],
    block: &DraftBlock,
    accept_rng: &mut RngState,
    resample_rng: &mut RngState,
) -> Result<VerifyOutcome> {
    check_shape(target_dists, block)?;
    for (j, (&token, p)) in block.tokens.iter().zip(&block.dists).enumerate() {
        let q = &target_dists[j];
        let a = accept_prob(p.prob(token), q.prob(token))?;
        if accept_rng.uniform() >= a {
            let fix = residual_dist(q, p)?.sample(resample_rng);
            let mut emitted = block.tokens[..j].to_vec();
            emitted.push(fix);
            return Ok(VerifyOutcome { accepted: j, emitted, correction: CorrectionKind::ResidualResample });
        }
    }
    let gamma = block.tokens.len();
    let mut emitted = block.tokens.clone();
    emitted.push(target_dists[gamma].sample(resample_rng));
    Ok(VerifyOutcome { accepted: gamma, emitted, correction: CorrectionKind::Bonus })
}

/// Exact-match verification against the target argmax.
pub fn verify_greedy(target_dists: &[ProbDist], block: &DraftBlock) -> Result<VerifyOutcome> {
    check_shape(target_dists, block)?;
    for (j, &token) in block.tokens.iter().enumerate() {
        let best = target_dists[j].argmax();
        if token != best {
            let mut emitted = block.tokens[..j].to_vec();
            emitted.push(best);
            return Ok(VerifyOutcome { accepted: j, emitted, correction: CorrectionKind::GreedyCorrection });
        }
    }
    let gamma = block.tokens.len();
    let mut emitted = block.tokens.clone();
    emitted.push(target_dists[gamma].argmax());
    Ok(VerifyOutcome { accepted: gamma, emitted, correction: CorrectionKind::Bonus })
}
