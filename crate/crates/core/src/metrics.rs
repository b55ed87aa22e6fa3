//! Block efficiency, memory-bound speedup and token-rate ratio.

use serde::{Deserialize, Serialize};

use crate::engine::BlockTrace;
use crate::error::{Error, Result};

/// Parameter count of the reference 7B target model.
pub const TARGET_PARAMS: f64 = 7.0e9;
/// Parameter count of the reference 115M draft model.
pub const DRAFT_PARAMS: f64 = 115.0e6;

/// Draft cost relative to one target run, taken as the parameter-count ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    c: f64,
}

impl CostModel {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidCost(format!("relative latency must lie in (0, 1], got {c}")));
        }
        Ok(CostModel { c })
    }

    pub fn from_param_counts(draft: f64, target: f64) -> Result<Self> {
        Self::new(draft / target)
    }

    /// 115M draft against a 7B target.
    pub fn reference() -> Self {
        CostModel { c: DRAFT_PARAMS / TARGET_PARAMS }
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Emitted tokens per target run.
pub fn block_efficiency(trace: &BlockTrace) -> Result<f64> {
    if trace.target_calls == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(trace.emitted_tokens() as f64 / trace.target_calls as f64)
}

/// Memory-bound speedup `tau / (c * gamma + 1)`: a block costs `gamma` draft
/// runs at `c` each plus one target run, and yields `tau` tokens.
pub fn mbsu(tau: f64, gamma: usize, cost: CostModel) -> f64 {
    tau / (cost.c * gamma as f64 + 1.0)
}

/// The literal `c * tau / (c * gamma + 1)` variant, reported alongside [`mbsu`].
pub fn mbsu_paper_formula(tau: f64, gamma: usize, cost: CostModel) -> f64 {
    cost.c * tau / (cost.c * gamma as f64 + 1.0)
}

/// `(spd_tokens / spd_time) / (ar_tokens / ar_time)`.
pub fn token_rate_ratio(spd_tokens: u64, spd_time: f64, ar_tokens: u64, ar_time: f64) -> Result<f64> {
    if spd_time <= 0.0 || ar_time <= 0.0 {
        return Err(Error::ZeroTime);
    }
    if ar_tokens == 0 {
        return Err(Error::InvalidConfig("baseline emitted no tokens".into()));
    }
    Ok((spd_tokens as f64 / spd_time) / (ar_tokens as f64 / ar_time))
}

/// Metrics for one prompt at one block size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptMetrics {
    pub prompt_id: String,
    pub gamma: usize,
    pub tokens: u64,
    pub target_calls: u64,
    pub tau: f64,
    pub mbsu: f64,
    pub mbsu_paper_formula: f64,
    pub wall_time_s: f64,
    pub baseline_tokens: u64,
    pub baseline_time_s: f64,
}

impl PromptMetrics {
    pub fn from_trace(
        prompt_id: impl Into<String>,
        gamma: usize,
        trace: &BlockTrace,
        cost: CostModel,
        wall_time_s: f64,
        baseline_tokens: u64,
        baseline_time_s: f64,
    ) -> Result<Self> {
        let tau = block_efficiency(trace)?;
        Ok(PromptMetrics {
            prompt_id: prompt_id.into(),
            gamma,
            tokens: trace.emitted_tokens() as u64,
            target_calls: trace.target_calls,
            tau,
            mbsu: mbsu(tau, gamma, cost),
            mbsu_paper_formula: mbsu_paper_formula(tau, gamma, cost),
            wall_time_s,
            baseline_tokens,
            baseline_time_s,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub gamma: usize,
    pub prompts: usize,
    pub mean_tau: f64,
    pub mean_mbsu: f64,
    pub mean_mbsu_paper_formula: f64,
    pub token_rate_ratio: f64,
}

/// Unweighted per-prompt means of tau and MBSU; token rate pooled over summed
/// tokens and summed time.
pub fn aggregate(records: &[PromptMetrics]) -> Result<AggregateMetrics> {
    let first = records.first().ok_or(Error::Empty)?;
    if records.iter().any(|r| r.gamma != first.gamma) {
        return Err(Error::InvalidConfig("cannot aggregate records with different gamma".into()));
    }
    let n = records.len() as f64;
    let mean = |f: fn(&PromptMetrics) -> f64| records.iter().map(f).sum::<f64>() / n;
    let spd_tokens = records.iter().map(|r| r.tokens).sum();
    let ar_tokens = records.iter().map(|r| r.baseline_tokens).sum();
    let spd_time = records.iter().map(|r| r.wall_time_s).sum();
    let ar_time = records.iter().map(|r| r.baseline_time_s).sum();
    Ok(AggregateMetrics {
        gamma: first.gamma,
        prompts: records.len(),
        mean_tau: mean(|r| r.tau),
        mean_mbsu: mean(|r| r.mbsu),
        mean_mbsu_paper_formula: mean(|r| r.mbsu_paper_formula),
        token_rate_ratio: token_rate_ratio(spd_tokens, spd_time, ar_tokens, ar_time)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{BlockRecord, CorrectionKind};
    use crate::token::TokenId;
    use proptest::prelude::*;

    fn trace(emissions: &[usize], gamma: usize) -> BlockTrace {
        let blocks: Vec<_> = emissions
            .iter()
            .map(|&n| BlockRecord {
                draft_tokens: vec![TokenId(0); gamma],
                accepted: n - 1,
                correction: if n == gamma + 1 { CorrectionKind::Bonus } else { CorrectionKind::GreedyCorrection },
                emitted: vec![TokenId(0); n],
            })
            .collect();
        BlockTrace { target_calls: blocks.len() as u64, draft_calls: (blocks.len() * gamma) as u64, blocks }
    }

    fn record(id: &str, tau: f64, tokens: u64, time: f64) -> PromptMetrics {
        let cost = CostModel::reference();
        PromptMetrics {
            prompt_id: id.into(),
            gamma: 3,
            tokens,
            target_calls: 1,
            tau,
            mbsu: mbsu(tau, 3, cost),
            mbsu_paper_formula: mbsu_paper_formula(tau, 3, cost),
            wall_time_s: time,
            baseline_tokens: tokens,
            baseline_time_s: time,
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(block_efficiency(&trace(&[4, 4, 4], 3)).unwrap(), 4.0);
        assert_eq!(block_efficiency(&trace(&[1, 1, 1, 1], 3)).unwrap(), 1.0);
        assert_eq!(block_efficiency(&trace(&[4, 2, 3], 3)).unwrap(), 3.0);
        assert!(matches!(block_efficiency(&BlockTrace::default()), Err(Error::EmptyTrace)));
    }

    #[test]
    fn mbsu_examples() {
        let tiny = CostModel::new(1e-12).unwrap();
        assert!((mbsu(2.7, 5, tiny) - 2.7).abs() < 1e-10);
        let reference = CostModel::reference();
        assert!((reference.c() - 0.016428571428571428).abs() < 1e-15);
        assert!((mbsu(2.0, 3, reference) - 1.9061).abs() < 1e-4);
        let c = CostModel::new(0.2).unwrap();
        assert!((mbsu(1.0, 3, c) - 1.0 / 1.6).abs() < 1e-15);
        assert!(mbsu(1.0, 3, c) < 1.0);
    }

    #[test]
    fn cost_bounds() {
        assert!(CostModel::new(0.0).is_err());
        assert!(CostModel::new(1.5).is_err());
        assert!(CostModel::new(1.0).is_ok());
        assert!(CostModel::from_param_counts(115e6, 7e9).is_ok());
    }

    #[test]
    fn token_rate_examples() {
        assert_eq!(token_rate_ratio(10, 2.0, 10, 2.0).unwrap(), 1.0);
        assert_eq!(token_rate_ratio(20, 2.0, 10, 2.0).unwrap(), 2.0);
        assert!(matches!(token_rate_ratio(20, 0.0, 10, 2.0), Err(Error::ZeroTime)));
    }

    #[test]
    fn aggregate_examples() {
        let one = record("a", 2.5, 40, 1.0);
        let agg = aggregate(std::slice::from_ref(&one)).unwrap();
        assert_eq!(agg.mean_tau, one.tau);
        assert_eq!(agg.mean_mbsu, one.mbsu);

        let two = [record("a", 2.0, 100, 1.0), record("b", 4.0, 300, 1.0)];
        assert_eq!(aggregate(&two).unwrap().mean_tau, 3.0);

        // Pooled: SPD 400 tokens in 2 s against a baseline of 100 tokens in 2 s.
        let mut pooled = two.clone();
        for r in &mut pooled {
            r.baseline_tokens = 50;
        }
        assert_eq!(aggregate(&pooled).unwrap().token_rate_ratio, (400.0 / 2.0) / (100.0 / 2.0));
        assert!(matches!(aggregate(&[]), Err(Error::Empty)));
    }

    proptest! {
        #[test]
        fn mbsu_monotone(tau in 1.0f64..6.0, dt in 0.01f64..1.0, c in 0.001f64..0.9, dc in 0.001f64..0.09, gamma in 1usize..8) {
            let cost = CostModel::new(c).unwrap();
            prop_assert!(mbsu(tau + dt, gamma, cost) > mbsu(tau, gamma, cost));
            prop_assert!(mbsu(tau, gamma, CostModel::new(c + dc).unwrap()) < mbsu(tau, gamma, cost));
            prop_assert!(mbsu(tau, gamma + 1, cost) < mbsu(tau, gamma, cost));
        }

        #[test]
        fn aggregate_of_copies(tau in 1.0f64..4.0, tokens in 1u64..500, time in 0.01f64..10.0, n in 1usize..20) {
            let r = record("x", tau, tokens, time);
            let agg = aggregate(&vec![r.clone(); n]).unwrap();
            prop_assert!((agg.mean_tau - r.tau).abs() < 1e-12);
            prop_assert!((agg.mean_mbsu - r.mbsu).abs() < 1e-12);
            prop_assert!((agg.token_rate_ratio - 1.0).abs() < 1e-12);
        }
    }
}
