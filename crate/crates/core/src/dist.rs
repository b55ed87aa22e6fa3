use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::token::TokenId;

/// Tolerance on the total mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A dense, normalized probability vector over a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Validates `probs` without rescaling it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in probs.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDistribution(format!("entry {i} is {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(ProbDist { probs })
    }

    /// Scales a non-negative vector to unit mass.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &v) in raw.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDistribution(format!("entry {i} is {v}")));
            }
            sum += v;
        }
        if sum == 0.0 {
            return Err(Error::AllZero);
        }
        Ok(ProbDist { probs: raw.iter().map(|v| v / sum).collect() })
    }

    pub fn uniform(size: usize) -> Self {
        ProbDist { probs: vec![1.0 / size as f64; size] }
    }

    pub fn one_hot(size: usize, token: TokenId) -> Self {
        let mut probs = vec![0.0; size];
        probs[token.index()] = 1.0;
        ProbDist { probs }
    }

    /// Crate-internal constructor for vectors that are normalized by construction.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        ProbDist { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs[token.index()]
    }

    /// Lowest-index token with maximal probability.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &v) in self.probs.iter().enumerate().skip(1) {
            if v > self.probs[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }

    /// Inverse-CDF sampling with a single uniform draw.
    ///
    /// Zero-probability tokens are never returned, even when rounding leaves
    /// the cumulative sum slightly below the uniform variate.
    pub fn sample(&self, rng: &mut RngState) -> TokenId {
        let u = rng.uniform();
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (i, &v) in self.probs.iter().enumerate() {
            if v > 0.0 {
                cum += v;
                last_positive = i;
                if u < cum {
                    return TokenId(i as u32);
                }
            }
        }
        TokenId(last_positive as u32)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &ProbDist) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(ProbDist::normalize(&[2.0, 2.0]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(ProbDist::normalize(&[0.0, 3.0, 1.0]).unwrap().probs(), &[0.0, 0.75, 0.25]);
        assert!(matches!(ProbDist::normalize(&[0.0, 0.0]), Err(Error::AllZero)));
    }

    #[test]
    fn normalize_rejects_negative() {
        assert!(matches!(ProbDist::normalize(&[1.0, -0.5]), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn new_validates_mass() {
        assert!(ProbDist::new(vec![0.3, 0.7]).is_ok());
        assert!(ProbDist::new(vec![0.3, 0.6]).is_err());
        assert!(ProbDist::new(vec![]).is_err());
        assert!(ProbDist::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn argmax_examples() {
        let d = |v: Vec<f64>| ProbDist::new(v).unwrap();
        assert_eq!(d(vec![0.1, 0.7, 0.2]).argmax(), TokenId(1));
        assert_eq!(d(vec![0.5, 0.5]).argmax(), TokenId(0));
        assert_eq!(d(vec![0.0, 0.0, 1.0]).argmax(), TokenId(2));
    }

    #[test]
    fn sample_point_mass() {
        let d = ProbDist::new(vec![1.0, 0.0]).unwrap();
        for seed in 0..50 {
            let mut rng = RngState::new(seed, 0);
            assert_eq!(d.sample(&mut rng), TokenId(0));
            assert_eq!(rng.draws(), 1);
        }
    }

    #[test]
    fn sample_fair_coin_frequency() {
        let d = ProbDist::new(vec![0.5, 0.5]).unwrap();
        let mut rng = RngState::new(12345, 1);
        let n = 100_000;
        let zeros = (0..n).filter(|_| d.sample(&mut rng) == TokenId(0)).count();
        let freq = zeros as f64 / n as f64;
        assert!((0.49..=0.51).contains(&freq), "frequency {freq}");
    }

    #[test]
    fn sample_is_deterministic() {
        let d = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let a: Vec<_> = {
            let mut r = RngState::new(99, 2);
            (0..20).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = RngState::new(99, 2);
            (0..20).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn normalize_idempotent(raw in prop::collection::vec(0.0f64..10.0, 2..32)) {
            prop_assume!(raw.iter().any(|&v| v > 0.0));
            let once = ProbDist::normalize(&raw).unwrap();
            let twice = ProbDist::normalize(once.probs()).unwrap();
            prop_assert!(once.max_abs_diff(&twice) <= 1e-12);
        }

        #[test]
        fn sample_one_hot_exact(size in 2usize..64, k in 0usize..64, seed in any::<u64>()) {
            let k = k % size;
            let d = ProbDist::one_hot(size, TokenId(k as u32));
            let mut rng = RngState::new(seed, 0);
            prop_assert_eq!(d.sample(&mut rng), TokenId(k as u32));
        }

        #[test]
        fn argmax_lowest_index_of_max(raw in prop::collection::vec(0u8..4, 2..16)) {
            prop_assume!(raw.iter().any(|&v| v > 0));
            let as_f: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
            let d = ProbDist::normalize(&as_f).unwrap();
            let max = *raw.iter().max().unwrap();
            let expected = raw.iter().position(|&v| v == max).unwrap();
            prop_assert_eq!(d.argmax(), TokenId(expected as u32));
        }
    }
}
