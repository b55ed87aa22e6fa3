mod common;

use common::{random_instance, range, unit};
use mmspd::oracle::{enumerate_autoregressive, enumerate_spd, induced_step_dist};
use mmspd::{DecodeMode, MultimodalTargetLm, ProbDist, RngState, SpdConfig, TextOnlyDraftLm};
use proptest::prelude::*;

fn random_dist(rng: &mut RngState, v: usize) -> ProbDist {
    // Occasional exact zeros exercise the zero-mass branches.
    let w: Vec<f64> = (0..v).map(|_| if unit(rng) < 0.15 { 0.0 } else { unit(rng) }).collect();
    ProbDist::normalize(&w).unwrap_or_else(|_| ProbDist::uniform(v))
}

#[test]
fn spd_enumeration_equals_autoregressive_on_random_instances() {
    let mut rng = RngState::new(0x0_5eed, 9);
    for case in 0..50 {
        let inst = random_instance(&mut rng, 4, 3);
        let t = MultimodalTargetLm::new(&inst.target);
        let d = TextOnlyDraftLm::new(&inst.draft);
        let gamma = range(&mut rng, 1, 3);
        let length = range(&mut rng, 1, 3);
        let stop = case % 2 == 0;
        let cfg = SpdConfig::new(gamma, DecodeMode::Stochastic, length, stop).unwrap();
        let spd = enumerate_spd(&t, &d, &inst.prompt, &cfg, length).unwrap();
        let ar = enumerate_autoregressive(&t, &inst.prompt, length, stop).unwrap();
        assert!((spd.total() - 1.0).abs() < 1e-10, "case {case}: total {}", spd.total());
        assert!(spd.max_abs_diff(&ar) < 1e-10, "case {case}");
    }
}

#[test]
fn gamma_one_single_token_agrees_with_induced_marginal() {
    let mut rng = RngState::new(41, 0);
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 6, 3);
        let t = MultimodalTargetLm::new(&inst.target);
        let d = TextOnlyDraftLm::new(&inst.draft);
        let cfg = SpdConfig::new(1, DecodeMode::Stochastic, 1, false).unwrap();
        let seqs = enumerate_spd(&t, &d, &inst.prompt, &cfg, 1).unwrap();
        let p = d.draft_dist(&inst.prompt, &[]);
        let q = t.target_dist(&inst.prompt, &[]);
        let induced = induced_step_dist(&p, &q).unwrap();
        let marginal = seqs.marginal(0, inst.vocab.size());
        for (a, b) in marginal.iter().zip(induced.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn induced_marginal_recovers_target_for_random_pairs() {
    let mut rng = RngState::new(1000, 3);
    for _ in 0..1000 {
        let v = range(&mut rng, 2, 16);
        let mut p = random_dist(&mut rng, v);
        let q = random_dist(&mut rng, v);
        // The draft must cover every token it could be asked about.
        if p.probs().contains(&0.0) {
            let shifted: Vec<f64> = p.probs().iter().map(|x| x + 0.01).collect();
            p = ProbDist::normalize(&shifted).unwrap();
        }
        let induced = induced_step_dist(&p, &q).unwrap();
        assert!(induced.max_abs_diff(&q) < 1e-12);
    }
}

proptest! {
    #[test]
    fn enumerations_are_total(seed in any::<u64>(), gamma in 1usize..=3, length in 1usize..=3) {
        let mut rng = RngState::new(seed, 0);
        let inst = random_instance(&mut rng, 3, 2);
        let t = MultimodalTargetLm::new(&inst.target);
        let d = TextOnlyDraftLm::new(&inst.draft);
        let cfg = SpdConfig::new(gamma, DecodeMode::Stochastic, length, true).unwrap();
        let spd = enumerate_spd(&t, &d, &inst.prompt, &cfg, length).unwrap();
        let ar = enumerate_autoregressive(&t, &inst.prompt, length, true).unwrap();
        prop_assert!((spd.total() - 1.0).abs() < 1e-10);
        prop_assert!((ar.total() - 1.0).abs() < 1e-10);
        prop_assert!(spd.iter().all(|(_, m)| m >= 0.0));
    }
}
