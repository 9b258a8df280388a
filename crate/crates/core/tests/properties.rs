use proptest::prelude::*;

use teachplay::coherence::{score_lexical_baseline, softmax_pair};
use teachplay::datasets::{split, split_sizes, toy_corpus};
use teachplay::eval::info_gain;
use teachplay::policy::{self, PolicyParams, FEATURE_DIM};
use teachplay::rewards::{attribute_rewards, coverage_reward, mixed_reward};
use teachplay::selfplay::run_conversation;
use teachplay::textproc::{lcs_len, rouge_l_f1, rouge_n_f1, RougeVariant, TokenSeq};
use teachplay::{seeds, AttributionMode, DecodeMode, LexicalBaseline, RewardConfig, RuleStudent, Speaker};

fn tokens(max_len: usize) -> impl Strategy<Value = TokenSeq> {
    prop::collection::vec(0u8..6, 0..=max_len).prop_map(|v| TokenSeq::from_tokens(v.iter().map(|t| format!("t{t}"))))
}

fn weights() -> impl Strategy<Value = PolicyParams> {
    (prop::array::uniform6(-4.0f64..4.0), 0.25f64..3.0).prop_map(|(weights, temperature)| PolicyParams {
        weights,
        temperature,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rouge_bounded_and_symmetric(a in tokens(15), b in tokens(15)) {
        for v in RougeVariant::ALL {
            let ab = v.score(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - v.score(&b, &a)).abs() <= 1e-12);
        }
    }

    #[test]
    fn rouge_identity(a in tokens(15)) {
        prop_assume!(a.len() >= 2);
        prop_assert_eq!(rouge_n_f1(&a, &a, 1), 1.0);
        prop_assert_eq!(rouge_n_f1(&a, &a, 2), 1.0);
        prop_assert_eq!(rouge_l_f1(&a, &a), 1.0);
    }

    #[test]
    fn lcs_bounds(a in tokens(15), b in tokens(15)) {
        let l = lcs_len(&a.tokens, &b.tokens);
        prop_assert!(l <= a.len().min(b.len()));
        prop_assert_eq!(l, lcs_len(&b.tokens, &a.tokens));
    }

    #[test]
    fn coverage_is_clipped_difference(p in tokens(20), h in tokens(10), u in tokens(10), clip in 0.05f64..1.0) {
        prop_assume!(!p.is_empty());
        let cfg = RewardConfig { cov_clip: clip, ..RewardConfig::default() };
        let c = coverage_reward(&p, &h, &u, &cfg).unwrap();
        let raw = rouge_n_f1(&p, &h.concat(&u), 1) - rouge_n_f1(&p, &h, 1);
        prop_assert!((c.r_cov_raw - raw).abs() <= 1e-15);
        prop_assert!(c.r_cov <= clip);
        prop_assert_eq!(c.clipped, raw > clip);
        prop_assert_eq!(c.r_cov, raw.min(clip));
    }

    #[test]
    fn mixed_is_convex_combination(a in 0.0f64..1.0, b in 0.0f64..1.0, beta in 0.0f64..=1.0) {
        let m = mixed_reward(a, b, beta);
        prop_assert!(m >= a.min(b) - 1e-15 && m <= a.max(b) + 1e-15);
        prop_assert_eq!(mixed_reward(a, b, 1.0), a);
        prop_assert_eq!(mixed_reward(a, b, 0.0), b);
    }

    #[test]
    fn softmax_pair_in_unit_interval(o_c in -800.0f64..800.0, o_i in -800.0f64..800.0) {
        let s = softmax_pair(o_c, o_i);
        prop_assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        prop_assert!((s + softmax_pair(o_i, o_c) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lexical_coherence_in_unit_interval(h in tokens(12), r in tokens(12)) {
        let hs = [h.tokens.join(" ")];
        let v = score_lexical_baseline(&hs, &r.tokens.join(" ")).value;
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn policy_distribution_is_normalized(params in weights(), pi in 0usize..30) {
        let corpus = toy_corpus();
        let c = policy::gen_candidates(&corpus[pi], &[]).unwrap();
        let p = policy::probabilities(&params, &c).unwrap();
        prop_assert!(p.iter().all(|x| *x >= 0.0 && x.is_finite()));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let g = policy::log_prob_grad(&params, &c, 0).unwrap();
        // expected gradient under the policy is zero
        let mut e = [0.0; FEATURE_DIM];
        for (i, pi) in p.iter().enumerate() {
            let gi = policy::log_prob_grad(&params, &c, i).unwrap();
            for k in 0..FEATURE_DIM {
                e[k] += pi * gi[k];
            }
        }
        prop_assert!(e.iter().all(|x| x.abs() <= 1e-9));
        prop_assert!(g[FEATURE_DIM - 1].abs() <= 1e-12);
    }

    #[test]
    fn info_gain_telescopes(params in weights(), pi in 0usize..30, seed in any::<u64>(), n in 1usize..4) {
        let corpus = toy_corpus();
        let p = &corpus[pi];
        let conv = run_conversation(p, &params, &RuleStudent::default(), n, DecodeMode::Sampled, seed).unwrap();
        for v in RougeVariant::ALL {
            let ig = info_gain(p, &conv, v).unwrap();
            prop_assert_eq!(ig.len(), n);
            // teacher gains plus student deltas telescope to the final score
            let mut student_total = 0.0;
            let mut teacher_gains = Vec::new();
            let mut hist = TokenSeq::default();
            let mut before = 0.0;
            for t in &conv.turns {
                hist = hist.concat(&teachplay::tokenize(&t.text));
                let after = v.score(&p.tokens, &hist);
                match t.speaker {
                    Speaker::Teacher => teacher_gains.push(after - before),
                    Speaker::Student => student_total += after - before,
                }
                before = after;
            }
            prop_assert_eq!(&ig, &teacher_gains);
            let total = ig.iter().sum::<f64>() + student_total;
            prop_assert!((total - v.score(&p.tokens, &hist)).abs() <= 1e-12);
        }
    }

    #[test]
    fn per_turn_rewards_one_per_teacher_turn(params in weights(), pi in 0usize..30, seed in any::<u64>(), n in 1usize..4) {
        let corpus = toy_corpus();
        let p = &corpus[pi];
        let conv = run_conversation(p, &params, &RuleStudent::default(), n, DecodeMode::Sampled, seed).unwrap();
        for attribution in [AttributionMode::PerTurnTeacher, AttributionMode::PerTurnBoth, AttributionMode::EndOfConversation] {
            let cfg = RewardConfig { attribution, ..RewardConfig::default() };
            let r = attribute_rewards(p, &conv, &cfg, &LexicalBaseline).unwrap();
            prop_assert_eq!(r.len(), n);
            prop_assert!(r.iter().all(|b| b.r_cov <= cfg.cov_clip && (0.0..=1.0).contains(&b.r_coh)));
        }
    }

    #[test]
    fn split_partitions(seed in any::<u64>(), n in 3usize..200) {
        let items: Vec<usize> = (0..n).collect();
        let (a, b, c) = split(&items, seed, (0.8, 0.1, 0.1)).unwrap();
        prop_assert_eq!((a.len(), b.len(), c.len()), split_sizes(n, (0.8, 0.1, 0.1)));
        let mut all: Vec<usize> = a.into_iter().chain(b).chain(c).collect();
        all.sort_unstable();
        prop_assert_eq!(all, items);
    }

    #[test]
    fn seed_derivation_is_pure(base in any::<u64>(), path in prop::collection::vec(any::<u64>(), 0..4)) {
        prop_assert_eq!(seeds::derive(base, &path), seeds::derive(base, &path));
    }
}

#[test]
fn sampled_decisions_follow_the_policy() {
    let corpus = toy_corpus();
    let c = policy::gen_candidates(&corpus[0], &[]).unwrap();
    let params = PolicyParams {
        weights: [3.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        temperature: 1.0,
    };
    let p = policy::probabilities(&params, &c).unwrap();
    let n = 20_000;
    let mut counts = vec![0usize; c.len()];
    for s in 0..n {
        counts[policy::decide(&params, &c, DecodeMode::Sampled, s).unwrap().chosen_index] += 1;
    }
    for (k, pk) in counts.iter().zip(&p) {
        let freq = *k as f64 / n as f64;
        let sd = (pk * (1.0 - pk) / n as f64).sqrt();
        assert!((freq - pk).abs() <= 5.0 * sd + 1e-3, "freq {freq} vs p {pk}");
    }
}
