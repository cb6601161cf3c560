mod common;

use cssr::baselines::vlmm_learn;
use cssr::sequence::{Alphabet, Symbol, SymbolSequence};
use cssr::stats::{chi2_two_sample, ks_two_sample};
use cssr::{run_cssr, CausalStateMachine, CssrConfig, ParseTree, TestKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn naive_count(data: &[Symbol], word: &[Symbol]) -> u64 {
    if word.is_empty() {
        return data.len() as u64;
    }
    data.windows(word.len()).filter(|w| *w == word).count() as u64
}

fn seq_strategy(k: u16, max_len: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0..k, 1..max_len)
}

fn machine_strategy() -> impl Strategy<Value = CausalStateMachine> {
    (any::<u64>(), 1usize..6, 2usize..4).prop_map(|(seed, n, k)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_machine(&mut rng, n, k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_tree_counts_match_naive(data in seq_strategy(3, 200), l_max in 0usize..4) {
        let seq = SymbolSequence::new(data.clone());
        let tree = ParseTree::build(&seq, 3, l_max).unwrap();
        prop_assert!(tree.is_monotone());
        let alphabet = Alphabet::from_chars("ABC").unwrap();
        for len in 1..=l_max + 1 {
            for w in alphabet.words_of_length(len) {
                prop_assert_eq!(tree.count(&w), naive_count(&data, &w));
            }
        }
    }

    #[test]
    fn word_distribution_sums_and_marginalizes(m in machine_strategy(), len in 1usize..6) {
        let d = m.word_distribution(len).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
        let shorter = m.word_distribution(len - 1).unwrap();
        prop_assert!(d.marginalize_last().tv_distance(&shorter).unwrap() < 1e-12);
    }

    #[test]
    fn tv_is_symmetric_and_bounded(a in machine_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = common::random_machine(&mut rng, 3, a.alphabet().len());
        let (da, db) = (a.word_distribution(4).unwrap(), b.word_distribution(4).unwrap());
        let ab = da.tv_distance(&db).unwrap();
        let ba = db.tv_distance(&da).unwrap();
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert!(da.tv_distance(&da).unwrap() == 0.0);
    }

    #[test]
    fn machine_text_round_trips(m in machine_strategy()) {
        let back = CausalStateMachine::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back.num_states(), m.num_states());
        let d = back.word_distribution(5).unwrap().tv_distance(&m.word_distribution(5).unwrap()).unwrap();
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn tests_are_symmetric(a in prop::collection::vec(0u64..50, 3), b in prop::collection::vec(0u64..50, 3)) {
        let (x, y) = (ks_two_sample(&a, &b, 0.01), ks_two_sample(&b, &a, 0.01));
        prop_assert_eq!(x.reject, y.reject);
        prop_assert!((x.statistic - y.statistic).abs() < 1e-15);
        let (x, y) = (chi2_two_sample(&a, &b, 0.01), chi2_two_sample(&b, &a, 0.01));
        prop_assert_eq!(x.reject, y.reject);
        prop_assert!((x.statistic - y.statistic).abs() < 1e-9);
    }

    #[test]
    fn ks_rejects_more_with_more_data(a in prop::collection::vec(1u64..30, 2), b in prop::collection::vec(1u64..30, 2), scale in 2u64..20) {
        let small = ks_two_sample(&a, &b, 0.01);
        let a2: Vec<u64> = a.iter().map(|x| x * scale).collect();
        let b2: Vec<u64> = b.iter().map(|x| x * scale).collect();
        let big = ks_two_sample(&a2, &b2, 0.01);
        prop_assert!((small.statistic - big.statistic).abs() < 1e-12);
        prop_assert!(big.critical_or_p < small.critical_or_p);
        prop_assert!(!small.reject || big.reject);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cssr_output_is_unifilar_and_connected(m in machine_strategy(), n in 200usize..3000, l_max in 1usize..5, chi in any::<bool>()) {
        let data = m.simulate(n, n as u64);
        let config = CssrConfig {
            test: if chi { TestKind::ChiSquared } else { TestKind::Ks },
            ..CssrConfig::new(l_max, 0.01)
        };
        if let Ok(out) = run_cssr(&[data], m.alphabet(), &config) {
            prop_assert!(out.machine.is_unifilar());
            prop_assert!(out.machine.is_strongly_connected());
            prop_assert!((out.machine.word_distribution(3).unwrap().total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vlmm_contexts_are_suffix_free(m in machine_strategy(), n in 200usize..3000, l_max in 1usize..5) {
        let data = m.simulate(n, 1 + n as u64);
        let tree = ParseTree::build(&data, m.alphabet().len(), l_max).unwrap();
        let ctx = vlmm_learn(&tree, &CssrConfig::new(l_max, 0.01)).unwrap();
        prop_assert!(ctx.is_suffix_free());
        prop_assert!(ctx.num_contexts() >= 1);
    }
}

/// Under the null both samples come from one distribution, so the rejection
/// rate of the chi-squared test should sit near alpha.
#[test]
fn chi_squared_null_rejection_rate() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let alpha = 0.05;
    let trials = 4000;
    let mut rejections = 0;
    for _ in 0..trials {
        let mut a = [0u64; 3];
        let mut b = [0u64; 3];
        for _ in 0..300 {
            a[pick(&mut rng)] += 1;
            b[pick(&mut rng)] += 1;
        }
        if chi2_two_sample(&a, &b, alpha).reject {
            rejections += 1;
        }
    }
    fn pick<R: Rng>(rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        if u < 0.5 { 0 } else if u < 0.8 { 1 } else { 2 }
    }
    let rate = rejections as f64 / trials as f64;
    let se = (alpha * (1.0 - alpha) / trials as f64).sqrt();
    assert!((rate - alpha).abs() < 4.0 * se, "rate {rate}");
}
