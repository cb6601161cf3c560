mod common;

use approx::assert_abs_diff_eq;
use cssr::baselines::{hmm_word_distribution, DenseHmm};
use cssr::sources::{even_process, ProcessSpec, SEVEN_STATE_SPEC};
use cssr::stats::{chi2_two_sample, ks_coefficient, ks_two_sample};
use common::{brute_force_words, oracle_stationary, random_machine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seven() -> cssr::CausalStateMachine {
    ProcessSpec::parse(SEVEN_STATE_SPEC).unwrap().build().unwrap()
}

fn assert_matches_brute_force(m: &cssr::CausalStateMachine, max_len: usize) {
    for len in 0..=max_len {
        let fast = m.word_distribution(len).unwrap();
        let slow = brute_force_words(m, len);
        for (a, b) in fast.probs().iter().zip(&slow) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}

#[test]
fn word_distributions_match_path_enumeration() {
    assert_matches_brute_force(&even_process(), 6);
    assert_matches_brute_force(&seven(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..20 {
        let m = random_machine(&mut rng, 1 + i % 6, 2 + i % 2);
        assert_matches_brute_force(&m, 6);
    }
}

#[test]
fn stationary_matches_independent_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let m = random_machine(&mut rng, 5, 3);
        for (a, b) in m.stationary_distribution().iter().zip(oracle_stationary(&m)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }
}

#[test]
fn even_process_conditionals() {
    // Hand-derived: after an A the machine is in state 1; inside a run of
    // B's of unknown start, odd and even run lengths are mixed.
    let m = even_process();
    let cond = |hist: &str, next: &str| {
        let a = m.alphabet();
        let h = a.parse_word(hist).unwrap();
        let mut w = h.clone();
        w.extend(a.parse_word(next).unwrap());
        m.word_probability(&w) / m.word_probability(&h)
    };
    assert_abs_diff_eq!(cond("-", "B"), 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cond("B", "B"), 3.0 / 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cond("BB", "B"), 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cond("BBB", "B"), 3.0 / 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cond("AB", "B"), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cond("ABB", "B"), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(m.entropy_rate(), 2.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn even_process_as_state_emitting_hmm() {
    let m = even_process();
    let h = DenseHmm::from_machine(&m).unwrap();
    for len in 1..=6 {
        let a = hmm_word_distribution(&h, len).unwrap();
        let b = m.word_distribution(len).unwrap();
        assert!(a.tv_distance(&b).unwrap() < 1e-10);
    }
}

#[test]
fn test_statistics_against_hand_values() {
    assert_abs_diff_eq!(ks_coefficient(1e-3), (-(0.0005f64).ln() / 2.0).sqrt(), epsilon = 1e-15);
    let d = ks_two_sample(&[5000, 5000], &[0, 100], 1e-3);
    assert_abs_diff_eq!(d.critical_or_p, 0.19592, epsilon = 1e-4);
    assert!(d.reject);
    // 2x2 table (90,10 / 10,90): expected 50 in every cell, (40^2/50) * 4.
    let c = chi2_two_sample(&[90, 10], &[10, 90], 1e-3);
    assert_abs_diff_eq!(c.statistic, 128.0, epsilon = 1e-9);
    // Survival of chi-squared(1) at 128 is erfc(8); far below alpha.
    assert!(c.critical_or_p < 1e-28);
}
