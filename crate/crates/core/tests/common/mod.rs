#![allow(dead_code)]

use cssr::sequence::{Alphabet, Symbol};
use cssr::{CausalStateMachine, StateSpec};
use rand::Rng;

/// Random strongly connected unifilar machine with `n` states over `k`
/// symbols. Emission probabilities are multiples of 1/8 with some zeros.
pub fn random_machine<R: Rng>(rng: &mut R, n: usize, k: usize) -> CausalStateMachine {
    let letters = "ABCDEFGH";
    let alphabet = Alphabet::from_chars(&letters[..k]).unwrap();
    loop {
        let specs: Vec<StateSpec> = (0..n)
            .map(|i| {
                let mut w: Vec<u32> = (0..k).map(|_| rng.gen_range(0..4)).collect();
                if w.iter().all(|&x| x == 0) {
                    w[rng.gen_range(0..k)] = 1;
                }
                let total: u32 = w.iter().sum();
                StateSpec {
                    label: format!("s{i}"),
                    suffixes: vec![],
                    emission: w.iter().map(|&x| x as f64 / total as f64).collect(),
                    transitions: (0..k).map(|_| Some(rng.gen_range(0..n))).collect(),
                }
            })
            .collect();
        if let Ok(m) = CausalStateMachine::new(alphabet.clone(), specs) {
            return m;
        }
    }
}

/// Stationary distribution by power iteration on the lazy chain, written
/// independently of the library's solver.
pub fn oracle_stationary(m: &CausalStateMachine) -> Vec<f64> {
    let n = m.num_states();
    let k = m.alphabet().len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..2_000_000 {
        let mut next: Vec<f64> = pi.iter().map(|p| 0.5 * p).collect();
        for s in 0..n {
            for b in 0..k {
                let p = m.state(s).emission().prob(b);
                if p > 0.0 {
                    next[m.next_state(s, b as Symbol).unwrap()] += 0.5 * pi[s] * p;
                }
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-17 {
            break;
        }
    }
    pi
}

/// Probability of every word of length `len`, by following the single path
/// each start state induces.
pub fn brute_force_words(m: &CausalStateMachine, len: usize) -> Vec<f64> {
    let k = m.alphabet().len();
    let pi = oracle_stationary(m);
    let total = k.pow(len as u32);
    (0..total)
        .map(|idx| {
            let mut word = vec![0usize; len];
            let mut x = idx;
            for pos in (0..len).rev() {
                word[pos] = x % k;
                x /= k;
            }
            (0..m.num_states())
                .map(|s0| {
                    let mut p = pi[s0];
                    let mut s = s0;
                    for &b in &word {
                        let e = m.state(s).emission().prob(b);
                        if e == 0.0 {
                            return 0.0;
                        }
                        p *= e;
                        s = m.next_state(s, b as Symbol).unwrap();
                    }
                    p
                })
                .sum()
        })
        .collect()
}
