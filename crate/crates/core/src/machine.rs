//! Immutable causal-state machines.
//!
//! A machine is a recurrent, unifilar hidden Markov model whose transitions
//! carry symbols: from state `s` the symbol `b` is emitted with probability
//! `P(b | s)` and the next state is `T(s, b)`. States may also carry the
//! history suffixes that identify them, which is what lets a history be
//! mapped to a state.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CssrError, Result};
use crate::sequence::{Alphabet, Symbol, SymbolSequence, Word};
use crate::stats::Distribution;

/// Machines larger than this use power iteration for the stationary
/// distribution instead of a dense solve.
const DENSE_SOLVE_LIMIT: usize = 1000;
const EMISSION_TOLERANCE: f64 = 1e-12;
/// Largest dense word distribution (entries) we are willing to allocate.
const MAX_WORD_SPACE: usize = 1 << 26;

/// Construction-time description of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    pub label: String,
    pub suffixes: Vec<Word>,
    /// `P(b | s)` in alphabet order.
    pub emission: Vec<f64>,
    /// `T(s, b)` as an index into the state list; ignored where the emission
    /// probability is zero.
    pub transitions: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    label: String,
    suffixes: Vec<Word>,
    emission: Distribution,
    transitions: Vec<Option<usize>>,
}

impl MachineState {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn suffixes(&self) -> &[Word] {
        &self.suffixes
    }

    pub fn emission(&self) -> &Distribution {
        &self.emission
    }

    pub fn transition(&self, symbol: Symbol) -> Option<usize> {
        self.transitions[symbol as usize]
    }
}

/// Recurrent unifilar machine with its stationary state distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalStateMachine {
    alphabet: Alphabet,
    states: Vec<MachineState>,
    suffix_index: HashMap<Word, usize>,
    max_suffix_len: usize,
    stationary: Vec<f64>,
}

impl CausalStateMachine {
    /// Validates and builds a machine: emissions must be distributions, every
    /// positive-probability symbol needs a successor, suffix sets must be
    /// disjoint and the transition graph strongly connected.
    pub fn new(alphabet: Alphabet, specs: Vec<StateSpec>) -> Result<Self> {
        let k = alphabet.len();
        let n = specs.len();
        if n == 0 {
            return Err(CssrError::MalformedMachine("machine has no states".into()));
        }
        let mut states = Vec::with_capacity(n);
        let mut suffix_index = HashMap::new();
        let mut max_suffix_len = 0;
        for (i, spec) in specs.into_iter().enumerate() {
            if spec.emission.len() != k || spec.transitions.len() != k {
                return Err(CssrError::MalformedMachine(format!(
                    "state {} has {} emissions and {} transitions for a {k}-symbol alphabet",
                    spec.label,
                    spec.emission.len(),
                    spec.transitions.len()
                )));
            }
            let sum: f64 = spec.emission.iter().sum();
            if spec.emission.iter().any(|p| !(0.0..=1.0 + EMISSION_TOLERANCE).contains(p))
                || (sum - 1.0).abs() > 1e-9
            {
                return Err(CssrError::MalformedMachine(format!(
                    "state {} emission probabilities {:?} do not form a distribution",
                    spec.label, spec.emission
                )));
            }
            let emission = Distribution::new(spec.emission)
                .map_err(|e| CssrError::MalformedMachine(format!("state {}: {e}", spec.label)))?;
            let mut transitions = spec.transitions;
            for (b, t) in transitions.iter_mut().enumerate() {
                if emission.prob(b) == 0.0 {
                    *t = None;
                    continue;
                }
                match *t {
                    Some(to) if to < n => {}
                    Some(to) => {
                        return Err(CssrError::MalformedMachine(format!(
                            "state {} transition to unknown state index {to}",
                            spec.label
                        )))
                    }
                    None => {
                        return Err(CssrError::MalformedMachine(format!(
                            "state {} emits {:?} with positive probability but has no successor",
                            spec.label,
                            alphabet.symbol(b as Symbol)
                        )))
                    }
                }
            }
            for w in &spec.suffixes {
                if w.iter().any(|&s| s as usize >= k) {
                    return Err(CssrError::MalformedMachine(format!("state {} suffix uses unknown symbol", spec.label)));
                }
                if let Some(prev) = suffix_index.insert(w.clone(), i) {
                    if prev != i {
                        return Err(CssrError::MalformedMachine(format!(
                            "suffix {} belongs to two states",
                            alphabet.render(w)
                        )));
                    }
                }
                max_suffix_len = max_suffix_len.max(w.len());
            }
            let mut suffixes = spec.suffixes;
            suffixes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            suffixes.dedup();
            states.push(MachineState { label: spec.label, suffixes, emission, transitions });
        }
        let mut machine = CausalStateMachine {
            alphabet,
            states,
            suffix_index,
            max_suffix_len,
            stationary: Vec::new(),
        };
        if !machine.is_strongly_connected() {
            return Err(CssrError::NotStronglyConnected);
        }
        machine.stationary = machine.solve_stationary()?;
        Ok(machine)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[MachineState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &MachineState {
        &self.states[i]
    }

    /// Longest suffix stored in any state; a diagnostic stand-in for the
    /// synchronization length.
    pub fn max_suffix_len(&self) -> usize {
        self.max_suffix_len
    }

    /// Index of the state with the given label.
    pub fn state_by_label(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s.label == label)
    }

    /// Number of positive-probability transitions.
    pub fn num_transitions(&self) -> usize {
        self.states
            .iter()
            .map(|s| s.emission.probs().iter().filter(|&&p| p > 0.0).count())
            .sum()
    }

    /// `T(s, b)` when `P(b | s) > 0`.
    pub fn next_state(&self, state: usize, symbol: Symbol) -> Option<usize> {
        self.states[state].transitions[symbol as usize]
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.states
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.transitions.iter().flatten().map(move |&t| (i, t)))
    }

    /// Every positive-probability `(state, symbol)` pair has exactly one
    /// successor. Holds by construction; exposed for invariant checks.
    pub fn is_unifilar(&self) -> bool {
        self.states.iter().all(|s| {
            (0..self.alphabet.len()).all(|b| (s.emission.prob(b) > 0.0) == s.transitions[b].is_some())
        })
    }

    pub fn is_strongly_connected(&self) -> bool {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.states.len()).map(|_| g.add_node(())).collect();
        for (a, b) in self.edges() {
            g.add_edge(nodes[a], nodes[b], ());
        }
        tarjan_scc(&g).len() == 1
    }

    /// State-to-state transition matrix `M(s, s') = sum over b with
    /// T(s, b) = s' of P(b | s)`.
    pub fn state_transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, s) in self.states.iter().enumerate() {
            for (b, t) in s.transitions.iter().enumerate() {
                if let Some(t) = *t {
                    m[i][t] += s.emission.prob(b);
                }
            }
        }
        m
    }

    fn solve_stationary(&self) -> Result<Vec<f64>> {
        stationary_of(&self.state_transition_matrix())
    }

    /// Stationary distribution over states, `pi M = pi`.
    pub fn stationary_distribution(&self) -> &[f64] {
        &self.stationary
    }

    /// Stationary probability of each symbol.
    pub fn symbol_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.alphabet.len()];
        for (s, &w) in self.states.iter().zip(&self.stationary) {
            for (b, p) in s.emission.probs().iter().enumerate() {
                out[b] += w * p;
            }
        }
        out
    }

    /// Entropy rate in bits per symbol; exact for unifilar machines.
    pub fn entropy_rate(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.stationary)
            .map(|(s, &w)| w * s.emission.entropy_bits())
            .sum()
    }

    /// Stationary probability of a single word.
    pub fn word_probability(&self, word: &[Symbol]) -> f64 {
        let mut total = 0.0;
        for (start, &w) in self.stationary.iter().enumerate() {
            let mut p = w;
            let mut s = start;
            for &b in word {
                let state = &self.states[s];
                p *= state.emission.prob(b as usize);
                if p == 0.0 {
                    break;
                }
                s = state.transitions[b as usize].expect("positive emission has a successor");
            }
            total += p;
        }
        total
    }

    /// Exact stationary distribution over all words of length `len`.
    pub fn word_distribution(&self, len: usize) -> Result<WordDistribution> {
        let k = self.alphabet.len();
        let size = word_space(k, len)?;
        let mut probs = vec![0.0; size];
        let n = self.states.len();
        // Depth-first over words, carrying the mass sitting in each state.
        let mut stack: Vec<(usize, usize, Vec<f64>)> = vec![(0, 0, self.stationary.clone())];
        while let Some((depth, index, mass)) = stack.pop() {
            if depth == len {
                probs[index] = mass.iter().sum();
                continue;
            }
            for b in (0..k).rev() {
                let mut next = vec![0.0; n];
                let mut any = false;
                for (s, &m) in mass.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let state = &self.states[s];
                    let p = state.emission.prob(b);
                    if p > 0.0 {
                        let t = state.transitions[b].expect("positive emission has a successor");
                        next[t] += m * p;
                        any = true;
                    }
                }
                if any {
                    stack.push((depth + 1, index * k + b, next));
                }
            }
        }
        Ok(WordDistribution { alphabet_size: k, len, probs })
    }

    /// Maps a history to the state holding its longest suffix.
    pub fn epsilon_map(&self, history: &[Symbol]) -> Option<usize> {
        let longest = history.len().min(self.max_suffix_len);
        (0..=longest)
            .rev()
            .find_map(|l| self.suffix_index.get(&history[history.len() - l..]).copied())
    }

    /// Next-symbol distribution given a history. Unsynchronized histories
    /// yield an error carrying the stationary symbol marginal.
    pub fn predict_next(&self, history: &[Symbol]) -> Result<Distribution> {
        match self.epsilon_map(history) {
            Some(s) => Ok(self.states[s].emission.clone()),
            None => Err(CssrError::Unsynchronized { fallback: self.symbol_marginal() }),
        }
    }

    /// Samples `n` symbols, starting from a state drawn from the stationary
    /// distribution. The generator is ChaCha8 seeded with `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> SymbolSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate_with(n, &mut rng)
    }

    pub fn simulate_with<R: rand::Rng>(&self, n: usize, rng: &mut R) -> SymbolSequence {
        if n == 0 {
            return SymbolSequence::default();
        }
        let start = WeightedIndex::new(&self.stationary).expect("stationary distribution is valid");
        let emitters: Vec<WeightedIndex<f64>> = self
            .states
            .iter()
            .map(|s| WeightedIndex::new(s.emission.probs()).expect("emission is a distribution"))
            .collect();
        let mut state = start.sample(rng);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let b = emitters[state].sample(rng);
            out.push(b as Symbol);
            state = self.states[state].transitions[b].expect("sampled symbol has a successor");
        }
        SymbolSequence::new(out)
    }

    /// Serializes to the machine text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alphabet: {}", self.alphabet);
        for s in &self.states {
            let suffixes: Vec<String> = s.suffixes.iter().map(|w| self.alphabet.render_compact(w)).collect();
            if suffixes.is_empty() {
                let _ = writeln!(out, "state {}:", s.label);
            } else {
                let _ = writeln!(out, "state {}: {}", s.label, suffixes.join(" "));
            }
        }
        for s in &self.states {
            for (b, &p) in s.emission.probs().iter().enumerate() {
                if p > 0.0 {
                    let to = s.transitions[b].expect("positive emission has a successor");
                    let _ = writeln!(
                        out,
                        "{} {} {:.16e} {}",
                        s.label,
                        self.alphabet.symbol(b as Symbol),
                        p,
                        self.states[to].label
                    );
                }
            }
        }
        out
    }

    /// Parses the machine text format (see [`crate::sources::ProcessSpec`]).
    pub fn from_text(text: &str) -> Result<Self> {
        crate::sources::ProcessSpec::parse(text)?.build()
    }
}

/// Stationary distribution of a row-stochastic matrix. Dense LU for small
/// chains, lazy power iteration otherwise or when LU is unusable (e.g. a
/// reducible chain, where the result depends on the uniform start).
pub(crate) fn stationary_of(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    if n == 0 {
        return Err(CssrError::MalformedMachine("no states".into()));
    }
    let finish = |pi: Vec<f64>| -> Option<Vec<f64>> {
        let pi: Vec<f64> = pi.iter().map(|&p| if p.is_finite() { p.max(0.0) } else { 0.0 }).collect();
        let sum: f64 = pi.iter().sum();
        if !(sum > 0.0) {
            return None;
        }
        let pi: Vec<f64> = pi.iter().map(|p| p / sum).collect();
        let residual = (0..n)
            .map(|j| ((0..n).map(|i| pi[i] * m[i][j]).sum::<f64>() - pi[j]).abs())
            .fold(0.0, f64::max);
        (residual <= 1e-10).then_some(pi)
    };
    if n <= DENSE_SOLVE_LIMIT {
        // Solve (M^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(j, i)] = m[i][j];
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs[n - 1] = 1.0;
        if let Some(pi) = a.lu().solve(&rhs).and_then(|x| finish(x.iter().copied().collect())) {
            return Ok(pi);
        }
    }
    finish(power_iteration(m)).ok_or_else(|| {
        CssrError::MalformedMachine("stationary distribution residual exceeds 1e-10".into())
    })
}

fn power_iteration(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut pi = vec![1.0 / n as f64; n];
    // Lazy chain (M + I) / 2 has the same fixed point and is aperiodic.
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] += 0.5 * pi[i];
            for j in 0..n {
                next[j] += 0.5 * pi[i] * m[i][j];
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-12 {
            break;
        }
    }
    pi
}

pub(crate) fn word_space(k: usize, len: usize) -> Result<usize> {
    k.checked_pow(len as u32)
        .filter(|&s| s <= MAX_WORD_SPACE)
        .ok_or_else(|| CssrError::InvalidConfig(format!("{k}^{len} words is too many to enumerate")))
}

/// Dense distribution over all words of one length, indexed in
/// lexicographic order (first symbol most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution {
    alphabet_size: usize,
    len: usize,
    probs: Vec<f64>,
}

impl WordDistribution {
    pub fn from_dense(alphabet_size: usize, len: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != word_space(alphabet_size, len)? {
            return Err(CssrError::InvalidDistribution("dense word vector has the wrong size".into()));
        }
        Ok(WordDistribution { alphabet_size, len, probs })
    }

    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, word: &[Symbol]) -> usize {
        assert_eq!(word.len(), self.len, "word length mismatch");
        word.iter().fold(0, |acc, &s| acc * self.alphabet_size + s as usize)
    }

    pub fn get(&self, word: &[Symbol]) -> f64 {
        self.probs[self.index_of(word)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out the last symbol.
    pub fn marginalize_last(&self) -> WordDistribution {
        assert!(self.len > 0);
        let probs = self.probs.chunks(self.alphabet_size).map(|c| c.iter().sum()).collect();
        WordDistribution { alphabet_size: self.alphabet_size, len: self.len - 1, probs }
    }

    /// Total variation (L1) distance.
    pub fn tv_distance(&self, other: &WordDistribution) -> Result<f64> {
        if self.alphabet_size != other.alphabet_size || self.len != other.len {
            return Err(CssrError::AlphabetMismatch(format!(
                "word distributions over {}^{} and {}^{}",
                self.alphabet_size, self.len, other.alphabet_size, other.len
            )));
        }
        crate::stats::tv_distance_slices(&self.probs, &other.probs)
    }
}
