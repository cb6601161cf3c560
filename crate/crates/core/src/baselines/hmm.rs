//! Fully connected state-emitting HMMs, Baum-Welch training and
//! cross-validated choice of the number of hidden states.

use rand::Rng;

use crate::error::{CssrError, Result};
use crate::machine::{stationary_of, word_space, CausalStateMachine, WordDistribution};
use crate::seed::derive_rng;
use crate::sequence::{Alphabet, Symbol, SymbolSequence};

/// Hidden Markov model in which each hidden state emits a symbol and then
/// moves. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHmm {
    m: usize,
    k: usize,
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

fn normalize_row(row: &mut [f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(CssrError::InvalidDistribution(format!("{what}: negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CssrError::InvalidDistribution(format!("{what}: row sums to {sum}")));
    }
    row.iter_mut().for_each(|p| *p /= sum);
    Ok(())
}

impl DenseHmm {
    /// Builds a model from explicit parameters. Rows must sum to one within
    /// `1e-9` and are renormalized.
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>, emission: Vec<Vec<f64>>) -> Result<Self> {
        let m = initial.len();
        if m == 0 || transition.len() != m || emission.len() != m {
            return Err(CssrError::InvalidConfig("HMM needs matching nonempty parameter blocks".into()));
        }
        let k = emission[0].len();
        if k == 0 || transition.iter().any(|r| r.len() != m) || emission.iter().any(|r| r.len() != k) {
            return Err(CssrError::InvalidConfig("ragged HMM parameter matrix".into()));
        }
        let mut initial = initial;
        normalize_row(&mut initial, "initial distribution")?;
        let mut t: Vec<f64> = transition.concat();
        let mut e: Vec<f64> = emission.concat();
        for (i, row) in t.chunks_mut(m).enumerate() {
            normalize_row(row, &format!("transition row {i}"))?;
        }
        for (i, row) in e.chunks_mut(k).enumerate() {
            normalize_row(row, &format!("emission row {i}"))?;
        }
        Ok(DenseHmm { m, k, initial, transition: t, emission: e })
    }

    /// Fully connected model with every parameter set to its uniform value
    /// times `1 + u`, `u` uniform in `[-0.1, 0.1]`, then renormalized.
    pub fn perturbed_uniform<R: Rng>(m: usize, k: usize, rng: &mut R) -> Self {
        assert!(m >= 1 && k >= 1);
        let mut row = |n: usize| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| 1.0 + rng.gen_range(-0.1..=0.1)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let initial = row(m);
        let transition = (0..m).flat_map(|_| row(m)).collect();
        let emission = (0..m).flat_map(|_| row(k)).collect();
        DenseHmm { m, k, initial, transition, emission }
    }

    /// State-emitting encoding of a transition-emitting machine: one hidden
    /// state per (state, symbol) pair with nonzero probability, which emits
    /// that symbol with certainty.
    pub fn from_machine(machine: &CausalStateMachine) -> Result<Self> {
        let k = machine.alphabet().len();
        let mut pairs = Vec::new();
        for (s, st) in machine.states().iter().enumerate() {
            for b in 0..k {
                if st.emission().prob(b) > 0.0 && st.transition(b as Symbol).is_some() {
                    pairs.push((s, b));
                }
            }
        }
        let index = |s: usize, b: usize| pairs.iter().position(|&p| p == (s, b));
        let m = pairs.len();
        let pi = machine.stationary_distribution();
        let mut initial = vec![0.0; m];
        let mut transition = vec![0.0; m * m];
        let mut emission = vec![0.0; m * k];
        for (h, &(s, b)) in pairs.iter().enumerate() {
            let st = machine.state(s);
            initial[h] = pi[s] * st.emission().prob(b);
            emission[h * k + b] = 1.0;
            let t = st.transition(b as Symbol).expect("pairs only hold defined transitions");
            for c in 0..k {
                if let Some(g) = index(t, c) {
                    transition[h * m + g] = machine.state(t).emission().prob(c);
                }
            }
        }
        let sum: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|p| *p /= sum);
        for row in transition.chunks_mut(m) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        Ok(DenseHmm { m, k, initial, transition, emission })
    }

    pub fn num_states(&self) -> usize {
        self.m
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.m + j]
    }

    pub fn emission(&self, i: usize, b: usize) -> f64 {
        self.emission[i * self.k + b]
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        self.transition.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    pub fn emission_rows(&self) -> Vec<Vec<f64>> {
        self.emission.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_error(&self) -> f64 {
        let rows = std::iter::once(&self.initial[..])
            .chain(self.transition.chunks(self.m))
            .chain(self.emission.chunks(self.k));
        rows.map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Stationary distribution of the hidden chain.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        stationary_of(&self.transition_rows())
    }

    /// Natural-log likelihood of `seq` starting from the model's initial
    /// distribution; `-inf` when the sequence is impossible.
    pub fn log_likelihood(&self, seq: &SymbolSequence) -> f64 {
        self.log_likelihood_from(seq, &self.initial)
    }

    fn log_likelihood_from(&self, seq: &SymbolSequence, start: &[f64]) -> f64 {
        let m = self.m;
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut next = vec![0.0; m];
        let mut ll = 0.0;
        for (t, &x) in seq.as_slice().iter().enumerate() {
            let x = x as usize;
            if t == 0 {
                alpha = (0..m).map(|i| start[i] * self.emission(i, x)).collect();
            } else {
                for (j, n) in next.iter_mut().enumerate() {
                    *n = (0..m).map(|i| alpha[i] * self.transition[i * m + j]).sum::<f64>() * self.emission(j, x);
                }
                std::mem::swap(&mut alpha, &mut next);
            }
            let c: f64 = alpha.iter().sum();
            if !(c > 0.0) {
                return f64::NEG_INFINITY;
            }
            alpha.iter_mut().for_each(|a| *a /= c);
            ll += c.ln();
        }
        ll
    }

    /// Text form, in the same line-oriented family as machine files.
    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let join = |r: &[f64]| r.iter().map(|p| format!("{p:e}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("# hidden Markov model, state-emitting\nalphabet: {alphabet}\nhmm-states: {}\n", self.m);
        out += &format!("initial: {}\n", join(&self.initial));
        for (i, r) in self.transition.chunks(self.m).enumerate() {
            out += &format!("transition {i}: {}\n", join(r));
        }
        for (i, r) in self.emission.chunks(self.k).enumerate() {
            out += &format!("emission {i}: {}\n", join(r));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(Alphabet, Self)> {
        let mut alphabet = None;
        let mut m = None;
        let mut initial = None;
        let mut trans = Vec::new();
        let mut emis = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CssrError::Parse { line: n + 1, message };
            let (head, rest) = line.split_once(':').ok_or_else(|| err("expected `key: values`".into()))?;
            let nums = || -> Result<Vec<f64>> {
                rest.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad number {t:?}: {e}"))))
                    .collect()
            };
            let mut words = head.split_whitespace();
            match (words.next(), words.next()) {
                (Some("alphabet"), None) => {
                    let syms: Vec<&str> = rest.split_whitespace().collect();
                    alphabet = Some(Alphabet::new(&syms).map_err(|e| err(e.to_string()))?);
                }
                (Some("hmm-states"), None) => {
                    m = Some(rest.trim().parse::<usize>().map_err(|e| err(e.to_string()))?);
                }
                (Some("initial"), None) => initial = Some(nums()?),
                (Some(kind @ ("transition" | "emission")), Some(i)) => {
                    let i: usize = i.parse().map_err(|_| err(format!("bad row index {i:?}")))?;
                    let rows = if kind == "transition" { &mut trans } else { &mut emis };
                    if i != rows.len() {
                        return Err(err(format!("{kind} rows must be listed in order")));
                    }
                    rows.push(nums()?);
                }
                _ => return Err(err(format!("unknown key {head:?}"))),
            }
        }
        let missing = |what: &str| CssrError::Parse { line: 0, message: format!("missing {what}") };
        let alphabet = alphabet.ok_or_else(|| missing("alphabet"))?;
        let m = m.ok_or_else(|| missing("hmm-states"))?;
        let initial = initial.ok_or_else(|| missing("initial"))?;
        if initial.len() != m || trans.len() != m || emis.len() != m || emis.iter().any(|r| r.len() != alphabet.len()) {
            return Err(CssrError::Parse { line: 0, message: "parameter shapes disagree with header".into() });
        }
        Ok((alphabet, DenseHmm::new(initial, trans, emis)?))
    }
}

/// Baum-Welch settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once the per-symbol log-likelihood gain falls below this.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iters: 500, tol: 1e-6, restarts: 5 }
    }
}

/// A trained model and its training trace.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub hmm: DenseHmm,
    /// Log-likelihood of the returned model on the training data.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood before each update, then of the final model.
    pub trace: Vec<f64>,
}

struct Expectations {
    ll: f64,
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
}

/// Scaled forward-backward pass returning expected counts.
fn e_step(h: &DenseHmm, x: &[Symbol], iteration: usize) -> Result<Expectations> {
    let (m, k, n) = (h.m, h.k, x.len());
    let mut alpha = vec![0.0; n * m];
    let mut scale = vec![0.0; n];
    for t in 0..n {
        let xt = x[t] as usize;
        let (prev, cur) = alpha.split_at_mut(t * m);
        let cur = &mut cur[..m];
        if t == 0 {
            for i in 0..m {
                cur[i] = h.initial[i] * h.emission[i * k + xt];
            }
        } else {
            let prev = &prev[(t - 1) * m..];
            for (j, c) in cur.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..m {
                    s += prev[i] * h.transition[i * m + j];
                }
                *c = s * h.emission[j * k + xt];
            }
        }
        let c: f64 = cur.iter().sum();
        if !(c > 0.0) || !c.is_finite() {
            return Err(CssrError::Numerical {
                iteration,
                message: format!("forward pass underflow at position {t}"),
            });
        }
        cur.iter_mut().for_each(|a| *a /= c);
        scale[t] = c;
    }
    let ll: f64 = scale.iter().map(|c| c.ln()).sum();

    let mut trans = vec![0.0; m * m];
    let mut emis = vec![0.0; m * k];
    let mut beta = vec![1.0; m];
    let mut prev_beta = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for t in (0..n).rev() {
        let a = &alpha[t * m..(t + 1) * m];
        let xt = x[t] as usize;
        for i in 0..m {
            emis[i * k + xt] += a[i] * beta[i];
        }
        if t == 0 {
            break;
        }
        // weighted_j = B_j(x_t) beta_t(j) / c_t
        for j in 0..m {
            weighted[j] = h.emission[j * k + xt] * beta[j] / scale[t];
        }
        let ap = &alpha[(t - 1) * m..t * m];
        for i in 0..m {
            let row = &h.transition[i * m..(i + 1) * m];
            let mut s = 0.0;
            for j in 0..m {
                let w = row[j] * weighted[j];
                s += w;
                trans[i * m + j] += ap[i] * w;
            }
            prev_beta[i] = s;
        }
        std::mem::swap(&mut beta, &mut prev_beta);
    }
    let initial = (0..m).map(|i| alpha[i] * beta[i]).collect();
    Ok(Expectations { ll, initial, transition: trans, emission: emis })
}

/// Normalizes expected counts into rows; rows with no expected mass keep
/// their previous values.
fn m_step(h: &DenseHmm, e: &Expectations) -> DenseHmm {
    let (m, k) = (h.m, h.k);
    let mut out = h.clone();
    let renorm = |dst: &mut [f64], src: &[f64]| {
        let s: f64 = src.iter().sum();
        if s > 0.0 && s.is_finite() {
            dst.iter_mut().zip(src).for_each(|(d, v)| *d = v / s);
        }
    };
    renorm(&mut out.initial, &e.initial);
    for i in 0..m {
        renorm(&mut out.transition[i * m..(i + 1) * m], &e.transition[i * m..(i + 1) * m]);
        renorm(&mut out.emission[i * k..(i + 1) * k], &e.emission[i * k..(i + 1) * k]);
    }
    out
}

/// Baum-Welch from `hmm` until the per-symbol gain drops below `tol` or
/// `max_iters` updates have been made. Fails if the likelihood ever
/// decreases by more than `1e-9` per symbol.
pub fn em_train(hmm: &DenseHmm, seq: &SymbolSequence, config: &EmConfig) -> Result<EmFit> {
    if seq.is_empty() {
        return Err(CssrError::EmptySequence);
    }
    if let Some(&bad) = seq.as_slice().iter().find(|&&s| s as usize >= hmm.k) {
        return Err(CssrError::UnknownSymbol(format!("index {bad}")));
    }
    let n = seq.len() as f64;
    let x = seq.as_slice();
    let mut current = hmm.clone();
    let mut stats = e_step(&current, x, 0)?;
    let mut trace = vec![stats.ll];
    let mut iterations = 0;
    for iter in 1..=config.max_iters {
        let next = m_step(&current, &stats);
        let next_stats = e_step(&next, x, iter)?;
        let gain = (next_stats.ll - stats.ll) / n;
        if gain < -1e-9 {
            return Err(CssrError::Numerical {
                iteration: iter,
                message: format!("log-likelihood decreased by {:e} per symbol", -gain),
            });
        }
        current = next;
        stats = next_stats;
        trace.push(stats.ll);
        iterations = iter;
        if gain < config.tol {
            break;
        }
    }
    Ok(EmFit { hmm: current, log_likelihood: stats.ll, iterations, trace })
}

/// Outcome of cross-validated model selection.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub selected: DenseHmm,
    /// `(M, best training log-likelihood, test log-likelihood)` per state count.
    pub scores: Vec<(usize, f64, f64)>,
}

impl CrossValidation {
    pub fn selected_states(&self) -> usize {
        self.selected.num_states()
    }
}

/// Trains one model per state count in `m_range` (best of `restarts`
/// perturbed-uniform starts by training likelihood) and keeps the one
/// scoring highest on `test`; ties go to the smaller state count.
pub fn cross_validate(
    train: &SymbolSequence,
    test: &SymbolSequence,
    alphabet_size: usize,
    m_range: &[usize],
    config: &EmConfig,
    seed: u64,
) -> Result<CrossValidation> {
    if m_range.is_empty() || m_range.contains(&0) {
        return Err(CssrError::InvalidConfig("state-count range must be nonempty and positive".into()));
    }
    if config.restarts == 0 {
        return Err(CssrError::InvalidConfig("need at least one EM restart".into()));
    }
    let mut ms = m_range.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut scores = Vec::new();
    let mut best: Option<(f64, DenseHmm)> = None;
    for &m in &ms {
        let mut fit: Option<EmFit> = None;
        let mut last_err = None;
        for r in 0..config.restarts {
            let mut rng = derive_rng(seed, &[m as u64, r as u64]);
            let init = DenseHmm::perturbed_uniform(m, alphabet_size, &mut rng);
            match em_train(&init, train, config) {
                Ok(f) if fit.as_ref().map_or(true, |b| f.log_likelihood > b.log_likelihood) => fit = Some(f),
                Ok(_) => {}
                Err(e) => {
                    log::debug!("EM restart {r} with M = {m} failed: {e}");
                    last_err = Some(e);
                }
            }
        }
        let fit = match (fit, last_err) {
            (Some(f), _) => f,
            (None, Some(e)) => return Err(e),
            (None, None) => unreachable!("at least one restart ran"),
        };
        let test_ll = fit.hmm.log_likelihood(test);
        scores.push((m, fit.log_likelihood, test_ll));
        if best.as_ref().map_or(true, |(b, _)| test_ll > *b) {
            best = Some((test_ll, fit.hmm));
        }
    }
    let (_, selected) = best.expect("at least one state count");
    Ok(CrossValidation { selected, scores })
}

/// Exact distribution over words of length `len`, with the hidden chain
/// started from its stationary distribution.
pub fn hmm_word_distribution(hmm: &DenseHmm, len: usize) -> Result<WordDistribution> {
    let size = word_space(hmm.k, len)?;
    let pi = hmm.stationary()?;
    let mut probs = vec![0.0; size];
    if len == 0 {
        probs[0] = 1.0;
        return WordDistribution::from_dense(hmm.k, 0, probs);
    }
    // Depth-first over words; `mass[d]` holds P(x_1..x_d, S_d = i).
    let mut mass = vec![vec![0.0; hmm.m]; len + 1];
    fn walk(h: &DenseHmm, depth: usize, len: usize, index: usize, mass: &mut [Vec<f64>], probs: &mut [f64]) {
        for b in 0..h.k {
            let (head, tail) = mass.split_at_mut(depth + 1);
            let prev = &head[depth];
            let cur = &mut tail[0];
            for j in 0..h.m {
                let into: f64 = if depth == 0 {
                    prev[j]
                } else {
                    (0..h.m).map(|i| prev[i] * h.transition[i * h.m + j]).sum()
                };
                cur[j] = into * h.emission[j * h.k + b];
            }
            let idx = index * h.k + b;
            if depth + 1 == len {
                probs[idx] = cur.iter().sum();
            } else if cur.iter().any(|&p| p > 0.0) {
                walk(h, depth + 1, len, idx, mass, probs);
            }
        }
    }
    mass[0] = pi;
    walk(hmm, 0, len, 0, &mut mass, &mut probs);
    WordDistribution::from_dense(hmm.k, len, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::even_process;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state() -> DenseHmm {
        DenseHmm::new(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(DenseHmm::new(vec![1.0], vec![vec![0.5]], vec![vec![0.5, 0.5]]).is_err());
        assert!(DenseHmm::new(vec![1.0], vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn perturbed_rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = DenseHmm::perturbed_uniform(4, 3, &mut rng);
        assert!(h.max_row_error() < 1e-12);
        assert!((0..4).all(|i| (0..4).all(|j| (h.transition(i, j) - 0.25).abs() <= 0.25 * 0.1 / 0.9 + 1e-12)));
    }

    #[test]
    fn one_state_em_is_frequency_count() {
        let seq = SymbolSequence::new(vec![0, 1, 1, 1, 0, 1, 1, 1, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let init = DenseHmm::perturbed_uniform(1, 2, &mut rng);
        let fit = em_train(&init, &seq, &EmConfig::default()).unwrap();
        assert_abs_diff_eq!(fit.hmm.emission(0, 0), 0.3, epsilon = 1e-12);
        assert!(fit.iterations <= 2);
        let expected = 3.0 * 0.3f64.ln() + 7.0 * 0.7f64.ln();
        assert_abs_diff_eq!(fit.log_likelihood, expected, epsilon = 1e-9);
    }

    #[test]
    fn likelihood_matches_brute_force() {
        let h = two_state();
        let seq = SymbolSequence::new(vec![0, 1, 1]);
        let mut p = 0.0;
        for s0 in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    p += h.initial()[s0]
                        * h.emission(s0, 0)
                        * h.transition(s0, s1)
                        * h.emission(s1, 1)
                        * h.transition(s1, s2)
                        * h.emission(s2, 1);
                }
            }
        }
        assert_abs_diff_eq!(h.log_likelihood(&seq), p.ln(), epsilon = 1e-12);
    }

    #[test]
    fn em_is_monotone_and_improves_on_iid() {
        let seq = even_process().simulate(2_000, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = EmConfig { max_iters: 100, ..Default::default() };
        let one = em_train(&DenseHmm::perturbed_uniform(1, 2, &mut rng), &seq, &cfg).unwrap();
        let two = em_train(&DenseHmm::perturbed_uniform(2, 2, &mut rng), &seq, &cfg).unwrap();
        for w in two.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * seq.len() as f64);
        }
        assert!(two.log_likelihood >= one.log_likelihood - 1e-9);
        assert!(two.hmm.max_row_error() < 1e-12);
    }

    #[test]
    fn word_distribution_of_iid_hmm_is_product() {
        let h = DenseHmm::new(vec![1.0], vec![vec![1.0]], vec![vec![0.25, 0.75]]).unwrap();
        let d = hmm_word_distribution(&h, 3).unwrap();
        assert_abs_diff_eq!(d.get(&[0, 1, 1]), 0.25 * 0.75 * 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn length_one_is_emission_marginal() {
        let h = two_state();
        let pi = h.stationary().unwrap();
        let d = hmm_word_distribution(&h, 1).unwrap();
        let p0 = pi[0] * 0.7 + pi[1] * 0.1;
        assert_abs_diff_eq!(d.get(&[0]), p0, epsilon = 1e-12);
    }

    #[test]
    fn converted_even_process_agrees_with_machine() {
        let m = even_process();
        let h = DenseHmm::from_machine(&m).unwrap();
        assert_eq!(h.num_states(), 3);
        for len in 1..=6 {
            let a = hmm_word_distribution(&h, len).unwrap();
            let b = m.word_distribution(len).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cross_validation_prefers_small_models_on_iid_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gen = |rng: &mut ChaCha8Rng| SymbolSequence::new((0..2000).map(|_| rng.gen_range(0..2)).collect());
        let train = gen(&mut rng);
        let test = gen(&mut rng);
        let cfg = EmConfig { max_iters: 50, restarts: 2, ..Default::default() };
        let cv = cross_validate(&train, &test, 2, &[1, 2, 3], &cfg, 1).unwrap();
        assert_eq!(cv.scores.len(), 3);
        assert!(cv.selected_states() <= 2);
    }

    #[test]
    fn text_round_trip() {
        let a = Alphabet::from_chars("AB").unwrap();
        let h = two_state();
        let (a2, h2) = DenseHmm::from_text(&h.to_text(&a)).unwrap();
        assert_eq!(a2, a);
        assert_eq!(h2, h);
        assert!(DenseHmm::from_text("alphabet: A B\nhmm-states: 1\n").is_err());
    }
}
