//! Exact generator processes and the process-spec text format.
//!
//! Spec files look like:
//!
//! ```text
//! # the even process
//! alphabet: A B
//! state 1: A ABB
//! state 2: AB
//! 1 A 1/2 1
//! 1 B 1/2 2
//! 2 B 1 1
//! ```
//!
//! Rows are `<from> <symbol> <prob> <to>` with the probability written as a
//! decimal or as a rational `p/q`. `state` lines are optional and list the
//! history suffixes belonging to a state (`-` is the empty suffix). The
//! machine serialization uses the same format.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{CssrError, Result};
use crate::machine::{CausalStateMachine, StateSpec};
use crate::sequence::{Alphabet, Symbol, Word};
use crate::stats::Distribution;

/// The even process in spec form.
pub const EVEN_SPEC: &str = include_str!("../specs/even.spec");
/// Default seven-state suffix-defined benchmark process.
pub const SEVEN_STATE_SPEC: &str = include_str!("../specs/seven_state.spec");

#[derive(Debug, Clone, Copy, PartialEq)]
enum Prob {
    Decimal(f64),
    Rational(i64, i64),
}

impl Prob {
    fn value(self) -> f64 {
        match self {
            Prob::Decimal(p) => p,
            Prob::Rational(n, d) => n as f64 / d as f64,
        }
    }

    fn parse(token: &str) -> Option<Prob> {
        if let Some((n, d)) = token.split_once('/') {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d > 0 && n >= 0 && n <= d).then_some(Prob::Rational(n, d))
        } else {
            let p: f64 = token.parse().ok()?;
            (p.is_finite() && (0.0..=1.0).contains(&p)).then_some(Prob::Decimal(p))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    line: usize,
    from: String,
    symbol: Symbol,
    prob: Prob,
    to: String,
}

/// Declarative description of a unifilar process, parsed from text.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    alphabet: Alphabet,
    labels: Vec<String>,
    suffixes: HashMap<String, Vec<Word>>,
    rows: Vec<Row>,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl ProcessSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut labels: Vec<String> = Vec::new();
        let mut suffixes: HashMap<String, Vec<Word>> = HashMap::new();
        let mut rows = Vec::new();
        let err = |line: usize, message: String| CssrError::Parse { line, message };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("alphabet:") {
                if alphabet.is_some() {
                    return Err(err(line, "duplicate alphabet line".into()));
                }
                let syms: Vec<&str> = rest.split_whitespace().collect();
                alphabet = Some(Alphabet::new(&syms).map_err(|e| err(line, e.to_string()))?);
                continue;
            }
            let a = alphabet
                .as_ref()
                .ok_or_else(|| err(line, "the alphabet line must come first".into()))?;
            if let Some(rest) = content.strip_prefix("state ") {
                let (label, words) = rest
                    .split_once(':')
                    .ok_or_else(|| err(line, "expected `state <label>: <suffixes>`".into()))?;
                let label = label.trim().to_string();
                if label.is_empty() || label.contains(char::is_whitespace) {
                    return Err(err(line, format!("bad state label {label:?}")));
                }
                if suffixes.contains_key(&label) {
                    return Err(err(line, format!("state {label} declared twice")));
                }
                let words = words
                    .split_whitespace()
                    .map(|w| a.parse_word(w))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| err(line, e.to_string()))?;
                if !labels.contains(&label) {
                    labels.push(label.clone());
                }
                suffixes.insert(label, words);
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(err(line, format!("expected `<from> <symbol> <prob> <to>`, got {content:?}")));
            }
            let symbol = a
                .index_of(toks[1])
                .ok_or_else(|| err(line, format!("symbol {:?} not in alphabet", toks[1])))?;
            let prob = Prob::parse(toks[2]).ok_or_else(|| err(line, format!("bad probability {:?}", toks[2])))?;
            for label in [toks[0], toks[3]] {
                if !labels.iter().any(|l| l == label) {
                    labels.push(label.to_string());
                }
            }
            rows.push(Row { line, from: toks[0].to_string(), symbol, prob, to: toks[3].to_string() });
        }
        let alphabet = alphabet.ok_or_else(|| err(0, "missing alphabet line".into()))?;
        if rows.is_empty() {
            return Err(err(0, "no transition rows".into()));
        }
        Ok(ProcessSpec { alphabet, labels, suffixes, rows })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Suffixes declared for a state (empty when none were given).
    pub fn suffixes_of(&self, label: &str) -> &[Word] {
        self.suffixes.get(label).map_or(&[], Vec::as_slice)
    }

    fn state_specs(&self) -> Result<Vec<StateSpec>> {
        let k = self.alphabet.len();
        let position: HashMap<&str, usize> =
            self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut specs: Vec<StateSpec> = self
            .labels
            .iter()
            .map(|l| StateSpec {
                label: l.clone(),
                suffixes: self.suffixes_of(l).to_vec(),
                emission: vec![0.0; k],
                transitions: vec![None; k],
            })
            .collect();
        let mut seen = vec![vec![false; k]; specs.len()];
        let mut rationals: Vec<Vec<Option<(i64, i64)>>> = vec![Vec::new(); specs.len()];
        for row in &self.rows {
            let from = position[row.from.as_str()];
            let b = row.symbol as usize;
            if seen[from][b] {
                return Err(CssrError::Parse {
                    line: row.line,
                    message: format!(
                        "state {} has two rows for symbol {}; machines must be unifilar",
                        row.from,
                        self.alphabet.symbol(row.symbol)
                    ),
                });
            }
            seen[from][b] = true;
            specs[from].emission[b] = row.prob.value();
            specs[from].transitions[b] = Some(position[row.to.as_str()]);
            rationals[from].push(match row.prob {
                Prob::Rational(n, d) => Some((n, d)),
                Prob::Decimal(_) => None,
            });
        }
        for (spec, rats) in specs.iter().zip(&rationals) {
            if rats.is_empty() {
                return Err(CssrError::MalformedMachine(format!("state {} has no outgoing rows", spec.label)));
            }
            // All-rational rows must sum to exactly one.
            if rats.iter().all(Option::is_some) {
                let (mut num, mut den) = (0i128, 1i128);
                for &(n, d) in rats.iter().flatten() {
                    num = num * d as i128 + n as i128 * den;
                    den *= d as i128;
                    let g = gcd(num, den).max(1);
                    num /= g;
                    den /= g;
                }
                if num != den {
                    return Err(CssrError::MalformedMachine(format!(
                        "state {} probabilities sum to {num}/{den}",
                        spec.label
                    )));
                }
            }
        }
        Ok(specs)
    }

    /// Builds and validates the machine.
    pub fn build(&self) -> Result<CausalStateMachine> {
        CausalStateMachine::new(self.alphabet.clone(), self.state_specs()?)
    }
}

/// The two-state even process: state 1 emits A (stay) or B (go to 2) with
/// equal probability, state 2 always emits B and returns to 1. Each state
/// carries its synchronizing suffixes `A B^n` up to length 10.
pub fn even_process() -> CausalStateMachine {
    let a = Alphabet::from_chars("AB").expect("valid alphabet");
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for n in 0..10 {
        let mut w: Word = vec![0];
        w.extend(std::iter::repeat(1).take(n));
        if n % 2 == 0 {
            s1.push(w);
        } else {
            s2.push(w);
        }
    }
    CausalStateMachine::new(
        a,
        vec![
            StateSpec { label: "1".into(), suffixes: s1, emission: vec![0.5, 0.5], transitions: vec![Some(0), Some(1)] },
            StateSpec { label: "2".into(), suffixes: s2, emission: vec![0.0, 1.0], transitions: vec![None, Some(0)] },
        ],
    )
    .expect("the even process is a valid machine")
}

/// Builds a process in which every state is identified by exactly one
/// history suffix, checking that each transition goes to the state whose
/// suffix is the longest one ending `suffix(s) b`.
pub fn suffix_defined_process(spec: &ProcessSpec) -> Result<CausalStateMachine> {
    let machine = spec.build()?;
    let mut defining: Vec<&Word> = Vec::with_capacity(machine.num_states());
    for s in machine.states() {
        match s.suffixes() {
            [w] => defining.push(w),
            other => {
                return Err(CssrError::MalformedMachine(format!(
                    "state {} has {} suffixes; suffix-defined states need exactly one",
                    s.label(),
                    other.len()
                )))
            }
        }
    }
    for (i, s) in machine.states().iter().enumerate() {
        for b in 0..machine.alphabet().len() as Symbol {
            let Some(to) = s.transition(b) else { continue };
            let mut extended = defining[i].clone();
            extended.push(b);
            if defining.iter().any(|w| w.len() > extended.len() && w.ends_with(&extended)) {
                return Err(CssrError::MalformedMachine(format!(
                    "state {} on {} is ambiguous: a longer defining suffix ends with {}",
                    s.label(),
                    machine.alphabet().symbol(b),
                    machine.alphabet().render(&extended)
                )));
            }
            let expected = defining
                .iter()
                .enumerate()
                .filter(|(_, w)| extended.ends_with(w))
                .max_by_key(|(_, w)| w.len())
                .map(|(j, _)| j);
            if expected != Some(to) {
                return Err(CssrError::MalformedMachine(format!(
                    "state {} on {} goes to {} but suffix {} selects {}",
                    s.label(),
                    machine.alphabet().symbol(b),
                    machine.state(to).label(),
                    machine.alphabet().render(&extended),
                    expected.map_or("no state", |j| machine.state(j).label())
                )));
            }
        }
    }
    Ok(machine)
}

/// Independent draws from one distribution: a single state.
pub fn iid_process(alphabet: Alphabet, dist: &Distribution) -> Result<CausalStateMachine> {
    if dist.len() != alphabet.len() {
        return Err(CssrError::AlphabetMismatch("distribution does not match alphabet".into()));
    }
    let k = alphabet.len();
    CausalStateMachine::new(
        alphabet,
        vec![StateSpec {
            label: "0".into(),
            suffixes: vec![Vec::new()],
            emission: dist.probs().to_vec(),
            transitions: vec![Some(0); k],
        }],
    )
}

/// Markov chain of the given order. `kernel[c]` is the next-symbol
/// distribution after context `c`, with contexts (the last `order` symbols,
/// oldest first) indexed in lexicographic order. The result is reduced to
/// its recurrent part and minimized.
pub fn markov_process(alphabet: Alphabet, order: usize, kernel: &[Vec<f64>]) -> Result<CausalStateMachine> {
    let k = alphabet.len();
    let contexts = alphabet.words_of_length(order);
    if kernel.len() != contexts.len() {
        return Err(CssrError::InvalidDistribution(format!(
            "order-{order} kernel needs {} rows, got {}",
            contexts.len(),
            kernel.len()
        )));
    }
    for (i, row) in kernel.iter().enumerate() {
        if row.len() != k {
            return Err(CssrError::InvalidDistribution(format!("kernel row {i} has {} entries", row.len())));
        }
        Distribution::new(row.clone())?;
    }
    let index_of = |w: &[Symbol]| w.iter().fold(0usize, |acc, &s| acc * k + s as usize);
    let successor = |c: usize, b: usize| -> usize {
        if order == 0 {
            0
        } else {
            let mut w = contexts[c][1..].to_vec();
            w.push(b as Symbol);
            index_of(&w)
        }
    };

    // Recurrent part of the context graph.
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = contexts.iter().map(|_| g.add_node(())).collect();
    for c in 0..contexts.len() {
        for b in 0..k {
            if kernel[c][b] > 0.0 {
                g.add_edge(nodes[c], nodes[successor(c, b)], ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; contexts.len()];
    for (ci, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = ci;
        }
    }
    let closed: Vec<usize> = (0..sccs.len())
        .filter(|&ci| {
            sccs[ci].iter().all(|n| {
                (0..k).all(|b| kernel[n.index()][b] == 0.0 || component[successor(n.index(), b)] == ci)
            })
        })
        .collect();
    if closed.len() != 1 {
        return Err(CssrError::MalformedMachine(format!(
            "kernel has {} closed classes; expected exactly one",
            closed.len()
        )));
    }
    let mut live: Vec<usize> = sccs[closed[0]].iter().map(|n| n.index()).collect();
    live.sort_unstable();

    // Moore refinement: start from equal emission rows, split by successor
    // blocks until stable.
    let mut block: HashMap<usize, usize> = HashMap::new();
    {
        let mut rows: Vec<&Vec<f64>> = Vec::new();
        for &c in &live {
            let id = rows.iter().position(|r| **r == kernel[c]).unwrap_or_else(|| {
                rows.push(&kernel[c]);
                rows.len() - 1
            });
            block.insert(c, id);
        }
    }
    loop {
        let mut signatures: Vec<(usize, Vec<Option<usize>>)> = Vec::new();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &c in &live {
            let sig = (
                block[&c],
                (0..k)
                    .map(|b| (kernel[c][b] > 0.0).then(|| block[&successor(c, b)]))
                    .collect::<Vec<_>>(),
            );
            let id = signatures.iter().position(|s| *s == sig).unwrap_or_else(|| {
                signatures.push(sig);
                signatures.len() - 1
            });
            next.insert(c, id);
        }
        let stable = signatures.len() == block.values().collect::<std::collections::HashSet<_>>().len();
        block = next;
        if stable {
            break;
        }
    }
    let n_blocks = block.values().max().map_or(0, |m| m + 1);
    let mut specs: Vec<Option<StateSpec>> = vec![None; n_blocks];
    for &c in &live {
        let bi = block[&c];
        let spec = specs[bi].get_or_insert_with(|| StateSpec {
            label: bi.to_string(),
            suffixes: Vec::new(),
            emission: kernel[c].clone(),
            transitions: (0..k)
                .map(|b| (kernel[c][b] > 0.0).then(|| block[&successor(c, b)]))
                .collect(),
        });
        spec.suffixes.push(contexts[c].clone());
    }
    let specs: Vec<StateSpec> = specs.into_iter().map(|s| s.expect("every block is populated")).collect();
    CausalStateMachine::new(alphabet, specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_spec_file_matches_constructor() {
        let from_file = ProcessSpec::parse(EVEN_SPEC).unwrap().build().unwrap();
        assert_eq!(from_file.num_states(), 2);
        assert_eq!(from_file.num_transitions(), 3);
        let built = even_process();
        let d1 = from_file.word_distribution(8).unwrap();
        let d2 = built.word_distribution(8).unwrap();
        assert!(d1.tv_distance(&d2).unwrap() < 1e-12);
    }

    #[test]
    fn even_process_is_not_suffix_defined() {
        let spec = ProcessSpec::parse(EVEN_SPEC).unwrap();
        assert!(matches!(suffix_defined_process(&spec), Err(CssrError::MalformedMachine(_))));
    }

    #[test]
    fn seven_state_spec_is_valid() {
        let m = suffix_defined_process(&ProcessSpec::parse(SEVEN_STATE_SPEC).unwrap()).unwrap();
        assert_eq!(m.num_states(), 7);
        assert!(m.is_strongly_connected());
        assert!(m.is_unifilar());
    }

    #[test]
    fn order_one_chain_is_suffix_defined() {
        let text = "alphabet: A B\nstate a: A\nstate b: B\na A 0.3 a\na B 0.7 b\nb A 0.6 a\nb B 0.4 b\n";
        let m = suffix_defined_process(&ProcessSpec::parse(text).unwrap()).unwrap();
        assert_eq!(m.num_states(), 2);
    }

    #[test]
    fn wrong_suffix_transition_rejected() {
        let text = "alphabet: A B\nstate a: A\nstate b: B\na A 0.3 b\na B 0.7 b\nb A 0.6 a\nb B 0.4 b\n";
        assert!(suffix_defined_process(&ProcessSpec::parse(text).unwrap()).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ProcessSpec::parse("alphabet: A B\n1 A 0.5\n").unwrap_err();
        assert!(matches!(err, CssrError::Parse { line: 2, .. }));
        let err = ProcessSpec::parse("1 A 1 1\n").unwrap_err();
        assert!(matches!(err, CssrError::Parse { line: 1, .. }));
        let err = ProcessSpec::parse("alphabet: A B\n1 C 1 1\n").unwrap_err();
        assert!(matches!(err, CssrError::Parse { line: 2, .. }));
    }

    #[test]
    fn rationals_must_sum_exactly() {
        let bad = ProcessSpec::parse("alphabet: A B\n1 A 7/16 1\n1 B 8/16 1\n").unwrap();
        assert!(bad.build().is_err());
        let good = ProcessSpec::parse("alphabet: A B\n1 A 7/16 1\n1 B 9/16 1\n").unwrap();
        assert_eq!(good.build().unwrap().num_states(), 1);
    }

    #[test]
    fn duplicate_rows_rejected() {
        let spec = ProcessSpec::parse("alphabet: A B\n1 A 1/2 1\n1 A 1/2 1\n").unwrap();
        assert!(matches!(spec.build(), Err(CssrError::Parse { line: 3, .. })));
    }

    #[test]
    fn iid_and_markov_minimization() {
        let a = Alphabet::from_chars("AB").unwrap();
        let iid = iid_process(a.clone(), &Distribution::uniform(2)).unwrap();
        assert_eq!(iid.num_states(), 1);
        let same_rows = markov_process(a.clone(), 1, &[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(same_rows.num_states(), 1);
        let order2 = markov_process(
            a.clone(),
            2,
            &[vec![0.1, 0.9], vec![0.3, 0.7], vec![0.6, 0.4], vec![0.8, 0.2]],
        )
        .unwrap();
        assert_eq!(order2.num_states(), 4);
        assert!(markov_process(a, 1, &[vec![0.3, 0.6], vec![0.3, 0.7]]).is_err());
    }

    #[test]
    fn markov_keeps_only_recurrent_contexts() {
        // After an A the chain is absorbed into "always A".
        let a = Alphabet::from_chars("AB").unwrap();
        let m = markov_process(a, 1, &[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.state(0).suffixes(), &[vec![0]]);
    }
}
