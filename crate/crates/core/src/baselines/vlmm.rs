//! Variable-length Markov models (context trees).
//!
//! The tree of all observed suffixes up to `l_max` is grown and then pruned
//! bottom-up: a node survives when its next-symbol distribution differs
//! from its parent's, or when one of its descendants survives. The leaves of
//! the pruned tree are the contexts, and each context predicts with its own
//! counts. Children are compared with their parent only.

use std::collections::{BTreeSet, HashMap, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::cssr::CssrConfig;
use crate::error::{CssrError, Result};
use crate::machine::{CausalStateMachine, StateSpec};
use crate::parse_tree::{NextCounts, ParseTree};
use crate::sequence::{Alphabet, Symbol, Word};
use crate::stats::{two_sample_test, Distribution};

/// One context and its next-symbol counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub word: Word,
    pub counts: NextCounts,
}

/// A learned VLMM.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTree {
    alphabet_size: usize,
    l_max: usize,
    /// Sorted by length, then lexicographically.
    contexts: Vec<Context>,
    /// Occurrence count of every observed word up to `l_max`.
    observed: HashMap<Word, u64>,
    tests: u64,
}

struct Node {
    word: Word,
    counts: NextCounts,
    children: Vec<Node>,
    keep: bool,
    internal: bool,
}

fn grow(tree: &ParseTree, config: &CssrConfig, word: Word, counts: NextCounts, seen: &mut HashMap<Word, u64>) -> Node {
    seen.insert(word.clone(), counts.total());
    let mut children = Vec::new();
    if word.len() < config.l_max {
        for a in 0..tree.alphabet_size() as Symbol {
            let mut child = Vec::with_capacity(word.len() + 1);
            child.push(a);
            child.extend_from_slice(&word);
            match tree.next_counts(&child) {
                Some(c) if c.total() >= config.min_count => children.push(grow(tree, config, child, c, seen)),
                _ => {}
            }
        }
    }
    Node { word, counts, children, keep: false, internal: false }
}

fn prune(node: &mut Node, config: &CssrConfig, tests: &mut u64) {
    let parent = node.counts.clone();
    for child in &mut node.children {
        prune(child, config, tests);
        *tests += 1;
        let differs = two_sample_test(config.test, child.counts.as_slice(), parent.as_slice(), config.alpha).reject;
        child.keep = child.internal || differs;
    }
    node.internal = node.children.iter().any(|c| c.keep);
}

fn collect(node: Node, out: &mut Vec<Context>) {
    if node.internal {
        for child in node.children {
            collect(child, out);
        }
    } else {
        out.push(Context { word: node.word, counts: node.counts });
    }
}

fn by_len_then_lex(a: &Word, b: &Word) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Learns a context tree from `tree` using the test, size and depth in
/// `config`. Siblings of a surviving node become contexts when observed;
/// never-observed siblings are left out.
pub fn vlmm_learn(tree: &ParseTree, config: &CssrConfig) -> Result<ContextTree> {
    config.validate()?;
    if tree.depth() < config.l_max + 1 {
        return Err(CssrError::InvalidConfig(format!(
            "parse tree depth {} is too shallow for l_max = {}",
            tree.depth(),
            config.l_max
        )));
    }
    let mut observed = HashMap::new();
    let root_counts = tree.next_counts(&[]).ok_or(CssrError::EmptySequence)?;
    let mut root = grow(tree, config, Vec::new(), root_counts, &mut observed);
    let mut tests = 0;
    prune(&mut root, config, &mut tests);
    let mut contexts = Vec::new();
    collect(root, &mut contexts);
    contexts.sort_by(|a, b| by_len_then_lex(&a.word, &b.word));
    Ok(ContextTree { alphabet_size: tree.alphabet_size(), l_max: config.l_max, contexts, observed, tests })
}

impl ContextTree {
    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Number of child-versus-parent tests made while pruning.
    pub fn tests_performed(&self) -> u64 {
        self.tests
    }

    /// Context matching the end of `history`, if any.
    pub fn context_of(&self, history: &[Symbol]) -> Option<&Context> {
        self.contexts
            .iter()
            .filter(|c| history.ends_with(&c.word))
            .max_by_key(|c| c.word.len())
    }

    /// No context is a proper suffix of another.
    pub fn is_suffix_free(&self) -> bool {
        self.contexts.iter().all(|a| {
            self.contexts.iter().all(|b| a.word.len() >= b.word.len() || !b.word.ends_with(&a.word))
        })
    }

    /// Expands the contexts into a unifilar machine. Contexts whose
    /// successor on some symbol depends on history older than themselves
    /// are refined into their observed one-symbol extensions until every
    /// transition is determined; the recurrent part is kept. Returns the
    /// machine and the number of observed transitions that had to be
    /// dropped.
    pub fn to_machine(&self, alphabet: &Alphabet) -> Result<(CausalStateMachine, usize)> {
        let k = self.alphabet_size;
        if alphabet.len() != k {
            return Err(CssrError::AlphabetMismatch("alphabet and context tree sizes differ".into()));
        }
        let context_set: HashMap<&Word, usize> = self.contexts.iter().enumerate().map(|(i, c)| (&c.word, i)).collect();
        let context_index = |w: &Word| -> usize {
            (0..=w.len())
                .rev()
                .find_map(|l| context_set.get(&w[w.len() - l..].to_vec()).copied())
                .expect("every state word ends in a context")
        };
        let mut states: BTreeSet<Word> = self.contexts.iter().map(|c| c.word.clone()).collect();
        enum Step {
            To(Word),
            Refine,
            Missing,
        }
        let resolve = |states: &BTreeSet<Word>, inner: &HashSet<Word>, s: &Word, b: Symbol| -> Step {
            let mut u = s.clone();
            u.push(b);
            for l in (0..=u.len()).rev() {
                let suf = &u[u.len() - l..];
                if states.contains(suf) {
                    return Step::To(suf.to_vec());
                }
            }
            if inner.contains(&u) {
                Step::Refine
            } else {
                Step::Missing
            }
        };
        'refine: loop {
            let inner: HashSet<Word> = states
                .iter()
                .flat_map(|w| (1..w.len()).map(move |l| w[w.len() - l..].to_vec()))
                .collect();
            for s in &states {
                for b in 0..k as Symbol {
                    if let Step::Refine = resolve(&states, &inner, s, b) {
                        let s = s.clone();
                        states.remove(&s);
                        for a in 0..k as Symbol {
                            let mut longer = vec![a];
                            longer.extend_from_slice(&s);
                            if self.observed.contains_key(&longer) {
                                states.insert(longer);
                            }
                        }
                        continue 'refine;
                    }
                }
            }
            break;
        }

        let words: Vec<Word> = states.into_iter().collect();
        let set: BTreeSet<Word> = words.iter().cloned().collect();
        let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let no_inner = HashSet::new();
        let mut succ = vec![vec![None; k]; words.len()];
        for (i, w) in words.iter().enumerate() {
            let counts = &self.contexts[context_index(w)].counts;
            for b in 0..k {
                if counts.0[b] == 0 {
                    continue;
                }
                if let Step::To(t) = resolve(&set, &no_inner, w, b as Symbol) {
                    succ[i][b] = Some(index[&t]);
                }
            }
        }

        let mut g = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = (0..words.len()).map(|i| g.add_node(i)).collect();
        for (i, row) in succ.iter().enumerate() {
            for t in row.iter().flatten() {
                g.add_edge(nodes[i], nodes[*t], ());
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0; words.len()];
        for (ci, scc) in sccs.iter().enumerate() {
            for n in scc {
                comp[g[*n]] = ci;
            }
        }
        let weight = |ci: usize| -> u64 { sccs[ci].iter().map(|n| self.observed.get(&words[g[*n]]).copied().unwrap_or(0)).sum() };
        let keep = (0..sccs.len())
            .filter(|&ci| sccs[ci].iter().all(|&n| succ[g[n]].iter().flatten().all(|&t| comp[t] == ci)))
            .max_by(|&a, &b| weight(a).cmp(&weight(b)).then_with(|| b.cmp(&a)))
            .ok_or_else(|| CssrError::MalformedMachine("context graph has no closed component".into()))?;
        let kept: Vec<usize> = (0..words.len()).filter(|&i| comp[i] == keep).collect();
        let position: HashMap<usize, usize> = kept.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut dropped = 0;
        let mut specs = Vec::with_capacity(kept.len());
        for (p, &i) in kept.iter().enumerate() {
            let mut counts = self.contexts[context_index(&words[i])].counts.0.clone();
            for b in 0..k {
                if succ[i][b].is_none() && counts[b] > 0 {
                    counts[b] = 0;
                    dropped += 1;
                }
            }
            let dist = Distribution::from_counts(&counts)
                .ok_or_else(|| CssrError::MalformedMachine(format!("state {p} lost every transition")))?;
            specs.push(StateSpec {
                label: p.to_string(),
                suffixes: vec![words[i].clone()],
                emission: dist.probs().to_vec(),
                transitions: succ[i].iter().map(|t| t.map(|t| position[&t])).collect(),
            });
        }
        Ok((CausalStateMachine::new(alphabet.clone(), specs)?, dropped))
    }

    /// One line per context with its raw next-symbol counts.
    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let mut out = format!("# variable-length Markov model\nalphabet: {alphabet}\n");
        for c in &self.contexts {
            let counts: Vec<String> = c.counts.0.iter().map(u64::to_string).collect();
            out += &format!("context {}: {}\n", alphabet.render_compact(&c.word), counts.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::SymbolSequence;
    use crate::sources::even_process;

    fn learn(seq: &SymbolSequence, l_max: usize) -> ContextTree {
        let tree = ParseTree::build(seq, 2, l_max).unwrap();
        vlmm_learn(&tree, &CssrConfig::new(l_max, 1e-3)).unwrap()
    }

    #[test]
    fn period_two_needs_one_symbol_of_context() {
        let seq = SymbolSequence::new([0, 1].repeat(500));
        let t = learn(&seq, 4);
        let words: Vec<&Word> = t.contexts().iter().map(|c| &c.word).collect();
        assert_eq!(words, vec![&vec![0], &vec![1]]);
        let a = Alphabet::from_chars("AB").unwrap();
        let (m, dropped) = t.to_machine(&a).unwrap();
        assert_eq!(m.num_states(), 2);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn even_process_contexts_grow_with_depth() {
        let seq = even_process().simulate(20_000, 2);
        let small = learn(&seq, 4);
        let large = learn(&seq, 8);
        assert!(large.num_contexts() > small.num_contexts());
        assert!(large.is_suffix_free());
        let a = Alphabet::from_chars("AB").unwrap();
        let (m, _) = large.to_machine(&a).unwrap();
        assert!(m.is_unifilar() && m.is_strongly_connected());
        let tv = m.word_distribution(8).unwrap().tv_distance(&even_process().word_distribution(8).unwrap()).unwrap();
        assert!(tv < 0.2, "tv {tv}");
    }

    #[test]
    fn context_lookup() {
        let seq = SymbolSequence::new([0, 1].repeat(100));
        let t = learn(&seq, 3);
        assert_eq!(t.context_of(&[1, 1, 0]).unwrap().word, vec![0]);
        assert!(t.to_text(&Alphabet::from_chars("AB").unwrap()).contains("context B:"));
    }
}
