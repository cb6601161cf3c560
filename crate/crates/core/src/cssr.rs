//! Causal-state splitting reconstruction.
//!
//! Inference runs in three phases over a [`ParseTree`]:
//!
//! 1. A single state holding the empty suffix, i.e. an IID model.
//! 2. Sufficiency: for `L = 0 .. l_max`, every member suffix `x` of length
//!    `L` is extended into the past as `a x` and the extension is tested
//!    against its parent's state. It stays if the next-symbol distributions
//!    agree; otherwise it moves to the closest agreeing state (smallest total
//!    variation), or founds a new state when none agrees.
//! 3. Recursion: transient states are dropped and states are split until
//!    every member of a state goes to the same state on every symbol. The two
//!    steps repeat until neither changes anything.
//!
//! Suffixes are the most recent symbols of a history, oldest first. Phase 2
//! extends them with an *older* symbol (`a x`), phase 3 with a *newer* one
//! (`x b`). A word is mapped to a state through its longest suffix present
//! in some state.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{CssrError, Result};
use crate::machine::{CausalStateMachine, StateSpec};
use crate::parse_tree::{max_safe_l, NextCounts, ParseTree};
use crate::sequence::{Alphabet, Symbol, SymbolSequence, Word};
use crate::stats::{tv_distance, two_sample_test, Distribution, TestKind};

/// Inference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CssrConfig {
    /// Longest history suffix considered.
    pub l_max: usize,
    /// Size of every hypothesis test.
    pub alpha: f64,
    pub test: TestKind,
    /// Extensions seen fewer times than this (counting continuations) are
    /// neither tested nor assigned.
    pub min_count: u64,
}

impl Default for CssrConfig {
    fn default() -> Self {
        CssrConfig { l_max: 5, alpha: 1e-3, test: TestKind::Ks, min_count: 1 }
    }
}

impl CssrConfig {
    pub fn new(l_max: usize, alpha: f64) -> Self {
        CssrConfig { l_max, alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CssrError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.min_count == 0 {
            return Err(CssrError::InvalidConfig("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Orders suffixes by length, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SuffixKey(Word);

impl Ord for SuffixKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for SuffixKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A provisional state: a set of suffixes and their pooled next-symbol
/// counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffixState {
    id: usize,
    suffixes: BTreeSet<SuffixKey>,
    counts: NextCounts,
}

impl SuffixState {
    pub fn id(&self) -> usize {
        self.id
    }

    /// Member suffixes, shortest first.
    pub fn suffixes(&self) -> impl Iterator<Item = &Word> + '_ {
        self.suffixes.iter().map(|k| &k.0)
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }

    pub fn counts(&self) -> &NextCounts {
        &self.counts
    }

    /// Count-weighted average of the members' next-symbol distributions.
    pub fn distribution(&self) -> Option<Distribution> {
        Distribution::from_counts(self.counts.as_slice())
    }
}

/// The working partition of suffixes into states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSet {
    states: Vec<Option<SuffixState>>,
    index: HashMap<Word, usize>,
    suffix_counts: HashMap<Word, NextCounts>,
    max_len: usize,
    alphabet_size: usize,
}

impl StateSet {
    fn new(alphabet_size: usize) -> Self {
        StateSet {
            states: Vec::new(),
            index: HashMap::new(),
            suffix_counts: HashMap::new(),
            max_len: 0,
            alphabet_size,
        }
    }

    fn create_state(&mut self) -> usize {
        let id = self.states.len();
        self.states.push(Some(SuffixState {
            id,
            suffixes: BTreeSet::new(),
            counts: NextCounts::zeros(self.alphabet_size),
        }));
        id
    }

    fn live_mut(&mut self, id: usize) -> &mut SuffixState {
        self.states[id].as_mut().expect("state is live")
    }

    fn insert(&mut self, word: Word, counts: NextCounts, state: usize) {
        debug_assert!(!self.index.contains_key(&word), "suffix assigned twice");
        self.max_len = self.max_len.max(word.len());
        let s = self.live_mut(state);
        s.counts.add(&counts);
        s.suffixes.insert(SuffixKey(word.clone()));
        self.index.insert(word.clone(), state);
        self.suffix_counts.insert(word, counts);
    }

    /// Moves a suffix between states, re-estimating both; a state left
    /// empty is deleted.
    fn move_suffix(&mut self, word: &Word, to: usize) {
        let from = self.index[word];
        if from == to {
            return;
        }
        let counts = self.suffix_counts[word].clone();
        let key = SuffixKey(word.clone());
        let src = self.live_mut(from);
        src.suffixes.remove(&key);
        src.counts.subtract(&counts);
        let emptied = src.suffixes.is_empty();
        let dst = self.live_mut(to);
        dst.suffixes.insert(key);
        dst.counts.add(&counts);
        self.index.insert(word.clone(), to);
        if emptied {
            self.states[from] = None;
        }
    }

    fn remove_state(&mut self, id: usize) {
        if let Some(s) = self.states[id].take() {
            for k in s.suffixes {
                self.index.remove(&k.0);
                self.suffix_counts.remove(&k.0);
            }
        }
    }

    /// Ids of live states, ascending.
    pub fn live_ids(&self) -> Vec<usize> {
        self.states.iter().flatten().map(|s| s.id).collect()
    }

    pub fn len(&self) -> usize {
        self.states.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, id: usize) -> Option<&SuffixState> {
        self.states.get(id).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SuffixState> + '_ {
        self.states.iter().flatten()
    }

    /// State holding exactly this suffix.
    pub fn state_of(&self, word: &[Symbol]) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// State holding the longest suffix of `word`, with that suffix's length.
    pub fn lookup(&self, word: &[Symbol]) -> Option<(usize, usize)> {
        let longest = word.len().min(self.max_len);
        (0..=longest)
            .rev()
            .find_map(|l| self.index.get(&word[word.len() - l..]).map(|&s| (s, l)))
    }

    /// Partition and pooled-count invariants.
    pub fn is_consistent(&self) -> bool {
        let mut seen = 0;
        for s in self.iter() {
            if s.suffixes.is_empty() {
                return false;
            }
            let mut sum = NextCounts::zeros(self.alphabet_size);
            for k in &s.suffixes {
                if self.index.get(&k.0) != Some(&s.id) {
                    return false;
                }
                sum.add(&self.suffix_counts[&k.0]);
                seen += 1;
            }
            if sum != s.counts {
                return false;
            }
        }
        seen == self.index.len()
    }
}

/// What the test subroutine did with one extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutcome {
    /// Null hypothesis kept: joined the parent's state.
    Joined,
    /// Moved to another existing state.
    Moved(usize),
    /// Founded a new state.
    Created(usize),
}

/// Counters and timings collected during one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Tests of an extension against its parent's state.
    pub null_tests: u64,
    pub null_rejections: u64,
    pub restricted_moves: u64,
    pub created_states: u64,
    /// Extensions not tested for lack of data.
    pub skipped_extensions: u64,
    pub transient_states_removed: u64,
    pub determinization_splits: u64,
    /// Observed transitions dropped because no member suffix of the state
    /// could be mapped to a surviving state.
    pub dropped_transitions: u64,
    pub phase3_rounds: u64,
    #[serde(with = "duration_secs")]
    pub parse_tree_time: Duration,
    #[serde(with = "duration_secs")]
    pub phase2_time: Duration,
    #[serde(with = "duration_secs")]
    pub phase3_time: Duration,
    pub warnings: Vec<String>,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// Phase I: one state containing only the empty suffix, whose distribution
/// is the unconditional symbol distribution.
pub fn phase1_initialize(tree: &ParseTree) -> StateSet {
    let mut states = StateSet::new(tree.alphabet_size());
    let root = states.create_state();
    let counts = tree.next_counts(&[]).expect("tree is built from nonempty data");
    states.insert(Vec::new(), counts, root);
    states
}

/// Decides where the extension `child` (a suffix not yet assigned) goes,
/// given that its parent suffix lives in `parent_state`.
pub fn test_subroutine(
    states: &mut StateSet,
    child: Word,
    child_counts: NextCounts,
    parent_state: usize,
    config: &CssrConfig,
    diag: &mut Diagnostics,
) -> TestOutcome {
    let parent = states.state(parent_state).expect("parent state is live");
    diag.null_tests += 1;
    let null = two_sample_test(config.test, child_counts.as_slice(), parent.counts.as_slice(), config.alpha);
    if !null.reject {
        states.insert(child, child_counts, parent_state);
        return TestOutcome::Joined;
    }
    diag.null_rejections += 1;

    let child_dist = Distribution::from_counts(child_counts.as_slice()).expect("tested extensions have data");
    let mut best: Option<(f64, usize)> = None;
    for s in states.iter().filter(|s| s.id != parent_state) {
        let decision = two_sample_test(config.test, child_counts.as_slice(), s.counts.as_slice(), config.alpha);
        if decision.reject {
            continue;
        }
        let Some(dist) = s.distribution() else { continue };
        let tv = tv_distance(&child_dist, &dist).expect("same alphabet");
        // Strict comparison keeps the lowest id on exact ties.
        if best.map_or(true, |(b, _)| tv < b) {
            best = Some((tv, s.id));
        }
    }
    match best {
        Some((_, target)) => {
            diag.restricted_moves += 1;
            states.insert(child, child_counts, target);
            TestOutcome::Moved(target)
        }
        None => {
            diag.created_states += 1;
            let id = states.create_state();
            states.insert(child, child_counts, id);
            TestOutcome::Created(id)
        }
    }
}

/// Phase II: grow suffixes one symbol into the past at a time up to
/// `config.l_max`, testing each extension.
pub fn phase2_sufficiency(tree: &ParseTree, config: &CssrConfig, diag: &mut Diagnostics) -> Result<StateSet> {
    config.validate()?;
    if tree.depth() < config.l_max + 1 {
        return Err(CssrError::InvalidConfig(format!(
            "parse tree depth {} is too shallow for l_max = {}",
            tree.depth(),
            config.l_max
        )));
    }
    let k = tree.alphabet_size();
    let mut states = phase1_initialize(tree);
    for level in 0..config.l_max {
        // Parents are fixed for the whole level; extensions are never
        // re-tested within it.
        let parents: Vec<Word> = states
            .iter()
            .flat_map(|s| s.suffixes().filter(|w| w.len() == level).cloned().collect::<Vec<_>>())
            .collect();
        for parent in parents {
            let parent_state = states.state_of(&parent).expect("parent is assigned");
            for a in 0..k as Symbol {
                let mut child = Vec::with_capacity(level + 1);
                child.push(a);
                child.extend_from_slice(&parent);
                let counts = match tree.next_counts(&child) {
                    Some(c) if c.total() >= config.min_count => c,
                    _ => {
                        diag.skipped_extensions += 1;
                        continue;
                    }
                };
                test_subroutine(&mut states, child, counts, parent_state, config, diag);
            }
        }
        debug_assert!(states.is_consistent());
    }
    Ok(states)
}

/// Successor of suffix `x` on symbol `b`: the state holding the longest
/// suffix of `x b`, and whether that suffix is `x b` itself. `None` when
/// `x b` never occurred or maps to no state.
fn successor(states: &StateSet, tree: &ParseTree, x: &[Symbol], b: Symbol) -> Option<(usize, bool)> {
    let mut word = Vec::with_capacity(x.len() + 1);
    word.extend_from_slice(x);
    word.push(b);
    if tree.count(&word) == 0 {
        return None;
    }
    states.lookup(&word).map(|(s, len)| (s, len == word.len()))
}

/// Provisional transition graph. For each state and symbol, successors
/// reached by an exact extension (`x b` itself assigned) take precedence;
/// lookups that had to drop history are used only when no member extends
/// exactly.
fn provisional_edges(states: &StateSet, tree: &ParseTree) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for s in states.iter() {
        for b in 0..tree.alphabet_size() as Symbol {
            let mut exact = BTreeSet::new();
            let mut truncated = BTreeSet::new();
            for x in s.suffixes() {
                match successor(states, tree, x, b) {
                    Some((t, true)) => {
                        exact.insert(t);
                    }
                    Some((t, false)) => {
                        truncated.insert(t);
                    }
                    None => {}
                }
            }
            let chosen = if exact.is_empty() { truncated } else { exact };
            edges.extend(chosen.into_iter().map(|t| (s.id, t)));
        }
    }
    edges
}

/// Keeps only the recurrent part of the provisional transition graph: the
/// closed strongly connected component (one with no edges leaving it). When
/// there are several, the one backed by the most data is kept. Returns the
/// number of states removed.
pub fn remove_transients(states: &mut StateSet, tree: &ParseTree) -> Result<usize> {
    let ids = states.live_ids();
    if ids.is_empty() {
        return Err(CssrError::MalformedMachine("no states to reconstruct".into()));
    }
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: HashMap<usize, _> = ids.iter().map(|&id| (id, g.add_node(id))).collect();
    for (a, b) in provisional_edges(states, tree) {
        g.add_edge(nodes[&a], nodes[&b], ());
    }
    let sccs = tarjan_scc(&g);
    let mut component = HashMap::new();
    for (ci, scc) in sccs.iter().enumerate() {
        for n in scc {
            component.insert(g[*n], ci);
        }
    }
    let closed = |ci: usize| -> bool {
        sccs[ci]
            .iter()
            .all(|&n| g.neighbors(n).all(|m| component[&g[m]] == ci))
    };
    let weight = |ci: usize| -> u64 {
        sccs[ci].iter().map(|&n| states.state(g[n]).map_or(0, |s| s.counts.total())).sum()
    };
    let min_id = |ci: usize| -> usize { sccs[ci].iter().map(|&n| g[n]).min().unwrap_or(usize::MAX) };
    let keep = (0..sccs.len())
        .filter(|&ci| closed(ci))
        .max_by(|&a, &b| weight(a).cmp(&weight(b)).then_with(|| min_id(b).cmp(&min_id(a))))
        .ok_or_else(|| CssrError::MalformedMachine("transition graph has no closed component".into()))?;
    let mut removed = 0;
    for id in ids {
        if component[&id] != keep {
            states.remove_state(id);
            removed += 1;
        }
    }
    if states.is_empty() {
        return Err(CssrError::MalformedMachine("transient removal left no states".into()));
    }
    Ok(removed)
}

/// Splits states until every member of a state agrees on the successor
/// for every symbol, rescanning from the start after each split. Members
/// whose extension never occurred or maps to no state do not constrain the
/// transition. Returns the number of splits.
pub fn phase3_determinize(states: &mut StateSet, tree: &ParseTree) -> usize {
    let k = tree.alphabet_size() as Symbol;
    let mut splits = 0;
    'rescan: loop {
        for id in states.live_ids() {
            for b in 0..k {
                let state = states.state(id).expect("live");
                let mut first: Option<usize> = None;
                let mut offender: Option<usize> = None;
                for x in state.suffixes() {
                    let Some((t, _)) = successor(states, tree, x, b) else { continue };
                    match first {
                        None => first = Some(t),
                        Some(f) if f != t => {
                            offender = Some(t);
                            break;
                        }
                        _ => {}
                    }
                }
                let Some(target) = offender else { continue };
                let movers: Vec<Word> = state
                    .suffixes()
                    .filter(|y| successor(states, tree, y, b).map(|(t, _)| t) == Some(target))
                    .cloned()
                    .collect();
                let fresh = states.create_state();
                for y in &movers {
                    states.move_suffix(y, fresh);
                }
                splits += 1;
                continue 'rescan;
            }
        }
        return splits;
    }
}

/// Result of a CSSR run.
#[derive(Debug, Clone)]
pub struct CssrOutput {
    pub machine: CausalStateMachine,
    pub diagnostics: Diagnostics,
}

/// Runs all three phases on an existing parse tree.
pub fn run_cssr_on_tree(tree: &ParseTree, alphabet: &Alphabet, config: &CssrConfig) -> Result<CssrOutput> {
    alphabet.require_nondegenerate()?;
    if alphabet.len() != tree.alphabet_size() {
        return Err(CssrError::AlphabetMismatch("parse tree and alphabet sizes differ".into()));
    }
    let mut diag = Diagnostics::default();
    let n = tree.total();
    let k = alphabet.len();
    let safe = max_safe_l(n, k);
    if config.l_max > safe {
        diag.warnings.push(format!(
            "l_max = {} exceeds the conservative bound floor(log N / log k) = {safe} for N = {n}, k = {k}",
            config.l_max
        ));
    }
    let floor = (k as f64).powi(config.l_max as i32) * 10.0;
    if (n as f64) < floor {
        diag.warnings.push(format!("N = {n} is below 10 k^l_max = {floor}; estimates will be poor"));
    }

    let t = Instant::now();
    let mut states = phase2_sufficiency(tree, config, &mut diag)?;
    diag.phase2_time = t.elapsed();

    let t = Instant::now();
    loop {
        diag.phase3_rounds += 1;
        let removed = remove_transients(&mut states, tree)?;
        let splits = phase3_determinize(&mut states, tree);
        diag.transient_states_removed += removed as u64;
        diag.determinization_splits += splits as u64;
        if removed == 0 && splits == 0 {
            break;
        }
    }
    diag.phase3_time = t.elapsed();
    if diag.determinization_splits > 0 {
        diag.warnings.push(format!(
            "determinization needed {} split(s); l_max = {} may be too short to resolve the causal states",
            diag.determinization_splits, config.l_max
        ));
    }
    let machine = build_machine(&states, tree, alphabet, &mut diag)?;
    Ok(CssrOutput { machine, diagnostics: diag })
}

/// Builds the parse tree for `seqs` and runs CSSR.
pub fn run_cssr(seqs: &[SymbolSequence], alphabet: &Alphabet, config: &CssrConfig) -> Result<CssrOutput> {
    config.validate()?;
    alphabet.require_nondegenerate()?;
    let t = Instant::now();
    let tree = ParseTree::build_many(seqs, alphabet.len(), config.l_max)?;
    let elapsed = t.elapsed();
    let mut out = run_cssr_on_tree(&tree, alphabet, config)?;
    out.diagnostics.parse_tree_time = elapsed;
    Ok(out)
}

/// Freezes a deterministic, recurrent state set into a machine. States are
/// numbered in the order of their shortest suffix.
fn build_machine(
    states: &StateSet,
    tree: &ParseTree,
    alphabet: &Alphabet,
    diag: &mut Diagnostics,
) -> Result<CausalStateMachine> {
    let k = alphabet.len();
    let mut order: Vec<&SuffixState> = states.iter().collect();
    order.sort_by(|a, b| a.suffixes.iter().next().cmp(&b.suffixes.iter().next()));
    let position: HashMap<usize, usize> = order.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut specs = Vec::with_capacity(order.len());
    for (i, s) in order.iter().enumerate() {
        let mut counts = s.counts.0.clone();
        let mut transitions = vec![None; k];
        for b in 0..k {
            transitions[b] = s
                .suffixes()
                .find_map(|x| successor(states, tree, x, b as Symbol))
                .map(|(t, _)| position[&t]);
            if transitions[b].is_none() && counts[b] > 0 {
                diag.dropped_transitions += 1;
                counts[b] = 0;
            }
        }
        let dist = Distribution::from_counts(&counts).ok_or_else(|| {
            CssrError::MalformedMachine(format!("state {i} has no transitions to surviving states"))
        })?;
        specs.push(StateSpec {
            label: i.to_string(),
            suffixes: s.suffixes().cloned().collect(),
            emission: dist.probs().to_vec(),
            transitions,
        });
    }
    if diag.dropped_transitions > 0 {
        diag.warnings.push(format!(
            "{} observed transitions had no synchronized successor and were dropped",
            diag.dropped_transitions
        ));
    }
    CausalStateMachine::new(alphabet.clone(), specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::even_process;

    fn ab() -> Alphabet {
        Alphabet::from_chars("AB").unwrap()
    }

    fn tree_of(text: &str, l_max: usize) -> ParseTree {
        let seq = SymbolSequence::new(ab().parse_word(text).unwrap());
        ParseTree::build(&seq, 2, l_max).unwrap()
    }

    #[test]
    fn phase1_single_state() {
        let tree = tree_of("AABAB", 2);
        let s = phase1_initialize(&tree);
        assert_eq!(s.len(), 1);
        let only = s.iter().next().unwrap();
        assert_eq!(only.suffixes().collect::<Vec<_>>(), vec![&Vec::<Symbol>::new()]);
        assert_eq!(only.counts().0, vec![3, 2]);
    }

    #[test]
    fn identical_child_joins_parent() {
        let tree = tree_of("ABABABABAB", 1);
        let mut s = phase1_initialize(&tree);
        let mut diag = Diagnostics::default();
        let counts = tree.next_counts(&[]).unwrap();
        let out = test_subroutine(&mut s, vec![0], counts, 0, &CssrConfig::default(), &mut diag);
        assert_eq!(out, TestOutcome::Joined);
        assert!(s.is_consistent());
    }

    #[test]
    fn rejected_child_moves_to_closest_matching_state() {
        let tree = tree_of("AB", 1);
        let mut s = StateSet::new(2);
        let s0 = s.create_state();
        s.insert(vec![], NextCounts(vec![500, 500]), s0);
        let s1 = s.create_state();
        s.insert(vec![0], NextCounts(vec![0, 1000]), s1);
        let s2 = s.create_state();
        s.insert(vec![1], NextCounts(vec![1000, 0]), s2);
        let _ = tree;
        let cfg = CssrConfig::default();
        let mut diag = Diagnostics::default();
        // Matches s2, not its parent s0.
        let out = test_subroutine(&mut s, vec![0, 1], NextCounts(vec![400, 0]), s0, &cfg, &mut diag);
        assert_eq!(out, TestOutcome::Moved(s2));
        // A second child with the same distribution lands in the same state.
        let out = test_subroutine(&mut s, vec![1, 1], NextCounts(vec![300, 1]), s0, &cfg, &mut diag);
        assert_eq!(out, TestOutcome::Moved(s2));
        // Matches nothing: new state.
        let out = test_subroutine(&mut s, vec![0, 0], NextCounts(vec![900, 2100]), s0, &cfg, &mut diag);
        assert!(matches!(out, TestOutcome::Created(_)));
        assert_eq!(diag.null_rejections, 3);
        assert!(s.is_consistent());
    }

    #[test]
    fn restricted_alternative_tie_goes_to_lowest_id() {
        let mut s = StateSet::new(2);
        let p = s.create_state();
        s.insert(vec![], NextCounts(vec![900, 100]), p);
        let a = s.create_state();
        s.insert(vec![0], NextCounts(vec![100, 100]), a);
        let b = s.create_state();
        s.insert(vec![1], NextCounts(vec![100, 100]), b);
        let mut diag = Diagnostics::default();
        let out = test_subroutine(&mut s, vec![0, 0], NextCounts(vec![50, 50]), p, &CssrConfig::default(), &mut diag);
        assert_eq!(out, TestOutcome::Moved(a));
    }

    #[test]
    fn period_two_gives_two_states() {
        let text: String = "AB".repeat(500);
        let seq = SymbolSequence::new(ab().parse_word(&text).unwrap());
        let out = run_cssr(&[seq], &ab(), &CssrConfig::new(3, 1e-3)).unwrap();
        assert_eq!(out.machine.num_states(), 2);
        assert_eq!(out.machine.entropy_rate(), 0.0);
    }

    #[test]
    fn chain_with_transient_head_is_trimmed() {
        // s0 -> s1 <-> s2, nothing enters s0.
        let tree = tree_of("ABABABABABAB", 1);
        let mut s = StateSet::new(2);
        let s0 = s.create_state();
        s.insert(vec![], tree.next_counts(&[]).unwrap(), s0);
        let s1 = s.create_state();
        s.insert(vec![0], tree.next_counts(&[0]).unwrap(), s1);
        let s2 = s.create_state();
        s.insert(vec![1], tree.next_counts(&[1]).unwrap(), s2);
        assert_eq!(remove_transients(&mut s, &tree).unwrap(), 1);
        assert_eq!(s.live_ids(), vec![s1, s2]);
        // Already recurrent: nothing more to remove.
        assert_eq!(remove_transients(&mut s, &tree).unwrap(), 0);
    }

    #[test]
    fn determinize_splits_disagreeing_members() {
        // In "AABAAB..." the suffixes BA and B share a state but go to
        // different states on A: BA A ends in AA, B A ends in BA.
        let text = "AAB".repeat(200);
        let tree = tree_of(&text, 2);
        let mut s = StateSet::new(2);
        let x = s.create_state();
        let c = s.create_state();
        let d = s.create_state();
        for (w, st) in [(vec![1, 0], x), (vec![1], x), (vec![0, 0], c), (vec![0], d), (vec![0, 1], d)] {
            let counts = tree.next_counts(&w).unwrap();
            s.insert(w, counts, st);
        }
        let splits = phase3_determinize(&mut s, &tree);
        assert!(splits >= 1);
        assert_ne!(s.state_of(&[1, 0]), s.state_of(&[1]));
        assert!(s.is_consistent());
        // Fixed point: a second pass changes nothing.
        assert_eq!(phase3_determinize(&mut s, &tree), 0);
    }

    #[test]
    fn even_process_recovered() {
        let m = even_process();
        let seq = m.simulate(10_000, 7);
        let out = run_cssr(&[seq], m.alphabet(), &CssrConfig::new(4, 1e-3)).unwrap();
        assert_eq!(out.machine.num_states(), 2, "{}", out.machine.to_text());
        assert!(out.machine.is_unifilar());
        assert!(out.machine.is_strongly_connected());
    }

    #[test]
    fn config_validation() {
        assert!(CssrConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(CssrConfig { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(CssrConfig { min_count: 0, ..Default::default() }.validate().is_err());
        let one = SymbolSequence::new(vec![0, 0, 0]);
        let single = Alphabet::from_chars("A").unwrap();
        assert!(matches!(
            run_cssr(&[one], &single, &CssrConfig::default()),
            Err(CssrError::DegenerateAlphabet(_))
        ));
    }
}
