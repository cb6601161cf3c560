//! Depth-bounded trie of subword occurrence counts.
//!
//! Every later stage of inference queries this tree instead of the raw data,
//! so the data is scanned exactly once. Words are stored oldest symbol first
//! and occurrences are counted with overlapping windows.

use crate::error::{CssrError, Result};
use crate::sequence::{Symbol, SymbolSequence, Word};

type NodeId = u32;
const ROOT: NodeId = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    count: u64,
    /// Sorted by symbol. Absent children are words that never occurred.
    children: Vec<(Symbol, NodeId)>,
}

impl Node {
    fn new() -> Self {
        Node { count: 0, children: Vec::new() }
    }

    #[inline]
    fn child(&self, s: Symbol) -> Option<NodeId> {
        // Alphabets are small; a scan beats a binary search at k = 2.
        self.children.iter().find(|&&(c, _)| c == s).map(|&(_, id)| id)
    }
}

/// Next-symbol counts following some history, indexed by symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextCounts(pub Vec<u64>);

impl NextCounts {
    pub fn zeros(k: usize) -> Self {
        NextCounts(vec![0; k])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, other: &NextCounts) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += *b;
        }
    }

    pub fn subtract(&mut self, other: &NextCounts) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= *b;
        }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// Counts of every word of length at most `l_max + 1` in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    nodes: Vec<Node>,
    alphabet_size: usize,
    l_max: usize,
    sequences: usize,
}

impl ParseTree {
    /// Builds the tree for one sequence.
    pub fn build(seq: &SymbolSequence, alphabet_size: usize, l_max: usize) -> Result<Self> {
        Self::build_many(std::slice::from_ref(seq), alphabet_size, l_max)
    }

    /// Builds the tree for several independent sequences. Windows never
    /// cross from one sequence into the next.
    pub fn build_many(seqs: &[SymbolSequence], alphabet_size: usize, l_max: usize) -> Result<Self> {
        if seqs.iter().all(SymbolSequence::is_empty) {
            return Err(CssrError::EmptySequence);
        }
        let total: usize = seqs.iter().map(SymbolSequence::len).sum();
        if let Some(k) = (alphabet_size >= 2).then_some(alphabet_size) {
            let safe = max_safe_l(total as u64, k);
            if l_max > safe {
                log::warn!(
                    "l_max = {l_max} exceeds the conservative bound {safe} for N = {total}, k = {k}; \
                     long-word estimates may not converge"
                );
            }
        }
        let depth = l_max + 1;
        let mut tree = ParseTree {
            nodes: vec![Node::new()],
            alphabet_size,
            l_max,
            sequences: seqs.len(),
        };
        for seq in seqs {
            let data = seq.as_slice();
            if let Some(&bad) = data.iter().find(|&&s| s as usize >= alphabet_size) {
                return Err(CssrError::UnknownSymbol(format!("index {bad}")));
            }
            for start in 0..data.len() {
                tree.nodes[ROOT as usize].count += 1;
                let mut node = ROOT;
                for &s in &data[start..(start + depth).min(data.len())] {
                    node = tree.child_or_insert(node, s);
                    tree.nodes[node as usize].count += 1;
                }
            }
        }
        Ok(tree)
    }

    fn child_or_insert(&mut self, node: NodeId, s: Symbol) -> NodeId {
        if let Some(c) = self.nodes[node as usize].child(s) {
            return c;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node::new());
        let children = &mut self.nodes[node as usize].children;
        let pos = children.partition_point(|&(c, _)| c < s);
        children.insert(pos, (s, id));
        id
    }

    fn find(&self, word: &[Symbol]) -> Option<NodeId> {
        let mut node = ROOT;
        for &s in word {
            node = self.nodes[node as usize].child(s)?;
        }
        Some(node)
    }

    /// Number of (overlapping) occurrences of `word`. Words longer than the
    /// tree depth are reported as zero.
    pub fn count(&self, word: &[Symbol]) -> u64 {
        self.find(word).map_or(0, |n| self.nodes[n as usize].count)
    }

    /// Counts of `history` followed by each symbol, or `None` when the
    /// history itself never occurred.
    pub fn next_counts(&self, history: &[Symbol]) -> Option<NextCounts> {
        let node = self.find(history)?;
        let node = &self.nodes[node as usize];
        if node.count == 0 {
            return None;
        }
        let mut out = NextCounts::zeros(self.alphabet_size);
        for &(s, c) in &node.children {
            out.0[s as usize] = self.nodes[c as usize].count;
        }
        Some(out)
    }

    /// Total number of symbols scanned.
    pub fn total(&self) -> u64 {
        self.nodes[ROOT as usize].count
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Longest word length stored (`l_max + 1`).
    pub fn depth(&self) -> usize {
        self.l_max + 1
    }

    pub fn num_sequences(&self) -> usize {
        self.sequences
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Observed words of exactly `len` symbols, in lexicographic order.
    pub fn words_of_length(&self, len: usize) -> Vec<(Word, u64)> {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(len);
        self.collect(ROOT, len, &mut prefix, &mut out);
        out
    }

    fn collect(&self, node: NodeId, len: usize, prefix: &mut Word, out: &mut Vec<(Word, u64)>) {
        let n = &self.nodes[node as usize];
        if prefix.len() == len {
            out.push((prefix.clone(), n.count));
            return;
        }
        for &(s, c) in &n.children {
            prefix.push(s);
            self.collect(c, len, prefix, out);
            prefix.pop();
        }
    }

    /// Checks that extending a word never increases its count.
    pub fn is_monotone(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.iter().map(|&(_, c)| self.nodes[c as usize].count).sum::<u64>() <= n.count
        })
    }
}

/// Largest history length for which word-probability estimates are safe,
/// `floor(log N / log k)`, using `log k` as an upper bound on the entropy
/// rate.
pub fn max_safe_l(n: u64, k: usize) -> usize {
    assert!(k >= 2, "max_safe_l needs k >= 2");
    let k = k as u64;
    let mut l = 0;
    let mut power: u64 = 1;
    while let Some(next) = power.checked_mul(k) {
        if next > n {
            break;
        }
        power = next;
        l += 1;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Alphabet;

    fn tree(text: &str, l_max: usize) -> (Alphabet, ParseTree) {
        let a = Alphabet::from_chars("AB").unwrap();
        let seq = SymbolSequence::new(a.parse_word(text).unwrap());
        let t = ParseTree::build(&seq, 2, l_max).unwrap();
        (a, t)
    }

    #[test]
    fn aabab_counts() {
        let (a, t) = tree("AABAB", 1);
        let c = |w: &str| t.count(&a.parse_word(w).unwrap());
        assert_eq!(c("A"), 3);
        assert_eq!(c("B"), 2);
        assert_eq!(c("AB"), 2);
        assert_eq!(c("AA"), 1);
        assert_eq!(c("BA"), 1);
        assert_eq!(c("BB"), 0);
        assert_eq!(t.total(), 5);
        assert_eq!(c("-"), 5);
    }

    #[test]
    fn conditional_counts() {
        let (a, t) = tree("AABAB", 1);
        assert_eq!(t.next_counts(&a.parse_word("A").unwrap()).unwrap().0, vec![1, 2]);
        assert_eq!(t.next_counts(&[]).unwrap().0, vec![3, 2]);
        assert_eq!(t.next_counts(&a.parse_word("BB").unwrap()), None);
    }

    #[test]
    fn depth_is_bounded() {
        let (a, t) = tree("AAAAAA", 2);
        assert_eq!(t.count(&a.parse_word("AAA").unwrap()), 4);
        assert_eq!(t.count(&a.parse_word("AAAA").unwrap()), 0);
    }

    #[test]
    fn lines_do_not_share_windows() {
        let seqs = vec![SymbolSequence::new(vec![0, 0]), SymbolSequence::new(vec![1, 1])];
        let t = ParseTree::build_many(&seqs, 2, 1).unwrap();
        assert_eq!(t.count(&[0, 1]), 0);
        assert_eq!(t.count(&[0, 0]), 1);
        assert_eq!(t.total(), 4);
    }

    #[test]
    fn empty_sequence_rejected() {
        assert_eq!(
            ParseTree::build(&SymbolSequence::default(), 2, 3).unwrap_err(),
            CssrError::EmptySequence
        );
    }

    #[test]
    fn max_safe_l_values() {
        assert_eq!(max_safe_l(10_000, 2), 13);
        assert_eq!(max_safe_l(100, 2), 6);
        assert_eq!(max_safe_l(2, 2), 1);
        assert_eq!(max_safe_l(7, 7), 1);
        assert_eq!(max_safe_l(1, 3), 0);
        assert_eq!(max_safe_l(u64::MAX, 2), 63);
    }
}
