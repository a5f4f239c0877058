//! Discrimination-tree index over rule patterns.
//!
//! Each pattern is serialized to a preorder path string and the strings are
//! stored in a trie. Path symbols are interned to dense ids once, and every
//! trie node keeps its children in an ordered map keyed by symbol id, so one
//! lookup costs a logarithmic search per symbol. Retrieval is exact match
//! only; the parser only ever queries ground truncations of chart
//! candidates.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::grammar::{Grammar, PatternNode, RulePattern};

/// One symbol of a pattern's preorder path string. Internal nodes serialize
/// as `Open Nt(label) ... Close`, frontier nonterminals as a bare `Nt`, so
/// path strings reconstruct their pattern unambiguously.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PathSym {
    Open,
    Close,
    Nt(String),
    Term(String),
}

/// Borrowed view of a [`PathSym`]; lets the parser query the trie without
/// allocating owned symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PathSymRef<'a> {
    Open,
    Close,
    Nt(&'a str),
    Term(&'a str),
}

fn sym_parts(sym: &PathSym) -> (u8, &str) {
    match sym {
        PathSym::Open => (0, ""),
        PathSym::Close => (1, ""),
        PathSym::Nt(s) => (2, s),
        PathSym::Term(s) => (3, s),
    }
}

fn ref_parts<'a>(sym: &PathSymRef<'a>) -> (u8, &'a str) {
    match sym {
        PathSymRef::Open => (0, ""),
        PathSymRef::Close => (1, ""),
        PathSymRef::Nt(s) => (2, s),
        PathSymRef::Term(s) => (3, s),
    }
}

/// Preorder serialization of a pattern body.
pub fn path_string(pattern: &RulePattern) -> Vec<PathSym> {
    let mut out = Vec::new();
    emit(pattern.body(), &mut out);
    out
}

fn emit(node: &PatternNode, out: &mut Vec<PathSym>) {
    match node {
        PatternNode::Frontier(l) => out.push(PathSym::Nt(l.clone())),
        PatternNode::Terminal(t) => out.push(PathSym::Term(t.clone())),
        PatternNode::Internal { label, children } => {
            out.push(PathSym::Open);
            out.push(PathSym::Nt(label.clone()));
            for c in children {
                emit(c, out);
            }
            out.push(PathSym::Close);
        }
    }
}

/// Distinct path symbols mapped to dense ids, one ordered map per symbol
/// kind so borrowed text queries need no allocation.
#[derive(Debug, Clone, Default)]
struct Interner {
    by_kind: [BTreeMap<String, u32>; 4],
    next: u32,
}

impl Interner {
    fn get(&self, key: (u8, &str)) -> Option<u32> {
        self.by_kind[key.0 as usize].get(key.1).copied()
    }

    fn intern(&mut self, key: (u8, &str)) -> u32 {
        if let Some(&id) = self.by_kind[key.0 as usize].get(key.1) {
            return id;
        }
        let id = self.next;
        self.next += 1;
        self.by_kind[key.0 as usize].insert(key.1.to_string(), id);
        id
    }
}

/// Fanout below this stays in an inline sorted vector; larger nodes upgrade
/// to a balanced tree. Both give ordered, logarithmic child lookup, and the
/// inline form keeps the millions of near-unary suffix nodes cheap.
const INLINE_CHILDREN: usize = 8;

#[derive(Debug, Clone)]
enum Children {
    Few(Vec<(u32, TrieNode)>),
    Many(BTreeMap<u32, TrieNode>),
}

impl Default for Children {
    fn default() -> Self {
        Children::Few(Vec::new())
    }
}

impl Children {
    fn get(&self, id: u32) -> Option<&TrieNode> {
        match self {
            Children::Few(v) => v
                .binary_search_by_key(&id, |(k, _)| *k)
                .ok()
                .map(|i| &v[i].1),
            Children::Many(m) => m.get(&id),
        }
    }

    fn get_or_insert(&mut self, id: u32) -> &mut TrieNode {
        let promote = matches!(
            self,
            Children::Few(v) if v.len() >= INLINE_CHILDREN
                && v.binary_search_by_key(&id, |(k, _)| *k).is_err()
        );
        if promote {
            if let Children::Few(v) = self {
                let promoted: BTreeMap<u32, TrieNode> =
                    core::mem::take(v).into_iter().collect();
                *self = Children::Many(promoted);
            }
        }
        match self {
            Children::Few(v) => match v.binary_search_by_key(&id, |(k, _)| *k) {
                Ok(i) => &mut v[i].1,
                Err(i) => {
                    v.insert(i, (id, TrieNode::default()));
                    &mut v[i].1
                }
            },
            Children::Many(m) => m.entry(id).or_default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Children,
    accept: Option<Accepted>,
}

#[derive(Debug, Clone, Copy)]
struct Accepted {
    depth: usize,
    log_prob: f64,
}

impl TrieNode {
    fn count(&self) -> usize {
        1 + match &self.children {
            Children::Few(v) => v.iter().map(|(_, c)| c.count()).sum::<usize>(),
            Children::Many(m) => m.values().map(TrieNode::count).sum::<usize>(),
        }
    }
}

/// Trie over pattern path strings mapping each stored pattern to its depth
/// and log probability. Immutable once built; shareable across parser calls.
#[derive(Debug, Clone, Default)]
pub struct SubtreeIndex {
    symbols: Interner,
    root: TrieNode,
    len: usize,
    max_depth: usize,
}

impl SubtreeIndex {
    pub fn new() -> SubtreeIndex {
        SubtreeIndex::default()
    }

    /// Indexes every rule of depth at least `min_depth` from `grammar`,
    /// keyed by pattern, valued by natural-log probability. A grammar with
    /// no such rules yields an empty index.
    pub fn build(grammar: &Grammar, min_depth: usize) -> SubtreeIndex {
        let mut index = SubtreeIndex::new();
        for (depth, _, rules) in grammar.classes() {
            if depth < min_depth {
                continue;
            }
            for rule in rules {
                index.insert(&rule.pattern, libm::log(rule.prob));
            }
        }
        index
    }

    pub fn insert(&mut self, pattern: &RulePattern, log_prob: f64) {
        let mut node = &mut self.root;
        for sym in path_string(pattern) {
            let id = self.symbols.intern(sym_parts(&sym));
            node = node.children.get_or_insert(id);
        }
        if node.accept.is_none() {
            self.len += 1;
        }
        node.accept = Some(Accepted {
            depth: pattern.depth(),
            log_prob,
        });
        self.max_depth = self.max_depth.max(pattern.depth());
    }

    /// Exact-match retrieval: the stored natural-log probability, or `None`.
    pub fn lookup(&self, pattern: &RulePattern) -> Option<f64> {
        let mut node = &self.root;
        for sym in path_string(pattern) {
            let id = self.symbols.get(sym_parts(&sym))?;
            node = node.children.get(id)?;
        }
        node.accept.map(|a| a.log_prob)
    }

    pub(crate) fn lookup_syms(&self, syms: &[PathSymRef<'_>]) -> Option<f64> {
        let mut node = &self.root;
        for sym in syms {
            let id = self.symbols.get(ref_parts(sym))?;
            node = node.children.get(id)?;
        }
        node.accept.map(|a| a.log_prob)
    }

    /// Number of stored patterns.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Greatest depth of any stored pattern (0 when empty).
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Total trie nodes, including the root. Bounded by the summed length of
    /// all inserted path strings plus one.
    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    /// Indented text rendering of the trie, for debugging.
    pub fn dump(&self) -> String {
        let mut names: BTreeMap<u32, (u8, &str)> = BTreeMap::new();
        for (tag, kind) in self.symbols.by_kind.iter().enumerate() {
            for (text, id) in kind {
                names.insert(*id, (tag as u8, text.as_str()));
            }
        }
        let mut out = String::new();
        dump_node(&self.root, &names, 0, &mut out);
        out
    }
}

fn dump_node(
    node: &TrieNode,
    names: &BTreeMap<u32, (u8, &str)>,
    indent: usize,
    out: &mut String,
) {
    let pairs: Vec<(u32, &TrieNode)> = match &node.children {
        Children::Few(v) => v.iter().map(|(k, c)| (*k, c)).collect(),
        Children::Many(m) => m.iter().map(|(k, c)| (*k, c)).collect(),
    };
    for (id, child) in pairs {
        for _ in 0..indent {
            out.push_str("  ");
        }
        match names[&id] {
            (0, _) => out.push('('),
            (1, _) => out.push(')'),
            (2, l) => {
                out.push_str("N:");
                out.push_str(l);
            }
            (_, t) => {
                out.push_str("T:");
                out.push_str(t);
            }
        }
        if let Some(a) = child.accept {
            out.push_str(&alloc::format!(
                " => depth {} p={:e}",
                a.depth,
                libm::exp(a.log_prob)
            ));
        }
        out.push('\n');
        dump_node(child, names, indent + 1, out);
    }
}
