//! Grammar rules of bounded depth, their extraction from treebanks, and
//! relative-frequency probability estimation.
//!
//! A rule of depth `d` is a tree pattern of height exactly `d` rooted at its
//! left-hand-side nonterminal. Internal nodes that would extend past level
//! `d` are cut off and appear as childless frontier nonterminals; genuine
//! terminals stay verbatim at any level. Depth 2 is the classic context-free
//! production `LHS -> child labels`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sexpr::{self, SExpr};
use crate::tree::{ParseTree, Treebank};

/// One node of a rule pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternNode {
    /// Nonterminal with its children spelled out.
    Internal {
        label: String,
        children: Vec<PatternNode>,
    },
    /// Nonterminal cut off at the pattern's depth; matches any subtree rooted
    /// at this label.
    Frontier(String),
    /// A literal terminal token.
    Terminal(String),
}

impl PatternNode {
    pub fn label(&self) -> &str {
        match self {
            PatternNode::Internal { label, .. } => label,
            PatternNode::Frontier(l) => l,
            PatternNode::Terminal(t) => t,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            PatternNode::Internal { children, .. } => {
                1 + children.iter().map(PatternNode::height).max().unwrap_or(0)
            }
            _ => 1,
        }
    }

    pub fn to_sexpr(&self) -> SExpr {
        match self {
            PatternNode::Frontier(l) => SExpr::atom(l.clone()),
            PatternNode::Terminal(t) => SExpr::atom(t.clone()),
            PatternNode::Internal { label, children } => {
                let mut items = Vec::with_capacity(children.len() + 1);
                items.push(SExpr::atom(label.clone()));
                items.extend(children.iter().map(PatternNode::to_sexpr));
                SExpr::List(items)
            }
        }
    }
}

/// A grammar rule pattern: height-`depth` body rooted at the LHS nonterminal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RulePattern {
    depth: usize,
    body: PatternNode,
}

impl RulePattern {
    /// `None` unless `body` is an internal node of height exactly `depth`.
    pub fn new(depth: usize, body: PatternNode) -> Option<RulePattern> {
        match &body {
            PatternNode::Internal { .. } if body.height() == depth => {
                Some(RulePattern { depth, body })
            }
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lhs(&self) -> &str {
        self.body.label()
    }

    pub fn body(&self) -> &PatternNode {
        &self.body
    }

    /// Depth-2 patterns are plain productions; their right-hand side is the
    /// flat child list.
    pub fn rhs(&self) -> Option<&[PatternNode]> {
        match (&self.body, self.depth) {
            (PatternNode::Internal { children, .. }, 2) => Some(children),
            _ => None,
        }
    }

    pub fn canonical(&self) -> String {
        sexpr::print(&self.body.to_sexpr())
    }
}

impl fmt::Display for RulePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Cuts `tree` off below level `depth`. The result has height
/// `min(depth, height(tree))`; internal nodes at the cut level become
/// frontier nonterminals, terminals stay verbatim.
pub fn truncate(tree: &ParseTree, depth: usize) -> RulePattern {
    debug_assert!(depth >= 2, "patterns start at depth 2");
    debug_assert!(!tree.is_leaf(), "cannot truncate a bare terminal");
    let body = truncate_node(tree, 1, depth);
    RulePattern {
        depth: depth.min(tree.height()),
        body,
    }
}

fn truncate_node(tree: &ParseTree, level: usize, depth: usize) -> PatternNode {
    if tree.is_leaf() {
        return PatternNode::Terminal(tree.label().to_string());
    }
    if level == depth {
        return PatternNode::Frontier(tree.label().to_string());
    }
    PatternNode::Internal {
        label: tree.label().to_string(),
        children: tree
            .children()
            .iter()
            .map(|c| truncate_node(c, level + 1, depth))
            .collect(),
    }
}

/// All depth-`depth` rule occurrences in `tree`: one per internal node whose
/// subtree reaches at least that height. Shallower nodes contribute to their
/// own height class only, never padded into deeper ones.
pub fn extract_rules(tree: &ParseTree, depth: usize) -> Vec<RulePattern> {
    debug_assert!(depth >= 2);
    let mut out = Vec::new();
    collect_rules(tree, depth, &mut out);
    out
}

fn collect_rules(tree: &ParseTree, depth: usize, out: &mut Vec<RulePattern>) {
    if tree.is_leaf() {
        return;
    }
    if tree.height() >= depth {
        out.push(truncate(tree, depth));
    }
    for c in tree.children() {
        collect_rules(c, depth, out);
    }
}

/// A rule with its estimated probability. `count` is kept for inspection on
/// trained grammars and absent on grammars read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedRule {
    pub pattern: RulePattern,
    pub count: Option<u64>,
    pub prob: f64,
}

/// Rule sets for depths `2..=max_depth` with probabilities normalized
/// independently per (depth, LHS) class. Immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    start: String,
    max_depth: usize,
    classes: BTreeMap<(usize, String), Vec<TrainedRule>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    EmptyTreebank,
    MaxDepthTooSmall(usize),
    MixedRoots { expected: String, found: String },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptyTreebank => write!(f, "cannot train on an empty treebank"),
            TrainError::MaxDepthTooSmall(d) => {
                write!(f, "max depth must be at least 2, got {d}")
            }
            TrainError::MixedRoots { expected, found } => write!(
                f,
                "treebank roots disagree: expected {expected:?}, found {found:?}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GrammarError {
    NoRules,
    BadProbability { prob: f64 },
    DuplicateRule { pattern: String },
    NotNormalized { depth: usize, lhs: String, sum: f64 },
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarError::NoRules => write!(f, "grammar has no rules"),
            GrammarError::BadProbability { prob } => {
                write!(f, "rule probability {prob} outside (0, 1]")
            }
            GrammarError::DuplicateRule { pattern } => {
                write!(f, "rule {pattern} appears twice")
            }
            GrammarError::NotNormalized { depth, lhs, sum } => write!(
                f,
                "class (depth {depth}, {lhs:?}) sums to {sum}, expected 1"
            ),
        }
    }
}

/// Normalization slack accepted when assembling a grammar from stored rules.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Estimates rule probabilities by relative frequency: for each depth `d` in
/// `2..=max_depth`, `p(rule) = count(rule) / total count of rules with the
/// same (d, LHS)`. Depth classes are disjoint, so duplicating the treebank
/// changes nothing.
pub fn train(treebank: &Treebank, max_depth: usize) -> Result<Grammar, TrainError> {
    if max_depth < 2 {
        return Err(TrainError::MaxDepthTooSmall(max_depth));
    }
    if treebank.is_empty() {
        return Err(TrainError::EmptyTreebank);
    }
    let start = treebank.start().expect("non-empty treebank").to_string();
    for t in treebank.trees() {
        if t.label() != start {
            return Err(TrainError::MixedRoots {
                expected: start,
                found: t.label().to_string(),
            });
        }
    }

    let mut counts: BTreeMap<(usize, String), BTreeMap<RulePattern, u64>> = BTreeMap::new();
    for depth in 2..=max_depth {
        for tree in treebank.trees() {
            for pattern in extract_rules(tree, depth) {
                *counts
                    .entry((depth, pattern.lhs().to_string()))
                    .or_default()
                    .entry(pattern)
                    .or_insert(0) += 1;
            }
        }
    }

    let mut classes = BTreeMap::new();
    for ((depth, lhs), members) in counts {
        let total: u64 = members.values().sum();
        let mut rules: Vec<TrainedRule> = members
            .into_iter()
            .map(|(pattern, count)| TrainedRule {
                pattern,
                count: Some(count),
                prob: count as f64 / total as f64,
            })
            .collect();
        rules.sort_by_key(|r| r.pattern.canonical());
        classes.insert((depth, lhs), rules);
    }
    Ok(Grammar {
        start,
        max_depth,
        classes,
    })
}

impl Grammar {
    /// Assembles a grammar from explicit rules, checking that every
    /// probability is in (0, 1] and every (depth, LHS) class sums to 1
    /// within [`NORMALIZATION_TOLERANCE`].
    pub fn from_rules(
        start: impl Into<String>,
        max_depth: usize,
        rules: impl IntoIterator<Item = TrainedRule>,
    ) -> Result<Grammar, GrammarError> {
        let mut classes: BTreeMap<(usize, String), Vec<TrainedRule>> = BTreeMap::new();
        let mut any = false;
        for rule in rules {
            any = true;
            if !(rule.prob > 0.0 && rule.prob <= 1.0) {
                return Err(GrammarError::BadProbability { prob: rule.prob });
            }
            classes
                .entry((rule.pattern.depth(), rule.pattern.lhs().to_string()))
                .or_default()
                .push(rule);
        }
        if !any {
            return Err(GrammarError::NoRules);
        }
        for ((depth, lhs), members) in &mut classes {
            let sum: f64 = members.iter().map(|r| r.prob).sum();
            if libm::fabs(sum - 1.0) > NORMALIZATION_TOLERANCE {
                return Err(GrammarError::NotNormalized {
                    depth: *depth,
                    lhs: lhs.clone(),
                    sum,
                });
            }
            members.sort_by_key(|r| r.pattern.canonical());
            for pair in members.windows(2) {
                if pair[0].pattern == pair[1].pattern {
                    return Err(GrammarError::DuplicateRule {
                        pattern: pair[0].pattern.canonical(),
                    });
                }
            }
        }
        Ok(Grammar {
            start: start.into(),
            max_depth,
            classes,
        })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Iterates (depth, lhs, rules) classes in deterministic order.
    pub fn classes(&self) -> impl Iterator<Item = (usize, &str, &[TrainedRule])> {
        self.classes
            .iter()
            .map(|((d, lhs), rules)| (*d, lhs.as_str(), rules.as_slice()))
    }

    pub fn class(&self, depth: usize, lhs: &str) -> &[TrainedRule] {
        self.classes
            .get(&(depth, lhs.to_string()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn rules_at_depth(&self, depth: usize) -> impl Iterator<Item = &TrainedRule> {
        self.classes
            .range((depth, String::new())..(depth + 1, String::new()))
            .flat_map(|(_, rules)| rules.iter())
    }

    pub fn rule_count_at_depth(&self, depth: usize) -> usize {
        self.rules_at_depth(depth).count()
    }

    pub fn prob_of(&self, pattern: &RulePattern) -> Option<f64> {
        self.classes
            .get(&(pattern.depth(), pattern.lhs().to_string()))?
            .iter()
            .find(|r| &r.pattern == pattern)
            .map(|r| r.prob)
    }
}
