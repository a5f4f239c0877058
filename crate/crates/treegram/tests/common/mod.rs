#![allow(dead_code)] // shared by several test binaries, none uses everything

//! Test-only reference machinery: a brute-force derivation enumerator, an
//! independent max-combination probability recomputation, and random
//! treebank generators. Deliberately naive so it shares nothing with the
//! chart parser it checks.

use std::collections::HashMap;
use std::rc::Rc;

use treegram::grammar::{truncate, Grammar, PatternNode, RulePattern};
use treegram::rng::Xorshift64Star;
use treegram::tree::{ParseTree, Treebank};

#[derive(Debug, Clone)]
pub enum OSym {
    Nt(String),
    Tok(String),
}

/// Depth-2 rules grouped by left-hand side, as plain symbol sequences.
/// Unary nonterminal rules are rejected: the enumerator memoizes on spans
/// and cannot bound unary cycles, so generated corpora avoid them.
pub struct OracleRules {
    pub start: String,
    pub by_lhs: HashMap<String, Vec<(Vec<OSym>, f64)>>,
}

pub fn oracle_rules(grammar: &Grammar) -> OracleRules {
    let mut by_lhs: HashMap<String, Vec<(Vec<OSym>, f64)>> = HashMap::new();
    for rule in grammar.rules_at_depth(2) {
        let children = match rule.pattern.body() {
            PatternNode::Internal { children, .. } => children,
            _ => unreachable!(),
        };
        let syms: Vec<OSym> = children
            .iter()
            .map(|c| match c {
                PatternNode::Frontier(l) => OSym::Nt(l.clone()),
                PatternNode::Terminal(t) => OSym::Tok(t.clone()),
                PatternNode::Internal { .. } => unreachable!(),
            })
            .collect();
        assert!(
            !matches!(syms.as_slice(), [OSym::Nt(_)]),
            "oracle does not handle unary rules"
        );
        by_lhs
            .entry(rule.pattern.lhs().to_string())
            .or_default()
            .push((syms, rule.prob));
    }
    OracleRules {
        start: grammar.start().to_string(),
        by_lhs,
    }
}

type TreeMemo = HashMap<(String, usize, usize), Rc<Vec<ParseTree>>>;

/// Every tree over the grammar's depth-2 rules whose yield is `tokens`.
pub fn enumerate_parses(grammar: &Grammar, tokens: &[String]) -> Vec<ParseTree> {
    let rules = oracle_rules(grammar);
    let mut memo = TreeMemo::new();
    derive(&rules, tokens, &rules.start.clone(), 0, tokens.len(), &mut memo)
        .as_ref()
        .clone()
}

fn derive(
    rules: &OracleRules,
    tokens: &[String],
    nt: &str,
    i: usize,
    j: usize,
    memo: &mut TreeMemo,
) -> Rc<Vec<ParseTree>> {
    let key = (nt.to_string(), i, j);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    // occurs-check placeholder so accidental unary recursion would blow up
    // loudly instead of looping
    memo.insert(key.clone(), Rc::new(Vec::new()));
    let mut out = Vec::new();
    if let Some(bodies) = rules.by_lhs.get(nt) {
        for (syms, _) in bodies {
            for children in expansions(rules, tokens, syms, i, j, memo) {
                out.push(ParseTree::node(nt, children));
            }
        }
    }
    let rc = Rc::new(out);
    memo.insert(key, rc.clone());
    rc
}

fn expansions(
    rules: &OracleRules,
    tokens: &[String],
    syms: &[OSym],
    i: usize,
    j: usize,
    memo: &mut TreeMemo,
) -> Vec<Vec<ParseTree>> {
    let Some((first, rest)) = syms.split_first() else {
        return if i == j { vec![Vec::new()] } else { Vec::new() };
    };
    if j - i < syms.len() {
        return Vec::new(); // every symbol consumes at least one token
    }
    match first {
        OSym::Tok(t) => {
            if tokens[i] == *t {
                let mut out = expansions(rules, tokens, rest, i + 1, j, memo);
                for children in &mut out {
                    children.insert(0, ParseTree::leaf(t.clone()));
                }
                out
            } else {
                Vec::new()
            }
        }
        OSym::Nt(x) => {
            let mut out = Vec::new();
            for k in (i + 1)..=(j - rest.len()) {
                let heads = derive(rules, tokens, x, i, k, memo);
                if heads.is_empty() {
                    continue;
                }
                for tail in expansions(rules, tokens, rest, k, j, memo) {
                    for head in heads.iter() {
                        let mut children = Vec::with_capacity(tail.len() + 1);
                        children.push(head.clone());
                        children.extend(tail.iter().cloned());
                        out.push(children);
                    }
                }
            }
            out
        }
    }
}

type CountMemo = HashMap<(String, usize, usize), u64>;

/// Number of derivations of `tokens` from the start symbol.
pub fn count_parses(grammar: &Grammar, tokens: &[String]) -> u64 {
    let rules = oracle_rules(grammar);
    let mut memo = CountMemo::new();
    count_derive(&rules, tokens, &rules.start.clone(), 0, tokens.len(), &mut memo)
}

fn count_derive(
    rules: &OracleRules,
    tokens: &[String],
    nt: &str,
    i: usize,
    j: usize,
    memo: &mut CountMemo,
) -> u64 {
    let key = (nt.to_string(), i, j);
    if let Some(&hit) = memo.get(&key) {
        return hit;
    }
    memo.insert(key.clone(), 0);
    let mut total = 0u64;
    if let Some(bodies) = rules.by_lhs.get(nt) {
        for (syms, _) in bodies {
            total += count_expansions(rules, tokens, syms, i, j, memo);
        }
    }
    memo.insert(key, total);
    total
}

fn count_expansions(
    rules: &OracleRules,
    tokens: &[String],
    syms: &[OSym],
    i: usize,
    j: usize,
    memo: &mut CountMemo,
) -> u64 {
    let Some((first, rest)) = syms.split_first() else {
        return u64::from(i == j);
    };
    if j - i < syms.len() {
        return 0;
    }
    match first {
        OSym::Tok(t) => {
            if tokens[i] == *t {
                count_expansions(rules, tokens, rest, i + 1, j, memo)
            } else {
                0
            }
        }
        OSym::Nt(x) => {
            let mut total = 0;
            for k in (i + 1)..=(j - rest.len()) {
                let heads = count_derive(rules, tokens, x, i, k, memo);
                if heads == 0 {
                    continue;
                }
                total += heads * count_expansions(rules, tokens, rest, k, j, memo);
            }
            total
        }
    }
}

/// Hash-map stand-in for the discrimination tree: every rule of depth >= 3
/// keyed by pattern, valued by natural-log probability.
pub fn deep_table(grammar: &Grammar) -> HashMap<RulePattern, f64> {
    let mut out = HashMap::new();
    for (depth, _, rules) in grammar.classes() {
        if depth < 3 {
            continue;
        }
        for rule in rules {
            out.insert(rule.pattern.clone(), rule.prob.ln());
        }
    }
    out
}

/// Independent recomputation of a tree's max-combined log probability: the
/// context-free route via the tree's own depth-2 rules, maxed against every
/// deep truncation found in `deep`, with frontier subtrees recursing.
pub fn oracle_log_prob(
    grammar: &Grammar,
    deep: &HashMap<RulePattern, f64>,
    tree: &ParseTree,
    max_depth: usize,
) -> f64 {
    let shallow = truncate(tree, 2);
    let p2 = grammar
        .prob_of(&shallow)
        .unwrap_or_else(|| panic!("untrained rule {shallow}"));
    let mut best: f64 = p2.ln();
    for child in tree.children() {
        if !child.is_leaf() {
            best += oracle_log_prob(grammar, deep, child, max_depth);
        }
    }
    for depth in 3..=max_depth.min(tree.height()) {
        let pattern = truncate(tree, depth);
        if let Some(&deep_log) = deep.get(&pattern) {
            let mut value = deep_log;
            for node in frontier_nodes(tree, depth) {
                value += oracle_log_prob(grammar, deep, node, max_depth);
            }
            if value > best {
                best = value;
            }
        }
    }
    best
}

/// Internal nodes sitting exactly at `depth` below the root (root = 1).
pub fn frontier_nodes(tree: &ParseTree, depth: usize) -> Vec<&ParseTree> {
    let mut out = Vec::new();
    fn rec<'t>(t: &'t ParseTree, level: usize, depth: usize, out: &mut Vec<&'t ParseTree>) {
        for c in t.children() {
            if c.is_leaf() {
                continue;
            }
            if level + 1 == depth {
                out.push(c);
            } else {
                rec(c, level + 1, depth, out);
            }
        }
    }
    rec(tree, 1, depth, &mut out);
    out
}

/// All (variable, type) pairs read off `(Type τ)`-over-`(Var name)` nodes,
/// with duplicates; an independent check for binding-conflict freedom.
pub fn binding_pairs(tree: &ParseTree) -> Vec<(String, String)> {
    let mut out = Vec::new();
    fn rec(t: &ParseTree, out: &mut Vec<(String, String)>) {
        if t.label().starts_with("(Type ") {
            if let [var] = t.children() {
                if var.label() == "Var" {
                    if let [name] = var.children() {
                        if name.is_leaf() {
                            out.push((name.label().to_string(), t.label().to_string()));
                        }
                    }
                }
            }
        }
        for c in t.children() {
            rec(c, out);
        }
    }
    rec(tree, &mut out);
    out
}

pub fn conflict_free(tree: &ParseTree) -> bool {
    let mut seen: HashMap<String, String> = HashMap::new();
    for (var, ty) in binding_pairs(tree) {
        if let Some(prev) = seen.insert(var, ty.clone()) {
            if prev != ty {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// random corpora

const LABELS: [&str; 3] = ["A", "B", "C"];
const TOKENS: [&str; 8] = ["a", "b", "c", "d", "+", "*", "f", "."];

fn random_subtree(rng: &mut Xorshift64Star, depth_left: usize) -> ParseTree {
    if depth_left == 0 || rng.next_below(100) < 45 {
        return ParseTree::leaf(TOKENS[rng.next_below(TOKENS.len() as u64) as usize]);
    }
    let arity = 2 + rng.next_below(2) as usize;
    ParseTree::node(
        LABELS[rng.next_below(LABELS.len() as u64) as usize],
        (0..arity)
            .map(|_| random_subtree(rng, depth_left - 1))
            .collect(),
    )
}

/// A rooted tree with no unary nonterminal nodes and a yield of at most 12
/// tokens.
pub fn random_tree(rng: &mut Xorshift64Star) -> ParseTree {
    loop {
        let arity = 2 + rng.next_below(2) as usize;
        let tree = ParseTree::node(
            "S",
            (0..arity).map(|_| random_subtree(rng, 3)).collect(),
        );
        if tree.leaf_count() <= 12 {
            return tree;
        }
    }
}

/// A treebank of 1..=8 such trees, re-rolled until no sentence admits more
/// than `max_ambiguity` depth-2 derivations (keeps the enumerator honest and
/// fast).
pub fn random_treebank(rng: &mut Xorshift64Star, max_ambiguity: u64) -> Treebank {
    loop {
        let count = 1 + rng.next_below(8) as usize;
        let bank = Treebank::new((0..count).map(|_| random_tree(rng)).collect());
        let grammar = treegram::grammar::train(&bank, 2).expect("non-empty uniform bank");
        let ambiguous = bank.trees().iter().any(|t| {
            let toks = t.yield_tokens();
            count_parses(&grammar, &toks) > max_ambiguity
        });
        if !ambiguous {
            return bank;
        }
    }
}
