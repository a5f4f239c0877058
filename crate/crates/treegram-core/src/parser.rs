//! Bottom-up chart parser over depth-2 rules with per-cell probability
//! recomputation from deeper rule patterns.
//!
//! Rules of any arity are handled without normal-form conversion: a rule
//! `A -> s1 .. sn` is consumed left to right by dotted partial items, which
//! act as synthetic continuation categories. The full rule probability
//! attaches when the last position completes; intermediate items carry the
//! product of their finished children only. Completing a cell has two
//! phases: (i) derive all candidate analyses from depth-2 rules (plus a
//! bounded unary closure), then (ii) for every candidate and every depth
//! `d >= 3`, look up the candidate's depth-`d` truncation in the subtree
//! index and keep the maximum of the context-free value and each
//! `p(deep rule) * prod(frontier subtree probabilities)`. The beam cut runs
//! after phase (ii), so analyses promoted by a deep rule survive cuts they
//! would lose on context-free probability alone.
//!
//! Probabilities live in natural-log space throughout; a derivation that
//! cannot be built is simply absent, never minus infinity.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::grammar::{Grammar, PatternNode, TrainedRule};
use crate::index::{PathSymRef, SubtreeIndex};
use crate::tree::ParseTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserConfig {
    /// How many ranked parses to return.
    pub top_k: usize,
    /// Per-cell cap on kept analyses per root nonterminal (and per dotted
    /// continuation category).
    pub beam_width: usize,
    /// Deepest pattern depth consulted during phase (ii); clamped to what the
    /// index holds.
    pub max_depth: usize,
    /// Bound on stacked unary rule applications over one cell position.
    pub unary_chain_limit: usize,
    /// Prune combinations whose free-variable type bindings conflict.
    pub semantic_filter: bool,
    /// Experimental: run the deep recomputation only on beam survivors
    /// instead of every phase-(i) candidate.
    pub deep_update_survivors_only: bool,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            top_k: 20,
            beam_width: 20,
            max_depth: usize::MAX,
            unary_chain_limit: 3,
            semantic_filter: true,
            deep_update_survivors_only: false,
        }
    }
}

impl ParserConfig {
    /// Unbounded search: every derivation is kept and returned.
    pub fn exhaustive() -> Self {
        ParserConfig {
            top_k: usize::MAX,
            beam_width: usize::MAX,
            ..ParserConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParserError {
    TopKExceedsBeamWidth { top_k: usize, beam_width: usize },
    MaxDepthTooSmall(usize),
}

impl fmt::Display for ParserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParserError::TopKExceedsBeamWidth { top_k, beam_width } => write!(
                f,
                "top_k ({top_k}) must not exceed beam_width ({beam_width})"
            ),
            ParserError::MaxDepthTooSmall(d) => {
                write!(f, "max depth must be at least 2, got {d}")
            }
        }
    }
}

/// Free-variable type assignments harvested from `(Type τ)` nodes whose sole
/// child is a `(Var name)` subtree.
pub type Bindings = BTreeMap<String, String>;

/// Union of two binding maps, or `None` when some variable is assigned two
/// different types. Rejection prunes the combination; it is not an error.
pub fn merge_bindings(left: &Bindings, right: &Bindings) -> Option<Bindings> {
    let mut out = left.clone();
    for (var, ty) in right {
        match out.get(var) {
            Some(existing) if existing != ty => return None,
            Some(_) => {}
            None => {
                out.insert(var.clone(), ty.clone());
            }
        }
    }
    Some(out)
}

/// Bindings of a whole tree, or `None` if any variable is used at two types.
pub fn tree_bindings(tree: &ParseTree) -> Option<Bindings> {
    let mut out = Bindings::new();
    collect_bindings(tree, &mut out).then_some(out)
}

fn collect_bindings(tree: &ParseTree, out: &mut Bindings) -> bool {
    if let Some(var) = harvest(tree) {
        let ty = tree.label().to_string();
        match out.get(var) {
            Some(existing) if existing != &ty => return false,
            _ => {
                out.insert(var.to_string(), ty);
            }
        }
    }
    tree.children().iter().all(|c| collect_bindings(c, out))
}

fn harvest(tree: &ParseTree) -> Option<&str> {
    if !tree.label().starts_with("(Type ") {
        return None;
    }
    match tree.children() {
        [var] if var.label() == "Var" => match var.children() {
            [name] if name.is_leaf() => Some(name.label()),
            _ => None,
        },
        _ => None,
    }
}

/// One ranked analysis: the tree and its max-combined log probability.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedParse {
    pub tree: ParseTree,
    pub log_prob: f64,
}

impl RankedParse {
    pub fn prob(&self) -> f64 {
        libm::exp(self.log_prob)
    }
}

/// 1-based position of `target` (by structural equality) in ranked results.
pub fn rank_of(target: &ParseTree, results: &[RankedParse]) -> Option<usize> {
    results
        .iter()
        .position(|r| &r.tree == target)
        .map(|i| i + 1)
}

/// Parses `sentence`, returning up to `config.top_k` analyses rooted at the
/// grammar's start symbol, best first; ties order by canonical tree text.
/// An empty result means the sentence has no parse.
pub fn parse(
    grammar: &Grammar,
    index: &SubtreeIndex,
    sentence: &[String],
    config: &ParserConfig,
) -> Result<Vec<RankedParse>, ParserError> {
    if config.top_k > config.beam_width {
        return Err(ParserError::TopKExceedsBeamWidth {
            top_k: config.top_k,
            beam_width: config.beam_width,
        });
    }
    if config.max_depth < 2 {
        return Err(ParserError::MaxDepthTooSmall(config.max_depth));
    }
    if sentence.is_empty() {
        return Ok(Vec::new());
    }

    let rules = RuleTable::compile(grammar);
    let mut chart = Chart {
        rules: &rules,
        index,
        config,
        tokens: sentence,
        entries: Vec::new(),
        completes: BTreeMap::new(),
        partials: BTreeMap::new(),
    };

    let n = sentence.len();
    for span in 1..=n {
        for start in 0..=(n - span) {
            chart.fill_cell(start, start + span);
        }
    }

    let mut out = Vec::new();
    if let Some(groups) = chart.completes.get(&(0, n)) {
        if let Some(best) = groups.get(grammar.start()) {
            for &id in best.iter().take(config.top_k) {
                out.push(RankedParse {
                    tree: chart.build_tree(id),
                    log_prob: chart.entries[id].log_prob,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym<'g> {
    Nt(&'g str),
    Term(&'g str),
}

#[derive(Debug)]
struct SeqRule<'g> {
    lhs: &'g str,
    rhs: Vec<Sym<'g>>,
    log_prob: f64,
}

/// Depth-2 rules split by shape: single terminals seed leaves, single
/// nonterminals run in the unary closure, everything else is dotted.
struct RuleTable<'g> {
    seq: Vec<SeqRule<'g>>,
    lexical: BTreeMap<&'g str, Vec<(&'g str, f64)>>,
    unary: BTreeMap<&'g str, Vec<(&'g str, f64)>>,
    first_nt: BTreeMap<&'g str, Vec<usize>>,
    first_term: BTreeMap<&'g str, Vec<usize>>,
}

impl<'g> RuleTable<'g> {
    fn compile(grammar: &'g Grammar) -> RuleTable<'g> {
        let mut table = RuleTable {
            seq: Vec::new(),
            lexical: BTreeMap::new(),
            unary: BTreeMap::new(),
            first_nt: BTreeMap::new(),
            first_term: BTreeMap::new(),
        };
        for (depth, lhs, rules) in grammar.classes() {
            if depth != 2 {
                continue;
            }
            for TrainedRule { pattern, prob, .. } in rules {
                let log_prob = libm::log(*prob);
                let children = match pattern.body() {
                    PatternNode::Internal { children, .. } => children,
                    _ => unreachable!("pattern bodies are internal"),
                };
                let rhs: Vec<Sym<'g>> = children
                    .iter()
                    .map(|c| match c {
                        PatternNode::Frontier(l) => Sym::Nt(l.as_str()),
                        PatternNode::Terminal(t) => Sym::Term(t.as_str()),
                        PatternNode::Internal { .. } => {
                            unreachable!("depth-2 children are leaves")
                        }
                    })
                    .collect();
                match rhs.as_slice() {
                    [Sym::Term(t)] => {
                        table.lexical.entry(t).or_default().push((lhs, log_prob))
                    }
                    [Sym::Nt(b)] => table.unary.entry(b).or_default().push((lhs, log_prob)),
                    _ => {
                        let id = table.seq.len();
                        match rhs[0] {
                            Sym::Nt(x) => table.first_nt.entry(x).or_default().push(id),
                            Sym::Term(t) => {
                                table.first_term.entry(t).or_default().push(id)
                            }
                        }
                        table.seq.push(SeqRule { lhs, rhs, log_prob });
                    }
                }
            }
        }
        table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    /// A completed chart entry.
    Sub(usize),
    /// The input token at this position, consumed directly by the rule.
    Tok(usize),
}

struct Entry<'g> {
    root: &'g str,
    rule_log_prob: f64,
    parts: Vec<Part>,
    log_prob: f64,
    height: usize,
    /// Canonical s-expression of the subtree; total tie-break key.
    text: String,
    bindings: Bindings,
    unary_links: usize,
    /// Labels along the unary chain ending here, including the base entry.
    chain: BTreeSet<&'g str>,
}

#[derive(Debug, Clone)]
struct Partial {
    rule: usize,
    parts: Vec<Part>,
    /// Sum of finished child log probabilities; the rule's own probability
    /// joins at completion.
    log_sum: f64,
    bindings: Bindings,
}

struct Chart<'g, 'p> {
    rules: &'p RuleTable<'g>,
    index: &'p SubtreeIndex,
    config: &'p ParserConfig,
    tokens: &'p [String],
    entries: Vec<Entry<'g>>,
    completes: BTreeMap<(usize, usize), BTreeMap<&'g str, Vec<usize>>>,
    partials: BTreeMap<(usize, usize), Vec<Partial>>,
}

impl<'g, 'p> Chart<'g, 'p> {
    fn fill_cell(&mut self, i: usize, j: usize) {
        let mut cands: Vec<usize> = Vec::new();
        let mut fresh: Vec<Partial> = Vec::new();

        if j - i == 1 {
            let token = self.tokens[i].as_str();
            if let Some(lex) = self.rules.lexical.get(token) {
                for &(lhs, log_prob) in lex {
                    let id = self.push_entry(lhs, log_prob, alloc::vec![Part::Tok(i)], Bindings::new(), 0, None);
                    cands.push(id);
                }
            }
            if let Some(rule_ids) = self.rules.first_term.get(token) {
                for &rule in rule_ids {
                    fresh.push(Partial {
                        rule,
                        parts: alloc::vec![Part::Tok(i)],
                        log_sum: 0.0,
                        bindings: Bindings::new(),
                    });
                }
            }
        }

        for k in (i + 1)..j {
            let Some(plist) = self.partials.remove(&(i, k)) else {
                continue;
            };
            for p in &plist {
                let rule = &self.rules.seq[p.rule];
                match rule.rhs[p.parts.len()] {
                    Sym::Term(t) => {
                        if k + 1 == j && self.tokens[k] == t {
                            self.advance(p, Part::Tok(k), 0.0, p.bindings.clone(), &mut cands, &mut fresh);
                        }
                    }
                    Sym::Nt(x) => {
                        let Some(group) =
                            self.completes.get(&(k, j)).and_then(|m| m.get(x))
                        else {
                            continue;
                        };
                        // group is read-only here; cloning the id list keeps
                        // the borrow checker out of the way
                        let ids: Vec<usize> = group.clone();
                        for id in ids {
                            let bindings = if self.config.semantic_filter {
                                match merge_bindings(&p.bindings, &self.entries[id].bindings) {
                                    Some(b) => b,
                                    None => continue,
                                }
                            } else {
                                Bindings::new()
                            };
                            let log_sum = self.entries[id].log_prob;
                            self.advance(p, Part::Sub(id), log_sum, bindings, &mut cands, &mut fresh);
                        }
                    }
                }
            }
            self.partials.insert((i, k), plist);
        }

        self.unary_closure(&mut cands);

        if self.config.deep_update_survivors_only {
            let mut groups = self.cut_completes(&cands);
            let mut survivors: Vec<usize> =
                groups.values().flat_map(|v| v.iter().copied()).collect();
            survivors.sort_unstable();
            for &id in &survivors {
                self.recompute(id);
            }
            for group in groups.values_mut() {
                self.sort_entries(group);
            }
            self.finish_cell(i, j, groups, fresh);
        } else {
            for &id in &cands {
                self.recompute(id);
            }
            let groups = self.cut_completes(&cands);
            self.finish_cell(i, j, groups, fresh);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        p: &Partial,
        part: Part,
        add_log: f64,
        bindings: Bindings,
        cands: &mut Vec<usize>,
        fresh: &mut Vec<Partial>,
    ) {
        let rule = &self.rules.seq[p.rule];
        let mut parts = p.parts.clone();
        parts.push(part);
        if parts.len() == rule.rhs.len() {
            let id = self.push_entry(rule.lhs, rule.log_prob, parts, bindings, 0, None);
            cands.push(id);
        } else {
            fresh.push(Partial {
                rule: p.rule,
                parts,
                log_sum: p.log_sum + add_log,
                bindings,
            });
        }
    }

    fn unary_closure(&mut self, cands: &mut Vec<usize>) {
        let mut next = 0;
        while next < cands.len() {
            let id = cands[next];
            next += 1;
            let (root, links) = (self.entries[id].root, self.entries[id].unary_links);
            if links >= self.config.unary_chain_limit {
                continue;
            }
            let Some(parents) = self.rules.unary.get(root) else {
                continue;
            };
            for &(lhs, log_prob) in parents {
                if self.entries[id].chain.contains(lhs) {
                    continue;
                }
                let mut bindings = if self.config.semantic_filter {
                    self.entries[id].bindings.clone()
                } else {
                    Bindings::new()
                };
                if self.config.semantic_filter && lhs.starts_with("(Type ") && root == "Var" {
                    if let [Part::Tok(pos)] = self.entries[id].parts[..] {
                        let var = self.tokens[pos].clone();
                        match bindings.get(&var) {
                            Some(existing) if existing != lhs => continue,
                            _ => {
                                bindings.insert(var, lhs.to_string());
                            }
                        }
                    }
                }
                let new_id = self.push_entry(
                    lhs,
                    log_prob,
                    alloc::vec![Part::Sub(id)],
                    bindings,
                    links + 1,
                    Some(id),
                );
                cands.push(new_id);
            }
        }
    }

    fn push_entry(
        &mut self,
        root: &'g str,
        rule_log_prob: f64,
        parts: Vec<Part>,
        bindings: Bindings,
        unary_links: usize,
        unary_child: Option<usize>,
    ) -> usize {
        let mut height = 1;
        for p in &parts {
            let h = match p {
                Part::Tok(_) => 1,
                Part::Sub(id) => self.entries[*id].height,
            };
            height = height.max(h + 1);
        }
        let mut text = String::from("(");
        sexpr_atom(&mut text, root);
        for p in &parts {
            text.push(' ');
            match p {
                Part::Tok(pos) => sexpr_atom(&mut text, &self.tokens[*pos]),
                Part::Sub(id) => text.push_str(&self.entries[*id].text),
            }
        }
        text.push(')');

        let mut chain: BTreeSet<&'g str> = match unary_child {
            Some(id) => self.entries[id].chain.clone(),
            None => BTreeSet::new(),
        };
        chain.insert(root);

        let log_prob = self.context_free_value(rule_log_prob, &parts);
        self.entries.push(Entry {
            root,
            rule_log_prob,
            parts,
            log_prob,
            height,
            text,
            bindings,
            unary_links,
            chain,
        });
        self.entries.len() - 1
    }

    /// Rule probability times the current probabilities of the entry's
    /// children, in log space. Phase (ii) recomputes through this same path
    /// so the value is reproduced bit for bit when nothing was promoted.
    fn context_free_value(&self, rule_log_prob: f64, parts: &[Part]) -> f64 {
        let mut v = rule_log_prob;
        for p in parts {
            if let Part::Sub(id) = p {
                v += self.entries[*id].log_prob;
            }
        }
        v
    }

    fn context_free_value_of(&self, id: usize) -> f64 {
        let mut v = self.entries[id].rule_log_prob;
        for i in 0..self.entries[id].parts.len() {
            if let Part::Sub(sub) = self.entries[id].parts[i] {
                v += self.entries[sub].log_prob;
            }
        }
        v
    }

    /// Phase (ii) for one candidate: refresh the context-free value from the
    /// children's final probabilities, then try every deep truncation.
    fn recompute(&mut self, id: usize) {
        let mut best = self.context_free_value_of(id);
        let deepest = self
            .config
            .max_depth
            .min(self.entries[id].height)
            .min(self.index.max_depth());
        if !self.index.is_empty() {
            let mut syms: Vec<PathSymRef<'_>> = Vec::new();
            let mut frontier: Vec<usize> = Vec::new();
            for depth in 3..=deepest {
                syms.clear();
                frontier.clear();
                pattern_of_entry(&self.entries, self.tokens, id, depth, &mut syms, &mut frontier);
                if let Some(deep_log) = self.index.lookup_syms(&syms) {
                    let mut value = deep_log;
                    for &f in &frontier {
                        value += self.entries[f].log_prob;
                    }
                    if value > best {
                        best = value;
                    }
                }
            }
        }
        self.entries[id].log_prob = best;
    }

    fn cut_completes(&mut self, cands: &[usize]) -> BTreeMap<&'g str, Vec<usize>> {
        #[cfg(debug_assertions)]
        {
            let mut seen = BTreeSet::new();
            for &id in cands {
                assert!(
                    seen.insert((self.entries[id].root, self.entries[id].text.clone())),
                    "duplicate analysis in one cell: {}",
                    self.entries[id].text
                );
            }
        }
        let mut groups: BTreeMap<&'g str, Vec<usize>> = BTreeMap::new();
        for &id in cands {
            groups.entry(self.entries[id].root).or_default().push(id);
        }
        for group in groups.values_mut() {
            self.sort_entries(group);
            if group.len() > self.config.beam_width {
                group.truncate(self.config.beam_width);
            }
        }
        groups
    }

    fn sort_entries(&self, ids: &mut [usize]) {
        ids.sort_by(|&a, &b| {
            self.entries[b]
                .log_prob
                .total_cmp(&self.entries[a].log_prob)
                .then_with(|| self.entries[a].text.cmp(&self.entries[b].text))
        });
    }

    fn finish_cell(
        &mut self,
        i: usize,
        j: usize,
        groups: BTreeMap<&'g str, Vec<usize>>,
        mut fresh: Vec<Partial>,
    ) {
        for (root, group) in &groups {
            if let Some(rule_ids) = self.rules.first_nt.get(root) {
                for &id in group {
                    for &rule in rule_ids {
                        fresh.push(Partial {
                            rule,
                            parts: alloc::vec![Part::Sub(id)],
                            log_sum: self.entries[id].log_prob,
                            bindings: if self.config.semantic_filter {
                                self.entries[id].bindings.clone()
                            } else {
                                Bindings::new()
                            },
                        });
                    }
                }
            }
        }
        if !groups.is_empty() {
            self.completes.insert((i, j), groups);
        }
        if !fresh.is_empty() {
            let cut = self.cut_partials(fresh);
            self.partials.insert((i, j), cut);
        }
    }

    fn cut_partials(&self, fresh: Vec<Partial>) -> Vec<Partial> {
        let mut groups: BTreeMap<(usize, usize), Vec<Partial>> = BTreeMap::new();
        for p in fresh {
            groups.entry((p.rule, p.parts.len())).or_default().push(p);
        }
        let mut out = Vec::new();
        for (_, mut group) in groups {
            if group.len() > self.config.beam_width {
                let keys: Vec<String> = group.iter().map(|p| self.partial_key(p)).collect();
                let mut order: Vec<usize> = (0..group.len()).collect();
                order.sort_by(|&a, &b| {
                    group[b]
                        .log_sum
                        .total_cmp(&group[a].log_sum)
                        .then_with(|| keys[a].cmp(&keys[b]))
                });
                order.truncate(self.config.beam_width);
                order.sort_unstable();
                let mut kept = Vec::with_capacity(order.len());
                for idx in order {
                    kept.push(group[idx].clone());
                }
                group = kept;
            }
            out.extend(group);
        }
        out
    }

    fn partial_key(&self, p: &Partial) -> String {
        let mut key = String::new();
        for part in &p.parts {
            match part {
                Part::Tok(pos) => sexpr_atom(&mut key, &self.tokens[*pos]),
                Part::Sub(id) => key.push_str(&self.entries[*id].text),
            }
            key.push(' ');
        }
        key
    }

    fn build_tree(&self, id: usize) -> ParseTree {
        let e = &self.entries[id];
        ParseTree::node(
            e.root,
            e.parts
                .iter()
                .map(|p| match p {
                    Part::Tok(pos) => ParseTree::leaf(self.tokens[*pos].clone()),
                    Part::Sub(sub) => self.build_tree(*sub),
                })
                .collect(),
        )
    }
}

// Same quoting as the s-expression printer, so entry texts equal the
// canonical text of the de-binarized tree.
fn sexpr_atom(out: &mut String, atom: &str) {
    crate::sexpr::write_atom(out, atom);
}

/// Preorder path string of the depth-`depth` truncation of entry `id`,
/// collecting the frontier entries whose probabilities multiply into the
/// deep route.
fn pattern_of_entry<'a>(
    entries: &'a [Entry<'_>],
    tokens: &'a [String],
    id: usize,
    depth: usize,
    syms: &mut Vec<PathSymRef<'a>>,
    frontier: &mut Vec<usize>,
) {
    fn rec<'a>(
        entries: &'a [Entry<'_>],
        tokens: &'a [String],
        id: usize,
        level: usize,
        depth: usize,
        syms: &mut Vec<PathSymRef<'a>>,
        frontier: &mut Vec<usize>,
    ) {
        let e = &entries[id];
        syms.push(PathSymRef::Open);
        syms.push(PathSymRef::Nt(e.root));
        for part in &e.parts {
            match part {
                Part::Tok(pos) => syms.push(PathSymRef::Term(tokens[*pos].as_str())),
                Part::Sub(sub) => {
                    if level + 1 == depth {
                        syms.push(PathSymRef::Nt(entries[*sub].root));
                        frontier.push(*sub);
                    } else {
                        rec(entries, tokens, *sub, level + 1, depth, syms, frontier);
                    }
                }
            }
        }
        syms.push(PathSymRef::Close);
    }
    rec(entries, tokens, id, 1, depth, syms, frontier);
}
