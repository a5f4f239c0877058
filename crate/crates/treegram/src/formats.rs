//! Text formats: treebank files, grammar files and ambiguation config files.
//!
//! Treebanks are one canonical s-expression per line; blank lines and lines
//! starting with `#` are skipped. Grammar files carry one header line
//! `# grammar max_depth=<m> start=<atom>` followed by one rule per line,
//! `<depth> TAB <probability> TAB <pattern>`, sorted by depth, left-hand
//! side, then pattern text. Probabilities print in scientific notation with
//! 12 significant digits.
//!
//! In pattern text, a leaf at the cut level whose label also occurs as an
//! internal (nonterminal) label anywhere in the grammar is read back as a
//! frontier nonterminal; any other leaf is a literal token. Saving refuses
//! grammars in which a literal token at the cut level collides with a
//! nonterminal label, since their files would not read back identically.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use treegram_core::grammar::{Grammar, PatternNode, RulePattern, TrainedRule};
use treegram_core::sexpr::{self, SExpr};
use treegram_core::transform::AmbiguationConfig;
use treegram_core::tree::{ParseTree, Treebank};

/// Error at a position inside a text document.
#[derive(Debug)]
pub struct TextError {
    pub line: Option<usize>,
    pub message: String,
}

impl TextError {
    fn at(line: usize, message: impl Into<String>) -> TextError {
        TextError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn whole(message: impl Into<String>) -> TextError {
        TextError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for TextError {}

/// Error tied to a file on disk.
#[derive(Debug)]
pub struct FileError {
    pub path: PathBuf,
    pub kind: FileErrorKind,
}

#[derive(Debug)]
pub enum FileErrorKind {
    Io(io::Error),
    Text(TextError),
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FileErrorKind::Io(e) => write!(f, "{}: {e}", self.path.display()),
            FileErrorKind::Text(e) => write!(f, "{}: {e}", self.path.display()),
        }
    }
}

impl std::error::Error for FileError {}

fn io_err(path: &Path, e: io::Error) -> FileError {
    FileError {
        path: path.to_path_buf(),
        kind: FileErrorKind::Io(e),
    }
}

fn text_err(path: &Path, e: TextError) -> FileError {
    FileError {
        path: path.to_path_buf(),
        kind: FileErrorKind::Text(e),
    }
}

// ---------------------------------------------------------------------------
// treebanks

pub fn treebank_from_str(text: &str) -> Result<Treebank, TextError> {
    let mut trees = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tree = ParseTree::parse(line).map_err(|e| TextError::at(i + 1, e.to_string()))?;
        trees.push(tree);
    }
    Ok(Treebank::new(trees))
}

pub fn treebank_to_string(treebank: &Treebank) -> String {
    let mut out = String::new();
    for tree in treebank.trees() {
        out.push_str(&tree.canonical());
        out.push('\n');
    }
    out
}

pub fn load_treebank(path: &Path) -> Result<Treebank, FileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    treebank_from_str(&text).map_err(|e| text_err(path, e))
}

pub fn store_treebank(treebank: &Treebank, path: &Path) -> Result<(), FileError> {
    fs::write(path, treebank_to_string(treebank)).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// grammars

pub fn grammar_to_string(grammar: &Grammar) -> Result<String, TextError> {
    let nonterminals = grammar_nonterminals(grammar);
    let mut out = String::new();
    out.push_str("# grammar max_depth=");
    out.push_str(&grammar.max_depth().to_string());
    out.push_str(" start=");
    out.push_str(&sexpr::print(&SExpr::atom(grammar.start())));
    out.push('\n');

    let mut rules: Vec<&TrainedRule> = Vec::new();
    for (_, _, class) in grammar.classes() {
        rules.extend(class.iter());
    }
    rules.sort_by(|a, b| {
        a.pattern
            .depth()
            .cmp(&b.pattern.depth())
            .then_with(|| a.pattern.lhs().cmp(b.pattern.lhs()))
            .then_with(|| a.pattern.canonical().cmp(&b.pattern.canonical()))
    });
    for rule in rules {
        check_serializable(rule.pattern.body(), 1, rule.pattern.depth(), &nonterminals)?;
        out.push_str(&format!(
            "{}\t{:.11e}\t{}\n",
            rule.pattern.depth(),
            rule.prob,
            rule.pattern.canonical()
        ));
    }
    Ok(out)
}

pub fn grammar_from_str(text: &str) -> Result<Grammar, TextError> {
    let mut header: Option<(usize, String)> = None;
    let mut raw: Vec<(usize, usize, f64, SExpr)> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# grammar ") {
            header = Some(parse_header(rest).map_err(|m| TextError::at(n, m))?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(depth), Some(prob), Some(pattern)) =
            (fields.next(), fields.next(), fields.next())
        else {
            return Err(TextError::at(
                n,
                "expected <depth> TAB <probability> TAB <pattern>",
            ));
        };
        let depth: usize = depth
            .parse()
            .map_err(|_| TextError::at(n, format!("bad depth {depth:?}")))?;
        if depth < 2 {
            return Err(TextError::at(n, format!("depth {depth} below 2")));
        }
        let prob: f64 = prob
            .parse()
            .map_err(|_| TextError::at(n, format!("bad probability {prob:?}")))?;
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(TextError::at(n, format!("probability {prob} outside (0, 1]")));
        }
        let expr = sexpr::read(pattern).map_err(|e| TextError::at(n, e.to_string()))?;
        raw.push((n, depth, prob, expr));
    }

    let (max_depth, start) =
        header.ok_or_else(|| TextError::whole("missing `# grammar ...` header line"))?;
    if raw.is_empty() {
        return Err(TextError::whole("grammar has no rules"));
    }

    let mut nonterminals = BTreeSet::new();
    for (_, _, _, expr) in &raw {
        collect_internal_labels(expr, &mut nonterminals);
    }

    let mut rules = Vec::with_capacity(raw.len());
    for (n, depth, prob, expr) in raw {
        let body = pattern_from_sexpr(&expr, 1, depth, &nonterminals)
            .map_err(|m| TextError::at(n, m))?;
        let pattern = RulePattern::new(depth, body).ok_or_else(|| {
            TextError::at(n, "pattern height does not match its depth column")
        })?;
        rules.push(TrainedRule {
            pattern,
            count: None,
            prob,
        });
    }

    Grammar::from_rules(start, max_depth, rules).map_err(|e| TextError::whole(e.to_string()))
}

pub fn save_grammar(grammar: &Grammar, path: &Path) -> Result<(), FileError> {
    let text = grammar_to_string(grammar).map_err(|e| text_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn load_grammar(path: &Path) -> Result<Grammar, FileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    grammar_from_str(&text).map_err(|e| text_err(path, e))
}

fn parse_header(rest: &str) -> Result<(usize, String), String> {
    let rest = rest
        .strip_prefix("max_depth=")
        .ok_or("header must read `# grammar max_depth=<m> start=<atom>`")?;
    let (digits, rest) = rest
        .split_once(' ')
        .ok_or("header missing start symbol")?;
    let max_depth: usize = digits
        .parse()
        .map_err(|_| format!("bad max_depth {digits:?}"))?;
    if max_depth < 2 {
        return Err(format!("max_depth {max_depth} below 2"));
    }
    let atom_text = rest
        .strip_prefix("start=")
        .ok_or("header missing `start=`")?;
    match sexpr::read(atom_text) {
        Ok(SExpr::Atom(start)) => Ok((max_depth, start)),
        Ok(_) => Err("start symbol must be an atom".into()),
        Err(e) => Err(format!("bad start symbol: {e}")),
    }
}

fn collect_internal_labels(expr: &SExpr, out: &mut BTreeSet<String>) {
    if let Some(items) = expr.as_list() {
        if let Some(label) = items.first().and_then(SExpr::as_atom) {
            out.insert(label.to_string());
        }
        for item in items.iter().skip(1) {
            collect_internal_labels(item, out);
        }
    }
}

fn pattern_from_sexpr(
    expr: &SExpr,
    level: usize,
    depth: usize,
    nonterminals: &BTreeSet<String>,
) -> Result<PatternNode, String> {
    match expr {
        SExpr::Atom(a) => {
            if level == depth && nonterminals.contains(a) {
                Ok(PatternNode::Frontier(a.clone()))
            } else {
                Ok(PatternNode::Terminal(a.clone()))
            }
        }
        SExpr::List(items) => {
            let (head, rest) = items.split_first().ok_or("empty pattern node")?;
            let label = head.as_atom().ok_or("pattern node label must be an atom")?;
            if rest.is_empty() {
                return Err(format!("pattern node {label:?} has no children"));
            }
            if level >= depth {
                return Err(format!("pattern node {label:?} deeper than its depth"));
            }
            let children = rest
                .iter()
                .map(|c| pattern_from_sexpr(c, level + 1, depth, nonterminals))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PatternNode::Internal {
                label: label.to_string(),
                children,
            })
        }
    }
}

fn check_serializable(
    node: &PatternNode,
    level: usize,
    depth: usize,
    nonterminals: &BTreeSet<String>,
) -> Result<(), TextError> {
    match node {
        PatternNode::Terminal(t) => {
            if level == depth && nonterminals.contains(t) {
                Err(TextError::whole(format!(
                    "token {t:?} collides with a nonterminal label at the pattern \
                     frontier; the grammar file format cannot distinguish them"
                )))
            } else {
                Ok(())
            }
        }
        PatternNode::Frontier(l) => {
            if nonterminals.contains(l) {
                Ok(())
            } else {
                Err(TextError::whole(format!(
                    "frontier nonterminal {l:?} never occurs as an internal label; \
                     it would read back as a token"
                )))
            }
        }
        PatternNode::Internal { children, .. } => {
            for c in children {
                check_serializable(c, level + 1, depth, nonterminals)?;
            }
            Ok(())
        }
    }
}

fn grammar_nonterminals(grammar: &Grammar) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, _, class) in grammar.classes() {
        for rule in class {
            collect_pattern_internal_labels(rule.pattern.body(), &mut out);
        }
    }
    out
}

fn collect_pattern_internal_labels(node: &PatternNode, out: &mut BTreeSet<String>) {
    if let PatternNode::Internal { label, children } = node {
        out.insert(label.clone());
        for c in children {
            collect_pattern_internal_labels(c, out);
        }
    }
}

// ---------------------------------------------------------------------------
// ambiguation configs

/// Sections `[overload]`, `[prefixes]`, `[functors]`, `[infix]`; one entry
/// per line; `#` comments and blank lines ignored.
pub fn config_from_str(text: &str) -> Result<AmbiguationConfig, TextError> {
    let mut config = AmbiguationConfig::default();
    let mut section: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name {
                "overload" => Some("overload"),
                "prefixes" => Some("prefixes"),
                "functors" => Some("functors"),
                "infix" => Some("infix"),
                other => return Err(TextError::at(n, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            None => return Err(TextError::at(n, "entry before any [section]")),
            Some("overload") => {
                let [formal, token] = fields.as_slice() else {
                    return Err(TextError::at(n, "overload entries are `<formal> <token>`"));
                };
                config
                    .overloads
                    .insert((*formal).to_string(), (*token).to_string());
            }
            Some(kind) => {
                let [entry] = fields.as_slice() else {
                    return Err(TextError::at(n, format!("{kind} entries are one word")));
                };
                match kind {
                    "prefixes" => config.prefixes.push((*entry).to_string()),
                    "functors" => {
                        config.functors.insert((*entry).to_string());
                    }
                    "infix" => {
                        config.infix.insert((*entry).to_string());
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<AmbiguationConfig, FileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    config_from_str(&text).map_err(|e| text_err(path, e))
}
