//! Parse trees, their yields, and treebanks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sexpr::{self, SExpr, SexprError};

/// Rooted ordered tree of labeled nodes. Leaves carry terminal tokens as
/// their label; internal nodes carry nonterminal labels and have at least one
/// child. A single node has height 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParseTree {
    label: String,
    children: Vec<ParseTree>,
}

/// A tokenized sentence: the yield of a parse tree.
pub type Sentence = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// `()` cannot encode a tree node.
    EmptyList,
    /// The head of a node list must be an atom label.
    LabelNotAtom,
    /// `(Label)` has no children; internal nodes need at least one.
    NodeWithoutChildren(String),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::EmptyList => write!(f, "empty list cannot encode a tree node"),
            TreeError::LabelNotAtom => write!(f, "node label must be an atom"),
            TreeError::NodeWithoutChildren(l) => {
                write!(f, "internal node {l:?} has no children")
            }
        }
    }
}

/// Error from [`ParseTree::parse`]: either unreadable text or a readable
/// s-expression of the wrong shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeParseError {
    Sexpr(SexprError),
    Shape(TreeError),
}

impl fmt::Display for TreeParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeParseError::Sexpr(e) => write!(f, "{e}"),
            TreeParseError::Shape(e) => write!(f, "{e}"),
        }
    }
}

impl From<SexprError> for TreeParseError {
    fn from(e: SexprError) -> Self {
        TreeParseError::Sexpr(e)
    }
}

impl From<TreeError> for TreeParseError {
    fn from(e: TreeError) -> Self {
        TreeParseError::Shape(e)
    }
}

impl ParseTree {
    pub fn leaf(token: impl Into<String>) -> ParseTree {
        ParseTree {
            label: token.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> ParseTree {
        debug_assert!(!children.is_empty(), "internal nodes need >= 1 child");
        ParseTree {
            label: label.into(),
            children,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[ParseTree] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn height(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ParseTree::height)
            .max()
            .unwrap_or(0)
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(ParseTree::leaf_count).sum()
        }
    }

    /// Left-to-right sequence of leaf tokens.
    pub fn yield_tokens(&self) -> Sentence {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Sentence) {
        if self.is_leaf() {
            out.push(self.label.clone());
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    pub fn to_sexpr(&self) -> SExpr {
        if self.is_leaf() {
            SExpr::atom(self.label.clone())
        } else {
            let mut items = Vec::with_capacity(self.children.len() + 1);
            items.push(SExpr::atom(self.label.clone()));
            items.extend(self.children.iter().map(ParseTree::to_sexpr));
            SExpr::List(items)
        }
    }

    pub fn from_sexpr(expr: &SExpr) -> Result<ParseTree, TreeError> {
        match expr {
            SExpr::Atom(a) => Ok(ParseTree::leaf(a.clone())),
            SExpr::List(items) => {
                let (head, rest) = items.split_first().ok_or(TreeError::EmptyList)?;
                let label = head.as_atom().ok_or(TreeError::LabelNotAtom)?;
                if rest.is_empty() {
                    return Err(TreeError::NodeWithoutChildren(label.to_string()));
                }
                let children = rest
                    .iter()
                    .map(ParseTree::from_sexpr)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ParseTree::node(label, children))
            }
        }
    }

    /// Canonical single-line text of the tree; stable across read/print.
    pub fn canonical(&self) -> String {
        sexpr::print(&self.to_sexpr())
    }

    pub fn parse(text: &str) -> Result<ParseTree, TreeParseError> {
        Ok(ParseTree::from_sexpr(&sexpr::read(text)?)?)
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// A corpus of parse trees. Loading is lenient about root labels; training
/// requires them to agree (see `grammar::train`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Treebank {
    trees: Vec<ParseTree>,
}

impl Treebank {
    pub fn new(trees: Vec<ParseTree>) -> Treebank {
        Treebank { trees }
    }

    pub fn trees(&self) -> &[ParseTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Root label of the first tree, if any.
    pub fn start(&self) -> Option<&str> {
        self.trees.first().map(|t| t.label())
    }

    /// The common root label, or `None` if the treebank is empty or mixed.
    pub fn uniform_start(&self) -> Option<&str> {
        let first = self.start()?;
        self.trees
            .iter()
            .all(|t| t.label() == first)
            .then_some(first)
    }
}
