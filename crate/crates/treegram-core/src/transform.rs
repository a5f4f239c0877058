//! Transformations between raw higher-order-logic term trees and the trees a
//! grammar is trained on.
//!
//! Raw terms use the constructors `Comb`, `Abs`, `Const`, `Var`, `Tyapp` and
//! `Tyvar`, with every constant and variable annotated by its type.
//! [`compress_types`] re-orders such a term into surface syntax and collapses
//! each type annotation into one opaque nonterminal label like
//! `(Type (fun real bool))`. [`wrap_concepts`] then records, for every
//! ambiguously rendered constant, which formal constant it stands for, as a
//! `($#constant token)` wrapper. [`ambiguate`] goes all the way down to the
//! ambiguous token sequence itself: overloaded constants are renamed, declared
//! prefixes are stripped, casting functors are deleted, infix operators are
//! placed between their operands, and all types and brackets disappear with
//! the tree structure.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::tree::{ParseTree, Sentence};

/// Tables steering ambiguation: renamings for overloaded constants, prefixes
/// to forget, unary casting functors to delete, and symbols printed infix.
/// Missing entries always mean "leave unchanged".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AmbiguationConfig {
    /// formal constant -> ambiguous surface token, e.g. `vector_add -> +`
    pub overloads: BTreeMap<String, String>,
    /// prefixes forgotten from constant names, e.g. `real_`
    pub prefixes: Vec<String>,
    /// unary casting functors removed entirely, e.g. `real_of_num`
    pub functors: BTreeSet<String>,
    /// surface tokens placed between their two operands, e.g. `=`
    pub infix: BTreeSet<String>,
}

impl AmbiguationConfig {
    /// Surface rendering of a formal constant name: overload first, then
    /// prefix stripping, otherwise unchanged.
    pub fn surface(&self, name: &str) -> String {
        if let Some(tok) = self.overloads.get(name) {
            return tok.clone();
        }
        for p in &self.prefixes {
            if let Some(rest) = name.strip_prefix(p.as_str()) {
                if !rest.is_empty() {
                    return rest.to_string();
                }
            }
        }
        name.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformError {
    /// The input does not follow the expected constructor shapes. The path
    /// holds child indices from the root to the offending node.
    MalformedHolTree { path: Vec<usize>, reason: String },
}

impl TransformError {
    fn at(path: &[usize], reason: impl Into<String>) -> TransformError {
        TransformError::MalformedHolTree {
            path: path.to_vec(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let TransformError::MalformedHolTree { path, reason } = self;
        if path.is_empty() {
            write!(f, "malformed HOL tree at root: {reason}")
        } else {
            write!(f, "malformed HOL tree at ")?;
            for (i, p) in path.iter().enumerate() {
                if i > 0 {
                    write!(f, ".")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ": {reason}")
        }
    }
}

const TERM_CONSTRUCTORS: [&str; 4] = ["Comb", "Abs", "Const", "Var"];

fn is_type_node(t: &ParseTree) -> bool {
    t.label() == "Tyapp" || t.label() == "Tyvar"
}

/// Compact curried rendering of a `Tyapp`/`Tyvar` tree:
/// `(Tyapp "fun" (Tyapp "real") (Tyapp "bool"))` becomes `(fun real bool)`.
fn type_text(ty: &ParseTree, path: &mut Vec<usize>) -> Result<String, TransformError> {
    match ty.label() {
        "Tyvar" => match ty.children() {
            [name] if name.is_leaf() => Ok(name.label().to_string()),
            _ => Err(TransformError::at(path, "Tyvar expects one name leaf")),
        },
        "Tyapp" => {
            let (head, args) = ty
                .children()
                .split_first()
                .ok_or_else(|| TransformError::at(path, "Tyapp expects a name"))?;
            if !head.is_leaf() {
                return Err(TransformError::at(path, "Tyapp name must be a leaf"));
            }
            if args.is_empty() {
                return Ok(head.label().to_string());
            }
            let mut out = String::new();
            out.push('(');
            out.push_str(head.label());
            for (i, a) in args.iter().enumerate() {
                path.push(i + 1);
                let t = type_text(a, path)?;
                path.pop();
                out.push(' ');
                out.push_str(&t);
            }
            out.push(')');
            Ok(out)
        }
        other => Err(TransformError::at(
            path,
            format!("expected a type, found {other:?}"),
        )),
    }
}

fn type_label(ty: &ParseTree, path: &mut Vec<usize>) -> Result<String, TransformError> {
    Ok(format!("(Type {})", type_text(ty, path)?))
}

/// Splits nested applications `Comb(Comb(h, a1), a2)...` into the head term
/// and its argument list.
fn spine<'t>(
    mut term: &'t ParseTree,
    path: &mut Vec<usize>,
) -> Result<(&'t ParseTree, Vec<&'t ParseTree>), TransformError> {
    let mut args = Vec::new();
    while term.label() == "Comb" {
        match term.children() {
            [f, x] => {
                args.push(x);
                term = f;
                path.push(0);
            }
            _ => return Err(TransformError::at(path, "Comb expects 2 children")),
        }
    }
    args.reverse();
    Ok((term, args))
}

/// Result type of a term, as a type tree. Synthesizes `(fun a b)` nodes for
/// abstractions and peels one arrow per applied argument.
fn result_type(term: &ParseTree, path: &mut Vec<usize>) -> Result<ParseTree, TransformError> {
    match term.label() {
        "Const" | "Var" => match term.children() {
            [name, ty] if name.is_leaf() && is_type_node(ty) => Ok(ty.clone()),
            _ => Err(TransformError::at(
                path,
                format!("{} expects a name leaf and a type", term.label()),
            )),
        },
        "Abs" => match term.children() {
            [name, ty, body] if name.is_leaf() && is_type_node(ty) => {
                path.push(2);
                let body_ty = result_type(body, path)?;
                path.pop();
                Ok(ParseTree::node(
                    "Tyapp",
                    alloc::vec![ParseTree::leaf("fun"), ty.clone(), body_ty],
                ))
            }
            _ => Err(TransformError::at(
                path,
                "Abs expects a name leaf, a type and a body",
            )),
        },
        "Comb" => {
            let depth_before = path.len();
            let (head, args) = spine(term, path)?;
            let mut ty = result_type(head, path)?;
            path.truncate(depth_before);
            for _ in &args {
                ty = match peel_codomain(&ty) {
                    Some(cod) => cod,
                    None => {
                        return Err(TransformError::at(
                            path,
                            "application head type has too few arrows",
                        ))
                    }
                };
            }
            Ok(ty)
        }
        other => Err(TransformError::at(
            path,
            format!("unknown term constructor {other:?}"),
        )),
    }
}

fn peel_codomain(ty: &ParseTree) -> Option<ParseTree> {
    if ty.label() != "Tyapp" {
        return None;
    }
    match ty.children() {
        [name, _dom, cod] if name.label() == "fun" => Some(cod.clone()),
        _ => None,
    }
}

/// Rewrites a raw HOL term tree into surface syntax with opaque type labels.
///
/// Every typed subterm becomes a node labeled `(Type τ)`; constants turn into
/// terminal tokens, variables into `(Var name)` subtrees, and applications of
/// a constant in `config.infix` with exactly two arguments put the operator
/// between its operands. Unknown constructors and arity violations are
/// errors, not pass-throughs, so corpus drift fails loudly.
pub fn compress_types(
    hol_tree: &ParseTree,
    config: &AmbiguationConfig,
) -> Result<ParseTree, TransformError> {
    let mut path = Vec::new();
    render(hol_tree, config, &mut path)
}

fn render(
    term: &ParseTree,
    config: &AmbiguationConfig,
    path: &mut Vec<usize>,
) -> Result<ParseTree, TransformError> {
    if term.is_leaf() || !TERM_CONSTRUCTORS.contains(&term.label()) {
        return Err(TransformError::at(
            path,
            format!("unknown term constructor {:?}", term.label()),
        ));
    }
    match term.label() {
        "Var" => {
            let label = var_type_label(term, path)?;
            let name = term.children()[0].label();
            Ok(ParseTree::node(
                label,
                alloc::vec![ParseTree::node("Var", alloc::vec![ParseTree::leaf(name)])],
            ))
        }
        "Const" => {
            let label = var_type_label(term, path)?;
            let name = term.children()[0].label();
            Ok(ParseTree::node(label, alloc::vec![ParseTree::leaf(name)]))
        }
        "Abs" => {
            let label = type_label(&result_type(term, path)?, path)?;
            let [name, ty, body] = term.children() else {
                return Err(TransformError::at(path, "Abs expects 3 children"));
            };
            if !name.is_leaf() {
                return Err(TransformError::at(path, "Abs variable name must be a leaf"));
            }
            path.push(1);
            let bound_label = type_label(ty, path)?;
            path.pop();
            let bound = ParseTree::node(
                bound_label,
                alloc::vec![ParseTree::node(
                    "Var",
                    alloc::vec![ParseTree::leaf(name.label())]
                )],
            );
            path.push(2);
            let body_tree = render(body, config, path)?;
            path.pop();
            Ok(ParseTree::node(
                label,
                alloc::vec![ParseTree::node("Abs", alloc::vec![bound, body_tree])],
            ))
        }
        "Comb" => {
            let label = type_label(&result_type(term, path)?, path)?;
            let depth_before = path.len();
            let (head, args) = spine(term, path)?;
            let head_path_len = path.len();

            // Argument positions relative to this node, for error paths:
            // args[k] sits at path prefix of (spine depth - k - 1) zeros + [1].
            let mut rendered_args = Vec::with_capacity(args.len());
            for (k, a) in args.iter().enumerate() {
                path.truncate(depth_before);
                for _ in 0..(args.len() - k - 1) {
                    path.push(0);
                }
                path.push(1);
                rendered_args.push(render(a, config, path)?);
            }
            path.truncate(head_path_len);

            let children = if head.label() == "Const" {
                let name = head
                    .children()
                    .first()
                    .filter(|n| n.is_leaf())
                    .ok_or_else(|| TransformError::at(path, "Const expects a name leaf"))?
                    .label();
                let mut v = Vec::with_capacity(args.len() + 1);
                // infix status follows the surface operator, so overloaded
                // constants sit where their ambiguous rendering will sit
                if config.infix.contains(config.surface(name).as_str())
                    && rendered_args.len() == 2
                {
                    let mut it = rendered_args.into_iter();
                    v.push(it.next().unwrap());
                    v.push(ParseTree::leaf(name));
                    v.push(it.next().unwrap());
                } else {
                    v.push(ParseTree::leaf(name));
                    v.extend(rendered_args);
                }
                v
            } else {
                let mut v = Vec::with_capacity(args.len() + 1);
                v.push(render(head, config, path)?);
                v.extend(rendered_args);
                v
            };
            path.truncate(depth_before);
            Ok(ParseTree::node(label, children))
        }
        _ => unreachable!(),
    }
}

fn var_type_label(term: &ParseTree, path: &mut Vec<usize>) -> Result<String, TransformError> {
    match term.children() {
        [name, ty] if name.is_leaf() && is_type_node(ty) => {
            path.push(1);
            let l = type_label(ty, path);
            path.pop();
            l
        }
        _ => Err(TransformError::at(
            path,
            format!("{} expects a name leaf and a type", term.label()),
        )),
    }
}

/// Wraps every terminal that is an overloaded constant into a two-level
/// subtree `($#constant token)` recording the formal concept it denotes.
/// Already-wrapped tokens and variable names are left alone, so the
/// transformation is idempotent.
pub fn wrap_concepts(typed_tree: &ParseTree, config: &AmbiguationConfig) -> ParseTree {
    if typed_tree.is_leaf() {
        return match config.overloads.get(typed_tree.label()) {
            Some(tok) => wrapper(typed_tree.label(), tok),
            None => typed_tree.clone(),
        };
    }
    if typed_tree.label() == "Var" || typed_tree.label().starts_with("$#") {
        return typed_tree.clone();
    }
    let children = typed_tree
        .children()
        .iter()
        .map(|c| wrap_concepts(c, config))
        .collect();
    ParseTree::node(typed_tree.label(), children)
}

fn wrapper(constant: &str, token: &str) -> ParseTree {
    ParseTree::node(
        format!("$#{constant}"),
        alloc::vec![ParseTree::leaf(token)],
    )
}

/// Renders a raw HOL term tree directly as its ambiguous token sequence:
/// overload substitution, prefix stripping, functor deletion and infix
/// placement, with all type annotations and brackets gone.
pub fn ambiguate(
    formal_tree: &ParseTree,
    config: &AmbiguationConfig,
) -> Result<Sentence, TransformError> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    emit(formal_tree, config, &mut path, &mut out)?;
    Ok(out)
}

fn emit(
    term: &ParseTree,
    config: &AmbiguationConfig,
    path: &mut Vec<usize>,
    out: &mut Sentence,
) -> Result<(), TransformError> {
    if term.is_leaf() || !TERM_CONSTRUCTORS.contains(&term.label()) {
        return Err(TransformError::at(
            path,
            format!("unknown term constructor {:?}", term.label()),
        ));
    }
    match term.label() {
        "Var" | "Const" => {
            let [name, _ty] = term.children() else {
                return Err(TransformError::at(
                    path,
                    format!("{} expects a name leaf and a type", term.label()),
                ));
            };
            if !name.is_leaf() {
                return Err(TransformError::at(path, "name must be a leaf"));
            }
            if term.label() == "Const" {
                out.push(config.surface(name.label()));
            } else {
                out.push(name.label().to_string());
            }
            Ok(())
        }
        "Abs" => {
            let [name, _ty, body] = term.children() else {
                return Err(TransformError::at(path, "Abs expects 3 children"));
            };
            out.push(name.label().to_string());
            path.push(2);
            emit(body, config, path, out)?;
            path.pop();
            Ok(())
        }
        "Comb" => {
            let depth_before = path.len();
            let (head, args) = spine(term, path)?;
            path.truncate(depth_before);
            let const_name = (head.label() == "Const")
                .then(|| head.children().first())
                .flatten()
                .filter(|n| n.is_leaf())
                .map(|n| n.label());

            if let Some(name) = const_name {
                if config.functors.contains(name) && args.len() == 1 {
                    return emit_arg(args[0], config, path, out, 0, 1);
                }
                let surface = config.surface(name);
                if config.infix.contains(surface.as_str()) && args.len() == 2 {
                    emit_arg(args[0], config, path, out, 0, 2)?;
                    out.push(surface);
                    return emit_arg(args[1], config, path, out, 1, 2);
                }
                out.push(surface);
            } else {
                for _ in &args {
                    path.push(0);
                }
                emit(head, config, path, out)?;
                path.truncate(depth_before);
            }
            for (k, a) in args.iter().enumerate() {
                emit_arg(a, config, path, out, k, args.len())?;
            }
            Ok(())
        }
        _ => unreachable!(),
    }
}

fn emit_arg(
    arg: &ParseTree,
    config: &AmbiguationConfig,
    path: &mut Vec<usize>,
    out: &mut Sentence,
    index: usize,
    total: usize,
) -> Result<(), TransformError> {
    let depth_before = path.len();
    for _ in 0..(total - index - 1) {
        path.push(0);
    }
    path.push(1);
    let r = emit(arg, config, path, out);
    path.truncate(depth_before);
    r
}
