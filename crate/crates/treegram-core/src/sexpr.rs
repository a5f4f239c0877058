//! Reading and printing of the single-line s-expression notation used for
//! trees, grammars and parse output.
//!
//! Atoms containing whitespace, parentheses or double quotes (or empty atoms)
//! are printed inside double quotes with `\"` and `\\` escapes; all other
//! atoms print bare. [`read`] accepts arbitrary whitespace between tokens, so
//! `print(read(s))` is a canonical single-line form of `s` and printing is
//! idempotent.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// An s-expression: an atom or a list of s-expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(text: impl Into<String>) -> SExpr {
        SExpr::Atom(text.into())
    }

    pub fn list(items: Vec<SExpr>) -> SExpr {
        SExpr::List(items)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::Atom(_) => None,
            SExpr::List(items) => Some(items),
        }
    }
}

/// Errors from [`read`]. Positions are byte offsets into the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SexprError {
    EmptyInput,
    UnbalancedParens(usize),
    UnterminatedQuote(usize),
    TrailingContent(usize),
    EmptyAtom(usize),
}

impl fmt::Display for SexprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SexprError::EmptyInput => write!(f, "empty input"),
            SexprError::UnbalancedParens(p) => write!(f, "unbalanced parentheses at byte {p}"),
            SexprError::UnterminatedQuote(p) => {
                write!(f, "unterminated quote starting at byte {p}")
            }
            SexprError::TrailingContent(p) => write!(f, "trailing content at byte {p}"),
            SexprError::EmptyAtom(p) => write!(f, "empty quoted atom at byte {p}"),
        }
    }
}

/// Parses a single s-expression from `text`.
pub fn read(text: &str) -> Result<SExpr, SexprError> {
    let mut chars = text.char_indices().peekable();
    let mut stack: Vec<Vec<SExpr>> = Vec::new();
    let mut done: Option<SExpr> = None;

    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if done.is_some() {
            return Err(SexprError::TrailingContent(pos));
        }
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                match stack.pop() {
                    None => return Err(SexprError::UnbalancedParens(pos)),
                    Some(items) => place(&mut stack, &mut done, SExpr::List(items)),
                }
            }
            '"' => {
                chars.next();
                let mut atom = String::new();
                loop {
                    match chars.next() {
                        None => return Err(SexprError::UnterminatedQuote(pos)),
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            None => return Err(SexprError::UnterminatedQuote(pos)),
                            Some((_, esc)) => atom.push(esc),
                        },
                        Some((_, ch)) => atom.push(ch),
                    }
                }
                if atom.is_empty() {
                    return Err(SexprError::EmptyAtom(pos));
                }
                place(&mut stack, &mut done, SExpr::Atom(atom));
            }
            _ => {
                let mut atom = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '(' | ')' | '"') {
                        break;
                    }
                    atom.push(ch);
                    chars.next();
                }
                place(&mut stack, &mut done, SExpr::Atom(atom));
            }
        }
    }

    if !stack.is_empty() {
        return Err(SexprError::UnbalancedParens(text.len()));
    }
    done.ok_or(SexprError::EmptyInput)
}

fn place(stack: &mut [Vec<SExpr>], done: &mut Option<SExpr>, value: SExpr) {
    match stack.last_mut() {
        Some(top) => top.push(value),
        None => *done = Some(value),
    }
}

/// Prints `expr` in canonical single-line form; `read(print(e)) == e`.
pub fn print(expr: &SExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn write_expr(out: &mut String, expr: &SExpr) {
    match expr {
        SExpr::Atom(a) => write_atom(out, a),
        SExpr::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_expr(out, item);
            }
            out.push(')');
        }
    }
}

pub(crate) fn atom_needs_quoting(atom: &str) -> bool {
    atom.is_empty()
        || atom
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"'))
}

pub(crate) fn write_atom(out: &mut String, atom: &str) {
    if atom_needs_quoting(atom) {
        out.push('"');
        for c in atom.chars() {
            if matches!(c, '"' | '\\') {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(atom);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn atom(s: &str) -> SExpr {
        SExpr::atom(s)
    }

    #[test]
    fn reads_simple_tree() {
        let e = read("(S (Num 1) .)").unwrap();
        assert_eq!(
            e,
            SExpr::List(vec![
                atom("S"),
                SExpr::List(vec![atom("Num"), atom("1")]),
                atom(".")
            ])
        );
    }

    #[test]
    fn reads_quoted_hol_constants() {
        let e = read(r#"(Comb (Const "!" (Tyapp "fun")))"#).unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items[0].as_atom(), Some("Comb"));
        let konst = items[1].as_list().unwrap();
        assert_eq!(konst[0].as_atom(), Some("Const"));
        assert_eq!(konst[1].as_atom(), Some("!"));
        assert_eq!(konst[2].as_list().unwrap()[1].as_atom(), Some("fun"));
    }

    #[test]
    fn unbalanced_and_empty_inputs() {
        assert!(matches!(read("(("), Err(SexprError::UnbalancedParens(_))));
        assert_eq!(read(")"), Err(SexprError::UnbalancedParens(0)));
        assert_eq!(read(""), Err(SexprError::EmptyInput));
        assert_eq!(read("   "), Err(SexprError::EmptyInput));
        assert!(matches!(read("a b"), Err(SexprError::TrailingContent(_))));
        assert!(matches!(read("(a) b"), Err(SexprError::TrailingContent(_))));
        assert!(matches!(
            read("(a \"x"),
            Err(SexprError::UnterminatedQuote(_))
        ));
        assert!(matches!(read("(\"\")"), Err(SexprError::EmptyAtom(_))));
    }

    #[test]
    fn prints_atoms_bare_or_quoted() {
        assert_eq!(print(&atom("x")), "x");
        assert_eq!(print(&atom("!")), "!");
        assert_eq!(print(&atom("(Type bool)")), "\"(Type bool)\"");
        assert_eq!(print(&atom("a\"b\\c")), "\"a\\\"b\\\\c\"");
        assert_eq!(print(&SExpr::List(vec![])), "()");
    }

    #[test]
    fn normalizes_whitespace_and_redundant_quotes() {
        let noisy = "( S   (Num \"1\")\n . )";
        let canon = print(&read(noisy).unwrap());
        assert_eq!(canon, "(S (Num 1) .)");
        // printing is idempotent
        assert_eq!(print(&read(&canon).unwrap()), canon);
    }

    #[test]
    fn canonical_form_of_training_tree() {
        let text = "(S (Num (Num (Num 1) * (Num x)) + (Num (Num 2) * (Num x))) .)";
        assert_eq!(print(&read(text).unwrap()), text);
    }

    fn random_expr(rng: &mut Xorshift64Star, depth: usize) -> SExpr {
        let atoms = ["x", "(Type real)", "a b", "!", "\\", "\"", "–", "$#eq"];
        if depth == 0 || rng.next_below(3) == 0 {
            atom(atoms[rng.next_below(atoms.len() as u64) as usize])
        } else {
            let n = rng.next_below(4) as usize;
            SExpr::List((0..n).map(|_| random_expr(rng, depth - 1)).collect())
        }
    }

    #[test]
    fn read_print_round_trip_on_random_trees() {
        let mut rng = Xorshift64Star::new(0xC0FFEE);
        for i in 0..1000 {
            let e = random_expr(&mut rng, 4);
            let text = print(&e);
            let back = read(&text).unwrap_or_else(|err| panic!("case {i}: {err}: {text}"));
            assert_eq!(back, e, "case {i}: {text}");
            assert_eq!(print(&back), text);
        }
    }

    #[test]
    fn error_messages_carry_positions() {
        let err = read("(a").unwrap_err();
        assert_eq!(format!("{err}"), "unbalanced parentheses at byte 2");
        assert_eq!(
            read("x y").unwrap_err().to_string(),
            "trailing content at byte 2"
        );
    }
}
