//! Parser for the engine's own output dialect.
//!
//! Accepts exactly what rendering and joining produce: the possessive
//! operators, character lists, `(..)` groups, the `(?:..)` wrappers added
//! around quantified non-atoms, and `|` between top-level branches. Anything
//! else is rejected with the character position where it was found.

use std::fmt;

use thiserror::Error;

use crate::ast::{is_meta, RegexTree, Terminal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: expected {expected}")]
pub struct ParseError {
    /// Character index into the input.
    pub position: usize,
    pub expected: String,
}

/// A top-level alternation of trees, in branch order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    branches: Vec<RegexTree>,
}

impl Pattern {
    /// Panics on an empty branch list.
    pub fn new(branches: Vec<RegexTree>) -> Self {
        assert!(!branches.is_empty(), "pattern without branches");
        Pattern { branches }
    }

    pub fn branches(&self) -> &[RegexTree] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<RegexTree> {
        self.branches
    }

    pub fn render(&self) -> String {
        self.branches
            .iter()
            .map(RegexTree::render)
            .collect::<Vec<_>>()
            .join("|")
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn parse(s: &str) -> Result<Pattern, ParseError> {
    let mut p = Parser {
        chars: s.chars().collect(),
        pos: 0,
    };
    let mut branches = vec![p.sequence(false)?];
    while p.eat('|') {
        branches.push(p.sequence(false)?);
    }
    if let Some(c) = p.peek() {
        return Err(p.error(format!("end of input, found {c:?}")));
    }
    Ok(Pattern::new(branches))
}

/// Parses a single branch; alternation is an error.
pub fn parse_tree(s: &str) -> Result<RegexTree, ParseError> {
    let pattern = parse(s)?;
    if pattern.branches.len() > 1 {
        let at = s.chars().position(|c| c == '|').unwrap_or(0);
        return Err(ParseError {
            position: at,
            expected: "a single branch".into(),
        });
    }
    Ok(pattern.branches.into_iter().next().unwrap())
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

enum Piece {
    Literal(char),
    Node(RegexTree),
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos.min(self.chars.len()),
            expected: expected.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("{c:?}")))
        }
    }

    /// One or more pieces up to `|`, `)` or the end.
    fn sequence(&mut self, in_group: bool) -> Result<RegexTree, ParseError> {
        let mut pieces: Vec<Piece> = Vec::new();
        loop {
            match self.peek() {
                None => break,
                Some('|') if in_group => {
                    return Err(self.error("')' (alternation only at top level)"))
                }
                Some('|') => break,
                Some(')') if in_group => break,
                Some(')') => return Err(self.error("an atom, found unbalanced ')'")),
                Some(_) => {}
            }
            let atom = self.atom()?;
            let piece = match self.quantifier()? {
                None => atom,
                Some(q) => Piece::Node(q(into_tree(atom))),
            };
            if matches!(self.peek(), Some('+' | '*' | '?' | '{')) {
                return Err(self.error("an atom (nested quantifiers need a group)"));
            }
            pieces.push(piece);
        }
        if pieces.is_empty() {
            return Err(self.error("an atom"));
        }
        Ok(build_sequence(pieces))
    }

    fn atom(&mut self) -> Result<Piece, ParseError> {
        let c = self.peek().ok_or_else(|| self.error("an atom"))?;
        match c {
            '(' => {
                self.pos += 1;
                let capturing = if self.peek() == Some('?') {
                    if self.peek_at(1) != Some(':') {
                        return Err(self.error("a supported group; only '(?:' is allowed"));
                    }
                    self.pos += 2;
                    false
                } else {
                    true
                };
                let inner = self.sequence(true)?;
                self.expect(')')?;
                Ok(Piece::Node(if capturing {
                    RegexTree::group(inner)
                } else {
                    inner
                }))
            }
            '[' => self.list(),
            '\\' => {
                self.pos += 1;
                match self.peek() {
                    Some('d') => {
                        self.pos += 1;
                        Ok(Piece::Node(RegexTree::Leaf(Terminal::DigitClass)))
                    }
                    Some('w') => {
                        self.pos += 1;
                        Ok(Piece::Node(RegexTree::Leaf(Terminal::Word)))
                    }
                    Some(e) if is_meta(e) => {
                        self.pos += 1;
                        Ok(Piece::Literal(e))
                    }
                    _ => Err(self.error("an escape: \\d, \\w or a metacharacter")),
                }
            }
            '.' => {
                self.pos += 1;
                Ok(Piece::Node(RegexTree::Leaf(Terminal::Wildcard)))
            }
            '+' | '*' | '?' | '{' => Err(self.error("an atom before the quantifier")),
            ']' | '}' | '^' | '$' => Err(self.error(format!("an atom, found unescaped {c:?}"))),
            _ => {
                self.pos += 1;
                Ok(Piece::Literal(c))
            }
        }
    }

    fn list(&mut self) -> Result<Piece, ParseError> {
        self.expect('[')?;
        let negated = self.eat('^');
        let mut items = Vec::new();
        loop {
            let c = self
                .peek()
                .ok_or_else(|| self.error("']' to close the list"))?;
            match c {
                ']' if !items.is_empty() => {
                    self.pos += 1;
                    break;
                }
                ']' => return Err(self.error("a list item")),
                '\\' => {
                    self.pos += 1;
                    let t = match self.peek() {
                        Some('d') => Terminal::DigitClass,
                        Some('w') => Terminal::Word,
                        Some(e) if is_meta(e) => Terminal::from_char(e)
                            .unwrap_or_else(|| Terminal::frequent(&e.to_string())),
                        _ => return Err(self.error("an escape: \\d, \\w or a metacharacter")),
                    };
                    self.pos += 1;
                    items.push(RegexTree::Leaf(t));
                }
                _ if self.peek_at(1) == Some('-') && self.peek_at(2).is_some_and(|e| e != ']') => {
                    let hi = self.peek_at(2).unwrap();
                    let t = match (c, hi) {
                        ('a', 'z') => Terminal::RangeLower,
                        ('A', 'Z') => Terminal::RangeUpper,
                        ('0', '9') => Terminal::RangeDigit,
                        _ => return Err(self.error("one of the ranges a-z, A-Z, 0-9")),
                    };
                    self.pos += 3;
                    items.push(RegexTree::Leaf(t));
                }
                '[' | '-' => return Err(self.error(format!("a list item, found unescaped {c:?}"))),
                _ => {
                    self.pos += 1;
                    match Terminal::from_char(c) {
                        Some(t) => items.push(RegexTree::Leaf(t)),
                        None => return Err(self.error("a letter, digit, symbol, range or class")),
                    }
                }
            }
        }
        let node = if negated {
            RegexTree::ListNotMatch(items)
        } else {
            RegexTree::ListMatch(items)
        };
        Ok(Piece::Node(node.canonical()))
    }

    #[allow(clippy::type_complexity)]
    fn quantifier(&mut self) -> Result<Option<Box<dyn Fn(RegexTree) -> RegexTree>>, ParseError> {
        let q: Box<dyn Fn(RegexTree) -> RegexTree> = match self.peek() {
            Some('+') => {
                self.pos += 1;
                Box::new(RegexTree::one_or_more)
            }
            Some('*') => {
                self.pos += 1;
                Box::new(RegexTree::zero_or_more)
            }
            Some('?') => {
                self.pos += 1;
                Box::new(RegexTree::zero_or_one)
            }
            Some('{') => {
                self.pos += 1;
                let min = self.number()?;
                self.expect(',')?;
                let max_at = self.pos;
                let max = self.number()?;
                if min > max {
                    return Err(ParseError {
                        position: max_at,
                        expected: format!("an upper bound >= {min}"),
                    });
                }
                self.expect('}')?;
                Box::new(move |c| RegexTree::min_max(c, min, max))
            }
            _ => return Ok(None),
        };
        if !self.eat('+') {
            return Err(self.error("'+' (quantifiers are possessive)"));
        }
        Ok(Some(q))
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("a number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| ParseError {
            position: start,
            expected: "a number that fits in 32 bits".into(),
        })
    }
}

fn into_tree(p: Piece) -> RegexTree {
    match p {
        Piece::Literal(c) => RegexTree::lit(c),
        Piece::Node(n) => n,
    }
}

fn build_sequence(pieces: Vec<Piece>) -> RegexTree {
    let items: Vec<RegexTree> = pieces.into_iter().map(into_tree).collect();
    // Canonicalizing the chain merges literal runs and balances it.
    let tree = RegexTree::concat_balanced(items);
    match tree {
        RegexTree::Concat(..) => tree.canonical(),
        other => other,
    }
}
