//! Brute-force reference interpreter.
//!
//! Computes, for a node and a start position, every end position in
//! backtracking priority order (greedy quantifiers try more iterations
//! first). A possessive quantifier is an atomic group around its greedy
//! counterpart: only the first entry of its list survives. Works directly on
//! the tree and shares no code with the engine.

use regex_evolve::ast::{RegexTree, Terminal};

fn term_matches(t: &Terminal, c: char) -> bool {
    match t {
        Terminal::Alpha(x) | Terminal::Digit(x) | Terminal::Symbol(x) => *x == c,
        Terminal::RangeLower => c.is_ascii_lowercase(),
        Terminal::RangeUpper => c.is_ascii_uppercase(),
        Terminal::RangeDigit => c.is_ascii_digit(),
        Terminal::Word => c.is_ascii_alphanumeric() || c == '_',
        Terminal::DigitClass => c.is_ascii_digit(),
        Terminal::Wildcard => true,
        Terminal::FrequentItem(s) => {
            let mut it = s.chars();
            it.next() == Some(c) && it.next().is_none()
        }
    }
}

pub fn ends(node: &RegexTree, s: &[char], pos: usize) -> Vec<usize> {
    match node {
        RegexTree::Leaf(Terminal::FrequentItem(lit)) => {
            let lit: Vec<char> = lit.chars().collect();
            if s.len() >= pos + lit.len() && s[pos..pos + lit.len()] == lit[..] {
                vec![pos + lit.len()]
            } else {
                vec![]
            }
        }
        RegexTree::Leaf(t) => match s.get(pos) {
            Some(&c) if term_matches(t, c) => vec![pos + 1],
            _ => vec![],
        },
        RegexTree::Concat(a, b) => {
            let mut out = Vec::new();
            for e in ends(a, s, pos) {
                out.extend(ends(b, s, e));
            }
            out
        }
        RegexTree::Group(c) => ends(c, s, pos),
        RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => {
            let negated = matches!(node, RegexTree::ListNotMatch(_));
            match s.get(pos) {
                Some(&c) => {
                    let any = cs.iter().any(|k| match k {
                        RegexTree::Leaf(t) => term_matches(t, c),
                        _ => unreachable!(),
                    });
                    if any != negated {
                        vec![pos + 1]
                    } else {
                        vec![]
                    }
                }
                None => vec![],
            }
        }
        RegexTree::OneOrMore(c) => possessive(c, s, pos, 1, u32::MAX),
        RegexTree::ZeroOrMore(c) => possessive(c, s, pos, 0, u32::MAX),
        RegexTree::ZeroOrOne(c) => possessive(c, s, pos, 0, 1),
        RegexTree::MinMax { child, min, max } => possessive(child, s, pos, *min, *max),
    }
}

fn possessive(c: &RegexTree, s: &[char], pos: usize, min: u32, max: u32) -> Vec<usize> {
    greedy(c, s, pos, 0, min, max).into_iter().take(1).collect()
}

/// All ends of `c{min,max}` starting at `pos` after `k` iterations, greedy
/// order. An iteration that consumes nothing satisfies any remaining minimum
/// and ends the loop.
fn greedy(c: &RegexTree, s: &[char], pos: usize, k: u32, min: u32, max: u32) -> Vec<usize> {
    let mut out = Vec::new();
    if k < max {
        for e in ends(c, s, pos) {
            if e == pos {
                out.push(pos);
            } else {
                out.extend(greedy(c, s, e, k + 1, min, max));
            }
        }
    }
    if k >= min {
        out.push(pos);
    }
    out
}

pub fn full_match(tree: &RegexTree, s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    ends(tree, &chars, 0).contains(&chars.len())
}

/// Leftmost start with any match; the first (highest priority) end there.
pub fn count_chars(tree: &RegexTree, s: &str) -> usize {
    let chars: Vec<char> = s.chars().collect();
    for start in 0..=chars.len() {
        if let Some(&e) = ends(tree, &chars, start).first() {
            return e - start;
        }
    }
    0
}
