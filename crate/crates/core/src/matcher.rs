//! Possessive matching straight off the syntax tree.
//!
//! Every quantifier in the grammar is possessive and there is no
//! alternation inside a tree, so each node matched at a position has at most
//! one end. Matching is a single forward pass with no backtracking.

use crate::ast::{RegexTree, Terminal};
use crate::parse::Pattern;

/// Steps allowed per anchored attempt, per sample character and tree node.
pub const STEP_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Anchored at both ends, the tree consumed the whole sample.
    pub total_match: bool,
    /// Length of the leftmost match anywhere in the sample; the full length
    /// when `total_match`.
    pub char_count: usize,
}

/// Work done by one or more match calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchStats {
    pub steps: u64,
    pub budget_exceeded: bool,
}

impl MatchStats {
    pub fn absorb(&mut self, other: MatchStats) {
        self.steps += other.steps;
        self.budget_exceeded |= other.budget_exceeded;
    }
}

#[derive(Debug, Clone)]
struct CharSet {
    ascii: u128,
    negated: bool,
}

impl CharSet {
    fn new(negated: bool) -> Self {
        CharSet { ascii: 0, negated }
    }

    fn add_range(&mut self, lo: char, hi: char) {
        for c in lo..=hi {
            self.ascii |= 1u128 << (c as u32);
        }
    }

    fn add_terminal(&mut self, t: &Terminal) {
        match t {
            Terminal::Alpha(c) | Terminal::Digit(c) | Terminal::Symbol(c) => self.add_range(*c, *c),
            Terminal::RangeLower => self.add_range('a', 'z'),
            Terminal::RangeUpper => self.add_range('A', 'Z'),
            Terminal::RangeDigit | Terminal::DigitClass => self.add_range('0', '9'),
            Terminal::Word => {
                self.add_range('a', 'z');
                self.add_range('A', 'Z');
                self.add_range('0', '9');
                self.add_range('_', '_');
            }
            Terminal::FrequentItem(s) => {
                // Only single ASCII characters are class-safe.
                if let Some(c) = s.chars().next().filter(char::is_ascii) {
                    self.add_range(c, c);
                }
            }
            Terminal::Wildcard => {}
        }
    }

    #[inline]
    fn contains(&self, c: char) -> bool {
        let hit = (c as u32) < 128 && self.ascii & (1u128 << (c as u32)) != 0;
        hit != self.negated
    }
}

#[derive(Debug, Clone)]
enum Inst {
    Char(char),
    Lit(Box<[char]>),
    Set(CharSet),
    Any,
    Seq(Box<[usize]>),
    Repeat { child: usize, min: u32, max: u32 },
}

/// A tree flattened into an instruction array. Groups compile away.
#[derive(Debug, Clone)]
pub struct Matcher {
    insts: Vec<Inst>,
    root: usize,
    node_count: u64,
    /// No match can be empty, so starts past `len - min_len` are skipped.
    min_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Exhausted;

struct Run<'s> {
    s: &'s [char],
    steps: u64,
    limit: u64,
    exceeded: bool,
}

impl Matcher {
    pub fn new(tree: &RegexTree) -> Self {
        let mut insts = Vec::with_capacity(tree.node_count());
        let root = compile(tree, &mut insts);
        let mut m = Matcher {
            insts,
            root,
            node_count: tree.node_count() as u64,
            min_len: 0,
        };
        m.min_len = m.min_len_of(root);
        m
    }

    fn min_len_of(&self, idx: usize) -> usize {
        match &self.insts[idx] {
            Inst::Char(_) | Inst::Set(_) | Inst::Any => 1,
            Inst::Lit(cs) => cs.len(),
            Inst::Seq(items) => items.iter().map(|&i| self.min_len_of(i)).sum(),
            Inst::Repeat { child, min, .. } => {
                self.min_len_of(*child).saturating_mul(*min as usize)
            }
        }
    }

    fn budget(&self, len: usize) -> u64 {
        STEP_FACTOR * (len.max(1) as u64) * self.node_count
    }

    /// Anchored match attempt from `start`; the end position if any, or
    /// `Err` when the step budget ran out.
    fn attempt(
        &self,
        s: &[char],
        start: usize,
        stats: &mut MatchStats,
    ) -> Result<Option<usize>, Exhausted> {
        let mut run = Run {
            s,
            steps: 0,
            limit: self.budget(s.len()),
            exceeded: false,
        };
        let end = self.step(self.root, start, &mut run);
        stats.steps += run.steps;
        if run.exceeded {
            stats.budget_exceeded = true;
            return Err(Exhausted);
        }
        Ok(end)
    }

    fn step(&self, idx: usize, pos: usize, run: &mut Run<'_>) -> Option<usize> {
        run.steps += 1;
        if run.steps > run.limit {
            run.exceeded = true;
            return None;
        }
        let s = run.s;
        match &self.insts[idx] {
            Inst::Char(c) => (s.get(pos) == Some(c)).then_some(pos + 1),
            Inst::Lit(cs) => {
                let end = pos + cs.len();
                (end <= s.len() && s[pos..end] == cs[..]).then_some(end)
            }
            Inst::Set(set) => s.get(pos).filter(|&&c| set.contains(c)).map(|_| pos + 1),
            Inst::Any => (pos < s.len()).then_some(pos + 1),
            Inst::Seq(items) => {
                let mut p = pos;
                for &i in items.iter() {
                    p = self.step(i, p, run)?;
                }
                Some(p)
            }
            &Inst::Repeat { child, min, max } => {
                let mut p = pos;
                let mut k = 0u32;
                while k < max {
                    match self.step(child, p, run) {
                        // An empty iteration repeats forever; treat the
                        // remaining minimum as met.
                        Some(e) if e == p => return Some(p),
                        Some(e) => {
                            p = e;
                            k += 1;
                        }
                        None => break,
                    }
                    if run.exceeded {
                        return None;
                    }
                }
                (k >= min && !run.exceeded).then_some(p)
            }
        }
    }

    pub fn full_match(&self, s: &[char]) -> bool {
        self.full_match_stats(s, &mut MatchStats::default())
    }

    pub fn full_match_stats(&self, s: &[char], stats: &mut MatchStats) -> bool {
        if s.len() < self.min_len {
            return false;
        }
        self.attempt(s, 0, stats) == Ok(Some(s.len()))
    }

    /// Leftmost unanchored match length; 0 when nothing matches.
    pub fn count_chars(&self, s: &[char]) -> usize {
        self.count_chars_stats(s, &mut MatchStats::default())
    }

    pub fn count_chars_stats(&self, s: &[char], stats: &mut MatchStats) -> usize {
        self.count_from(s, 0, stats)
    }

    fn count_from(&self, s: &[char], first: usize, stats: &mut MatchStats) -> usize {
        if s.len() < self.min_len {
            return 0;
        }
        for start in first..=s.len() - self.min_len {
            match self.attempt(s, start, stats) {
                Ok(Some(end)) => return end - start,
                Ok(None) => {}
                Err(Exhausted) => return 0,
            }
        }
        0
    }

    /// Both primitives with one shared attempt at position 0.
    pub fn outcome(&self, s: &[char], stats: &mut MatchStats) -> MatchOutcome {
        if s.len() < self.min_len {
            return MatchOutcome {
                total_match: false,
                char_count: 0,
            };
        }
        match self.attempt(s, 0, stats) {
            Ok(Some(e)) if e == s.len() => MatchOutcome {
                total_match: true,
                char_count: e,
            },
            Ok(Some(e)) => MatchOutcome {
                total_match: false,
                char_count: e,
            },
            Err(Exhausted) => MatchOutcome {
                total_match: false,
                char_count: 0,
            },
            Ok(None) => MatchOutcome {
                total_match: false,
                char_count: self.count_from(s, 1, stats),
            },
        }
    }

    /// Anchored count: the full length on a total match, else 0.
    pub fn anchored_outcome(&self, s: &[char], stats: &mut MatchStats) -> MatchOutcome {
        let total = self.full_match_stats(s, stats);
        MatchOutcome {
            total_match: total,
            char_count: if total { s.len() } else { 0 },
        }
    }
}

fn compile(tree: &RegexTree, out: &mut Vec<Inst>) -> usize {
    let inst = match tree {
        RegexTree::Leaf(t) => compile_leaf(t),
        RegexTree::Concat(..) => {
            let mut parts = Vec::new();
            tree.flatten_concat(&mut parts);
            let items: Vec<usize> = parts.into_iter().map(|p| compile(p, out)).collect();
            Inst::Seq(items.into())
        }
        RegexTree::Group(c) => return compile(c, out),
        RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => {
            let mut set = CharSet::new(matches!(tree, RegexTree::ListNotMatch(_)));
            for c in cs {
                if let RegexTree::Leaf(t) = c {
                    set.add_terminal(t);
                }
            }
            Inst::Set(set)
        }
        RegexTree::OneOrMore(c) => repeat(c, 1, u32::MAX, out),
        RegexTree::ZeroOrMore(c) => repeat(c, 0, u32::MAX, out),
        RegexTree::ZeroOrOne(c) => repeat(c, 0, 1, out),
        RegexTree::MinMax { child, min, max } => repeat(child, *min, *max, out),
    };
    out.push(inst);
    out.len() - 1
}

fn repeat(c: &RegexTree, min: u32, max: u32, out: &mut Vec<Inst>) -> Inst {
    Inst::Repeat {
        child: compile(c, out),
        min,
        max,
    }
}

fn compile_leaf(t: &Terminal) -> Inst {
    match t {
        Terminal::Alpha(c) | Terminal::Digit(c) | Terminal::Symbol(c) => Inst::Char(*c),
        Terminal::FrequentItem(s) => {
            let cs: Vec<char> = s.chars().collect();
            if cs.len() == 1 {
                Inst::Char(cs[0])
            } else {
                Inst::Lit(cs.into())
            }
        }
        Terminal::Wildcard => Inst::Any,
        other => {
            let mut set = CharSet::new(false);
            set.add_terminal(other);
            Inst::Set(set)
        }
    }
}

/// Compiled top-level alternation; a sample matches if any branch does.
#[derive(Debug, Clone)]
pub struct PatternMatcher {
    branches: Vec<Matcher>,
}

impl PatternMatcher {
    pub fn new(p: &Pattern) -> Self {
        PatternMatcher {
            branches: p.branches().iter().map(Matcher::new).collect(),
        }
    }

    pub fn full_match(&self, s: &[char]) -> bool {
        self.branches.iter().any(|m| m.full_match(s))
    }

    pub fn full_match_str(&self, s: &str) -> bool {
        let cs: Vec<char> = s.chars().collect();
        self.full_match(&cs)
    }
}

/// Whether `tree`, anchored at both ends, matches all of `s`.
pub fn full_match(tree: &RegexTree, s: &str) -> bool {
    let cs: Vec<char> = s.chars().collect();
    Matcher::new(tree).full_match(&cs)
}

/// Length of the leftmost match of `tree` inside `s`, or 0.
pub fn count_chars(tree: &RegexTree, s: &str) -> usize {
    let cs: Vec<char> = s.chars().collect();
    Matcher::new(tree).count_chars(&cs)
}
