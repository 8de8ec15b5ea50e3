//! Syntax trees for candidate regexes.
//!
//! Leaves are terminals (single characters, ranges, classes, the wildcard and
//! BPE frequent items); internal nodes are the possessive operators. A tree
//! renders to a canonical string which doubles as its cache and dedup key.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::bpe::BpeTokenSet;

/// Symbol constants available as leaves.
///
/// The backslash appears once; the escaped form `\\` is how it renders.
pub const SYMBOLS: [char; 21] = [
    '.', ':', ',', ';', '_', '=', '\\', '\'', '/', '?', '!', '}', '{', '(', ')', '[', ']', '<',
    '>', '@', '#',
];

/// Characters that must be escaped when emitted as literals.
pub const METACHARS: [char; 14] = [
    '.', '^', '$', '*', '+', '?', '(', ')', '[', ']', '{', '}', '|', '\\',
];

pub(crate) fn is_meta(c: char) -> bool {
    METACHARS.contains(&c)
}

pub(crate) fn is_symbol(c: char) -> bool {
    SYMBOLS.contains(&c)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    /// `a`..`z`, `A`..`Z`.
    Alpha(char),
    /// `0`..`9`.
    Digit(char),
    /// One of [`SYMBOLS`].
    Symbol(char),
    /// `a-z`
    RangeLower,
    /// `A-Z`
    RangeUpper,
    /// `0-9`
    RangeDigit,
    /// `\w`
    Word,
    /// `\d`
    DigitClass,
    /// `.`
    Wildcard,
    /// Multi-character literal extracted by BPE.
    FrequentItem(Arc<str>),
}

impl Terminal {
    /// The constant terminal for a single literal character, if there is one.
    pub fn from_char(c: char) -> Option<Terminal> {
        if c.is_ascii_alphabetic() {
            Some(Terminal::Alpha(c))
        } else if c.is_ascii_digit() {
            Some(Terminal::Digit(c))
        } else if is_symbol(c) {
            Some(Terminal::Symbol(c))
        } else {
            None
        }
    }

    pub fn frequent(s: &str) -> Terminal {
        Terminal::FrequentItem(Arc::from(s))
    }

    /// The literal text this terminal stands for, if it is a literal.
    pub fn literal_text(&self) -> Option<std::borrow::Cow<'_, str>> {
        match self {
            Terminal::Alpha(c) | Terminal::Digit(c) | Terminal::Symbol(c) => {
                Some(std::borrow::Cow::Owned(c.to_string()))
            }
            Terminal::FrequentItem(s) => Some(std::borrow::Cow::Borrowed(s)),
            _ => None,
        }
    }

    /// Whether this terminal may sit inside `[...]`.
    pub fn is_class_safe(&self) -> bool {
        match self {
            Terminal::Wildcard => false,
            Terminal::FrequentItem(s) => s.chars().count() == 1,
            _ => true,
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Terminal::Alpha(c) => c.is_ascii_alphabetic(),
            Terminal::Digit(c) => c.is_ascii_digit(),
            Terminal::Symbol(c) => is_symbol(*c),
            Terminal::FrequentItem(s) => !s.is_empty(),
            _ => true,
        }
    }

    fn render_into(&self, out: &mut String, in_class: bool) {
        match self {
            Terminal::Alpha(c) | Terminal::Digit(c) | Terminal::Symbol(c) => push_literal(out, *c),
            Terminal::FrequentItem(s) => s.chars().for_each(|c| push_literal(out, c)),
            Terminal::RangeLower => push_range(out, "a-z", in_class),
            Terminal::RangeUpper => push_range(out, "A-Z", in_class),
            Terminal::RangeDigit => push_range(out, "0-9", in_class),
            Terminal::Word => out.push_str("\\w"),
            Terminal::DigitClass => out.push_str("\\d"),
            Terminal::Wildcard => out.push('.'),
        }
    }
}

fn push_literal(out: &mut String, c: char) {
    if is_meta(c) {
        out.push('\\');
    }
    out.push(c);
}

fn push_range(out: &mut String, range: &str, in_class: bool) {
    if in_class {
        out.push_str(range);
    } else {
        out.push('[');
        out.push_str(range);
        out.push(']');
    }
}

/// A candidate regex as a syntax tree.
///
/// `ListMatch`/`ListNotMatch` children are leaves holding class-safe
/// terminals; [`RegexTree::validate`] enforces this along with depth and
/// `min <= max` for `MinMax`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RegexTree {
    Leaf(Terminal),
    Concat(Box<RegexTree>, Box<RegexTree>),
    Group(Box<RegexTree>),
    ListMatch(Vec<RegexTree>),
    ListNotMatch(Vec<RegexTree>),
    OneOrMore(Box<RegexTree>),
    ZeroOrMore(Box<RegexTree>),
    ZeroOrOne(Box<RegexTree>),
    MinMax {
        child: Box<RegexTree>,
        min: u32,
        max: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree depth {depth} exceeds limit {limit}")]
    TooDeep { depth: usize, limit: usize },
    #[error("character list holds a non class-safe child")]
    BadListChild,
    #[error("character list is empty")]
    EmptyList,
    #[error("min-max bounds {min} > {max}")]
    BadBounds { min: u32, max: u32 },
    #[error("invalid terminal {0:?}")]
    BadTerminal(Terminal),
}

/// Shorthand constructors, mostly for tests and the parser.
impl RegexTree {
    pub fn leaf(t: Terminal) -> Self {
        RegexTree::Leaf(t)
    }

    pub fn lit(c: char) -> Self {
        match Terminal::from_char(c) {
            Some(t) => RegexTree::Leaf(t),
            None => RegexTree::Leaf(Terminal::FrequentItem(Arc::from(c.to_string()))),
        }
    }

    pub fn item(s: &str) -> Self {
        RegexTree::Leaf(Terminal::frequent(s))
    }

    pub fn concat(a: RegexTree, b: RegexTree) -> Self {
        RegexTree::Concat(Box::new(a), Box::new(b))
    }

    pub fn group(c: RegexTree) -> Self {
        RegexTree::Group(Box::new(c))
    }

    pub fn one_or_more(c: RegexTree) -> Self {
        RegexTree::OneOrMore(Box::new(c))
    }

    pub fn zero_or_more(c: RegexTree) -> Self {
        RegexTree::ZeroOrMore(Box::new(c))
    }

    pub fn zero_or_one(c: RegexTree) -> Self {
        RegexTree::ZeroOrOne(Box::new(c))
    }

    pub fn min_max(c: RegexTree, min: u32, max: u32) -> Self {
        RegexTree::MinMax {
            child: Box::new(c),
            min,
            max,
        }
    }

    /// Concatenation of `items` as a balanced binary tree.
    ///
    /// Panics if `items` is empty.
    pub fn concat_balanced(mut items: Vec<RegexTree>) -> Self {
        assert!(!items.is_empty(), "concatenation of nothing");
        if items.len() == 1 {
            return items.pop().unwrap();
        }
        let right = items.split_off(items.len() / 2);
        RegexTree::concat(
            RegexTree::concat_balanced(items),
            RegexTree::concat_balanced(right),
        )
    }
}

impl RegexTree {
    pub fn depth(&self) -> usize {
        match self {
            RegexTree::Leaf(_) => 1,
            RegexTree::Concat(a, b) => 1 + a.depth().max(b.depth()),
            RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => {
                1 + cs.iter().map(RegexTree::depth).max().unwrap_or(0)
            }
            RegexTree::Group(c)
            | RegexTree::OneOrMore(c)
            | RegexTree::ZeroOrMore(c)
            | RegexTree::ZeroOrOne(c)
            | RegexTree::MinMax { child: c, .. } => 1 + c.depth(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().map(RegexTree::node_count).sum::<usize>()
    }

    /// Direct children in left-to-right order.
    pub fn children(&self) -> Box<dyn Iterator<Item = &RegexTree> + '_> {
        match self {
            RegexTree::Leaf(_) => Box::new(std::iter::empty()),
            RegexTree::Concat(a, b) => Box::new([a.as_ref(), b.as_ref()].into_iter()),
            RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => Box::new(cs.iter()),
            RegexTree::Group(c)
            | RegexTree::OneOrMore(c)
            | RegexTree::ZeroOrMore(c)
            | RegexTree::ZeroOrOne(c)
            | RegexTree::MinMax { child: c, .. } => Box::new(std::iter::once(c.as_ref())),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut RegexTree> {
        match self {
            RegexTree::Leaf(_) => Vec::new(),
            RegexTree::Concat(a, b) => vec![a.as_mut(), b.as_mut()],
            RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => cs.iter_mut().collect(),
            RegexTree::Group(c)
            | RegexTree::OneOrMore(c)
            | RegexTree::ZeroOrMore(c)
            | RegexTree::ZeroOrOne(c)
            | RegexTree::MinMax { child: c, .. } => vec![c.as_mut()],
        }
    }

    /// All nodes in pre-order. Index `i` of the result is node index `i`.
    pub fn preorder(&self) -> Vec<&RegexTree> {
        let mut out = Vec::with_capacity(16);
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            let kids: Vec<_> = n.children().collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    /// Per-node facts in pre-order: depth of the node (root = 1) and whether
    /// its parent is a character list.
    pub fn node_sites(&self) -> Vec<NodeSite> {
        fn walk(t: &RegexTree, depth: usize, in_list: bool, out: &mut Vec<NodeSite>) {
            out.push(NodeSite { depth, in_list });
            let list = matches!(t, RegexTree::ListMatch(_) | RegexTree::ListNotMatch(_));
            for c in t.children() {
                walk(c, depth + 1, list, out);
            }
        }
        let mut out = Vec::new();
        walk(self, 1, false, &mut out);
        out
    }

    /// The subtree at pre-order index `idx`.
    pub fn subtree(&self, idx: usize) -> Option<&RegexTree> {
        self.preorder().get(idx).copied()
    }

    /// A copy of this tree with the node at pre-order index `idx` replaced.
    pub fn replace_at(&self, idx: usize, replacement: RegexTree) -> RegexTree {
        fn go(t: &mut RegexTree, target: usize, next: &mut usize, rep: &mut Option<RegexTree>) {
            if *next == target {
                *t = rep.take().expect("replacement used once");
                *next += t.node_count();
                return;
            }
            *next += 1;
            for c in t.children_mut() {
                if rep.is_none() {
                    return;
                }
                let size = c.node_count();
                if target >= *next + size {
                    *next += size;
                    continue;
                }
                go(c, target, next, rep);
            }
        }
        let mut out = self.clone();
        let mut rep = Some(replacement);
        let mut next = 0;
        go(&mut out, idx, &mut next, &mut rep);
        assert!(rep.is_none(), "node index {idx} out of range");
        out
    }

    pub fn validate(&self, max_depth: usize) -> Result<(), TreeError> {
        let depth = self.depth();
        if depth > max_depth {
            return Err(TreeError::TooDeep {
                depth,
                limit: max_depth,
            });
        }
        self.validate_structure()
    }

    fn validate_structure(&self) -> Result<(), TreeError> {
        match self {
            RegexTree::Leaf(t) if !t.is_valid() => Err(TreeError::BadTerminal(t.clone())),
            RegexTree::Leaf(_) => Ok(()),
            RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => {
                if cs.is_empty() {
                    return Err(TreeError::EmptyList);
                }
                for c in cs {
                    match c {
                        RegexTree::Leaf(t) if t.is_class_safe() && t.is_valid() => {}
                        _ => return Err(TreeError::BadListChild),
                    }
                }
                Ok(())
            }
            RegexTree::MinMax { min, max, .. } if min > max => Err(TreeError::BadBounds {
                min: *min,
                max: *max,
            }),
            _ => self.children().try_for_each(RegexTree::validate_structure),
        }
    }

    /// Whether the rendered form can carry a quantifier without a wrapper.
    fn is_atomic(&self) -> bool {
        match self {
            RegexTree::Leaf(Terminal::FrequentItem(s)) => s.chars().count() == 1,
            RegexTree::Leaf(_)
            | RegexTree::Group(_)
            | RegexTree::ListMatch(_)
            | RegexTree::ListNotMatch(_) => true,
            _ => false,
        }
    }

    /// Canonical regex string, by depth-first emission.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            RegexTree::Leaf(t) => t.render_into(out, false),
            RegexTree::Concat(a, b) => {
                a.render_into(out);
                b.render_into(out);
            }
            RegexTree::Group(c) => {
                out.push('(');
                c.render_into(out);
                out.push(')');
            }
            RegexTree::ListMatch(cs) | RegexTree::ListNotMatch(cs) => {
                out.push('[');
                if matches!(self, RegexTree::ListNotMatch(_)) {
                    out.push('^');
                }
                for c in cs {
                    match c {
                        RegexTree::Leaf(t) => t.render_into(out, true),
                        other => other.render_into(out),
                    }
                }
                out.push(']');
            }
            RegexTree::OneOrMore(c) => render_quantified(out, c, "++"),
            RegexTree::ZeroOrMore(c) => render_quantified(out, c, "*+"),
            RegexTree::ZeroOrOne(c) => render_quantified(out, c, "?+"),
            RegexTree::MinMax { child, min, max } => {
                render_quantified(out, child, &format!("{{{min},{max}}}+"))
            }
        }
    }

    /// The canonical representative of this tree's rendered string.
    ///
    /// Concatenation chains are flattened, adjacent literals merged into one
    /// literal run and rebuilt as a balanced tree; a list holding a single
    /// range becomes that range leaf. `parse(render(t)) == t.canonical()`.
    pub fn canonical(&self) -> RegexTree {
        match self {
            RegexTree::Concat(..) => {
                let mut parts = Vec::new();
                self.flatten_concat(&mut parts);
                let items = parts.into_iter().map(RegexTree::canonical).collect();
                RegexTree::concat_balanced(merge_literal_runs(items))
            }
            RegexTree::Leaf(_) => self.clone(),
            RegexTree::Group(c) => RegexTree::group(c.canonical()),
            RegexTree::ListMatch(cs) => {
                if let [RegexTree::Leaf(
                    t @ (Terminal::RangeLower | Terminal::RangeUpper | Terminal::RangeDigit),
                )] = cs.as_slice()
                {
                    RegexTree::Leaf(t.clone())
                } else {
                    self.clone()
                }
            }
            RegexTree::ListNotMatch(_) => self.clone(),
            RegexTree::OneOrMore(c) => RegexTree::one_or_more(c.canonical()),
            RegexTree::ZeroOrMore(c) => RegexTree::zero_or_more(c.canonical()),
            RegexTree::ZeroOrOne(c) => RegexTree::zero_or_one(c.canonical()),
            RegexTree::MinMax { child, min, max } => {
                RegexTree::min_max(child.canonical(), *min, *max)
            }
        }
    }

    /// Top-level concatenation operands, left to right.
    pub fn flatten_concat<'a>(&'a self, out: &mut Vec<&'a RegexTree>) {
        match self {
            RegexTree::Concat(a, b) => {
                a.flatten_concat(out);
                b.flatten_concat(out);
            }
            other => out.push(other),
        }
    }

    /// Rebuilds every concatenation chain as a shallow tree. The rendered
    /// string and the node multiset are unchanged; depth never grows.
    pub fn rebalanced(&self) -> RegexTree {
        match self {
            RegexTree::Concat(a, b) => {
                let mut parts = Vec::new();
                self.flatten_concat(&mut parts);
                let flat = concat_min_depth(parts.into_iter().map(RegexTree::rebalanced).collect());
                let kept = RegexTree::concat(a.rebalanced(), b.rebalanced());
                if flat.depth() <= kept.depth() {
                    flat
                } else {
                    kept
                }
            }
            RegexTree::Leaf(_) | RegexTree::ListMatch(_) | RegexTree::ListNotMatch(_) => {
                self.clone()
            }
            RegexTree::Group(c) => RegexTree::group(c.rebalanced()),
            RegexTree::OneOrMore(c) => RegexTree::one_or_more(c.rebalanced()),
            RegexTree::ZeroOrMore(c) => RegexTree::zero_or_more(c.rebalanced()),
            RegexTree::ZeroOrOne(c) => RegexTree::zero_or_one(c.rebalanced()),
            RegexTree::MinMax { child, min, max } => {
                RegexTree::min_max(child.rebalanced(), *min, *max)
            }
        }
    }

    /// Short label for the node itself, ignoring children.
    pub fn label(&self) -> String {
        match self {
            RegexTree::Leaf(t) => {
                let mut s = String::new();
                t.render_into(&mut s, false);
                s
            }
            RegexTree::Concat(..) => "concat".into(),
            RegexTree::Group(_) => "group".into(),
            RegexTree::ListMatch(_) => "list".into(),
            RegexTree::ListNotMatch(_) => "notlist".into(),
            RegexTree::OneOrMore(_) => "++".into(),
            RegexTree::ZeroOrMore(_) => "*+".into(),
            RegexTree::ZeroOrOne(_) => "?+".into(),
            RegexTree::MinMax { min, max, .. } => format!("{{{min},{max}}}+"),
        }
    }
}

fn render_quantified(out: &mut String, child: &RegexTree, quant: &str) {
    if child.is_atomic() {
        child.render_into(out);
    } else {
        out.push_str("(?:");
        child.render_into(out);
        out.push(')');
    }
    out.push_str(quant);
}

fn merge_literal_runs(items: Vec<RegexTree>) -> Vec<RegexTree> {
    let mut out = Vec::with_capacity(items.len());
    let mut run = String::new();
    let flush = |run: &mut String, out: &mut Vec<RegexTree>| {
        if run.is_empty() {
            return;
        }
        let mut chars = run.chars();
        let first = chars.next().unwrap();
        if chars.next().is_none() {
            out.push(RegexTree::lit(first));
        } else {
            out.push(RegexTree::item(run));
        }
        run.clear();
    };
    for item in items {
        match &item {
            RegexTree::Leaf(t) if t.literal_text().is_some() => {
                run.push_str(&t.literal_text().unwrap());
            }
            _ => {
                flush(&mut run, &mut out);
                out.push(item);
            }
        }
    }
    flush(&mut run, &mut out);
    out
}

impl fmt::Display for RegexTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Joins `items` in order, repeatedly merging the adjacent pair whose result
/// is shallowest.
fn concat_min_depth(items: Vec<RegexTree>) -> RegexTree {
    let mut items: Vec<(usize, RegexTree)> = items.into_iter().map(|t| (t.depth(), t)).collect();
    while items.len() > 1 {
        let i = (0..items.len() - 1)
            .min_by_key(|&i| items[i].0.max(items[i + 1].0))
            .unwrap();
        let (db, b) = items.remove(i + 1);
        let (da, a) = std::mem::replace(&mut items[i], (0, RegexTree::lit('a')));
        items[i] = (1 + da.max(db), RegexTree::concat(a, b));
    }
    items.pop().expect("non-empty chain").1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSite {
    pub depth: usize,
    pub in_list: bool,
}

/// Base terminals grouped by kind. Leaf draws pick a kind uniformly, then a
/// member uniformly, so the 52 letters do not drown out everything else.
fn draw_base_terminal<R: Rng + ?Sized>(rng: &mut R) -> Terminal {
    match rng.gen_range(0..6) {
        0 => {
            let i = rng.gen_range(0..52u8);
            let c = if i < 26 { b'a' + i } else { b'A' + i - 26 };
            Terminal::Alpha(c as char)
        }
        1 => Terminal::Digit((b'0' + rng.gen_range(0..10u8)) as char),
        2 => Terminal::Symbol(*SYMBOLS.choose(rng).unwrap()),
        3 => [
            Terminal::RangeLower,
            Terminal::RangeUpper,
            Terminal::RangeDigit,
        ]
        .choose(rng)
        .unwrap()
        .clone(),
        4 => {
            if rng.gen_bool(0.5) {
                Terminal::Word
            } else {
                Terminal::DigitClass
            }
        }
        _ => Terminal::Wildcard,
    }
}

fn draw_class_terminal<R: Rng + ?Sized>(rng: &mut R) -> Terminal {
    loop {
        let t = draw_base_terminal(rng);
        if t.is_class_safe() {
            return t;
        }
    }
}

/// Random tree and leaf generation over a fixed token set.
#[derive(Debug, Clone)]
pub struct TreeGen<'a> {
    pub tokens: &'a BpeTokenSet,
    /// Probability that a leaf draw yields a frequent item when tokens exist.
    pub leaf_mix: f64,
    pub use_frequent_items: bool,
    /// Probability that an uncovered sample character becomes `\d`/`\w`
    /// instead of its literal when seeding from a sample.
    pub generalize: f64,
}

impl<'a> TreeGen<'a> {
    pub fn new(tokens: &'a BpeTokenSet, use_frequent_items: bool) -> Self {
        TreeGen {
            tokens,
            leaf_mix: 0.5,
            use_frequent_items,
            generalize: 0.5,
        }
    }

    pub fn with_leaf_mix(mut self, leaf_mix: f64) -> Self {
        self.leaf_mix = leaf_mix;
        self
    }

    fn items_available(&self) -> bool {
        self.use_frequent_items && !self.tokens.is_empty()
    }

    pub fn draw_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Terminal {
        if self.items_available() && rng.gen_bool(self.leaf_mix) {
            let tok = self.tokens.tokens().choose(rng).unwrap();
            Terminal::FrequentItem(Arc::clone(tok))
        } else {
            draw_base_terminal(rng)
        }
    }

    fn draw_list<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<RegexTree> {
        let n = rng.gen_range(1..=3);
        (0..n)
            .map(|_| RegexTree::Leaf(draw_class_terminal(rng)))
            .collect()
    }

    /// A random tree no deeper than `max_depth` (at least 1).
    pub fn random_tree<R: Rng + ?Sized>(&self, rng: &mut R, max_depth: usize) -> RegexTree {
        let max_depth = max_depth.max(1);
        if max_depth == 1 {
            return RegexTree::Leaf(self.draw_leaf(rng));
        }
        // Leaves become likelier as the remaining depth shrinks.
        let leaf_p = 1.0 / max_depth as f64;
        if rng.gen_bool(leaf_p) {
            return RegexTree::Leaf(self.draw_leaf(rng));
        }
        let sub = max_depth - 1;
        match rng.gen_range(0..16) {
            0..=7 => RegexTree::concat(self.random_tree(rng, sub), self.random_tree(rng, sub)),
            8 => RegexTree::group(self.random_tree(rng, sub)),
            9 => RegexTree::ListMatch(self.draw_list(rng)),
            10 => RegexTree::ListNotMatch(self.draw_list(rng)),
            11 => RegexTree::one_or_more(self.random_tree(rng, sub)),
            12 => RegexTree::zero_or_more(self.random_tree(rng, sub)),
            13 => RegexTree::zero_or_one(self.random_tree(rng, sub)),
            _ => {
                let min = rng.gen_range(1..=4);
                let max = min + rng.gen_range(0..=8);
                RegexTree::min_max(self.random_tree(rng, sub), min, max)
            }
        }
    }

    /// A random leaf valid inside a character list.
    pub fn random_class_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> RegexTree {
        RegexTree::Leaf(draw_class_terminal(rng))
    }

    /// A tree shaped after `sample`: spans covered by tokens (greedy
    /// longest match) become frequent-item leaves, other characters become
    /// their literal or, by coin flip, `\d`/`\w`.
    ///
    /// Samples with more pieces than a depth-`max_depth` balanced
    /// concatenation can hold keep their head and end in `.++`.
    pub fn seeded_tree<R: Rng + ?Sized>(
        &self,
        sample: &str,
        rng: &mut R,
        max_depth: usize,
    ) -> RegexTree {
        let chars: Vec<char> = sample.chars().collect();
        assert!(!chars.is_empty(), "cannot seed from an empty sample");
        let mut pieces = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if let Some(tok) = self.longest_token_at(&chars, i) {
                i += tok.chars().count();
                pieces.push(RegexTree::Leaf(Terminal::FrequentItem(tok)));
                continue;
            }
            let c = chars[i];
            let generalized = if c.is_ascii_digit() {
                Some(Terminal::DigitClass)
            } else if c.is_ascii_alphabetic() {
                Some(Terminal::Word)
            } else {
                None
            };
            let leaf = match (Terminal::from_char(c), generalized) {
                (Some(lit), Some(g)) => {
                    if rng.gen_bool(self.generalize) {
                        g
                    } else {
                        lit
                    }
                }
                (Some(lit), None) => lit,
                (None, _) => Terminal::Wildcard,
            };
            pieces.push(RegexTree::Leaf(leaf));
            i += 1;
        }
        let max_depth = max_depth.max(2);
        let capacity = 1usize << (max_depth - 1).min(20);
        if pieces.len() > capacity {
            let keep = (1usize << (max_depth - 2).min(20)) - 1;
            pieces.truncate(keep);
            pieces.push(RegexTree::one_or_more(RegexTree::Leaf(Terminal::Wildcard)));
        }
        RegexTree::concat_balanced(pieces)
    }

    fn longest_token_at(&self, chars: &[char], at: usize) -> Option<Arc<str>> {
        if !self.items_available() {
            return None;
        }
        let mut best: Option<(&Arc<str>, usize)> = None;
        for tok in self.tokens.tokens() {
            let n = tok.chars().count();
            if n <= best.map_or(0, |b| b.1)
                || at + n > chars.len()
                || !tok.chars().zip(&chars[at..]).all(|(a, b)| a == *b)
            {
                continue;
            }
            best = Some((tok, n));
        }
        best.map(|(t, _)| Arc::clone(t))
    }
}

/// A random tree over `tokens`, with the default leaf mix.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    tokens: &BpeTokenSet,
    max_depth: usize,
    use_frequent_items: bool,
) -> RegexTree {
    TreeGen::new(tokens, use_frequent_items).random_tree(rng, max_depth)
}

/// A tree seeded from `sample`, see [`TreeGen::seeded_tree`].
pub fn seeded_tree_from_sample<R: Rng + ?Sized>(
    sample: &str,
    tokens: &BpeTokenSet,
    rng: &mut R,
) -> RegexTree {
    TreeGen::new(tokens, true).seeded_tree(sample, rng, 6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tokens(list: &[&str]) -> BpeTokenSet {
        BpeTokenSet::from_tokens(list.iter().copied())
    }

    #[test]
    fn render_basic_forms() {
        assert_eq!(RegexTree::Leaf(Terminal::DigitClass).render(), "\\d");
        assert_eq!(
            RegexTree::one_or_more(RegexTree::Leaf(Terminal::Word)).render(),
            "\\w++"
        );
        let t = RegexTree::concat(
            RegexTree::item("86"),
            RegexTree::one_or_more(RegexTree::Leaf(Terminal::DigitClass)),
        );
        assert_eq!(t.render(), "86\\d++");
    }

    #[test]
    fn render_quantifier_wrapping() {
        let t = RegexTree::zero_or_more(RegexTree::item("86"));
        assert_eq!(t.render(), "(?:86)*+");
        let t = RegexTree::min_max(
            RegexTree::concat(RegexTree::lit('a'), RegexTree::Leaf(Terminal::Word)),
            1,
            3,
        );
        assert_eq!(t.render(), "(?:a\\w){1,3}+");
        let t = RegexTree::zero_or_one(RegexTree::one_or_more(RegexTree::lit('a')));
        assert_eq!(t.render(), "(?:a++)?+");
        let t = RegexTree::one_or_more(RegexTree::group(RegexTree::lit('a')));
        assert_eq!(t.render(), "(a)++");
    }

    #[test]
    fn render_lists_and_escapes() {
        let t = RegexTree::ListNotMatch(vec![
            RegexTree::Leaf(Terminal::RangeDigit),
            RegexTree::Leaf(Terminal::Symbol(']')),
            RegexTree::Leaf(Terminal::Word),
        ]);
        assert_eq!(t.render(), "[^0-9\\]\\w]");
        assert_eq!(RegexTree::Leaf(Terminal::RangeUpper).render(), "[A-Z]");
        assert_eq!(RegexTree::lit('.').render(), "\\.");
        assert_eq!(RegexTree::Leaf(Terminal::Wildcard).render(), ".");
        assert_eq!(RegexTree::lit('\\').render(), "\\\\");
        assert_eq!(RegexTree::item("qq.com").render(), "qq\\.com");
    }

    #[test]
    fn canonical_merges_literals_and_balances() {
        let t = RegexTree::concat(
            RegexTree::concat(RegexTree::lit('8'), RegexTree::lit('6')),
            RegexTree::concat(
                RegexTree::lit('1'),
                RegexTree::one_or_more(RegexTree::Leaf(Terminal::DigitClass)),
            ),
        );
        let c = t.canonical();
        assert_eq!(
            c,
            RegexTree::concat(
                RegexTree::item("861"),
                RegexTree::one_or_more(RegexTree::Leaf(Terminal::DigitClass))
            )
        );
        assert_eq!(c.render(), t.render());
    }

    #[test]
    fn canonical_single_range_list() {
        let t = RegexTree::ListMatch(vec![RegexTree::Leaf(Terminal::RangeLower)]);
        assert_eq!(t.render(), "[a-z]");
        assert_eq!(t.canonical(), RegexTree::Leaf(Terminal::RangeLower));
    }

    #[test]
    fn depth_one_forces_leaf() {
        let toks = tokens(&[]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let t = random_tree(&mut rng, &toks, 1, false);
            assert!(matches!(t, RegexTree::Leaf(_)));
        }
    }

    #[test]
    fn random_trees_respect_invariants_and_seed() {
        let toks = tokens(&["86", "abc"]);
        let gen = TreeGen::new(&toks, true);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let t = gen.random_tree(&mut rng, 6);
            t.validate(6).unwrap();
        }
        let a = gen.random_tree(&mut ChaCha8Rng::seed_from_u64(3), 6);
        let b = gen.random_tree(&mut ChaCha8Rng::seed_from_u64(3), 6);
        assert_eq!(a, b);
    }

    #[test]
    fn leaf_mix_frequency_within_binomial_interval() {
        let toks = tokens(&["86"]);
        let gen = TreeGen::new(&toks, true);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| matches!(gen.draw_leaf(&mut rng), Terminal::FrequentItem(_)))
            .count() as f64;
        // 99% normal interval around n*p for p = 0.5.
        let sd = (n as f64 * 0.25).sqrt();
        assert!((hits - 5000.0).abs() <= 2.576 * sd, "hits = {hits}");

        // Trees of depth 4 carry frequent items.
        let with_item = (0..1000)
            .filter(|_| {
                gen.random_tree(&mut rng, 4)
                    .preorder()
                    .iter()
                    .any(|n| matches!(n, RegexTree::Leaf(Terminal::FrequentItem(_))))
            })
            .count();
        assert!(with_item > 300, "{with_item}");
    }

    #[test]
    fn seeded_tree_shapes() {
        let toks = tokens(&["86"]);
        let gen = TreeGen::new(&toks, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t = gen.seeded_tree("8612345", &mut rng, 6);
            let mut leaves = Vec::new();
            t.flatten_concat(&mut leaves);
            assert_eq!(leaves.len(), 6);
            assert_eq!(leaves[0], &RegexTree::item("86"));
            for (leaf, c) in leaves[1..].iter().zip("12345".chars()) {
                let ok =
                    **leaf == RegexTree::lit(c) || **leaf == RegexTree::Leaf(Terminal::DigitClass);
                assert!(ok, "{leaf:?}");
            }
        }
        assert_eq!(
            gen.seeded_tree("8686", &mut rng, 6),
            RegexTree::concat(RegexTree::item("86"), RegexTree::item("86"))
        );
        let empty = tokens(&[]);
        let t = TreeGen::new(&empty, true).seeded_tree("abc", &mut rng, 6);
        let mut leaves = Vec::new();
        t.flatten_concat(&mut leaves);
        assert_eq!(leaves.len(), 3);
    }

    #[test]
    fn seeded_tree_long_sample_stays_in_depth() {
        let toks = tokens(&[]);
        let gen = TreeGen::new(&toks, false);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let long = "a".repeat(80);
        let t = gen.seeded_tree(&long, &mut rng, 6);
        t.validate(6).unwrap();
        assert!(t.render().ends_with(".++"));
        let cjk = gen.seeded_tree("京A12345", &mut rng, 6);
        assert!(cjk.render().starts_with('.'));
    }

    #[test]
    fn replace_and_sites() {
        let t = RegexTree::concat(
            RegexTree::ListMatch(vec![RegexTree::lit('a'), RegexTree::lit('b')]),
            RegexTree::lit('c'),
        );
        assert_eq!(t.node_count(), 5);
        let sites = t.node_sites();
        assert!(sites[2].in_list && sites[3].in_list && !sites[4].in_list);
        assert_eq!(sites[2].depth, 3);
        let r = t.replace_at(4, RegexTree::Leaf(Terminal::DigitClass));
        assert_eq!(r.render(), "[ab]\\d");
        let r = t.replace_at(0, RegexTree::lit('z'));
        assert_eq!(r.render(), "z");
        let r = t.replace_at(3, RegexTree::lit('q'));
        assert_eq!(r.render(), "[aq]c");
    }

    #[test]
    fn validate_rejects_bad_trees() {
        let bad = RegexTree::ListMatch(vec![RegexTree::item("ab")]);
        assert_eq!(bad.validate(6), Err(TreeError::BadListChild));
        let bad = RegexTree::min_max(RegexTree::lit('a'), 3, 2);
        assert!(matches!(bad.validate(6), Err(TreeError::BadBounds { .. })));
        let deep = RegexTree::group(RegexTree::group(RegexTree::lit('a')));
        assert!(matches!(deep.validate(2), Err(TreeError::TooDeep { .. })));
    }

    #[test]
    fn rebalance_keeps_render_and_multiset() {
        let toks = tokens(&["xy"]);
        let gen = TreeGen::new(&toks, true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let t = gen.random_tree(&mut rng, 8);
            let r = t.rebalanced();
            assert_eq!(r.render(), t.render());
            assert_eq!(r.node_count(), t.node_count());
            assert!(r.depth() <= t.depth());
        }
    }
}
