//! Byte pair encoding with a proportion threshold.
//!
//! Merging stops as soon as the most frequent adjacent pair occurs fewer than
//! `p * n` times, where `n` is the number of samples. Samples are atomic
//! strings, so no end-of-word marker is appended.

use std::collections::HashSet;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

/// Upper bound on retained tokens. Longer tokens win when trimming.
pub const MAX_TOKENS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum BpeError {
    #[error("no samples to build a vocabulary from")]
    NoSamples,
    #[error("sample {0} is empty")]
    EmptySample(usize),
    #[error("proportion threshold {0} is outside (0, 1]")]
    BadThreshold(f64),
}

/// Distinct samples as symbol sequences, with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    entries: IndexMap<Vec<Arc<str>>, u64>,
    total_samples: u64,
}

impl Vocab {
    pub fn entries(&self) -> impl Iterator<Item = (&[Arc<str>], u64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frequency of the entry whose symbols, space-joined, equal `key`.
    pub fn get(&self, key: &str) -> Option<u64> {
        self.entries
            .iter()
            .find(|(k, _)| k.iter().map(|s| &**s).collect::<Vec<_>>().join(" ") == key)
            .map(|(_, v)| *v)
    }

    fn merge(&mut self, pair: &(Arc<str>, Arc<str>)) {
        let joined: Arc<str> = Arc::from(format!("{}{}", pair.0, pair.1));
        let old = std::mem::take(&mut self.entries);
        for (symbols, freq) in old {
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
                    out.push(Arc::clone(&joined));
                    i += 2;
                } else {
                    out.push(Arc::clone(&symbols[i]));
                    i += 1;
                }
            }
            *self.entries.entry(out).or_insert(0) += freq;
        }
    }
}

/// One accepted merge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeRecord {
    pub left: String,
    pub right: String,
    pub frequency: u64,
    pub proportion: f64,
}

impl MergeRecord {
    pub fn token(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

/// Frequent items in extraction order, with the merge log behind them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BpeTokenSet {
    tokens: Vec<Arc<str>>,
    proportions: Vec<f64>,
    merge_log: Vec<MergeRecord>,
}

impl BpeTokenSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// A token set from explicit strings; tokens shorter than two characters
    /// and duplicates are dropped.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen = HashSet::new();
        let mut set = BpeTokenSet::default();
        for t in tokens {
            if t.chars().count() >= 2 && seen.insert(t.to_string()) {
                set.tokens.push(Arc::from(t));
                set.proportions.push(f64::NAN);
            }
        }
        set
    }

    pub fn tokens(&self) -> &[Arc<str>] {
        &self.tokens
    }

    /// Proportion recorded when each token was (last) merged.
    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn merge_log(&self) -> &[MergeRecord] {
        &self.merge_log
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, s: &str) -> bool {
        self.tokens.iter().any(|t| &**t == s)
    }
}

pub fn build_vocab<S: AsRef<str>>(samples: &[S]) -> Result<Vocab, BpeError> {
    if samples.is_empty() {
        return Err(BpeError::NoSamples);
    }
    let mut entries: IndexMap<Vec<Arc<str>>, u64> = IndexMap::new();
    for (i, s) in samples.iter().enumerate() {
        let s = s.as_ref();
        if s.is_empty() {
            return Err(BpeError::EmptySample(i));
        }
        let symbols = s.chars().map(|c| Arc::from(c.to_string())).collect();
        *entries.entry(symbols).or_insert(0) += 1;
    }
    Ok(Vocab {
        entries,
        total_samples: samples.len() as u64,
    })
}

/// Adjacent-pair frequencies, in order of first occurrence.
pub fn pair_freq_stats(v: &Vocab) -> IndexMap<(Arc<str>, Arc<str>), u64> {
    let mut stats: IndexMap<(Arc<str>, Arc<str>), u64> = IndexMap::new();
    for (symbols, freq) in &v.entries {
        for w in symbols.windows(2) {
            *stats
                .entry((Arc::clone(&w[0]), Arc::clone(&w[1])))
                .or_insert(0) += freq;
        }
    }
    stats
}

/// Runs the thresholded merge loop on a copy of `v`.
pub fn extract_tokens(v: &Vocab, p: f64) -> Result<BpeTokenSet, BpeError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(BpeError::BadThreshold(p));
    }
    let mut vocab = v.clone();
    let n = vocab.total_samples as f64;
    let mut log = Vec::new();
    loop {
        let stats = pair_freq_stats(&vocab);
        // First-inserted pair wins ties.
        let Some((best, freq)) = stats.iter().fold(
            None::<(&(Arc<str>, Arc<str>), u64)>,
            |acc, (k, &f)| match acc {
                Some((_, bf)) if bf >= f => acc,
                _ => Some((k, f)),
            },
        ) else {
            break;
        };
        let percent = freq as f64 / n;
        if percent < p {
            break;
        }
        log.push(MergeRecord {
            left: best.0.to_string(),
            right: best.1.to_string(),
            frequency: freq,
            proportion: percent,
        });
        let best = best.clone();
        vocab.merge(&best);
    }
    Ok(tokens_from_log(log))
}

fn tokens_from_log(log: Vec<MergeRecord>) -> BpeTokenSet {
    let mut order: IndexMap<String, f64> = IndexMap::new();
    for rec in &log {
        let tok = rec.token();
        match order.get_mut(&tok) {
            Some(p) => *p = rec.proportion,
            None => {
                order.insert(tok, rec.proportion);
            }
        }
    }
    if order.len() > MAX_TOKENS {
        let mut by_len: Vec<(usize, String)> = order
            .keys()
            .enumerate()
            .map(|(i, t)| (i, t.clone()))
            .collect();
        by_len.sort_by(|a, b| {
            b.1.chars()
                .count()
                .cmp(&a.1.chars().count())
                .then(a.0.cmp(&b.0))
        });
        let keep: HashSet<String> = by_len
            .into_iter()
            .take(MAX_TOKENS)
            .map(|(_, t)| t)
            .collect();
        order.retain(|t, _| keep.contains(t));
    }
    BpeTokenSet {
        tokens: order.keys().map(|t| Arc::from(t.as_str())).collect(),
        proportions: order.values().copied().collect(),
        merge_log: log,
    }
}

/// `build_vocab` then `extract_tokens`.
pub fn learn<S: AsRef<str>>(samples: &[S], p: f64) -> Result<BpeTokenSet, BpeError> {
    extract_tokens(&build_vocab(samples)?, p)
}
