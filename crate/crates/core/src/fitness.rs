//! Multi-objective fitness: sample-level precision, character-level
//! precision and a length score pulling the regex towards the mean positive
//! length.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::ast::RegexTree;
use crate::matcher::{MatchOutcome, MatchStats, Matcher};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainingSetError {
    #[error("training set needs at least one positive sample")]
    NoPositives,
}

#[derive(Debug, Clone)]
pub struct Sample {
    text: String,
    chars: Box<[char]>,
}

impl Sample {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let chars = text.chars().collect();
        Sample { text, chars }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

/// Positives and negatives for one training run.
///
/// `generation` changes whenever the positives do, so fitness cached against
/// an older set is never reused.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    positives: Vec<Sample>,
    negatives: Vec<Sample>,
    generation: u64,
    mean_pos_len: f64,
    anchored_count: bool,
}

impl TrainingSet {
    pub fn new<S: AsRef<str>>(positives: &[S], negatives: &[S]) -> Result<Self, TrainingSetError> {
        if positives.is_empty() {
            return Err(TrainingSetError::NoPositives);
        }
        let mut ts = TrainingSet {
            positives: positives.iter().map(|s| Sample::new(s.as_ref())).collect(),
            negatives: negatives.iter().map(|s| Sample::new(s.as_ref())).collect(),
            generation: 0,
            mean_pos_len: 0.0,
            anchored_count: false,
        };
        ts.recompute_mean();
        Ok(ts)
    }

    /// Counts matched characters only on total matches.
    pub fn with_anchored_count(mut self, anchored: bool) -> Self {
        self.anchored_count = anchored;
        self
    }

    fn recompute_mean(&mut self) {
        let total: usize = self.positives.iter().map(|s| s.chars.len()).sum();
        self.mean_pos_len = if self.positives.is_empty() {
            0.0
        } else {
            total as f64 / self.positives.len() as f64
        };
    }

    pub fn positives(&self) -> &[Sample] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Sample] {
        &self.negatives
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn mean_pos_len(&self) -> f64 {
        self.mean_pos_len
    }

    pub fn anchored_count(&self) -> bool {
        self.anchored_count
    }

    /// Drops every positive `tree` fully matches and returns them. Bumps the
    /// generation when anything was removed.
    pub fn remove_matched(&mut self, tree: &RegexTree) -> Vec<String> {
        let m = Matcher::new(tree);
        let (gone, kept): (Vec<Sample>, Vec<Sample>) = std::mem::take(&mut self.positives)
            .into_iter()
            .partition(|s| m.full_match(&s.chars));
        self.positives = kept;
        if !gone.is_empty() {
            self.generation += 1;
            self.recompute_mean();
        }
        gone.into_iter().map(|s| s.text).collect()
    }

    fn outcome(&self, m: &Matcher, s: &Sample, stats: &mut MatchStats) -> MatchOutcome {
        if self.anchored_count {
            m.anchored_outcome(&s.chars, stats)
        } else {
            m.outcome(&s.chars, stats)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessScore {
    pub p_s: f64,
    pub p_c: f64,
    pub l_score: f64,
    pub total: f64,
}

impl FitnessScore {
    fn new(p_s: f64, p_c: f64, l_score: f64) -> Self {
        FitnessScore {
            p_s,
            p_c,
            l_score,
            total: p_s + p_c + l_score,
        }
    }
}

/// `num / den`, with 0/0 read as 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Default)]
struct Tally {
    matched: u64,
    matched_chars: u64,
    partial_chars: u64,
}

impl Tally {
    fn add(&mut self, o: MatchOutcome) {
        if o.total_match {
            self.matched += 1;
            self.matched_chars += o.char_count as u64;
        } else {
            self.partial_chars += o.char_count as u64;
        }
    }
}

/// Scores `tree` without touching any cache. `rendered_len` is the character
/// length of the canonical rendering.
pub fn score(
    tree: &RegexTree,
    rendered_len: usize,
    ts: &TrainingSet,
    stats: &mut MatchStats,
) -> FitnessScore {
    let m = Matcher::new(tree);
    let mut pos = Tally::default();
    let mut neg = Tally::default();
    for s in &ts.positives {
        pos.add(ts.outcome(&m, s, stats));
    }
    for s in &ts.negatives {
        neg.add(ts.outcome(&m, s, stats));
    }
    let p_s = ratio(pos.matched, pos.matched + neg.matched);
    let p_c = ratio(pos.matched_chars, pos.matched_chars + neg.matched_chars)
        + ratio(pos.partial_chars, pos.partial_chars + neg.partial_chars);
    let l_score = (-(rendered_len as f64 - ts.mean_pos_len).abs()).exp();
    FitnessScore::new(p_s, p_c, l_score)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
    pub computed: u64,
    pub match_steps: u64,
    pub budget_exceeded: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        ratio(self.hits, self.lookups)
    }
}

/// Fitness memo keyed by rendered regex and training-set generation.
///
/// Safe to share between evaluation workers. Entries are deterministic, so
/// concurrent inserts of one key always carry equal values.
#[derive(Debug)]
pub struct FitnessCache {
    enabled: AtomicBool,
    map: RwLock<HashMap<(Arc<str>, u64), FitnessScore>>,
    lookups: AtomicU64,
    hits: AtomicU64,
    computed: AtomicU64,
    match_steps: AtomicU64,
    budget_exceeded: AtomicU64,
}

impl Default for FitnessCache {
    fn default() -> Self {
        Self::new()
    }
}

impl FitnessCache {
    pub fn new() -> Self {
        FitnessCache {
            enabled: AtomicBool::new(true),
            map: RwLock::new(HashMap::new()),
            lookups: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            computed: AtomicU64::new(0),
            match_steps: AtomicU64::new(0),
            budget_exceeded: AtomicU64::new(0),
        }
    }

    /// A cache that never stores anything but still counts work.
    pub fn disabled() -> Self {
        let c = Self::new();
        c.enabled.store(false, Ordering::Relaxed);
        c
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str, generation: u64) -> Option<FitnessScore> {
        // Arc<str>: Borrow<str> does not extend to tuples, so build the key.
        self.map
            .read()
            .unwrap()
            .get(&(Arc::from(key), generation))
            .copied()
    }

    /// Drops entries from generations older than `generation`.
    pub fn retain_generation(&self, generation: u64) {
        self.map.write().unwrap().retain(|k, _| k.1 >= generation);
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            lookups: self.lookups.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            computed: self.computed.load(Ordering::Relaxed),
            match_steps: self.match_steps.load(Ordering::Relaxed),
            budget_exceeded: self.budget_exceeded.load(Ordering::Relaxed),
        }
    }

    fn lookup(&self, key: &Arc<str>, generation: u64) -> Option<FitnessScore> {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        if !self.is_enabled() {
            return None;
        }
        let hit = self
            .map
            .read()
            .unwrap()
            .get(&(Arc::clone(key), generation))
            .copied();
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn store(&self, key: Arc<str>, generation: u64, score: FitnessScore, stats: MatchStats) {
        self.computed.fetch_add(1, Ordering::Relaxed);
        self.match_steps.fetch_add(stats.steps, Ordering::Relaxed);
        if stats.budget_exceeded {
            self.budget_exceeded.fetch_add(1, Ordering::Relaxed);
        }
        if self.is_enabled() {
            self.map.write().unwrap().insert((key, generation), score);
        }
    }
}

/// Fitness of `tree`, from the cache when possible.
pub fn evaluate(tree: &RegexTree, ts: &TrainingSet, cache: &FitnessCache) -> FitnessScore {
    let rendered: Arc<str> = Arc::from(tree.render());
    evaluate_rendered(tree, &rendered, ts, cache)
}

/// As [`evaluate`], with the rendering already at hand.
pub fn evaluate_rendered(
    tree: &RegexTree,
    rendered: &Arc<str>,
    ts: &TrainingSet,
    cache: &FitnessCache,
) -> FitnessScore {
    if let Some(hit) = cache.lookup(rendered, ts.generation) {
        return hit;
    }
    let mut stats = MatchStats::default();
    let s = score(tree, rendered.chars().count(), ts, &mut stats);
    cache.store(Arc::clone(rendered), ts.generation, s, stats);
    s
}

/// Fully matched positives over all fully matched samples.
pub fn training_precision(tree: &RegexTree, ts: &TrainingSet) -> f64 {
    let m = Matcher::new(tree);
    let tp = ts
        .positives
        .iter()
        .filter(|s| m.full_match(&s.chars))
        .count() as u64;
    let fp = ts
        .negatives
        .iter()
        .filter(|s| m.full_match(&s.chars))
        .count() as u64;
    ratio(tp, tp + fp)
}
