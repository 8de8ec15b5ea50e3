//! The full training loop with divide-and-conquer extraction.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{RegexTree, TreeGen};
use crate::bpe::{self, BpeError, BpeTokenSet};
use crate::config::{ConfigError, GaConfig};
use crate::evolution::{
    init_population, reinit_population, run_epoch, EpochRecord, EvolutionCounters,
};
use crate::fitness::{training_precision, FitnessCache, TrainingSet, TrainingSetError};
use crate::parse::Pattern;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Samples(#[from] TrainingSetError),
    #[error("frequent item extraction failed: {0}")]
    Bpe(#[from] BpeError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("candidate set is empty")]
pub struct EmptyCandidates;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accepted {
    #[serde(skip)]
    pub tree: RegexTree,
    pub regex: String,
    pub precision: f64,
    pub epoch: usize,
    pub removed: usize,
    pub remaining: usize,
}

/// Regexes extracted so far, in acceptance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    accepted: Vec<Accepted>,
    covered_positive_count: usize,
}

impl CandidateSet {
    pub fn accepted(&self) -> &[Accepted] {
        &self.accepted
    }

    pub fn covered_positive_count(&self) -> usize {
        self.covered_positive_count
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    fn push(&mut self, a: Accepted) {
        self.covered_positive_count += a.removed;
        self.accepted.push(a);
    }

    pub fn pattern(&self) -> Pattern {
        Pattern::new(self.accepted.iter().map(|a| a.tree.canonical()).collect())
    }
}

/// Accepted regexes joined with `|` in acceptance order.
pub fn join(cs: &CandidateSet) -> Result<String, EmptyCandidates> {
    if cs.is_empty() {
        return Err(EmptyCandidates);
    }
    Ok(cs.pattern().render())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochBudget,
    NoiseFloor,
    PositivesExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub final_regex: String,
    pub none_accepted: bool,
    pub stop_reason: StopReason,
    pub epochs_run: usize,
    pub original_positives: usize,
    pub remaining_positives: usize,
    pub remaining_fraction: f64,
    pub extractions: Vec<Accepted>,
    pub bpe_tokens: Vec<String>,
    pub init_evals: u64,
    pub new_member_evals: u64,
    pub fitness_computations: u64,
    pub cache_lookups: u64,
    pub cache_hits: u64,
    pub match_steps: u64,
    pub budget_exceeded: u64,
    pub mutation_fallbacks: u64,
    pub crossover_fallbacks: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// New-member plus initialization evaluations.
    pub fn total_evals(&self) -> u64 {
        self.init_evals + self.new_member_evals
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub regex: String,
    pub pattern: Pattern,
    pub candidates: CandidateSet,
    pub report: RunReport,
    /// No regex passed the extraction gate; `regex` is the final best.
    pub degraded: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Samples to learn frequent items from instead of the positives.
    pub bpe_corpus: Option<Vec<String>>,
    /// Tokens to use as given, skipping extraction.
    pub tokens: Option<BpeTokenSet>,
}

pub fn train<S: AsRef<str>>(
    positives: &[S],
    negatives: &[S],
    cfg: &GaConfig,
) -> Result<TrainOutcome, TrainError> {
    train_with(
        positives,
        negatives,
        cfg,
        &TrainOptions::default(),
        &mut |_| {},
    )
}

pub fn train_with<S: AsRef<str>>(
    positives: &[S],
    negatives: &[S],
    cfg: &GaConfig,
    opts: &TrainOptions,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainError> {
    let started = Instant::now();
    cfg.validate()?;
    let mut ts = TrainingSet::new(positives, negatives)?.with_anchored_count(cfg.anchored_count);
    let tokens = match (&opts.tokens, cfg.use_bpe) {
        (_, false) => BpeTokenSet::empty(),
        (Some(t), true) => t.clone(),
        (None, true) => match &opts.bpe_corpus {
            Some(corpus) => bpe::learn(corpus, cfg.bpe_threshold)?,
            None => bpe::learn(positives, cfg.bpe_threshold)?,
        },
    };
    let mut gen = TreeGen::new(&tokens, cfg.use_bpe).with_leaf_mix(cfg.leaf_mix);
    gen.generalize = cfg.seed_generalize;
    let cache = if cfg.cache {
        FitnessCache::new()
    } else {
        FitnessCache::disabled()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counters = EvolutionCounters::default();
    let original = ts.positives().len();
    let floor = cfg.noise_floor * original as f64;

    let mut pop = init_population(&ts, &gen, cfg, &mut rng, &cache, &mut counters);
    let mut candidates = CandidateSet::default();
    let mut iter_best = 0;
    let mut epochs_run = 0;
    let mut stop = StopReason::EpochBudget;
    for epoch in 1..=cfg.epochs {
        let (next, record) = run_epoch(&pop, &ts, &cache, cfg, &gen, &mut rng, &mut counters);
        pop = next;
        epochs_run = epoch;
        iter_best += 1;
        on_epoch(&record);
        if iter_best < cfg.it_div {
            continue;
        }
        let best = pop.best().expect("population is never empty").tree.clone();
        let precision = training_precision(&best, &ts);
        if precision < cfg.p_div {
            continue;
        }
        let removed = ts.remove_matched(&best);
        candidates.push(Accepted {
            regex: best.render(),
            tree: best,
            precision,
            epoch,
            removed: removed.len(),
            remaining: ts.positives().len(),
        });
        cache.retain_generation(ts.generation());
        iter_best = 0;
        if ts.positives().is_empty() {
            stop = StopReason::PositivesExhausted;
            break;
        }
        if (ts.positives().len() as f64) < floor {
            stop = StopReason::NoiseFloor;
            break;
        }
        pop = reinit_population(&pop, &ts, &gen, cfg, &mut rng, &cache, &mut counters);
    }

    let degraded = candidates.is_empty();
    let (regex, pattern) = if degraded {
        let best = pop
            .best()
            .expect("population is never empty")
            .tree
            .canonical();
        (best.render(), Pattern::new(vec![best]))
    } else {
        (join(&candidates).expect("non-empty"), candidates.pattern())
    };
    let cs = cache.stats();
    let remaining = ts.positives().len();
    let report = RunReport {
        final_regex: regex.clone(),
        none_accepted: degraded,
        stop_reason: stop,
        epochs_run,
        original_positives: original,
        remaining_positives: remaining,
        remaining_fraction: remaining as f64 / original as f64,
        extractions: candidates.accepted().to_vec(),
        bpe_tokens: tokens.tokens().iter().map(|t| t.to_string()).collect(),
        init_evals: counters.init_evals,
        new_member_evals: counters.new_member_evals,
        fitness_computations: cs.computed,
        cache_lookups: cs.lookups,
        cache_hits: cs.hits,
        match_steps: cs.match_steps,
        budget_exceeded: cs.budget_exceeded,
        mutation_fallbacks: counters.mutation_fallbacks,
        crossover_fallbacks: counters.crossover_fallbacks,
        wall_ms: Some(started.elapsed().as_millis() as u64),
    };
    Ok(TrainOutcome {
        regex,
        pattern,
        candidates,
        report,
        degraded,
    })
}
