//! One GA epoch: decay, breeding, evaluation and top-K survival.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::ast::{RegexTree, TreeGen};
use crate::config::GaConfig;
use crate::fitness::{evaluate_rendered, FitnessCache, FitnessScore, TrainingSet};

/// Redraws allowed before mutation and crossover give up.
pub const RETRY_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub tree: RegexTree,
    pub rendered: Arc<str>,
    pub fitness: FitnessScore,
}

impl Member {
    fn rank_cmp(&self, other: &Member) -> Ordering {
        other
            .fitness
            .total
            .partial_cmp(&self.fitness.total)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                self.rendered
                    .chars()
                    .count()
                    .cmp(&other.rendered.chars().count())
            })
            .then_with(|| self.rendered.cmp(&other.rendered))
    }
}

/// Ranked, deduplicated members.
#[derive(Debug, Clone)]
pub struct Population {
    members: Vec<Member>,
    epoch_index: usize,
    current_size: usize,
}

impl Population {
    /// Dedups by rendering (first occurrence wins), sorts and truncates.
    pub fn from_members(members: Vec<Member>, epoch_index: usize, size: usize) -> Self {
        let mut seen = HashSet::new();
        let mut members: Vec<Member> = members
            .into_iter()
            .filter(|m| seen.insert(Arc::clone(&m.rendered)))
            .collect();
        members.sort_by(Member::rank_cmp);
        members.truncate(size);
        Population {
            members,
            epoch_index,
            current_size: size,
        }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn best(&self) -> Option<&Member> {
        self.members.first()
    }

    /// Epochs completed; 0 for a fresh population.
    pub fn epoch_index(&self) -> usize {
        self.epoch_index
    }

    /// Target size of the last epoch (or of initialization).
    pub fn current_size(&self) -> usize {
        self.current_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvolutionCounters {
    pub init_evals: u64,
    pub new_member_evals: u64,
    pub mutation_fallbacks: u64,
    pub crossover_fallbacks: u64,
}

/// Progress line emitted after each epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub pop_size: usize,
    pub best_fitness: f64,
    pub best_regex: String,
    pub evals: u64,
    pub cache_hit_rate: f64,
}

impl EpochRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

fn decay_step(prev: usize, cfg: &GaConfig) -> usize {
    // The epsilon keeps exact products such as 100 * 0.5 from flooring low.
    let next = (prev as f64 * cfg.decay + 1e-9).floor() as usize;
    next.max(cfg.n_pop_min).max(1)
}

/// Population size for epoch `i` (1-based).
pub fn decayed_size(i: usize, cfg: &GaConfig) -> usize {
    assert!(i >= 1, "epochs are numbered from 1");
    (2..=i).fold(cfg.n_pop, |prev, _| decay_step(prev, cfg))
}

/// Crossover, mutant and random-tree counts for `m` new members.
pub fn quotas(m: usize) -> (usize, usize, usize) {
    let cross = (0.8 * m as f64).round() as usize;
    let mutants = ((0.1 * m as f64).round() as usize).min(m - cross);
    (cross, mutants, m - cross - mutants)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub tree: RegexTree,
    /// Pre-order index of the replaced node in the parent.
    pub site: usize,
    pub fallback: bool,
}

/// Replaces a uniformly chosen node of `parent` with a fresh subtree.
pub fn mutate<R: Rng + ?Sized>(
    parent: &RegexTree,
    rng: &mut R,
    gen: &TreeGen,
    max_depth: usize,
    mutation_depth: usize,
) -> Mutation {
    let sites = parent.node_sites();
    let mut first_site = None;
    for _ in 0..RETRY_LIMIT {
        let idx = rng.gen_range(0..sites.len());
        first_site.get_or_insert(idx);
        let site = sites[idx];
        let replacement = if site.in_list {
            gen.random_class_leaf(rng)
        } else {
            let room = max_depth.saturating_sub(site.depth - 1).max(1);
            gen.random_tree(rng, mutation_depth.min(room))
        };
        let child = parent.replace_at(idx, replacement).rebalanced();
        if child.validate(max_depth).is_ok() {
            return Mutation {
                tree: child,
                site: idx,
                fallback: false,
            };
        }
    }
    Mutation {
        tree: gen.random_tree(rng, max_depth),
        site: first_site.unwrap_or(0),
        fallback: true,
    }
}

/// Swaps the subtrees at `ia` in `a` and `ib` in `b` and returns the first
/// offspring when `first` holds, else the second. `None` if the swap would
/// put a non-leaf inside a character list.
pub fn crossover_at(
    a: &RegexTree,
    b: &RegexTree,
    ia: usize,
    ib: usize,
    first: bool,
) -> Option<RegexTree> {
    let sa = a.node_sites()[ia];
    let sb = b.node_sites()[ib];
    let from_a = a.subtree(ia)?;
    let from_b = b.subtree(ib)?;
    let class_ok = |t: &RegexTree| matches!(t, RegexTree::Leaf(term) if term.is_class_safe());
    if first {
        if sa.in_list && !class_ok(from_b) {
            return None;
        }
        Some(a.replace_at(ia, from_b.clone()))
    } else {
        if sb.in_list && !class_ok(from_a) {
            return None;
        }
        Some(b.replace_at(ib, from_a.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub tree: RegexTree,
    pub fallback: bool,
}

/// Subtree exchange at uniformly drawn points; one offspring, picked by coin.
pub fn crossover<R: Rng + ?Sized>(
    a: &RegexTree,
    b: &RegexTree,
    rng: &mut R,
    max_depth: usize,
) -> Crossover {
    let (na, nb) = (a.node_count(), b.node_count());
    for _ in 0..RETRY_LIMIT {
        let ia = rng.gen_range(0..na);
        let ib = rng.gen_range(0..nb);
        let first = rng.gen_bool(0.5);
        if let Some(child) = crossover_at(a, b, ia, ib, first) {
            let child = child.rebalanced();
            if child.validate(max_depth).is_ok() {
                return Crossover {
                    tree: child,
                    fallback: false,
                };
            }
        }
    }
    Crossover {
        tree: a.clone(),
        fallback: true,
    }
}

/// Renders and scores `trees`, splitting the work across `workers` threads.
/// Output order follows input order.
pub fn evaluate_all(
    trees: Vec<RegexTree>,
    ts: &TrainingSet,
    cache: &FitnessCache,
    workers: usize,
) -> Vec<Member> {
    let eval = |tree: RegexTree| {
        let rendered: Arc<str> = Arc::from(tree.render());
        let fitness = evaluate_rendered(&tree, &rendered, ts, cache);
        Member {
            tree,
            rendered,
            fitness,
        }
    };
    if workers <= 1 || trees.len() < 2 {
        return trees.into_iter().map(eval).collect();
    }
    let chunk = trees.len().div_ceil(workers);
    let mut chunks: Vec<Vec<RegexTree>> = Vec::new();
    let mut it = trees.into_iter().peekable();
    while it.peek().is_some() {
        chunks.push(it.by_ref().take(chunk).collect());
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|c| s.spawn(move || c.into_iter().map(eval).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    })
}

/// A fresh population of `cfg.n_pop` trees: a `cfg.seeded_fraction` share
/// seeded from randomly chosen positives, the rest random.
pub fn init_population<R: Rng + ?Sized>(
    ts: &TrainingSet,
    gen: &TreeGen,
    cfg: &GaConfig,
    rng: &mut R,
    cache: &FitnessCache,
    counters: &mut EvolutionCounters,
) -> Population {
    let n_random = cfg.n_pop - (cfg.n_pop as f64 * cfg.seeded_fraction).round() as usize;
    let mut trees = Vec::with_capacity(cfg.n_pop);
    for _ in 0..n_random {
        trees.push(gen.random_tree(rng, cfg.max_depth));
    }
    for _ in n_random..cfg.n_pop {
        let sample = ts
            .positives()
            .choose(rng)
            .expect("training set has positives");
        trees.push(gen.seeded_tree(sample.text(), rng, cfg.max_depth));
    }
    counters.init_evals += trees.len() as u64;
    let members = evaluate_all(trees, ts, cache, cfg.workers);
    Population::from_members(members, 0, cfg.n_pop)
}

/// Replaces the members of `pop` with a fresh initialization, keeping its
/// epoch count and decay state.
pub fn reinit_population<R: Rng + ?Sized>(
    pop: &Population,
    ts: &TrainingSet,
    gen: &TreeGen,
    cfg: &GaConfig,
    rng: &mut R,
    cache: &FitnessCache,
    counters: &mut EvolutionCounters,
) -> Population {
    let fresh = init_population(ts, gen, cfg, rng, cache, counters);
    Population {
        members: fresh.members,
        epoch_index: pop.epoch_index,
        current_size: pop.current_size,
    }
}

/// Runs one epoch and returns the next population with its progress record.
pub fn run_epoch<R: Rng + ?Sized>(
    pop: &Population,
    ts: &TrainingSet,
    cache: &FitnessCache,
    cfg: &GaConfig,
    gen: &TreeGen,
    rng: &mut R,
    counters: &mut EvolutionCounters,
) -> (Population, EpochRecord) {
    let i = pop.epoch_index + 1;
    let m = if i == 1 {
        cfg.n_pop
    } else {
        decay_step(pop.current_size, cfg)
    };
    let (n_cross, n_mut, n_rand) = quotas(m);
    let parents = pop.members();
    let mut fresh = Vec::with_capacity(m);
    if parents.is_empty() {
        for _ in 0..m {
            fresh.push(gen.random_tree(rng, cfg.max_depth));
        }
    } else {
        for _ in 0..n_cross {
            let a = &parents[rng.gen_range(0..parents.len())].tree;
            let b = &parents[rng.gen_range(0..parents.len())].tree;
            let c = crossover(a, b, rng, cfg.max_depth);
            counters.crossover_fallbacks += c.fallback as u64;
            fresh.push(c.tree);
        }
        for _ in 0..n_mut {
            let p = &parents[rng.gen_range(0..parents.len())].tree;
            let mu = mutate(p, rng, gen, cfg.max_depth, cfg.mutation_depth);
            counters.mutation_fallbacks += mu.fallback as u64;
            fresh.push(mu.tree);
        }
        for _ in 0..n_rand {
            fresh.push(gen.random_tree(rng, cfg.max_depth));
        }
    }
    counters.new_member_evals += fresh.len() as u64;
    let evaluated = evaluate_all(fresh, ts, cache, cfg.workers);
    let mut pool = parents.to_vec();
    pool.extend(evaluated);
    let next = Population::from_members(pool, i, m);
    let best = next.best().expect("pool is never empty");
    let record = EpochRecord {
        epoch: i,
        pop_size: next.len(),
        best_fitness: best.fitness.total,
        best_regex: best.rendered.to_string(),
        evals: counters.new_member_evals,
        cache_hit_rate: cache.stats().hit_rate(),
    };
    (next, record)
}
