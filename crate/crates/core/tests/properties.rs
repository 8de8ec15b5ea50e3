use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex_evolve::ast::{RegexTree, TreeGen};
use regex_evolve::bpe::{self, BpeTokenSet};
use regex_evolve::fitness::{evaluate, FitnessCache, TrainingSet};
use regex_evolve::matcher::{self, PatternMatcher};
use regex_evolve::parse::{parse, Pattern};
use regex_evolve::trainer::{join, CandidateSet};

fn tree(seed: u64, depth: usize) -> RegexTree {
    let toks = BpeTokenSet::from_tokens(["ab", "10", "a:"]);
    TreeGen::new(&toks, true).random_tree(&mut ChaCha8Rng::seed_from_u64(seed), depth)
}

fn word() -> impl Strategy<Value = String> {
    "[ab01:x]{1,7}"
}

fn sample_sets() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    (
        prop::collection::vec(word(), 1..6),
        prop::collection::vec(word(), 0..6),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fitness_terms_stay_in_range(seed in any::<u64>(), depth in 1usize..6, (pos, neg) in sample_sets()) {
        let t = tree(seed, depth);
        let ts = TrainingSet::new(&pos, &neg).unwrap();
        let f = evaluate(&t, &ts, &FitnessCache::disabled());
        prop_assert!((0.0..=1.0).contains(&f.p_s), "{:?}", f);
        prop_assert!((0.0..=2.0).contains(&f.p_c), "{:?}", f);
        prop_assert!(f.l_score > 0.0 && f.l_score <= 1.0, "{:?}", f);
        prop_assert_eq!(f.total, f.p_s + f.p_c + f.l_score);
        prop_assert!(f.total <= 4.0);
    }

    #[test]
    fn cached_scores_equal_fresh_ones(seeds in prop::collection::vec(0u64..40, 1..30), (pos, neg) in sample_sets()) {
        let ts = TrainingSet::new(&pos, &neg).unwrap();
        let cache = FitnessCache::new();
        for s in seeds {
            let t = tree(s, 4);
            let cached = evaluate(&t, &ts, &cache);
            let fresh = evaluate(&t, &ts, &FitnessCache::disabled());
            prop_assert_eq!(cached, fresh);
        }
    }

    #[test]
    fn removal_invalidates_cached_scores(seed in any::<u64>(), cut in 0u64..64, (pos, neg) in sample_sets()) {
        let mut ts = TrainingSet::new(&pos, &neg).unwrap();
        let cache = FitnessCache::new();
        let probe = tree(seed, 4);
        evaluate(&probe, &ts, &cache);
        let remover = tree(cut, 3);
        let before = ts.generation();
        let removed = ts.remove_matched(&remover);
        prop_assert_eq!(ts.generation() > before, !removed.is_empty());
        if ts.positives().is_empty() {
            return Ok(());
        }
        cache.retain_generation(ts.generation());
        let after = evaluate(&probe, &ts, &cache);
        prop_assert_eq!(after, evaluate(&probe, &ts, &FitnessCache::disabled()));
    }

    #[test]
    fn joined_pattern_is_union_of_branches(a in any::<u64>(), b in any::<u64>(), s in word()) {
        let (ta, tb) = (tree(a, 4), tree(b, 4));
        let either = matcher::full_match(&ta, &s) || matcher::full_match(&tb, &s);
        let joined = Pattern::new(vec![ta.canonical(), tb.canonical()]);
        prop_assert_eq!(PatternMatcher::new(&joined).full_match_str(&s), either);
        let reparsed = parse(&joined.render()).unwrap();
        prop_assert_eq!(PatternMatcher::new(&reparsed).full_match_str(&s), either);
    }

    #[test]
    fn bpe_merges_replay_and_stop_below_threshold(corpus in prop::collection::vec("[abc]{1,6}", 1..25), p in 0.05f64..1.0) {
        let set = bpe::learn(&corpus, p).unwrap();
        let mut vocab: Vec<Vec<String>> = corpus.iter().map(|s| s.chars().map(String::from).collect()).collect();
        let n = corpus.len() as f64;
        for rec in set.merge_log() {
            let counts = pair_counts(&vocab);
            let top = counts.values().copied().max().unwrap();
            prop_assert_eq!(counts[&(rec.left.clone(), rec.right.clone())], rec.frequency);
            prop_assert_eq!(rec.frequency, top);
            prop_assert!(rec.proportion >= p);
            vocab = vocab.into_iter().map(|w| merge(w, &rec.left, &rec.right)).collect();
        }
        let top = pair_counts(&vocab).values().copied().max().unwrap_or(0);
        prop_assert!((top as f64) / n < p);
    }
}

fn pair_counts(vocab: &[Vec<String>]) -> HashMap<(String, String), u64> {
    let mut m = HashMap::new();
    for w in vocab {
        for pair in w.windows(2) {
            *m.entry((pair[0].clone(), pair[1].clone())).or_insert(0) += 1;
        }
    }
    m
}

fn merge(w: Vec<String>, l: &str, r: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < w.len() {
        if i + 1 < w.len() && w[i] == l && w[i + 1] == r {
            out.push(format!("{l}{r}"));
            i += 2;
        } else {
            out.push(w[i].clone());
            i += 1;
        }
    }
    out
}

#[test]
fn join_of_nothing_is_an_error() {
    let cs = CandidateSet::default();
    assert!(join(&cs).is_err());
}
