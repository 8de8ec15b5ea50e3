//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use common::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex_evolve::ast::{RegexTree, Terminal, TreeGen};
use regex_evolve::bpe::{self, BpeTokenSet};
use regex_evolve::config::GaConfig;
use regex_evolve::datagen::{self, Category, DatasetSpec};
use regex_evolve::eval::{train_and_score, DatasetPair};
use regex_evolve::fitness::{evaluate, FitnessCache, TrainingSet};
use regex_evolve::matcher::{Matcher, PatternMatcher};
use regex_evolve::parse::{parse, parse_tree};
use regex_evolve::trainer::train;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Regexes emitted by the end-to-end runs, re-parsed by criterion 9.
#[derive(Default)]
struct Emitted(Vec<String>);

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

// 1. Exhaustive matcher equivalence.

fn restricted_leaves() -> Vec<RegexTree> {
    [
        Terminal::Alpha('a'),
        Terminal::Alpha('b'),
        Terminal::Digit('0'),
        Terminal::Digit('1'),
        Terminal::DigitClass,
        Terminal::Word,
    ]
    .into_iter()
    .map(RegexTree::Leaf)
    .collect()
}

fn wrap_unary(c: &RegexTree, out: &mut Vec<RegexTree>) {
    out.push(RegexTree::group(c.clone()));
    out.push(RegexTree::one_or_more(c.clone()));
    out.push(RegexTree::zero_or_more(c.clone()));
    out.push(RegexTree::zero_or_one(c.clone()));
    out.push(RegexTree::min_max(c.clone(), 1, 2));
    out.push(RegexTree::min_max(c.clone(), 2, 3));
}

/// Every tree of depth at most 3 over the restricted leaves. Character lists
/// hold one or two distinct leaves.
fn enumerate_depth3() -> Vec<RegexTree> {
    let leaves = restricted_leaves();
    let mut d2 = Vec::new();
    for l in &leaves {
        wrap_unary(l, &mut d2);
    }
    for a in &leaves {
        for b in &leaves {
            d2.push(RegexTree::concat(a.clone(), b.clone()));
        }
    }
    for i in 0..leaves.len() {
        for j in i..leaves.len() {
            let items: Vec<RegexTree> = if i == j {
                vec![leaves[i].clone()]
            } else {
                vec![leaves[i].clone(), leaves[j].clone()]
            };
            d2.push(RegexTree::ListMatch(items.clone()));
            d2.push(RegexTree::ListNotMatch(items));
        }
    }
    let upto2: Vec<RegexTree> = leaves.iter().chain(&d2).cloned().collect();
    let mut all = upto2.clone();
    for t in &d2 {
        wrap_unary(t, &mut all);
    }
    for a in &upto2 {
        for b in &upto2 {
            if a.depth() == 2 || b.depth() == 2 {
                all.push(RegexTree::concat(a.clone(), b.clone()));
            }
        }
    }
    all
}

fn strings_upto6() -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..6 {
        let mut next = Vec::new();
        for s in &frontier {
            for c in ['a', 'b', '0', '1'] {
                next.push(format!("{s}{c}"));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let trees = enumerate_depth3();
    let strings = strings_upto6();
    let chars: Vec<Vec<char>> = strings.iter().map(|s| s.chars().collect()).collect();
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    let mut first = None;
    for t in &trees {
        assert!(t.depth() <= 3);
        let m = Matcher::new(t);
        for (s, cs) in strings.iter().zip(&chars) {
            cases += 1;
            let want = oracle::ends(t, cs, 0).contains(&cs.len());
            if m.full_match(cs) != want {
                mismatches += 1;
                first.get_or_insert_with(|| format!("{} on {s:?}", t.render()));
            }
        }
    }
    let el = start.elapsed();
    verdict(
        mismatches == 0 && within(el, 120),
        format!(
            "{} trees x {} strings = {cases} cases, {mismatches} mismatches{}, {:.1}s",
            trees.len(),
            strings.len(),
            first.map(|f| format!(" (first: {f})")).unwrap_or_default(),
            el.as_secs_f64()
        ),
    )
}

// 2. Fitness bounds and the hand case.

fn random_word(rng: &mut ChaCha8Rng) -> String {
    const CH: &[char] = &['a', 'b', 'c', '0', '1', '9', ':', '-', 'X'];
    let n = rng.gen_range(1..9);
    (0..n).map(|_| CH[rng.gen_range(0..CH.len())]).collect()
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let ts = TrainingSet::new(&["ab"], &["cd"]).unwrap();
    let hand = evaluate(&parse_tree("ab").unwrap(), &ts, &FitnessCache::disabled());
    let hand_ok = hand.total == 3.0 && hand.p_s == 1.0 && hand.p_c == 1.0 && hand.l_score == 1.0;

    let toks = BpeTokenSet::from_tokens(["ab", "01", "a:"]);
    let gen = TreeGen::new(&toks, true);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let pos: Vec<String> = (0..rng.gen_range(1..6))
            .map(|_| random_word(&mut rng))
            .collect();
        let neg: Vec<String> = (0..rng.gen_range(0..6))
            .map(|_| random_word(&mut rng))
            .collect();
        let ts = TrainingSet::new(&pos, &neg).unwrap();
        let depth = rng.gen_range(1..7);
        let t = gen.random_tree(&mut rng, depth);
        let f = evaluate(&t, &ts, &FitnessCache::disabled());
        lo = lo.min(f.total);
        hi = hi.max(f.total);
        if !(0.0..=4.0).contains(&f.total) {
            bad += 1;
        }
    }
    let el = start.elapsed();
    verdict(
        hand_ok && bad == 0 && within(el, 30),
        format!(
            "hand case total {}, 10000 random totals in [{lo:.4}, {hi:.4}], {bad} out of range, {:.1}s",
            hand.total,
            el.as_secs_f64()
        ),
    )
}

// 3. New-member evaluation counts.

/// Sum over `epochs` of the integer chain m <- floor(m * num / den).
fn chain_sum(n_pop: u64, num: u64, den: u64, epochs: usize) -> u64 {
    let mut m = n_pop;
    let mut total = 0;
    for i in 0..epochs {
        if i > 0 {
            m = (m * num / den).max(1);
        }
        total += m;
    }
    total
}

fn counted_evals(n_pop: usize, decay: f64, epochs: usize) -> u64 {
    let cfg = GaConfig {
        n_pop,
        n_pop_min: 1,
        decay,
        epochs,
        it_div: epochs + 1,
        cache: false,
        ..GaConfig::default()
    };
    let out = train(&["ab:01", "cd:23", "ef:45"], &["0000", "x@y"], &cfg).unwrap();
    out.report.new_member_evals
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let spot = counted_evals(100, 0.5, 3);
    let cases = [
        (300, 3, 4, 12),
        (1000, 97, 100, 200),
        (400, 9, 10, 40),
        (50, 1, 1, 20),
    ];
    let mut ok = spot == 175;
    let mut parts = vec![format!("N=100 l=0.5 E=3 -> {spot}")];
    for (n, num, den, e) in cases {
        let got = counted_evals(n as usize, num as f64 / den as f64, e);
        let want = chain_sum(n, num, den, e);
        ok &= got == want;
        parts.push(format!(
            "N={n} l={} E={e} -> {got}/{want}",
            num as f64 / den as f64
        ));
    }
    let flat = counted_evals(50, 1.0, 20);
    ok &= flat == 50 * 20;
    let el = start.elapsed();
    verdict(
        ok && within(el, 60),
        format!("{}, {:.1}s", parts.join("; "), el.as_secs_f64()),
    )
}

// 4. Decay speedup.

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let pos = datagen::samples(Category::Mac, 500, 40);
    let neg = DatasetPair::standard(Category::Mac, 500, 1, 40).train_neg;
    let base = GaConfig {
        n_pop: 500,
        n_pop_min: 100,
        epochs: 500,
        it_div: 501,
        seed: 4,
        ..GaConfig::default()
    };
    let run = |decay: f64| {
        let t = Instant::now();
        let out = train(
            &pos,
            &neg,
            &GaConfig {
                decay,
                ..base.clone()
            },
        )
        .unwrap();
        (out.report.new_member_evals, t.elapsed())
    };
    let (flat_evals, flat_wall) = run(1.0);
    let (decay_evals, decay_wall) = run(0.97);
    let predicted_decayed: f64 = (0..500).map(|i| (500.0 * 0.97f64.powi(i)).max(100.0)).sum();
    let predicted = 500.0 * 500.0 / predicted_decayed;
    let ratio = flat_evals as f64 / decay_evals as f64;
    let wall_ratio = flat_wall.as_secs_f64() / decay_wall.as_secs_f64();
    let el = start.elapsed();
    verdict(
        ratio >= 4.0 && (ratio / predicted - 1.0).abs() <= 0.10 && wall_ratio >= 3.0 && within(el, 600),
        format!(
            "evals {flat_evals}/{decay_evals} = {ratio:.3} (closed form {predicted:.3}), wall {:.1}s/{:.1}s = {wall_ratio:.2}, {:.1}s",
            flat_wall.as_secs_f64(),
            decay_wall.as_secs_f64(),
            el.as_secs_f64()
        ),
    )
}

// 5. Frequent-item extraction.

fn toy_corpus() -> Vec<&'static str> {
    let mut v = vec!["low"; 5];
    v.extend(["lower"; 2]);
    v.extend(["newest"; 6]);
    v.extend(["widest"; 3]);
    v
}

fn max_pair_after(corpus: &[&str], merges: &[(String, String)]) -> u64 {
    let mut words: Vec<Vec<String>> = corpus
        .iter()
        .map(|s| s.chars().map(String::from).collect())
        .collect();
    for (l, r) in merges {
        for w in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && &w[i] == l && &w[i + 1] == r {
                    out.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
    }
    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    for w in &words {
        for p in w.windows(2) {
            *counts.entry((p[0].clone(), p[1].clone())).or_insert(0) += 1;
        }
    }
    counts.values().copied().max().unwrap_or(0)
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let corpus = toy_corpus();
    let n = corpus.len() as f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.3, 0.5, 0.9] {
        let set = bpe::learn(&corpus, p).unwrap();
        let merges: Vec<(String, String)> = set
            .merge_log()
            .iter()
            .map(|m| (m.left.clone(), m.right.clone()))
            .collect();
        let stop = max_pair_after(&corpus, &merges) as f64 / n;
        let all_above = set.merge_log().iter().all(|m| m.proportion >= p);
        ok &= stop < p && all_above;
        if p == 0.5 {
            let first = set.merge_log().first();
            ok &= first.map(|m| (m.left.as_str(), m.right.as_str(), m.proportion))
                == Some(("e", "s", 0.5625));
        }
        parts.push(format!(
            "p={p}: {} merges, final max {stop:.4}",
            merges.len()
        ));
    }
    let el = start.elapsed();
    verdict(
        ok && within(el, 1),
        format!("{}, {:.3}s", parts.join("; "), el.as_secs_f64()),
    )
}

// 6. End-to-end separation.

fn separation_config(seed: u64) -> GaConfig {
    GaConfig {
        epochs: 300,
        n_pop: 2000,
        n_pop_min: 1000,
        it_div: 15,
        seeded_fraction: 0.0,
        seed,
        ..GaConfig::default()
    }
}

fn criterion_6(emitted: &mut Emitted) -> Verdict {
    let start = Instant::now();
    let mut passes = 0;
    let mut parts = Vec::new();
    let mut slow = false;
    for seed in 0..5 {
        let t = Instant::now();
        let pair = DatasetPair::standard(Category::Mac, 500, 1000, seed);
        let r = train_and_score(&pair, &separation_config(seed)).unwrap();
        slow |= !within(t.elapsed(), 120);
        emitted.0.push(r.regex);
        if r.metrics.f1 >= 0.99 {
            passes += 1;
        }
        parts.push(format!("{:.4}", r.metrics.f1));
    }
    let el = start.elapsed();
    verdict(
        passes >= 4 && !slow,
        format!(
            "held-out F1 per seed [{}], {passes}/5 >= 0.99, {:.1}s",
            parts.join(", "),
            el.as_secs_f64()
        ),
    )
}

// 7. Frequent items on a hard contrast.

fn ablation_config(seed: u64, use_bpe: bool) -> GaConfig {
    GaConfig {
        epochs: 300,
        seed,
        use_bpe,
        ..GaConfig::default()
    }
}

fn criterion_7(emitted: &mut Emitted) -> Verdict {
    let start = Instant::now();
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..5 {
        let pair = DatasetPair::standard(Category::Cert, 500, 1000, seed);
        let on = train_and_score(&pair, &ablation_config(seed, true)).unwrap();
        let off = train_and_score(&pair, &ablation_config(seed, false)).unwrap();
        if on.metrics.f1 > off.metrics.f1 {
            wins += 1;
        }
        parts.push(format!("{:.4}/{:.4}", on.metrics.f1, off.metrics.f1));
        emitted.0.push(on.regex);
        emitted.0.push(off.regex);
    }
    let el = start.elapsed();
    verdict(
        wins >= 4 && within(el, 900),
        format!(
            "F1 on/off per seed [{}], on wins {wins}/5, {:.1}s",
            parts.join(", "),
            el.as_secs_f64()
        ),
    )
}

// 8. Divide and conquer.

fn digits(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| char::from(b'0' + rng.gen_range(0..10u8)))
        .collect()
}

fn criterion_8(emitted: &mut Emitted) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pos = Vec::new();
    for prefix in ["17", "80"] {
        for _ in 0..40 {
            pos.push(format!("{prefix}{}", digits(&mut rng, 16)));
        }
    }
    let mut neg = Vec::new();
    while neg.len() < 80 {
        let s = digits(&mut rng, 18);
        if !s.starts_with("17") && !s.starts_with("80") {
            neg.push(s);
        }
    }
    let cfg = GaConfig {
        noise_floor: 0.0,
        seed: 8,
        ..GaConfig::default()
    };
    let out = train(&pos, &neg, &cfg).unwrap();
    emitted.0.push(out.regex.clone());
    let m = PatternMatcher::new(&out.pattern);
    let covered = pos.iter().filter(|s| m.full_match_str(s)).count();
    let neg_hit = neg.iter().filter(|s| m.full_match_str(s)).count();
    let min_precision = out
        .candidates
        .accepted()
        .iter()
        .map(|a| a.precision)
        .fold(f64::INFINITY, f64::min);
    let split_ok = !out.degraded
        && covered == pos.len()
        && min_precision >= 0.9
        && (neg_hit as f64) < 0.1 * neg.len() as f64;

    let noisy =
        datagen::generate(&DatasetSpec::new(Category::Mac, 100, 8).with_noise(0.02)).unwrap();
    let junk = noisy
        .iter()
        .filter(|s| !datagen::validate(Category::Mac, s))
        .count();
    let noisy_neg = DatasetPair::standard(Category::Mac, 100, 1, 8).train_neg;
    let noise_out = train(
        &noisy,
        &noisy_neg,
        &GaConfig {
            seed: 8,
            ..GaConfig::default()
        },
    )
    .unwrap();
    emitted.0.push(noise_out.regex.clone());
    let frac = noise_out.report.remaining_fraction;
    let noise_ok = junk == 2 && frac <= 0.05;

    let el = start.elapsed();
    verdict(
        split_ok && noise_ok && within(el, 300),
        format!(
            "two families: {} branches, covered {covered}/{}, negatives matched {neg_hit}/{}, min branch precision {min_precision:.3}; \
             noise run: {junk} junk, stop {:?}, remaining fraction {frac:.3}; {:.1}s",
            out.candidates.len(),
            pos.len(),
            neg.len(),
            noise_out.report.stop_reason,
            el.as_secs_f64()
        ),
    )
}

// 9. Round trip.

fn criterion_9(emitted: &Emitted) -> Verdict {
    let start = Instant::now();
    let toks = BpeTokenSet::from_tokens(["ab", "1.2", "x-y", "中"]);
    let gen = TreeGen::new(&toks, true);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = 0;
    for _ in 0..10_000 {
        let depth = rng.gen_range(1..7);
        let t = gen.random_tree(&mut rng, depth);
        match parse_tree(&t.render()) {
            Ok(back) if back == t.canonical() => {}
            _ => bad += 1,
        }
    }
    let unparsable = emitted.0.iter().filter(|r| parse(r).is_err()).count();
    let el = start.elapsed();
    verdict(
        bad == 0 && unparsable == 0 && within(el, 30),
        format!(
            "10000 trees, {bad} round-trip failures; {} emitted regexes, {unparsable} unparsable; {:.1}s",
            emitted.0.len(),
            el.as_secs_f64()
        ),
    )
}

// 10. CLI determinism.

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_regex-evolve");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pos = d.join("pos.txt");
    let neg = d.join("neg.txt");
    fs::write(
        &pos,
        datagen::samples(Category::Mac, 200, 10).join("\n") + "\n",
    )
    .unwrap();
    let negs = DatasetPair::standard(Category::Mac, 200, 1, 10).train_neg;
    fs::write(&neg, negs.join("\n") + "\n").unwrap();
    let conf = d.join("ga.conf");
    fs::write(&conf, "n_pop = 300\nn_pop_min = 100\nepochs = 150\n").unwrap();
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for run in 0..2 {
        let out = d.join(format!("re{run}.txt"));
        let report = d.join(format!("re{run}.json"));
        let status = Command::new(bin)
            .args(["train", "--seed", "10", "--workers", "1", "--config"])
            .arg(&conf)
            .arg("--pos")
            .arg(&pos)
            .arg("--neg")
            .arg(&neg)
            .arg("--out")
            .arg(&out)
            .arg("--report")
            .arg(&report)
            .status()
            .unwrap();
        codes.push(status.code());
        outputs.push((
            fs::read(&out).unwrap_or_default(),
            fs::read(&report).unwrap_or_default(),
        ));
    }
    let same = outputs[0] == outputs[1] && !outputs[0].0.is_empty() && !outputs[0].1.is_empty();
    let codes_ok = codes.iter().all(|c| matches!(c, Some(0) | Some(3)));
    let el = start.elapsed();
    verdict(
        same && codes_ok && within(el, 300),
        format!(
            "exit codes {codes:?}, regex {} bytes, report {} bytes, identical: {same}, {:.1}s",
            outputs[0].0.len(),
            outputs[0].1.len(),
            el.as_secs_f64()
        ),
    )
}

fn main() {
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let wanted = |n: usize| filter.is_none_or(|f| f == n);
    let mut emitted = Emitted::default();
    let mut failed = Vec::new();
    let mut report = |n: usize, v: Verdict| {
        println!(
            "criterion {n:>2}: {} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed.push(n);
        }
    };
    if wanted(1) {
        report(1, criterion_1());
    }
    if wanted(2) {
        report(2, criterion_2());
    }
    if wanted(3) {
        report(3, criterion_3());
    }
    if wanted(4) {
        report(4, criterion_4());
    }
    if wanted(5) {
        report(5, criterion_5());
    }
    if wanted(6) {
        report(6, criterion_6(&mut emitted));
    }
    if wanted(7) {
        report(7, criterion_7(&mut emitted));
    }
    if wanted(8) {
        report(8, criterion_8(&mut emitted));
    }
    if wanted(9) {
        report(9, criterion_9(&emitted));
    }
    if wanted(10) {
        report(10, criterion_10());
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
