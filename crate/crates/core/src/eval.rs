//! Precision, recall and F1 over held-out data, plus ablation and sweep
//! runners.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::GaConfig;
use crate::datagen::{self, Category};
use crate::matcher::PatternMatcher;
use crate::parse::{parse, ParseError, Pattern};
use crate::trainer::{train, TrainError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            f1,
            counts,
        }
    }
}

pub fn score_pattern<S: AsRef<str>>(
    pattern: &Pattern,
    positives: &[S],
    negatives: &[S],
) -> Metrics {
    let m = PatternMatcher::new(pattern);
    let tp = positives
        .iter()
        .filter(|s| m.full_match_str(s.as_ref()))
        .count() as u64;
    let fp = negatives
        .iter()
        .filter(|s| m.full_match_str(s.as_ref()))
        .count() as u64;
    Metrics::from_counts(ConfusionCounts {
        tp,
        fp,
        fn_: positives.len() as u64 - tp,
    })
}

/// Parses `regex` and scores it by anchored full match.
pub fn score<S: AsRef<str>>(
    regex: &str,
    positives: &[S],
    negatives: &[S],
) -> Result<Metrics, ParseError> {
    Ok(score_pattern(&parse(regex)?, positives, negatives))
}

/// Negative categories used against `target` by default: the adversarial
/// digit strings for certificate numbers, everything else otherwise.
pub fn default_negatives(target: Category) -> Vec<Category> {
    match target {
        Category::Cert => vec![Category::HouseId, Category::Bankcard],
        _ => Category::ALL
            .iter()
            .copied()
            .filter(|&c| c != target)
            .collect(),
    }
}

/// Train and held-out splits for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub class: String,
    pub train_pos: Vec<String>,
    pub train_neg: Vec<String>,
    pub test_pos: Vec<String>,
    pub test_neg: Vec<String>,
}

impl DatasetPair {
    /// Positives from `target`; negatives drawn round-robin from
    /// `negatives`. Held-out samples never repeat training samples.
    pub fn synthetic(
        target: Category,
        negatives: &[Category],
        n_train: usize,
        n_test: usize,
        seed: u64,
    ) -> Self {
        assert!(!negatives.is_empty(), "need at least one negative category");
        let total = n_train + n_test;
        let pos = distinct(datagen::samples(target, total * 2, seed), total);
        let per = total.div_ceil(negatives.len()) * 2;
        let pools: Vec<Vec<String>> = negatives
            .iter()
            .map(|&c| datagen::samples(c, per, seed.wrapping_add(1)))
            .collect();
        let mut neg = Vec::with_capacity(total * 2);
        for i in 0..per {
            for p in &pools {
                neg.push(p[i].clone());
            }
        }
        let neg = distinct(neg, total);
        let (train_pos, test_pos) = split(pos, n_train);
        let (train_neg, test_neg) = split(neg, n_train);
        DatasetPair {
            class: target.name().to_string(),
            train_pos,
            train_neg,
            test_pos,
            test_neg,
        }
    }

    pub fn standard(target: Category, n_train: usize, n_test: usize, seed: u64) -> Self {
        Self::synthetic(target, &default_negatives(target), n_train, n_test, seed)
    }
}

fn distinct(v: Vec<String>, n: usize) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let out: Vec<String> = v
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .take(n)
        .collect();
    assert_eq!(out.len(), n, "not enough distinct samples");
    out
}

fn split(mut v: Vec<String>, n: usize) -> (Vec<String>, Vec<String>) {
    let rest = v.split_off(n);
    (v, rest)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunResult {
    pub regex: String,
    pub metrics: Metrics,
    pub wall_ms: u64,
    pub evals: u64,
    pub new_member_evals: u64,
    pub degraded: bool,
}

/// Trains on the pair's training split and scores on its held-out split.
pub fn train_and_score(pair: &DatasetPair, cfg: &GaConfig) -> Result<RunResult, TrainError> {
    let start = Instant::now();
    let out = train(&pair.train_pos, &pair.train_neg, cfg)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let metrics = score_pattern(&out.pattern, &pair.test_pos, &pair.test_neg);
    Ok(RunResult {
        regex: out.regex,
        metrics,
        wall_ms,
        evals: out.report.total_evals(),
        new_member_evals: out.report.new_member_evals,
        degraded: out.degraded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub bpe: bool,
    pub decay: bool,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode {
            bpe: true,
            decay: true,
        },
        Mode {
            bpe: true,
            decay: false,
        },
        Mode {
            bpe: false,
            decay: true,
        },
        Mode {
            bpe: false,
            decay: false,
        },
    ];

    pub fn name(self) -> &'static str {
        match (self.bpe, self.decay) {
            (true, true) => "bpe+decay",
            (true, false) => "bpe",
            (false, true) => "decay",
            (false, false) => "baseline-analog",
        }
    }

    /// `cfg` with this mode's switches; decay off means a fixed population.
    pub fn apply(self, cfg: &GaConfig) -> GaConfig {
        GaConfig {
            use_bpe: self.bpe,
            decay: if self.decay { cfg.decay } else { 1.0 },
            ..cfg.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub mode: String,
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub wall_ms: u64,
    pub evals: u64,
}

/// Runs each mode in turn with identical seed and budget.
pub fn ablation_run(
    pair: &DatasetPair,
    cfg: &GaConfig,
    modes: &[Mode],
) -> Result<Vec<AblationRow>, TrainError> {
    modes
        .iter()
        .map(|&mode| {
            let r = train_and_score(pair, &mode.apply(cfg))?;
            Ok(AblationRow {
                mode: mode.name().into(),
                class: pair.class.clone(),
                precision: r.metrics.precision,
                recall: r.metrics.recall,
                f1: r.metrics.f1,
                wall_ms: r.wall_ms,
                evals: r.evals,
            })
        })
        .collect()
}

pub const ABLATION_HEADER: &str = "mode,class,precision,recall,f1,wall_ms,evals";
pub const SWEEP_HEADER: &str = "param,value,precision,recall,f1,wall_ms,evals";
pub const EVAL_HEADER: &str = "class,precision,recall,f1,tp,fp,fn";

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("{ABLATION_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{},{}",
            r.mode, r.class, r.precision, r.recall, r.f1, r.wall_ms, r.evals
        )
        .unwrap();
    }
    s
}

pub fn eval_csv_row(class: &str, m: &Metrics) -> String {
    format!(
        "{},{:.6},{:.6},{:.6},{},{},{}",
        class, m.precision, m.recall, m.f1, m.counts.tp, m.counts.fp, m.counts.fn_
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    PosCount,
    Epochs,
    BpeThreshold,
    Lambda,
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("unknown sweep parameter {0:?}")]
    UnknownParam(String),
    #[error("no values to sweep")]
    NoValues,
    #[error("bad value {0:?} for {1}")]
    BadValue(String, &'static str),
}

impl std::str::FromStr for SweepParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos-count" => Ok(SweepParam::PosCount),
            "epochs" => Ok(SweepParam::Epochs),
            "bpe-threshold" => Ok(SweepParam::BpeThreshold),
            "lambda" => Ok(SweepParam::Lambda),
            _ => Err(SweepError::UnknownParam(s.into())),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PosCount => "pos-count",
            SweepParam::Epochs => "epochs",
            SweepParam::BpeThreshold => "bpe-threshold",
            SweepParam::Lambda => "lambda",
        }
    }

    /// Applies `value` to a copy of the config and dataset.
    fn apply(
        self,
        value: &str,
        cfg: &GaConfig,
        pair: &DatasetPair,
    ) -> Result<(GaConfig, DatasetPair), SweepError> {
        let bad = || SweepError::BadValue(value.into(), self.name());
        let mut cfg = cfg.clone();
        let mut pair = pair.clone();
        match self {
            SweepParam::PosCount => {
                let n: usize = value.parse().map_err(|_| bad())?;
                if n == 0 || n > pair.train_pos.len() {
                    return Err(bad());
                }
                pair.train_pos.truncate(n);
            }
            SweepParam::Epochs => cfg.epochs = value.parse().map_err(|_| bad())?,
            SweepParam::BpeThreshold => cfg.bpe_threshold = value.parse().map_err(|_| bad())?,
            SweepParam::Lambda => cfg.decay = value.parse().map_err(|_| bad())?,
        }
        cfg.validate().map_err(|_| bad())?;
        Ok((cfg, pair))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub wall_ms: u64,
    pub evals: u64,
}

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{}",
            self.param, self.value, self.precision, self.recall, self.f1, self.wall_ms, self.evals
        )
    }
}

#[derive(Debug, Error)]
pub enum SweepRunError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// One row per (value, seed). `make_pair` builds the dataset for a seed.
pub fn sweep(
    param: SweepParam,
    values: &[String],
    cfg: &GaConfig,
    seeds: &[u64],
    make_pair: &dyn Fn(u64) -> DatasetPair,
    on_row: &mut dyn FnMut(&SweepRow),
) -> Result<Vec<SweepRow>, SweepRunError> {
    if values.is_empty() || seeds.is_empty() {
        return Err(SweepError::NoValues.into());
    }
    let mut rows = Vec::new();
    for v in values {
        for &seed in seeds {
            let pair = make_pair(seed);
            let base = GaConfig {
                seed,
                ..cfg.clone()
            };
            let (c, p) = param.apply(v, &base, &pair)?;
            let r = train_and_score(&p, &c)?;
            let row = SweepRow {
                param: param.name().into(),
                value: v.clone(),
                seed,
                precision: r.metrics.precision,
                recall: r.metrics.recall,
                f1: r.metrics.f1,
                wall_ms: r.wall_ms,
                evals: r.evals,
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}
