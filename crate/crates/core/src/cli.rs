//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bpe;
use crate::config::GaConfig;
use crate::datagen::{self, Category, DatasetSpec};
use crate::eval::{self, DatasetPair, Mode, SweepParam};
use crate::trainer::{train_with, TrainOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGRADED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "regex-evolve",
    version,
    about = "Infer regexes from positive and negative samples"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic sample file.
    Gen(GenArgs),
    /// Extract frequent items from a sample file.
    Bpe(BpeArgs),
    /// Learn a regex.
    Train(TrainArgs),
    /// Score a regex on held-out samples.
    Eval(EvalArgs),
    /// Train and score across values of one hyperparameter.
    Sweep(SweepArgs),
    /// Compare frequent items and population decay switched on and off.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long = "type")]
    kind: String,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 8)]
    mac_pairs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BpeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    pos: PathBuf,
    #[arg(long)]
    neg: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Learn frequent items from this file instead of the positives.
    #[arg(long)]
    bpe_corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with `.report.json` appended.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall-clock time in the report (makes it run-dependent).
    #[arg(long)]
    report_wall_time: bool,
    /// Print one JSON progress record per epoch to stderr.
    #[arg(long)]
    progress: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    regex_file: PathBuf,
    #[arg(long)]
    pos: PathBuf,
    #[arg(long)]
    neg: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "target")]
    class: String,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Category to learn; negatives come from its default contrast set.
    #[arg(long = "type", default_value = "cert")]
    kind: String,
    #[arg(long, default_value_t = 500)]
    train_count: usize,
    #[arg(long, default_value_t = 1000)]
    test_count: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn read_samples(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<GaConfig, Failure> {
    match path {
        Some(p) => GaConfig::from_file(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(GaConfig::default()),
    }
}

fn cmd_gen(a: GenArgs) -> Result<i32, Failure> {
    let category: Category = a.kind.parse().map_err(usage)?;
    let spec = DatasetSpec {
        noise_fraction: a.noise,
        mac_pairs: a.mac_pairs,
        ..DatasetSpec::new(category, a.count, a.seed)
    };
    let samples = datagen::generate(&spec).map_err(usage)?;
    let mut text = samples.join("\n");
    text.push('\n');
    write_file(&a.out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_bpe(a: BpeArgs) -> Result<i32, Failure> {
    let samples = read_samples(&a.input)?;
    let set = bpe::learn(&samples, a.threshold).map_err(usage)?;
    let text: String = set
        .tokens()
        .iter()
        .zip(set.proportions())
        .map(|(t, p)| format!("{t}\t{p}\n"))
        .collect();
    write_file(&a.out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_train(a: TrainArgs) -> Result<i32, Failure> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(usage)?;
    let pos = read_samples(&a.pos)?;
    let neg = read_samples(&a.neg)?;
    if pos.is_empty() {
        return Err(usage(format!("{}: no positive samples", a.pos.display())));
    }
    let opts = TrainOptions {
        bpe_corpus: a.bpe_corpus.as_deref().map(read_samples).transpose()?,
        tokens: None,
    };
    let progress = a.progress;
    let out = train_with(&pos, &neg, &cfg, &opts, &mut |r| {
        if progress {
            eprintln!("{}", r.to_json_line());
        }
    })
    .map_err(usage)?;
    let mut report = out.report;
    if let (true, Some(ms)) = (progress, report.wall_ms) {
        eprintln!("trained in {ms} ms");
    }
    if !a.report_wall_time {
        report.wall_ms = None;
    }
    write_file(&a.out, &format!("{}\n", out.regex))?;
    let report_path = a.report.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        p.into()
    });
    write_file(&report_path, &format!("{}\n", report.to_json()))?;
    if out.degraded {
        eprintln!("no regex reached the precision threshold; wrote the best candidate");
        return Ok(EXIT_DEGRADED);
    }
    Ok(EXIT_OK)
}

fn cmd_eval(a: EvalArgs) -> Result<i32, Failure> {
    let text = fs::read_to_string(&a.regex_file)
        .map_err(|e| usage(format!("{}: {e}", a.regex_file.display())))?;
    let regex = text.strip_suffix('\n').unwrap_or(&text);
    let pos = read_samples(&a.pos)?;
    let neg = read_samples(&a.neg)?;
    if pos.is_empty() {
        return Err(usage(format!("{}: no positive samples", a.pos.display())));
    }
    let m = eval::score(regex, &pos, &neg).map_err(|e| usage(format!("regex parse error: {e}")))?;
    if let Some(out) = &a.out {
        write_file(
            out,
            &format!(
                "{}\n{}\n",
                eval::EVAL_HEADER,
                eval::eval_csv_row(&a.class, &m)
            ),
        )?;
    }
    println!("{:.6}", m.f1);
    Ok(EXIT_OK)
}

fn dataset_maker(d: &DataArgs) -> Result<impl Fn(u64) -> DatasetPair, Failure> {
    let cat: Category = d.kind.parse().map_err(usage)?;
    if d.train_count == 0 || d.test_count == 0 {
        return Err(usage("sample counts must be positive"));
    }
    let (n_train, n_test) = (d.train_count, d.test_count);
    Ok(move |seed| DatasetPair::standard(cat, n_train, n_test, seed))
}

fn cmd_sweep(a: SweepArgs) -> Result<i32, Failure> {
    let param: SweepParam = a.param.parse().map_err(usage)?;
    let values: Vec<String> = a.values.into_iter().filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(usage("no values to sweep"));
    }
    let cfg = load_config(a.config.as_deref())?;
    let make = dataset_maker(&a.data)?;
    let fresh = fs::metadata(&a.out).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&a.out)
        .map_err(|e| usage(format!("{}: {e}", a.out.display())))?;
    if fresh {
        writeln!(file, "{}", eval::SWEEP_HEADER).map_err(usage)?;
    }
    let mut io_err = None;
    eval::sweep(param, &values, &cfg, &a.seeds, &make, &mut |row| {
        if let Err(e) = writeln!(file, "{}", row.csv()) {
            io_err.get_or_insert(e);
        }
    })
    .map_err(usage)?;
    if let Some(e) = io_err {
        return Err(usage(e));
    }
    Ok(EXIT_OK)
}

fn cmd_ablate(a: AblateArgs) -> Result<i32, Failure> {
    let cfg = GaConfig {
        seed: a.seed,
        ..load_config(a.config.as_deref())?
    };
    let pair = dataset_maker(&a.data)?(a.seed);
    let rows = eval::ablation_run(&pair, &cfg, &Mode::ALL).map_err(usage)?;
    write_file(&a.out, &eval::ablation_csv(&rows))?;
    Ok(EXIT_OK)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Bpe(a) => cmd_bpe(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ablate(a) => cmd_ablate(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
